use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bmt::harness::{self, ExperimentConfig, RunOptions, ValidityConfig};
use bmt::mt::{self, DagConstraint, Mode};
use bmt::par::{with_workers, Exec};

#[derive(Parser)]
#[command(name = "bmt", version, about = "Bandit multiple testing simulator with anytime FDR control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Evidence snapshot stride (0 disables snapshots).
    #[arg(long)]
    stride: Option<u64>,
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions { reps: self.reps, seed: self.seed, workers: self.workers, stride: self.stride, exec: Exec::Parallel }
    }

    fn experiment(&self) -> Result<ExperimentConfig, String> {
        let path = self.config.as_ref().ok_or("--config is required")?;
        ExperimentConfig::load(path).map_err(|e| format!("{}: {e}", path.display()))
    }

    fn out_dir(&self, cfg: &ExperimentConfig) -> Option<PathBuf> {
        self.out.clone().or_else(|| cfg.out.as_ref().map(PathBuf::from))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write trials.csv plus a manifest.
    Run(Common),
    /// Run the validity oracle suite.
    Validity(Common),
    /// Clique-graph comparison of single-arm BH, full BH and e-BH.
    Graph(Common),
    /// Cross-check BH, e-BH and the DAG-constrained procedure against
    /// exhaustive search on random inputs.
    OracleSelfconsistent(Common),
}

fn run_experiment(c: &Common, graph: bool) -> Result<bool, String> {
    let cfg = c.experiment()?;
    let out = if graph {
        harness::graph_experiment(&cfg, &c.options())
    } else {
        harness::run_experiment(&cfg, &c.options())
    }
    .map_err(|e| e.to_string())?;
    println!("config hash {}", out.metrics.config_hash);
    print!("{}", out.metrics.render());
    if let Some(dir) = c.out_dir(&cfg) {
        harness::write_outputs(&dir, &out).map_err(|e| e.to_string())?;
        println!("wrote {}", dir.display());
    }
    Ok(true)
}

fn validity(c: &Common) -> Result<bool, String> {
    let mut cfg = match &c.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| e.to_string())?;
            ValidityConfig::from_toml(&text).map_err(|e| format!("{}: {e}", p.display()))?
        }
        None => ValidityConfig::default(),
    };
    if let Some(r) = c.reps {
        cfg.reps = r;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    let checks = with_workers(c.workers, || harness::validity_suite(&cfg, Exec::Parallel)).map_err(|e| e.to_string())?;
    for ch in &checks {
        println!("{}", ch.line());
    }
    if let Some(dir) = &c.out {
        std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
        let json = serde_json::to_string_pretty(&checks).map_err(|e| e.to_string())?;
        std::fs::write(dir.join("validity.json"), json + "\n").map_err(|e| e.to_string())?;
    }
    Ok(checks.iter().all(|c| c.pass))
}

fn oracle_selfconsistent(c: &Common) -> Result<bool, String> {
    let reps = c.reps.unwrap_or(1000);
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed.unwrap_or(0));
    let mut mismatches = [0usize; 3];
    for _ in 0..reps {
        let k = rng.random_range(1..=10);
        let alpha = rng.random_range(0.01..0.5);
        let p: Vec<f64> = (0..k).map(|_| rng.random::<f64>().powi(3)).collect();
        let e: Vec<f64> = p.iter().map(|v| 1.0 / v.max(1e-300)).collect();
        let ok = |a: &mt::RejectionSet, b: &mt::RejectionSet| a.ids == b.ids;
        let brute_p = mt::brute_force_largest_self_consistent(&p, alpha, Mode::P).map_err(|e| e.to_string())?;
        if !ok(&mt::bh(&p, alpha).map_err(|e| e.to_string())?, &brute_p) {
            mismatches[0] += 1;
        }
        let brute_e = mt::brute_force_largest_self_consistent(&e, alpha, Mode::E).map_err(|e| e.to_string())?;
        if !ok(&mt::ebh(&e, alpha).map_err(|e| e.to_string())?, &brute_e) {
            mismatches[1] += 1;
        }
        let k = rng.random_range(1..=12);
        let p: Vec<f64> = (0..k).map(|_| rng.random::<f64>().powi(3)).collect();
        let edges = (0..k)
            .flat_map(|j| (0..j).map(move |i| (i, j)))
            .filter(|_| rng.random_bool(0.2))
            .collect::<Vec<_>>();
        let dag = DagConstraint::new(k, edges).map_err(|e| e.to_string())?;
        let fast = mt::largest_constrained_self_consistent(&p, alpha, Mode::P, &dag).map_err(|e| e.to_string())?;
        let brute = mt::brute_force_constrained(&p, alpha, Mode::P, &dag).map_err(|e| e.to_string())?;
        if !ok(&fast, &brute) {
            mismatches[2] += 1;
        }
    }
    for (name, m) in ["bh", "ebh", "dag"].iter().zip(mismatches) {
        println!("{} {name}: {m} mismatches in {reps} random inputs", if m == 0 { "PASS" } else { "FAIL" });
    }
    Ok(mismatches.iter().all(|&m| m == 0))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => with_workers(c.workers, || run_experiment(c, false)),
        Command::Graph(c) => with_workers(c.workers, || run_experiment(c, true)),
        Command::Validity(c) => validity(c),
        Command::OracleSelfconsistent(c) => oracle_selfconsistent(c),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
