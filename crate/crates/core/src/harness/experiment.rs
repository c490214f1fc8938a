//! Monte Carlo replication, metrics and CSV output.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::engine::{run_trial, TrialResult};
use crate::error::{Error, Result};
use crate::par::{map_seeds, seed_range, with_workers, Exec};

pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 10] = [
    "config_hash",
    "seed",
    "method",
    "k",
    "h1_size",
    "t_star",
    "fdp_at_stop",
    "tpp_at_stop",
    "stop_round",
    "rejections",
];

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub config_hash: String,
    pub seed: u64,
    pub method: String,
    pub k: usize,
    pub h1_size: usize,
    /// `None` when the target was not reached by the stop.
    pub t_star: Option<u64>,
    pub fdp_at_stop: f64,
    pub tpp_at_stop: f64,
    pub stop_round: u64,
    /// 0-based hypothesis ids.
    pub rejections: Vec<usize>,
}

impl TrialRecord {
    pub fn from_result(hash: &str, method: &str, k: usize, h1_size: usize, r: &TrialResult) -> Self {
        TrialRecord {
            config_hash: hash.to_string(),
            seed: r.seed,
            method: method.to_string(),
            k,
            h1_size,
            t_star: r.t_star,
            fdp_at_stop: r.fdp,
            tpp_at_stop: r.tpp,
            stop_round: r.stop_round,
            rejections: r.rejections.ids.clone(),
        }
    }

    /// Field values in [`CSV_COLUMNS`] order. `t_star` is `inf` when the
    /// target was missed; rejections are `;`-separated.
    pub fn fields(&self) -> [String; 10] {
        let rej = self.rejections.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";");
        [
            self.config_hash.clone(),
            self.seed.to_string(),
            self.method.clone(),
            self.k.to_string(),
            self.h1_size.to_string(),
            self.t_star.map_or_else(|| "inf".to_string(), |t| t.to_string()),
            self.fdp_at_stop.to_string(),
            self.tpp_at_stop.to_string(),
            self.stop_round.to_string(),
            rej,
        ]
    }

    /// The row exactly as written to the CSV file, without the newline.
    pub fn csv_row(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(self.fields()).expect("in-memory write");
        let mut s = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 fields");
        s.pop();
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodMetrics {
    pub method: String,
    pub trials: usize,
    pub fdr: f64,
    pub fdr_se: f64,
    pub tpr: f64,
    pub tpr_se: f64,
    /// Mean over trials that reached the target.
    pub mean_t_star: Option<f64>,
    /// Median over all trials with misses counted as infinite.
    pub median_t_star: Option<f64>,
    pub missed: usize,
    pub ratio_to_baseline: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub config_hash: String,
    pub baseline: Option<String>,
    pub rows: Vec<MethodMetrics>,
}

impl MetricsTable {
    pub fn row(&self, method: &str) -> Option<&MethodMetrics> {
        self.rows.iter().find(|r| r.method == method)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<18} {:>6} {:>16} {:>16} {:>10} {:>10} {:>6} {:>8}",
            "method", "trials", "fdr +- se", "tpr +- se", "mean T*", "median T*", "missed", "ratio"
        );
        let opt = |v: Option<f64>, p: usize| v.map_or_else(|| "inf".to_string(), |x| format!("{x:.p$}"));
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<18} {:>6} {:>16} {:>16} {:>10} {:>10} {:>6} {:>8}",
                r.method,
                r.trials,
                format!("{:.4} +- {:.4}", r.fdr, r.fdr_se),
                format!("{:.4} +- {:.4}", r.tpr, r.tpr_se),
                opt(r.mean_t_star, 1),
                opt(r.median_t_star, 1),
                r.missed,
                opt(r.ratio_to_baseline, 3),
            );
        }
        s
    }
}

/// Sample mean and its standard error (sample SD over `sqrt(n)`).
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Median with `None` standing for +infinity; `None` if the median itself
/// is infinite.
pub fn median_with_inf(values: &[Option<u64>]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v: Vec<f64> = values.iter().map(|t| t.map_or(f64::INFINITY, |t| t as f64)).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let m = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
    m.is_finite().then_some(m)
}

pub fn summarize(method: &str, records: &[&TrialRecord]) -> MethodMetrics {
    let fdp: Vec<f64> = records.iter().map(|r| r.fdp_at_stop).collect();
    let tpp: Vec<f64> = records.iter().map(|r| r.tpp_at_stop).collect();
    let (fdr, fdr_se) = mean_se(&fdp);
    let (tpr, tpr_se) = mean_se(&tpp);
    let hits: Vec<f64> = records.iter().filter_map(|r| r.t_star.map(|t| t as f64)).collect();
    let times: Vec<Option<u64>> = records.iter().map(|r| r.t_star).collect();
    MethodMetrics {
        method: method.to_string(),
        trials: records.len(),
        fdr,
        fdr_se,
        tpr,
        tpr_se,
        mean_t_star: (!hits.is_empty()).then(|| hits.iter().sum::<f64>() / hits.len() as f64),
        median_t_star: median_with_inf(&times),
        missed: records.len() - hits.len(),
        ratio_to_baseline: None,
    }
}

pub fn metrics(config_hash: &str, methods: &[String], baseline: Option<&str>, records: &[TrialRecord]) -> MetricsTable {
    let mut rows: Vec<MethodMetrics> = methods
        .iter()
        .map(|m| {
            let rs: Vec<&TrialRecord> = records.iter().filter(|r| &r.method == m).collect();
            summarize(m, &rs)
        })
        .collect();
    let base = baseline.and_then(|b| rows.iter().find(|r| r.method == b)).and_then(|r| r.mean_t_star);
    for r in &mut rows {
        r.ratio_to_baseline = match (r.mean_t_star, base) {
            (Some(t), Some(b)) if b > 0.0 => Some(t / b),
            _ => None,
        };
    }
    MetricsTable { config_hash: config_hash.to_string(), baseline: baseline.map(str::to_string), rows }
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub stride: Option<u64>,
    pub exec: Exec,
}

impl RunOptions {
    pub fn apply(&self, cfg: &ExperimentConfig) -> ExperimentConfig {
        let mut cfg = cfg.clone();
        if let Some(r) = self.reps {
            cfg.reps = r;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(s) = self.stride {
            cfg.stride = s;
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub metrics: MetricsTable,
    /// Ordered by method (config order) then seed.
    pub records: Vec<TrialRecord>,
}

/// Run every method on seeds `seed + 1 ..= seed + reps`. All methods see
/// the same seeds.
pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentOutput> {
    let cfg = opts.apply(config);
    cfg.validate()?;
    if cfg.methods.is_empty() {
        return Err(Error::Config("no methods configured".into()));
    }
    let hash = cfg.hash();
    let seeds = seed_range(cfg.seed, cfg.reps);
    let (k, h1) = (cfg.hypotheses.k, cfg.h1_size());
    let mut records = Vec::with_capacity(seeds.len() * cfg.methods.len());
    for m in &cfg.methods {
        let spec = cfg.trial_spec(m)?;
        let results = with_workers(opts.workers, || {
            map_seeds(&seeds, opts.exec, |s| {
                let r = run_trial(&spec, s).expect("spec validated before the run");
                TrialRecord::from_result(&hash, &m.id, k, h1, &r)
            })
        });
        records.extend(results);
    }
    let ids: Vec<String> = cfg.methods.iter().map(|m| m.id.clone()).collect();
    let metrics = metrics(&hash, &ids, cfg.baseline.as_deref(), &records);
    Ok(ExperimentOutput { config: cfg, metrics, records })
}

/// Re-run one trial from its method id and seed.
pub fn replay_trial(config: &ExperimentConfig, method: &str, seed: u64) -> Result<TrialRecord> {
    let m = config
        .method(method)
        .ok_or_else(|| Error::Config(format!("unknown method `{method}`")))?;
    let r = run_trial(&config.trial_spec(m)?, seed)?;
    Ok(TrialRecord::from_result(&config.hash(), method, config.hypotheses.k, config.h1_size(), &r))
}

pub fn write_csv(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<TrialRecord>> {
    let mut rd = csv::Reader::from_path(path)?;
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != CSV_COLUMNS {
        return Err(Error::Config(format!("unexpected csv header {header:?}")));
    }
    let parse_err = |what: &str| Error::Config(format!("bad csv field `{what}`"));
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        let f = |i: usize| row.get(i).unwrap_or_default();
        let num = |i: usize| f(i).parse::<u64>().map_err(|_| parse_err(f(i)));
        let real = |i: usize| f(i).parse::<f64>().map_err(|_| parse_err(f(i)));
        out.push(TrialRecord {
            config_hash: f(0).to_string(),
            seed: num(1)?,
            method: f(2).to_string(),
            k: num(3)? as usize,
            h1_size: num(4)? as usize,
            t_star: if f(5) == "inf" { None } else { Some(num(5)?) },
            fdp_at_stop: real(6)?,
            tpp_at_stop: real(7)?,
            stop_round: num(8)?,
            rejections: if f(9).is_empty() {
                Vec::new()
            } else {
                f(9).split(';').map(|s| s.parse().map_err(|_| parse_err(s))).collect::<Result<_>>()?
            },
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub config_hash: String,
    pub software_version: String,
    pub reps: usize,
    pub base_seed: u64,
    pub methods: Vec<String>,
    pub columns: Vec<String>,
}

impl Manifest {
    pub fn new(cfg: &ExperimentConfig, methods: &[String]) -> Self {
        Manifest {
            schema_version: SCHEMA_VERSION,
            config_hash: cfg.hash(),
            software_version: env!("CARGO_PKG_VERSION").to_string(),
            reps: cfg.reps,
            base_seed: cfg.seed,
            methods: methods.to_vec(),
            columns: CSV_COLUMNS.iter().map(|c| c.to_string()).collect(),
        }
    }
}

/// Write `trials.csv`, `manifest.json`, `metrics.json` and `config.toml`
/// into `dir`.
pub fn write_outputs(dir: &Path, out: &ExperimentOutput) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_csv(&dir.join("trials.csv"), &out.records)?;
    let methods: Vec<String> = out.metrics.rows.iter().map(|r| r.method.clone()).collect();
    let manifest = Manifest::new(&out.config, &methods);
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    std::fs::write(dir.join("metrics.json"), serde_json::to_string_pretty(&out.metrics)? + "\n")?;
    std::fs::write(dir.join("config.toml"), out.config.to_toml())?;
    Ok(())
}
