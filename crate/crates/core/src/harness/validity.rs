//! Monte Carlo validity oracles. Every check is an upper-bound check
//! `estimate <= bound + 3 SE`.

use serde::{Deserialize, Serialize};

use super::experiment::mean_se;
use crate::engine::{
    run_streaming, run_trial, EnvKind, Environment, Hypotheses, MtConfig, Noise, RewardSampler, StoppingRule,
    TrialSpec,
};
use crate::error::Result;
use crate::evidence::{Boundary, EProcess, EvidenceSpec, LambdaStrategy, PProcess};
use crate::exploration::PolicySpec;
use crate::mt::{Adaptivity, DagConstraint, Dependence, DependenceSetting, OutputKind};
use crate::multiagent::{simulate_agents, AgentSimSpec, AgentSpec, Coupling};
use crate::par::{map_seeds, seed_range, Exec};
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub estimate: f64,
    pub bound: f64,
    pub se: f64,
    pub reps: usize,
    pub pass: bool,
}

impl Check {
    pub fn upper(name: impl Into<String>, samples: &[f64], bound: f64) -> Self {
        let (estimate, se) = mean_se(samples);
        Check {
            name: name.into(),
            estimate,
            bound,
            se,
            reps: samples.len(),
            pass: estimate <= bound + 3.0 * se,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: estimate {:.5} (se {:.5}, n = {}) vs bound {:.5}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.estimate,
            self.se,
            self.reps,
            self.bound
        )
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// `P(sup_{t <= horizon} E_t >= 1/alpha)` for a null arm (mean 0 tested at
/// `mu0 = 0`), optionally with the alternating-mean drifting null.
pub fn ville(
    evidence: EvidenceSpec,
    drifting: bool,
    horizon: u64,
    alpha: f64,
    reps: usize,
    seed: u64,
    exec: Exec,
) -> Check {
    assert!(evidence.is_e(), "ville check needs an e-process");
    let kind = if drifting { EnvKind::DriftingNull } else { EnvKind::Standard };
    let env = Environment::new(kind, vec![0.0], Noise::Independent).expect("one finite arm");
    let threshold = -alpha.ln();
    let hits = map_seeds(&seed_range(seed, reps), exec, |s| {
        let mut e = evidence.build(0.0);
        let mut sampler = RewardSampler::new(&env, stream(s, Stream::Environment));
        let mut buf = Vec::with_capacity(1);
        for _ in 0..horizon {
            buf.clear();
            sampler.draw(&[0], &mut buf);
            e.update(buf[0].1);
            if e.log_stat() >= threshold {
                return 1.0;
            }
        }
        0.0
    });
    let name = format!("ville {evidence:?}{}", if drifting { " drifting null" } else { "" });
    Check::upper(name, &hits, alpha)
}

/// `P(inf_{t <= horizon} P_t <= alpha)` for each alpha under a null arm.
pub fn superuniformity(
    boundary: Boundary,
    alphas: &[f64],
    horizon: u64,
    reps: usize,
    seed: u64,
    exec: Exec,
) -> Vec<Check> {
    let env = Environment::standard(vec![0.0]);
    let floor = alphas.iter().copied().fold(f64::INFINITY, f64::min).ln();
    let infs = map_seeds(&seed_range(seed, reps), exec, |s| {
        let mut p = PProcess::boundary(boundary, 0.0);
        let mut sampler = RewardSampler::new(&env, stream(s, Stream::Environment));
        let mut buf = Vec::with_capacity(1);
        for _ in 0..horizon {
            buf.clear();
            sampler.draw(&[0], &mut buf);
            p.update(buf[0].1);
            if p.log_running_inf() <= floor {
                break;
            }
        }
        p.log_running_inf()
    });
    alphas
        .iter()
        .map(|&a| {
            let hits: Vec<f64> = infs.iter().map(|&l| indicator(l <= a.ln())).collect();
            Check::upper(format!("superuniformity {boundary:?} alpha = {a}"), &hits, a)
        })
        .collect()
}

/// PM-H value after `t` steps of the alternating stream `x = -1, +1, ...`
/// with bets `lambda = 0, 1, ...` (odd steps are 1-based odd).
pub fn adversarial_pmh(t: u64) -> f64 {
    let mut e = EProcess::pmh(LambdaStrategy::Fixed { lambda: 0.0 }, 0.0);
    for j in 1..=t {
        let (x, lambda) = if j % 2 == 1 { (-1.0, 0.0) } else { (1.0, 1.0) };
        e.bet(x, lambda);
    }
    e.value()
}

/// One dependence cell of the level table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdrCell {
    pub setting: DependenceSetting,
    /// e-BH with PM-H when true, BH with the phi^JJ p-process otherwise.
    pub e_mode: bool,
    pub k: usize,
    pub h1: usize,
    pub horizon: u64,
    pub delta: f64,
}

impl FdrCell {
    pub fn name(&self) -> String {
        let s = self.setting;
        format!(
            "fdr {} {:?}/{:?}/{:?} k = {} |H1| = {}",
            if self.e_mode { "e-BH" } else { "BH" },
            s.adaptivity,
            s.dependence,
            s.output,
            self.k,
            self.h1
        )
    }

    /// Independent cells use independent singleton arms. Arbitrary cells
    /// use 10 cliques with shared within-round noise. Non-adaptive cells
    /// sample uniformly to a fixed horizon; adaptive cells use UCB and stop
    /// as soon as `|R| > |H1|`. Self-consistent-only cells use a DAG of
    /// disjoint pairs `2i -> 2i + 1`.
    pub fn spec(&self) -> Result<TrialSpec> {
        let k = self.k;
        let means: Vec<f64> = (0..k).map(|i| if i >= k - self.h1 { 0.5 } else { 0.0 }).collect();
        let env = match self.setting.dependence {
            Dependence::Independent => Environment::new(EnvKind::Standard, means.clone(), Noise::Independent)?,
            Dependence::Arbitrary => {
                Environment::new(EnvKind::CliqueGraph { cliques: 10.min(k) }, means.clone(), Noise::SharedNoise)?
            }
        };
        let (policy, stop) = match self.setting.adaptivity {
            Adaptivity::NonAdaptive => (PolicySpec::Uniform, StoppingRule::FixedHorizon { rounds: self.horizon }),
            Adaptivity::Adaptive => (
                PolicySpec::Ucb { boundary: Boundary::PhiJj },
                StoppingRule::RejectionCount { count: self.h1 + 1, max_rounds: self.horizon },
            ),
        };
        let evidence = if self.e_mode {
            EvidenceSpec::Pmh { lambda: LambdaStrategy::DefaultWsr { alpha: self.delta } }
        } else {
            EvidenceSpec::PBoundary { boundary: Boundary::PhiJj }
        };
        let mut mt = MtConfig::new(self.delta, self.setting);
        if self.setting.output == OutputKind::SelfConsistentOnly {
            let edges = (0..k / 2).map(|i| (2 * i, 2 * i + 1)).collect();
            mt.dag = Some(DagConstraint::new(k, edges)?);
        }
        Ok(TrialSpec::new(env, Hypotheses::per_arm(&means, 0.0), policy, evidence, mt, stop))
    }

    pub fn run(&self, reps: usize, seed: u64, exec: Exec) -> Result<Check> {
        let spec = self.spec()?;
        spec.validate()?;
        let fdp = map_seeds(&seed_range(seed, reps), exec, |s| run_trial(&spec, s).expect("validated").fdp);
        Ok(Check::upper(self.name(), &fdp, self.delta))
    }
}

/// All level-table cells for both procedures.
pub fn fdr_cells(k: usize, h1: usize, horizon: u64, delta: f64) -> Vec<FdrCell> {
    let mut out = Vec::new();
    for e_mode in [false, true] {
        for setting in DependenceSetting::all() {
            out.push(FdrCell { setting, e_mode, k, h1, horizon, delta });
        }
    }
    out
}

/// Two agents with staggered arrivals on null streams: crossing frequency
/// of the aggregate for hypothesis 0.
#[allow(clippy::too_many_arguments)]
pub fn multiagent_ville(
    coupling: Coupling,
    evidence: EvidenceSpec,
    arrivals: [u64; 2],
    rounds: u64,
    alpha: f64,
    reps: usize,
    seed: u64,
    exec: Exec,
) -> Result<Check> {
    let spec = AgentSimSpec {
        means: vec![0.0],
        mu0: 0.0,
        agents: arrivals.iter().map(|&arrival| AgentSpec { arrival, evidence }).collect(),
        coupling,
        rounds,
        delta: alpha,
    };
    simulate_agents(&spec, seed + 1)?;
    let hits = map_seeds(&seed_range(seed, reps), exec, |s| {
        let r = simulate_agents(&spec, s).expect("spec checked above");
        indicator(r.log_sup[0] >= -alpha.ln())
    });
    Ok(Check::upper(format!("multi-agent ville {coupling:?} {evidence:?} arrivals {arrivals:?}"), &hits, alpha))
}

/// Streaming monitor on null-only arms: FDR of the final set.
pub fn streaming_fdr(k: usize, gap: u64, max_rounds: u64, delta: f64, reps: usize, seed: u64, exec: Exec) -> Result<Check> {
    let env = Environment::new(EnvKind::Streaming, vec![0.0; k], Noise::Independent)?;
    let hyps = Hypotheses::per_arm(env.means(), 0.0);
    let setting = DependenceSetting::new(Adaptivity::Adaptive, Dependence::Arbitrary, OutputKind::StepUp);
    let mt = MtConfig::new(delta, setting);
    let fdp = map_seeds(&seed_range(seed, reps), exec, |s| {
        run_streaming(env.clone(), hyps.clone(), EvidenceSpec::DiscreteMixture, mt.clone(), gap, max_rounds, s)
            .expect("static config")
            .fdp
    });
    Ok(Check::upper(format!("streaming fdr k = {k} null-only"), &fdp, delta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidityConfig {
    pub reps: usize,
    pub seed: u64,
    pub delta: f64,
    /// Steps for the Ville and superuniformity checks.
    pub horizon: u64,
    pub fdr_k: usize,
    /// Round cap for the FDR cells.
    pub fdr_horizon: u64,
}

impl Default for ValidityConfig {
    fn default() -> Self {
        ValidityConfig { reps: 2000, seed: 0, delta: 0.05, horizon: 10_000, fdr_k: 20, fdr_horizon: 1000 }
    }
}

impl ValidityConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }
}

/// Every oracle, in a fixed order.
pub fn validity_suite(cfg: &ValidityConfig, exec: Exec) -> Result<Vec<Check>> {
    let (reps, seed, delta) = (cfg.reps, cfg.seed, cfg.delta);
    let mut out = Vec::new();
    for b in [Boundary::PhiJj, Boundary::PhiIs] {
        out.extend(superuniformity(b, &[0.01, 0.05, 0.1], cfg.horizon, reps, seed, exec));
    }
    let e_specs = [
        EvidenceSpec::DiscreteMixture,
        EvidenceSpec::Pmh { lambda: LambdaStrategy::DefaultWsr { alpha: delta } },
        EvidenceSpec::Pmh { lambda: LambdaStrategy::BettingHalfMean },
    ];
    for e in e_specs {
        out.push(ville(e, false, cfg.horizon, delta, reps, seed, exec));
    }
    out.push(ville(EvidenceSpec::DiscreteMixture, true, cfg.horizon, delta, reps, seed, exec));
    for h1 in [0, 2] {
        for cell in fdr_cells(cfg.fdr_k, h1, cfg.fdr_horizon, delta) {
            out.push(cell.run(reps, seed, exec)?);
        }
    }
    out.push(streaming_fdr(cfg.fdr_k, 50, cfg.fdr_horizon, delta, reps, seed, exec)?);
    for coupling in [Coupling::Shared, Coupling::Independent] {
        out.push(multiagent_ville(
            coupling,
            EvidenceSpec::DiscreteMixture,
            [1, 50],
            cfg.fdr_horizon,
            delta,
            reps,
            seed,
            exec,
        )?);
    }
    let e10 = adversarial_pmh(10);
    out.push(Check {
        name: format!("adversarial PM-H stream E_10 = {e10:.6} (exp(2.5) = {:.6})", 2.5f64.exp()),
        estimate: e10,
        bound: 2.5f64.exp(),
        se: 0.0,
        reps: 1,
        pass: (e10 - 2.5f64.exp()).abs() <= 1e-9 * 2.5f64.exp(),
    });
    Ok(out)
}
