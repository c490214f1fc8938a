//! The meta-algorithm loop: choose a superarm, observe rewards, update the
//! evidence of every hypothesis touching a queried arm, recompute the
//! rejection set, check the stopping rule.
//!
//! Evidence of a rejected hypothesis is frozen. Because every rejected value
//! is then fixed, the previous rejection set stays self-consistent and the
//! next one (the largest self-consistent set) contains it, so `R_t` is
//! monotone for every policy.

pub mod environment;

use serde::{Deserialize, Serialize};

pub use environment::{EnvKind, Environment, Noise, RewardSampler};

use crate::error::{domain, Error, Result};
use crate::evidence::{Evidence, EvidenceSpec};
use crate::exploration::{Policy, PolicySpec, Selection, SelectionContext};
use crate::mt::{
    bh_log, ebh_log, largest_constrained_self_consistent, level_choice, DagConstraint, Dependence,
    DependenceSetting, LevelChoice, Mode, OutputKind, RejectionSet,
};
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub arms: Vec<usize>,
    pub mu0: f64,
    /// Ground truth, read only by oracle stopping and metrics.
    pub non_null: bool,
}

/// Hypotheses plus the reverse arm index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypotheses {
    list: Vec<Hypothesis>,
    by_arm: Vec<Vec<usize>>,
}

impl Hypotheses {
    pub fn new(n_arms: usize, list: Vec<Hypothesis>) -> Result<Self> {
        if list.is_empty() {
            return domain("need at least one hypothesis");
        }
        let mut by_arm = vec![Vec::new(); n_arms];
        for (h, hyp) in list.iter().enumerate() {
            if hyp.arms.is_empty() {
                return domain(format!("hypothesis {h} references no arm"));
            }
            if !hyp.mu0.is_finite() {
                return domain(format!("hypothesis {h} has mu0 = {}", hyp.mu0));
            }
            for &a in &hyp.arms {
                if a >= n_arms {
                    return domain(format!("hypothesis {h} references arm {a} >= {n_arms}"));
                }
                if !by_arm[a].contains(&h) {
                    by_arm[a].push(h);
                }
            }
        }
        Ok(Hypotheses { list, by_arm })
    }

    /// One hypothesis `mean_i <= mu0` per arm; non-null iff `mean_i > mu0`.
    pub fn per_arm(means: &[f64], mu0: f64) -> Self {
        let list = means
            .iter()
            .enumerate()
            .map(|(i, &m)| Hypothesis { arms: vec![i], mu0, non_null: m > mu0 })
            .collect();
        Hypotheses::new(means.len(), list).expect("identity mapping")
    }

    /// Same as `per_arm` with explicit ground truth.
    pub fn per_arm_labelled(mu0: f64, non_null: &[bool]) -> Self {
        let list = non_null
            .iter()
            .enumerate()
            .map(|(i, &nn)| Hypothesis { arms: vec![i], mu0, non_null: nn })
            .collect();
        Hypotheses::new(non_null.len(), list).expect("identity mapping")
    }

    pub fn k(&self) -> usize {
        self.list.len()
    }

    pub fn get(&self, h: usize) -> &Hypothesis {
        &self.list[h]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Hypothesis> {
        self.list.iter()
    }

    pub fn n_arms(&self) -> usize {
        self.by_arm.len()
    }

    /// Hypotheses whose arm set contains `arm`.
    pub fn touching(&self, arm: usize) -> &[usize] {
        &self.by_arm[arm]
    }

    pub fn non_null_labels(&self) -> Vec<bool> {
        self.list.iter().map(|h| h.non_null).collect()
    }

    pub fn h1_size(&self) -> usize {
        self.list.iter().filter(|h| h.non_null).count()
    }

    pub fn is_multi_arm(&self) -> bool {
        self.list.iter().any(|h| h.arms.len() > 1)
    }
}

/// Multiple-testing configuration. BH runs at the corrected level for
/// `setting`; e-BH always runs at `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MtConfig {
    pub delta: f64,
    pub setting: DependenceSetting,
    #[serde(default)]
    pub dag: Option<DagConstraint>,
}

impl MtConfig {
    pub fn new(delta: f64, setting: DependenceSetting) -> Self {
        MtConfig { delta, setting, dag: None }
    }

    /// Level for `k` hypotheses. Hypotheses sharing arms are treated as
    /// arbitrarily dependent.
    pub fn level(&self, mode: Mode, k: usize, multi_arm: bool) -> Result<LevelChoice> {
        let mut setting = self.setting;
        if multi_arm {
            setting.dependence = Dependence::Arbitrary;
        }
        level_choice(self.delta, setting, mode, k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StoppingRule {
    FixedHorizon { rounds: u64 },
    /// Stop once every non-null is rejected. Reads ground truth, so it is
    /// for simulation only.
    AllNonNullsOracle { max_rounds: u64 },
    RejectionCount { count: usize, max_rounds: u64 },
    /// Stop when more than `gap` rounds have passed since the last new
    /// rejection, when everything is rejected, or at `max_rounds`.
    StreamingGap { gap: u64, max_rounds: u64 },
}

impl StoppingRule {
    pub fn max_rounds(&self) -> u64 {
        match *self {
            StoppingRule::FixedHorizon { rounds } => rounds,
            StoppingRule::AllNonNullsOracle { max_rounds }
            | StoppingRule::RejectionCount { max_rounds, .. }
            | StoppingRule::StreamingGap { max_rounds, .. } => max_rounds,
        }
    }

    /// Stop round once every hypothesis is rejected at round `t`; later
    /// rounds cannot change anything and are not simulated.
    fn round_when_settled(&self, t: u64) -> u64 {
        match self {
            StoppingRule::StreamingGap { .. } => t.max(1),
            _ => self.max_rounds().max(t),
        }
    }

    fn fires(&self, t: u64, rejected: &RejectionSet, hyps: &Hypotheses, last_growth: u64) -> bool {
        if t >= self.max_rounds() {
            return true;
        }
        match *self {
            StoppingRule::FixedHorizon { .. } => false,
            StoppingRule::AllNonNullsOracle { .. } => {
                hyps.iter().enumerate().all(|(h, hyp)| !hyp.non_null || rejected.contains(h))
            }
            StoppingRule::RejectionCount { count, .. } => rejected.len() >= count,
            StoppingRule::StreamingGap { gap, .. } => {
                t > 0 && (t - last_growth > gap || rejected.len() == hyps.k())
            }
        }
    }
}

/// What the engine does with the rewards of a queried superarm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Feedback {
    #[default]
    UseAll,
    /// Keep one uniformly chosen reward per round and discard the rest.
    SingleRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Exploration {
    Policy(PolicySpec),
    /// Query every arm that still has an unrejected hypothesis.
    AllUnrejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub env: Environment,
    pub hypotheses: Hypotheses,
    pub exploration: Exploration,
    pub evidence: EvidenceSpec,
    pub mt: MtConfig,
    pub stop: StoppingRule,
    #[serde(default)]
    pub feedback: Feedback,
    /// Evidence snapshot every `stride` rounds; 0 disables snapshots.
    #[serde(default)]
    pub stride: u64,
    #[serde(default)]
    pub record_samples: bool,
    /// Initial `ln e` per hypothesis (e-processes only).
    #[serde(default)]
    pub log_prior: Option<Vec<f64>>,
}

impl TrialSpec {
    pub fn new(
        env: Environment,
        hypotheses: Hypotheses,
        policy: PolicySpec,
        evidence: EvidenceSpec,
        mt: MtConfig,
        stop: StoppingRule,
    ) -> Self {
        TrialSpec {
            env,
            hypotheses,
            exploration: Exploration::Policy(policy),
            evidence,
            mt,
            stop,
            feedback: Feedback::UseAll,
            stride: 0,
            record_samples: false,
            log_prior: None,
        }
    }

    pub fn mode(&self) -> Mode {
        if self.evidence.is_e() {
            Mode::E
        } else {
            Mode::P
        }
    }

    pub fn level(&self) -> Result<LevelChoice> {
        self.mt.level(self.mode(), self.hypotheses.k(), self.hypotheses.is_multi_arm())
    }

    pub fn validate(&self) -> Result<()> {
        if self.hypotheses.n_arms() != self.env.n_arms() {
            return Err(Error::Config(format!(
                "hypotheses cover {} arms, environment has {}",
                self.hypotheses.n_arms(),
                self.env.n_arms()
            )));
        }
        self.level()?;
        match self.exploration {
            Exploration::Policy(PolicySpec::Ucb { boundary }) => {
                boundary.eval(1, self.mt.delta).map_err(|e| Error::Config(e.to_string()))?;
            }
            Exploration::Policy(PolicySpec::BaiReduction { epsilon }) if epsilon.is_nan() || epsilon <= 0.0 => {
                return Err(Error::Config(format!("BAI epsilon = {epsilon} must be positive")));
            }
            _ => {}
        }
        if let Some(dag) = &self.mt.dag {
            if dag.k() != self.hypotheses.k() {
                return Err(Error::Config(format!(
                    "dag covers {} hypotheses, config has {}",
                    dag.k(),
                    self.hypotheses.k()
                )));
            }
            if self.mt.setting.output != OutputKind::SelfConsistentOnly {
                return Err(Error::Config(
                    "dag-constrained rejection needs the self_consistent_only output setting".into(),
                ));
            }
        }
        if let Some(prior) = &self.log_prior {
            if !self.evidence.is_e() {
                return Err(Error::Config("evidence priors apply to e-processes only".into()));
            }
            if prior.len() != self.hypotheses.k() || prior.iter().any(|v| v.is_nan()) {
                return Err(Error::Config("log_prior needs one number per hypothesis".into()));
            }
        }
        Ok(())
    }
}

/// The rejection set changed to `ids` at `round`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionEvent {
    pub round: u64,
    pub ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub round: u64,
    pub rejected: Vec<usize>,
    /// `ln e` or `ln p` per hypothesis.
    pub log_stats: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub round: u64,
    pub arm: usize,
    pub reward: f64,
}

/// Append-only record of what the algorithm saw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SampleLog {
    /// Superarm index queried each round (empty for `AllUnrejected`).
    pub selections: Vec<usize>,
    /// Kept rewards only.
    pub samples: Vec<SampleRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub seed: u64,
    pub level: LevelChoice,
    pub rejections: RejectionSet,
    pub stop_round: u64,
    pub fdp: f64,
    pub tpp: f64,
    /// First round with TPP >= 1 - delta, provided it also holds at the stop.
    pub t_star: Option<u64>,
    pub path: Vec<RejectionEvent>,
    pub snapshots: Vec<Snapshot>,
    pub samples: Option<SampleLog>,
    pub total_samples: u64,
}

/// `(|H0 n R| / max(|R|, 1), |H1 n R| / |H1|)`, with TPP = 1 when H1 is empty.
pub fn compute_fdp_tpp(rejected: &[usize], non_null: &[bool]) -> (f64, f64) {
    let true_rej = rejected.iter().filter(|&&h| non_null[h]).count();
    let false_rej = rejected.len() - true_rej;
    let h1 = non_null.iter().filter(|&&b| b).count();
    let fdp = false_rej as f64 / rejected.len().max(1) as f64;
    let tpp = if h1 == 0 { 1.0 } else { true_rej as f64 / h1 as f64 };
    (fdp, tpp)
}

struct State {
    mode: Mode,
    evidence: Vec<Evidence>,
    log_stats: Vec<f64>,
    strengths: Vec<f64>,
    rejected: Vec<bool>,
    rejected_arms: Vec<bool>,
    set: RejectionSet,
}

impl State {
    fn recompute(&mut self, alpha: f64, dag: Option<&DagConstraint>) {
        let set = match (dag, self.mode) {
            (Some(dag), mode) => {
                let linear: Vec<f64> = self.log_stats.iter().map(|v| v.exp()).collect();
                largest_constrained_self_consistent(&linear, alpha, mode, dag).expect("validated before the run")
            }
            (None, Mode::P) => bh_log(&self.log_stats, alpha),
            (None, Mode::E) => ebh_log(&self.log_stats, alpha),
        };
        self.set = set;
    }

    fn refresh_rejected(&mut self, hyps: &Hypotheses) {
        self.rejected.iter_mut().for_each(|r| *r = false);
        for &h in &self.set.ids {
            self.rejected[h] = true;
        }
        for (arm, slot) in self.rejected_arms.iter_mut().enumerate() {
            *slot = hyps.touching(arm).iter().all(|&h| self.rejected[h]);
        }
    }
}

/// Run one trial. All randomness derives from `seed`.
pub fn run_trial(spec: &TrialSpec, seed: u64) -> Result<TrialResult> {
    spec.validate()?;
    let hyps = &spec.hypotheses;
    let k = hyps.k();
    let mode = spec.mode();
    let level = spec.level()?;
    let alpha = level.delta_prime;
    let dag = spec.mt.dag.as_ref();
    let non_null = hyps.non_null_labels();
    let target = 1.0 - spec.mt.delta;

    let mut policy = match spec.exploration {
        Exploration::Policy(p) => Some(Policy::new(
            p,
            spec.env.superarms().clone(),
            spec.mt.delta,
            stream(seed, Stream::Policy),
        )?),
        Exploration::AllUnrejected => None,
    };
    let mut sampler = RewardSampler::new(&spec.env, stream(seed, Stream::Environment));
    let mut discard = stream(seed, Stream::Discard);

    let mut evidence: Vec<Evidence> = hyps.iter().map(|h| spec.evidence.build(h.mu0)).collect();
    if let Some(prior) = &spec.log_prior {
        for (ev, &lp) in evidence.iter_mut().zip(prior) {
            if let Evidence::E(e) = ev {
                *e = e.clone().with_log_prior(lp);
            }
        }
    }
    let log_stats: Vec<f64> = evidence.iter().map(Evidence::log_stat).collect();
    let strengths: Vec<f64> = evidence.iter().map(Evidence::strength).collect();
    let mut st = State {
        mode,
        evidence,
        log_stats,
        strengths,
        rejected: vec![false; k],
        rejected_arms: vec![false; hyps.n_arms()],
        set: RejectionSet::empty(alpha, crate::mt::Procedure::Bh),
    };
    st.recompute(alpha, dag);
    st.refresh_rejected(hyps);

    let hyp_arm: Vec<usize> = hyps.iter().map(|h| h.arms[0]).collect();
    let mut path = Vec::new();
    if !st.set.is_empty() {
        path.push(RejectionEvent { round: 0, ids: st.set.ids.clone() });
    }
    let mut snapshots = Vec::new();
    let mut log = spec.record_samples.then(SampleLog::default);
    let mut first_hit = (compute_fdp_tpp(&st.set.ids, &non_null).1 >= target).then_some(0);
    let mut last_growth = 0u64;
    let mut total_samples = 0u64;
    let mut buf: Vec<(usize, f64)> = Vec::new();
    let mut arms_buf: Vec<usize> = Vec::new();
    let mut t = 0u64;

    let stop_round = loop {
        let initial_check = t == 0 && !matches!(spec.stop, StoppingRule::StreamingGap { .. });
        if (t > 0 || initial_check) && spec.stop.fires(t, &st.set, hyps, last_growth) {
            break t;
        }
        if st.set.len() == k {
            // nothing can change any more
            break spec.stop.round_when_settled(t);
        }
        t += 1;

        arms_buf.clear();
        match policy.as_mut() {
            Some(p) => {
                let ctx = SelectionContext {
                    round: t,
                    rejected_arms: &st.rejected_arms,
                    rejected_hyps: &st.rejected,
                    strengths: &st.strengths,
                    hyp_arm: &hyp_arm,
                };
                match p.select(&ctx) {
                    Selection::Superarm(s) => {
                        arms_buf.extend_from_slice(p.superarms().get(s));
                        if let Some(log) = log.as_mut() {
                            log.selections.push(s);
                        }
                    }
                    Selection::AllRejected => break spec.stop.round_when_settled(t - 1),
                }
            }
            None => arms_buf.extend((0..hyps.n_arms()).filter(|&a| !st.rejected_arms[a])),
        }

        buf.clear();
        sampler.draw(&arms_buf, &mut buf);
        if spec.feedback == Feedback::SingleRandom && buf.len() > 1 {
            use rand::Rng;
            let keep = buf[discard.random_range(0..buf.len())];
            buf.clear();
            buf.push(keep);
        }
        for &(arm, x) in &buf {
            total_samples += 1;
            if let Some(p) = policy.as_mut() {
                p.observe(arm, x);
            }
            if let Some(log) = log.as_mut() {
                log.samples.push(SampleRecord { round: t, arm, reward: x });
            }
            for &h in hyps.touching(arm) {
                if !st.rejected[h] {
                    st.evidence[h].update(x);
                    st.log_stats[h] = st.evidence[h].log_stat();
                    st.strengths[h] = st.evidence[h].strength();
                }
            }
        }

        let before = st.set.len();
        st.recompute(alpha, dag);
        if st.set.len() != before {
            debug_assert!(st.set.len() > before);
            st.refresh_rejected(hyps);
            last_growth = t;
            path.push(RejectionEvent { round: t, ids: st.set.ids.clone() });
        }
        if first_hit.is_none() && compute_fdp_tpp(&st.set.ids, &non_null).1 >= target {
            first_hit = Some(t);
        }
        if spec.stride > 0 && t.is_multiple_of(spec.stride) {
            snapshots.push(Snapshot { round: t, rejected: st.set.ids.clone(), log_stats: st.log_stats.clone() });
        }
    };

    let (fdp, tpp) = compute_fdp_tpp(&st.set.ids, &non_null);
    let t_star = if tpp >= target { first_hit } else { None };
    Ok(TrialResult {
        seed,
        level,
        rejections: st.set,
        stop_round,
        fdp,
        tpp,
        t_star,
        path,
        snapshots,
        samples: log,
        total_samples,
    })
}

/// Streaming monitor: every round observe all arms of unrejected hypotheses;
/// stop after `gap` rounds without a new rejection, when everything is
/// rejected, or at `max_rounds`.
pub fn run_streaming(
    env: Environment,
    hypotheses: Hypotheses,
    evidence: EvidenceSpec,
    mt: MtConfig,
    gap: u64,
    max_rounds: u64,
    seed: u64,
) -> Result<TrialResult> {
    let spec = streaming_spec(env, hypotheses, evidence, mt, gap, max_rounds);
    run_trial(&spec, seed)
}

pub fn streaming_spec(
    env: Environment,
    hypotheses: Hypotheses,
    evidence: EvidenceSpec,
    mt: MtConfig,
    gap: u64,
    max_rounds: u64,
) -> TrialSpec {
    TrialSpec {
        exploration: Exploration::AllUnrejected,
        stop: StoppingRule::StreamingGap { gap, max_rounds },
        ..TrialSpec::new(env, hypotheses, PolicySpec::Uniform, evidence, mt, StoppingRule::FixedHorizon { rounds: 0 })
    }
}
