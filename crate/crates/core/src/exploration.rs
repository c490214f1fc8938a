//! Exploration components: which superarm to query next.
//!
//! A policy sees only data from earlier rounds (through [`Policy::observe`])
//! plus its own private random stream, so every selection is predictable.
//! Policies never look at ground truth and are opaque to the FDR machinery.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::evidence::Boundary;

/// Feasible superarms plus, for every arm, the smallest-index superarm that
/// contains it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Superarms {
    sets: Vec<Vec<usize>>,
    lift: Vec<usize>,
}

impl Superarms {
    pub fn new(n_arms: usize, sets: Vec<Vec<usize>>) -> Result<Self> {
        if sets.is_empty() {
            return domain("empty superarm family");
        }
        let mut lift = vec![usize::MAX; n_arms];
        for (s, set) in sets.iter().enumerate() {
            if set.is_empty() {
                return domain(format!("superarm {s} is empty"));
            }
            for &a in set {
                if a >= n_arms {
                    return domain(format!("superarm {s} references arm {a} >= {n_arms}"));
                }
                if lift[a] == usize::MAX {
                    lift[a] = s;
                }
            }
        }
        if let Some(a) = lift.iter().position(|&s| s == usize::MAX) {
            return domain(format!("arm {a} belongs to no superarm"));
        }
        Ok(Superarms { sets, lift })
    }

    pub fn singletons(n_arms: usize) -> Self {
        Superarms {
            sets: (0..n_arms).map(|a| vec![a]).collect(),
            lift: (0..n_arms).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn n_arms(&self) -> usize {
        self.lift.len()
    }

    pub fn get(&self, s: usize) -> &[usize] {
        &self.sets[s]
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    /// Smallest-index superarm containing `arm`.
    pub fn lift(&self, arm: usize) -> usize {
        self.lift[arm]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    Uniform,
    /// `argmax_{i not rejected} mean_i + phi(T_i, delta)`; unsampled arms first.
    Ucb { boundary: Boundary },
    /// Round-robin over hypotheses for the first k rounds, then the
    /// unrejected hypothesis with the most evidence.
    BestEvidence,
    /// Successive elimination to find a best unrejected arm, then sample it
    /// until it is rejected.
    BaiReduction {
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
}

fn default_epsilon() -> f64 {
    0.1
}

impl PolicySpec {
    pub fn is_adaptive(&self) -> bool {
        !matches!(self, PolicySpec::Uniform)
    }
}

/// What a policy may look at when choosing round `round`.
#[derive(Debug, Clone, Copy)]
pub struct SelectionContext<'a> {
    /// 1-based round index.
    pub round: u64,
    /// Arms whose every hypothesis is in `R_{t-1}`.
    pub rejected_arms: &'a [bool],
    pub rejected_hyps: &'a [bool],
    /// Per-hypothesis evidence strength (`ln e` or `-ln p`) after `t - 1`.
    pub strengths: &'a [f64],
    /// Arm used to query each hypothesis.
    pub hyp_arm: &'a [usize],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    Superarm(usize),
    AllRejected,
}

#[derive(Debug, Clone, PartialEq)]
struct Elimination {
    active: Vec<usize>,
    log_inv_delta: f64,
}

/// Policy state for one trial.
#[derive(Debug, Clone)]
pub struct Policy {
    spec: PolicySpec,
    superarms: Superarms,
    counts: Vec<u64>,
    sums: Vec<f64>,
    log_inv_delta: f64,
    delta: f64,
    rng: ChaCha8Rng,
    best_arm: Option<usize>,
    elimination: Option<Elimination>,
}

impl Policy {
    pub fn new(spec: PolicySpec, superarms: Superarms, delta: f64, rng: ChaCha8Rng) -> Result<Self> {
        if let PolicySpec::Ucb { boundary } = spec {
            // validates delta for the boundary
            boundary.eval(1, delta)?;
        }
        if !(delta > 0.0 && delta < 1.0) {
            return domain(format!("policy delta = {delta} outside (0, 1)"));
        }
        let n = superarms.n_arms();
        Ok(Policy {
            spec,
            superarms,
            counts: vec![0; n],
            sums: vec![0.0; n],
            log_inv_delta: -delta.ln(),
            delta,
            rng,
            best_arm: None,
            elimination: None,
        })
    }

    pub fn spec(&self) -> PolicySpec {
        self.spec
    }

    pub fn superarms(&self) -> &Superarms {
        &self.superarms
    }

    pub fn count(&self, arm: usize) -> u64 {
        self.counts[arm]
    }

    pub fn mean(&self, arm: usize) -> f64 {
        if self.counts[arm] == 0 {
            0.0
        } else {
            self.sums[arm] / self.counts[arm] as f64
        }
    }

    /// Cached best-arm candidate of the BAI reduction.
    pub fn best_arm(&self) -> Option<usize> {
        self.best_arm
    }

    /// Record an observed reward. Must be called only after `select` for the
    /// round that produced it.
    pub fn observe(&mut self, arm: usize, reward: f64) {
        self.counts[arm] += 1;
        self.sums[arm] += reward;
    }

    pub fn select(&mut self, ctx: &SelectionContext<'_>) -> Selection {
        match self.spec {
            PolicySpec::Uniform => Selection::Superarm(self.rng.random_range(0..self.superarms.len())),
            PolicySpec::Ucb { boundary } => self.select_ucb(boundary, ctx.rejected_arms),
            PolicySpec::BestEvidence => self.select_best_evidence(ctx),
            PolicySpec::BaiReduction { epsilon } => self.select_bai(epsilon, ctx.rejected_arms),
        }
    }

    fn lift(&self, arm: usize) -> Selection {
        Selection::Superarm(self.superarms.lift(arm))
    }

    fn select_ucb(&self, boundary: Boundary, rejected: &[bool]) -> Selection {
        let mut best: Option<(usize, f64)> = None;
        for (arm, &done) in rejected.iter().enumerate().take(self.counts.len()) {
            if done {
                continue;
            }
            if self.counts[arm] == 0 {
                return self.lift(arm);
            }
            let ucb = self.mean(arm) + boundary.radius(self.counts[arm], self.log_inv_delta);
            if best.is_none_or(|(_, b)| ucb > b) {
                best = Some((arm, ucb));
            }
        }
        match best {
            Some((arm, _)) => self.lift(arm),
            None => Selection::AllRejected,
        }
    }

    fn select_best_evidence(&self, ctx: &SelectionContext<'_>) -> Selection {
        let k = ctx.strengths.len();
        if ctx.round as usize <= k {
            return self.lift(ctx.hyp_arm[ctx.round as usize - 1]);
        }
        let mut best: Option<(usize, f64)> = None;
        for h in 0..k {
            if ctx.rejected_hyps[h] {
                continue;
            }
            let s = ctx.strengths[h];
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((h, s));
            }
        }
        match best {
            Some((h, _)) => self.lift(ctx.hyp_arm[h]),
            None => Selection::AllRejected,
        }
    }

    fn select_bai(&mut self, epsilon: f64, rejected: &[bool]) -> Selection {
        if let Some(b) = self.best_arm {
            if !rejected[b] {
                return self.lift(b);
            }
            self.best_arm = None;
            self.elimination = None;
        }
        let live: Vec<usize> = (0..self.counts.len()).filter(|&a| !rejected[a]).collect();
        if live.is_empty() {
            return Selection::AllRejected;
        }
        let restart = match &self.elimination {
            None => true,
            Some(e) => e.active.iter().all(|&a| rejected[a]),
        };
        if restart {
            // delta/2 per restart, split over the restart's arms
            let per_arm = self.delta / 2.0 / live.len() as f64;
            self.elimination = Some(Elimination { active: live, log_inv_delta: -per_arm.ln() });
        }
        let mut el = self.elimination.take().expect("set above");
        el.active.retain(|&a| !rejected[a]);
        let outcome = self.elimination_step(&mut el, epsilon);
        self.elimination = Some(el);
        match outcome {
            Ok(best) => {
                self.best_arm = Some(best);
                self.elimination = None;
                self.lift(best)
            }
            Err(query) => self.lift(query),
        }
    }

    /// `Ok(best)` when elimination terminates, `Err(arm)` for the next query.
    fn elimination_step(&self, el: &mut Elimination, epsilon: f64) -> std::result::Result<usize, usize> {
        if let Some(&a) = el.active.iter().find(|&&a| self.counts[a] == 0) {
            return Err(a);
        }
        let radius = |a: usize| Boundary::Phi0.radius(self.counts[a], el.log_inv_delta);
        let max_lcb = el
            .active
            .iter()
            .map(|&a| self.mean(a) - radius(a))
            .fold(f64::NEG_INFINITY, f64::max);
        el.active.retain(|&a| self.mean(a) + radius(a) >= max_lcb);
        let empirical_best = *el
            .active
            .iter()
            .max_by(|&&a, &&b| self.mean(a).total_cmp(&self.mean(b)).then(b.cmp(&a)))
            .expect("the arm attaining max_lcb always survives");
        if el.active.len() == 1 || el.active.iter().all(|&a| radius(a) <= epsilon / 2.0) {
            return Ok(empirical_best);
        }
        let next = *el
            .active
            .iter()
            .min_by_key(|&&a| (self.counts[a], a))
            .expect("nonempty");
        Err(next)
    }
}
