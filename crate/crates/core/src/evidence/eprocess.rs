//! E-processes for the one-sided null "mean <= mu0" of 1-sub-Gaussian rewards.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

/// Number of explicit mixture components; everything beyond is lumped.
pub const MIXTURE_COMPONENTS: usize = 50;

/// How the predictable bet for the next sample is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaStrategy {
    Fixed { lambda: f64 },
    /// `sqrt(2 ln(2/alpha) / (j ln(j + 1)))` for the j-th sample.
    DefaultWsr { alpha: f64 },
    /// `(mean of prior deviations / 2)_+`, zero before any data.
    BettingHalfMean,
}

impl LambdaStrategy {
    /// Bet for the next sample given `count` prior samples whose deviations
    /// from the null mean sum to `sum_dev`.
    pub fn next_lambda(&self, count: u64, sum_dev: f64) -> f64 {
        match *self {
            LambdaStrategy::Fixed { lambda } => lambda.max(0.0),
            LambdaStrategy::DefaultWsr { alpha } => {
                let j = (count + 1) as f64;
                (2.0 * (2.0 / alpha).ln() / (j * (j + 1.0).ln())).sqrt()
            }
            LambdaStrategy::BettingHalfMean => {
                if count == 0 {
                    0.0
                } else {
                    (sum_dev / count as f64 / 2.0).max(0.0)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum EProcessKind {
    /// Predictably-mixed Hoeffding: `prod_j exp(lambda_j (X_j - mu0) - lambda_j^2 / 2)`.
    Pmh { lambda: LambdaStrategy },
    /// `sum_l w_l exp(lambda_l S_T - T lambda_l^2 / 2)` with
    /// `lambda_l = e^-(l + 5/2)` and `w_l = 2(e - 1) / (e (l + 2)^2)`.
    DiscreteMixture,
}

/// Mixture constants `(lambda_l, ln w_l)`. The last entry carries the
/// whole tail weight `sum_{l >= 50} w_l` at `lambda_50`.
pub fn mixture_components() -> &'static [(f64, f64)] {
    static TABLE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let e = std::f64::consts::E;
        let scale = 2.0 * (e - 1.0) / e;
        let mut out = Vec::with_capacity(MIXTURE_COMPONENTS + 1);
        let mut head = 0.0;
        for l in 0..MIXTURE_COMPONENTS {
            let inv_sq = 1.0 / ((l + 2) as f64).powi(2);
            head += inv_sq;
            out.push((mixture_lambda(l), (scale * inv_sq).ln()));
        }
        // sum_{n >= 2} 1/n^2 = pi^2/6 - 1
        let tail = std::f64::consts::PI.powi(2) / 6.0 - 1.0 - head;
        out.push((mixture_lambda(MIXTURE_COMPONENTS), (scale * tail).ln()));
        out
    })
}

pub fn mixture_lambda(l: usize) -> f64 {
    (-(l as f64 + 2.5)).exp()
}

pub fn mixture_weight(l: usize) -> f64 {
    let e = std::f64::consts::E;
    2.0 * (e - 1.0) / (e * ((l + 2) as f64).powi(2))
}

/// Running e-process state. Values are kept in log space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EProcess {
    kind: EProcessKind,
    mu0: f64,
    count: u64,
    sum_dev: f64,
    log_wealth: f64,
    log_prior: f64,
    log_value: f64,
}

impl EProcess {
    pub fn new(kind: EProcessKind, mu0: f64) -> Self {
        let mut s = EProcess {
            kind,
            mu0,
            count: 0,
            sum_dev: 0.0,
            log_wealth: 0.0,
            log_prior: 0.0,
            log_value: 0.0,
        };
        s.refresh();
        s
    }

    pub fn pmh(lambda: LambdaStrategy, mu0: f64) -> Self {
        Self::new(EProcessKind::Pmh { lambda }, mu0)
    }

    pub fn discrete_mixture(mu0: f64) -> Self {
        Self::new(EProcessKind::DiscreteMixture, mu0)
    }

    /// Start from wealth `e^{log_prior}` instead of 1.
    pub fn with_log_prior(mut self, log_prior: f64) -> Self {
        self.log_prior = log_prior;
        self.refresh();
        self
    }

    pub fn kind(&self) -> EProcessKind {
        self.kind
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn sum_dev(&self) -> f64 {
        self.sum_dev
    }

    /// The bet the next `update` will use; `None` for the mixture.
    pub fn next_lambda(&self) -> Option<f64> {
        match self.kind {
            EProcessKind::Pmh { lambda } => Some(lambda.next_lambda(self.count, self.sum_dev)),
            EProcessKind::DiscreteMixture => None,
        }
    }

    pub fn update(&mut self, x: f64) {
        match self.kind {
            EProcessKind::Pmh { lambda } => {
                let l = lambda.next_lambda(self.count, self.sum_dev);
                self.bet(x, l);
            }
            EProcessKind::DiscreteMixture => {
                self.count += 1;
                self.sum_dev += x - self.mu0;
                self.refresh();
            }
        }
    }

    /// Multiply PM-H wealth by `exp(lambda (x - mu0) - lambda^2 / 2)` with an
    /// externally chosen bet. For the mixture this is the same as `update`.
    pub fn bet(&mut self, x: f64, lambda: f64) {
        if let EProcessKind::DiscreteMixture = self.kind {
            self.update(x);
            return;
        }
        self.log_wealth += lambda * (x - self.mu0) - lambda * lambda / 2.0;
        self.count += 1;
        self.sum_dev += x - self.mu0;
        self.refresh();
    }

    fn refresh(&mut self) {
        let core = match self.kind {
            EProcessKind::Pmh { .. } => self.log_wealth,
            EProcessKind::DiscreteMixture => mixture_log_value(self.count, self.sum_dev),
        };
        self.log_value = self.log_prior + core;
    }

    /// `ln E_t`.
    pub fn log_value(&self) -> f64 {
        self.log_value
    }

    /// `E_t`; overflows to `+inf` only past `ln E ~ 709`.
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }
}

/// `ln sum_l w_l exp(lambda_l s - t lambda_l^2 / 2)`.
pub fn mixture_log_value(t: u64, s: f64) -> f64 {
    let t = t as f64;
    let comps = mixture_components();
    let mut max = f64::NEG_INFINITY;
    let mut terms = [0.0f64; MIXTURE_COMPONENTS + 1];
    for (slot, &(lam, log_w)) in terms.iter_mut().zip(comps) {
        let v = log_w + lam * s - t * lam * lam / 2.0;
        *slot = v;
        if v > max {
            max = v;
        }
    }
    let sum: f64 = terms.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}
