//! Synthetic reward generators.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::exploration::Superarms;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Noise {
    #[default]
    Independent,
    /// `X_i = mu_i + (Z + zeta_i) / sqrt(2)` with one `Z` per round.
    SharedNoise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    /// Singleton superarms.
    Standard,
    /// Superarm `c` is `{c, c + cliques, c + 2 cliques, ...}`.
    CliqueGraph { cliques: usize },
    /// Full feedback: one superarm holding every arm.
    Streaming,
    /// Singletons whose conditional mean alternates `mu - 1`, `mu + 1` with
    /// the arm's pull parity (odd pulls low). The average conditional mean
    /// stays at `mu` but the rewards are not identically distributed.
    DriftingNull,
}

/// Unit-variance Gaussian arms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    kind: EnvKind,
    means: Vec<f64>,
    noise: Noise,
    superarms: Superarms,
}

impl Environment {
    pub fn new(kind: EnvKind, means: Vec<f64>, noise: Noise) -> Result<Self> {
        let n = means.len();
        if n == 0 {
            return domain("environment needs at least one arm");
        }
        if let Some(m) = means.iter().find(|m| !m.is_finite()) {
            return domain(format!("arm mean {m} is not finite"));
        }
        let superarms = match kind {
            EnvKind::Standard | EnvKind::DriftingNull => Superarms::singletons(n),
            EnvKind::CliqueGraph { cliques } => {
                if cliques == 0 || cliques > n {
                    return domain(format!("{cliques} cliques for {n} arms"));
                }
                let sets = (0..cliques).map(|c| (c..n).step_by(cliques).collect()).collect();
                Superarms::new(n, sets)?
            }
            EnvKind::Streaming => Superarms::new(n, vec![(0..n).collect()])?,
        };
        Ok(Environment { kind, means, noise, superarms })
    }

    pub fn standard(means: Vec<f64>) -> Self {
        Environment::new(EnvKind::Standard, means, Noise::Independent).expect("finite nonempty means")
    }

    pub fn kind(&self) -> EnvKind {
        self.kind
    }

    pub fn n_arms(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn noise(&self) -> Noise {
        self.noise
    }

    pub fn superarms(&self) -> &Superarms {
        &self.superarms
    }
}

/// Per-trial reward source over an [`Environment`].
#[derive(Debug, Clone)]
pub struct RewardSampler<'a> {
    env: &'a Environment,
    rng: ChaCha8Rng,
    pulls: Vec<u64>,
}

impl<'a> RewardSampler<'a> {
    pub fn new(env: &'a Environment, rng: ChaCha8Rng) -> Self {
        RewardSampler { env, rng, pulls: vec![0; env.n_arms()] }
    }

    /// Rewards for `arms`, in the given order, appended to `out`.
    pub fn draw(&mut self, arms: &[usize], out: &mut Vec<(usize, f64)>) {
        let shared: f64 = match self.env.noise {
            Noise::Independent => 0.0,
            Noise::SharedNoise => self.rng.sample(StandardNormal),
        };
        for &a in arms {
            let z: f64 = self.rng.sample(StandardNormal);
            let noise = match self.env.noise {
                Noise::Independent => z,
                Noise::SharedNoise => (shared + z) * std::f64::consts::FRAC_1_SQRT_2,
            };
            self.pulls[a] += 1;
            let mut mean = self.env.means[a];
            if self.env.kind == EnvKind::DriftingNull {
                mean += if self.pulls[a] % 2 == 1 { -1.0 } else { 1.0 };
            }
            out.push((a, mean + noise));
        }
    }
}
