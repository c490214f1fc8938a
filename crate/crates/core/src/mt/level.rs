//! Level corrections for BH under adaptivity and dependence.
//!
//! e-BH never needs a correction. For BH the corrected level is one of
//! `delta`, `c_delta`, `delta / l_k` or `c_delta / l_k`, where `l_k` is the
//! k-th harmonic number and `c_delta` solves `c (1 + ln(1/c)) = delta`.

use serde::{Deserialize, Serialize};

use super::Mode;
use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adaptivity {
    Adaptive,
    NonAdaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dependence {
    Independent,
    Arbitrary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    /// The BH / e-BH output itself.
    StepUp,
    /// Any self-consistent set, e.g. a DAG-constrained one.
    SelfConsistentOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DependenceSetting {
    pub adaptivity: Adaptivity,
    pub dependence: Dependence,
    pub output: OutputKind,
}

impl DependenceSetting {
    pub fn new(adaptivity: Adaptivity, dependence: Dependence, output: OutputKind) -> Self {
        DependenceSetting { adaptivity, dependence, output }
    }

    /// All eight cells.
    pub fn all() -> Vec<DependenceSetting> {
        let mut out = Vec::with_capacity(8);
        for a in [Adaptivity::NonAdaptive, Adaptivity::Adaptive] {
            for d in [Dependence::Independent, Dependence::Arbitrary] {
                for o in [OutputKind::StepUp, OutputKind::SelfConsistentOnly] {
                    out.push(DependenceSetting::new(a, d, o));
                }
            }
        }
        out
    }
}

/// Which correction produced a level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFamily {
    Nominal,
    CDelta,
    Harmonic,
    CDeltaOverHarmonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelChoice {
    pub delta: f64,
    pub delta_prime: f64,
    pub family: BoundFamily,
}

/// `sum_{i=1}^k 1/i`.
pub fn harmonic(k: usize) -> f64 {
    (1..=k).map(|i| 1.0 / i as f64).sum()
}

/// The root of `c (1 + ln(1/c)) = delta` in `(0, delta]`.
pub fn solve_c_delta(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return domain(format!("delta = {delta} outside (0, 1)"));
    }
    let f = |c: f64| c * (1.0 - c.ln());
    let (mut lo, mut hi) = (0.0f64, delta);
    for _ in 0..200 {
        if hi - lo <= 1e-15 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) < delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn check(delta: f64, k: usize) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return domain(format!("delta = {delta} outside (0, 1)"));
    }
    if k < 1 {
        return domain("k must be at least 1");
    }
    Ok(())
}

/// Level plus the correction family that produced it.
pub fn level_choice(delta: f64, setting: DependenceSetting, mode: Mode, k: usize) -> Result<LevelChoice> {
    check(delta, k)?;
    let choice = |delta_prime, family| LevelChoice { delta, delta_prime, family };
    if mode == Mode::E {
        return Ok(choice(delta, BoundFamily::Nominal));
    }
    let lk = harmonic(k);
    let c = solve_c_delta(delta)?;
    let best_of_two = || {
        if c >= delta / lk {
            choice(c, BoundFamily::CDelta)
        } else {
            choice(delta / lk, BoundFamily::Harmonic)
        }
    };
    Ok(match (setting.output, setting.dependence, setting.adaptivity) {
        (OutputKind::StepUp, Dependence::Independent, Adaptivity::NonAdaptive) => {
            choice(delta, BoundFamily::Nominal)
        }
        (OutputKind::StepUp, Dependence::Independent, Adaptivity::Adaptive) => best_of_two(),
        (OutputKind::StepUp, Dependence::Arbitrary, _) => choice(delta / lk, BoundFamily::Harmonic),
        (OutputKind::SelfConsistentOnly, Dependence::Independent, _) => best_of_two(),
        (OutputKind::SelfConsistentOnly, Dependence::Arbitrary, _) => {
            choice(c / lk, BoundFamily::CDeltaOverHarmonic)
        }
    })
}

/// Level `delta'` at which BH (P mode) or e-BH (E mode) must run.
pub fn corrected_level(delta: f64, setting: DependenceSetting, mode: Mode, k: usize) -> Result<f64> {
    level_choice(delta, setting, mode, k).map(|c| c.delta_prime)
}

/// Hypotheses that share arms: `delta / l_k` for BH, `delta` for e-BH.
pub fn multi_arm_corrected_level(delta: f64, mode: Mode, k: usize) -> Result<LevelChoice> {
    check(delta, k)?;
    Ok(match mode {
        Mode::E => LevelChoice { delta, delta_prime: delta, family: BoundFamily::Nominal },
        Mode::P => LevelChoice {
            delta,
            delta_prime: delta / harmonic(k),
            family: BoundFamily::Harmonic,
        },
    })
}
