//! Time-uniform confidence radii for the mean of 1-sub-Gaussian samples.
//!
//! Each boundary has the form `phi(t, delta) = sqrt(g(t, ln(1/delta)) / t)`
//! where `g` is increasing in `ln(1/delta)`. Working with `ln(1/delta)`
//! directly lets p-value inversion reach values far below `f64::MIN_POSITIVE`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// `sqrt(4 ln(log2(2t) / delta) / t)`, valid for delta in (0, 1).
    Phi0,
    /// `sqrt((2 ln(1/delta) + 6 ln ln(1/delta) + 3 ln ln(e t / 2)) / t)`,
    /// valid for delta in (0, 0.1].
    PhiJj,
    /// `sqrt((2.89 ln ln(2.041 t) + 2.065 ln(4.983 / delta)) / t)`,
    /// valid for delta in (0, 1).
    PhiIs,
}

impl Boundary {
    /// Largest admissible delta. For `Phi0` and `PhiIs` the range is open at 1.
    pub fn max_delta(self) -> f64 {
        match self {
            Boundary::PhiJj => 0.1,
            Boundary::Phi0 | Boundary::PhiIs => 1.0,
        }
    }

    fn check_delta(self, delta: f64) -> Result<()> {
        let ok = match self {
            Boundary::PhiJj => delta > 0.0 && delta <= 0.1,
            Boundary::Phi0 | Boundary::PhiIs => delta > 0.0 && delta < 1.0,
        };
        if ok {
            Ok(())
        } else {
            domain(format!("delta = {delta} outside the valid range of {self:?}"))
        }
    }

    /// `phi(t, delta)`.
    pub fn eval(self, t: u64, delta: f64) -> Result<f64> {
        if t < 1 {
            return domain("boundary requires t >= 1");
        }
        self.check_delta(delta)?;
        Ok(self.radius(t, -delta.ln()))
    }

    /// Radius at `t >= 1` given `log_inv_delta = ln(1/delta)`; no range checks.
    pub fn radius(self, t: u64, log_inv_delta: f64) -> f64 {
        (self.scaled_sq(t, log_inv_delta) / t as f64).sqrt()
    }

    /// `t * phi(t, delta)^2` as a function of `ln(1/delta)`.
    ///
    /// Strictly increasing in `log_inv_delta` over the valid range.
    pub fn scaled_sq(self, t: u64, log_inv_delta: f64) -> f64 {
        let t = t as f64;
        match self {
            Boundary::Phi0 => 4.0 * ((2.0 * t).log2().ln() + log_inv_delta),
            Boundary::PhiJj => {
                2.0 * log_inv_delta
                    + 6.0 * log_inv_delta.ln()
                    + 3.0 * (std::f64::consts::E * t / 2.0).ln().ln()
            }
            Boundary::PhiIs => {
                2.89 * (2.041 * t).ln().ln() + 2.065 * (4.983f64.ln() + log_inv_delta)
            }
        }
    }

    /// Smallest admissible `ln(1/delta)`.
    pub(crate) fn min_log_inv_delta(self) -> f64 {
        -self.max_delta().ln()
    }
}
