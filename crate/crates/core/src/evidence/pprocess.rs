//! P-processes: boundary inversion of a confidence sequence, or `1/E`.

use serde::{Deserialize, Serialize};

use super::boundary::Boundary;
use super::eprocess::{EProcess, LambdaStrategy};

/// Linear-domain floor for reported p-values.
pub const P_FLOOR: f64 = 1e-320;

const BISECTION_TOL: f64 = 1e-12;
const BISECTION_MAX_ITER: usize = 200;

/// `min(1, 1/e)`; 1 for `e <= 1`, including `e = 0`.
pub fn p_from_e(e: f64) -> f64 {
    if e <= 1.0 {
        1.0
    } else {
        1.0 / e
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Mode {
    BoundaryInversion(Boundary),
    InverseE(EProcess),
}

/// Running p-process together with its running infimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PProcess {
    mode: Mode,
    mu0: f64,
    count: u64,
    sum: f64,
    log_p: f64,
    log_inf_p: f64,
}

impl PProcess {
    /// `P_t = inf{rho : |mean_t - mu0| > phi(T, rho)}`.
    pub fn boundary(boundary: Boundary, mu0: f64) -> Self {
        Self::with_mode(Mode::BoundaryInversion(boundary), mu0)
    }

    /// `P_t = min(1, 1 / E_t)` for a PM-H e-process.
    pub fn inverse_pmh(lambda: LambdaStrategy, mu0: f64) -> Self {
        Self::with_mode(Mode::InverseE(EProcess::pmh(lambda, mu0)), mu0)
    }

    pub fn inverse_e(e: EProcess) -> Self {
        let mu0 = e.mu0();
        let mut s = Self::with_mode(Mode::InverseE(e), mu0);
        s.refresh_inverse();
        s.log_inf_p = s.log_p;
        s
    }

    fn with_mode(mode: Mode, mu0: f64) -> Self {
        PProcess {
            mode,
            mu0,
            count: 0,
            sum: 0.0,
            log_p: 0.0,
            log_inf_p: 0.0,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    pub fn update(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        match &mut self.mode {
            Mode::BoundaryInversion(b) => {
                let b = *b;
                let dev = (self.sum / self.count as f64 - self.mu0).abs();
                self.log_p = invert_boundary(b, self.count, dev);
            }
            Mode::InverseE(e) => {
                e.update(x);
                self.refresh_inverse();
            }
        }
        if self.log_p < self.log_inf_p {
            self.log_inf_p = self.log_p;
        }
    }

    fn refresh_inverse(&mut self) {
        if let Mode::InverseE(e) = &self.mode {
            self.log_p = (-e.log_value()).min(0.0);
        }
    }

    /// `ln P_t`, not floored.
    pub fn log_p(&self) -> f64 {
        self.log_p
    }

    /// `P_t` in `[1e-320, 1]`.
    pub fn p(&self) -> f64 {
        self.log_p.exp().max(P_FLOOR)
    }

    pub fn log_running_inf(&self) -> f64 {
        self.log_inf_p
    }

    pub fn running_inf(&self) -> f64 {
        self.log_inf_p.exp().max(P_FLOOR)
    }
}

/// `ln inf{rho : dev > phi(t, rho)}`, clamped to `<= 0`.
///
/// Closed form for `Phi0`; monotone bisection on `ln(1/rho)` otherwise.
pub fn invert_boundary(b: Boundary, t: u64, dev: f64) -> f64 {
    match b {
        Boundary::Phi0 => invert_phi0(t, dev),
        _ => invert_by_bisection(b, t, dev),
    }
}

/// `ln min(1, log2(2t) exp(-t dev^2 / 4))`.
pub fn invert_phi0(t: u64, dev: f64) -> f64 {
    let tf = t as f64;
    ((2.0 * tf).log2().ln() - tf * dev * dev / 4.0).min(0.0)
}

/// Generic inversion for any boundary; returns the conservative end of the
/// final bracket.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn invert_by_bisection(b: Boundary, t: u64, dev: f64) -> f64 {
    let target = t as f64 * dev * dev;
    let mut lo = b.min_log_inv_delta();
    if !(b.scaled_sq(t, lo) < target) {
        return 0.0;
    }
    // bracket: scaled_sq(lo) < target <= scaled_sq(hi)
    let mut step = 1.0;
    let mut hi = lo + step;
    while b.scaled_sq(t, hi) < target {
        lo = hi;
        step *= 2.0;
        hi = lo + step;
    }
    for _ in 0..BISECTION_MAX_ITER {
        // |d rho| <= rho(lo) * (hi - lo)
        if (-lo).exp() * (hi - lo) <= BISECTION_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if b.scaled_sq(t, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (-lo).min(0.0)
}
