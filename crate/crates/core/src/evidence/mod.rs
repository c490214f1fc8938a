//! Per-hypothesis evidence: boundaries, p-processes, e-processes, bets and
//! merging functions.
//!
//! All state transitions are plain `&mut self` updates on owned values, so a
//! state can be cloned to branch a trajectory or moved across threads.

pub mod boundary;
pub mod eprocess;
pub mod merge;
pub mod pprocess;

use serde::{Deserialize, Serialize};

pub use boundary::Boundary;
pub use eprocess::{EProcess, EProcessKind, LambdaStrategy};
pub use merge::{merge_mean, merge_product};
pub use pprocess::{p_from_e, PProcess};

/// Which statistic a method tracks for every hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EvidenceSpec {
    Pmh { lambda: LambdaStrategy },
    DiscreteMixture,
    /// Boundary-inversion p-process.
    PBoundary { boundary: Boundary },
    /// `1 / PM-H` p-process.
    InversePmh { lambda: LambdaStrategy },
}

impl EvidenceSpec {
    pub fn is_e(&self) -> bool {
        matches!(self, EvidenceSpec::Pmh { .. } | EvidenceSpec::DiscreteMixture)
    }

    pub fn build(&self, mu0: f64) -> Evidence {
        match *self {
            EvidenceSpec::Pmh { lambda } => Evidence::E(EProcess::pmh(lambda, mu0)),
            EvidenceSpec::DiscreteMixture => Evidence::E(EProcess::discrete_mixture(mu0)),
            EvidenceSpec::PBoundary { boundary } => Evidence::P(PProcess::boundary(boundary, mu0)),
            EvidenceSpec::InversePmh { lambda } => Evidence::P(PProcess::inverse_pmh(lambda, mu0)),
        }
    }
}

/// A running e- or p-process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Evidence {
    E(EProcess),
    P(PProcess),
}

impl Evidence {
    pub fn update(&mut self, x: f64) {
        match self {
            Evidence::E(e) => e.update(x),
            Evidence::P(p) => p.update(x),
        }
    }

    /// Log-domain statistic in the orientation the procedures expect:
    /// `ln e` for e-processes, `ln p` for p-processes.
    pub fn log_stat(&self) -> f64 {
        match self {
            Evidence::E(e) => e.log_value(),
            Evidence::P(p) => p.log_p(),
        }
    }

    /// Larger means more evidence against the null (`ln e` or `-ln p`).
    pub fn strength(&self) -> f64 {
        match self {
            Evidence::E(e) => e.log_value(),
            Evidence::P(p) => -p.log_p(),
        }
    }

    pub fn count(&self) -> u64 {
        match self {
            Evidence::E(e) => e.count(),
            Evidence::P(p) => p.count(),
        }
    }
}
