//! Multiple-testing procedures.
//!
//! BH and e-BH return the largest p-/e-self-consistent set; the DAG variant
//! returns the largest self-consistent set that is closed under predecessors.
//! [`level`] maps a dependence/adaptivity setting to the level BH must run at
//! so that the FDR stays below the nominal target.

pub mod dag;
pub mod level;
pub mod oracle;
pub mod stepup;

use serde::{Deserialize, Serialize};

pub use dag::{largest_constrained_self_consistent, DagConstraint};
pub use level::{
    corrected_level, harmonic, level_choice, multi_arm_corrected_level, solve_c_delta, Adaptivity,
    BoundFamily, Dependence, DependenceSetting, LevelChoice, OutputKind,
};
pub use oracle::{brute_force_constrained, brute_force_largest_self_consistent};
pub use stepup::{bh, bh_log, ebh, ebh_log, is_self_consistent};

/// Whether values are p-values (small is evidence) or e-values (large is evidence).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    P,
    E,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Procedure {
    Bh,
    Ebh,
    ConstrainedP,
    ConstrainedE,
}

/// Rejected hypothesis ids (0-based, ascending) and the procedure/level used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionSet {
    pub ids: Vec<usize>,
    pub level: f64,
    pub procedure: Procedure,
}

impl RejectionSet {
    pub fn empty(level: f64, procedure: Procedure) -> Self {
        RejectionSet {
            ids: Vec::new(),
            level,
            procedure,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.ids.binary_search(&id).is_ok()
    }

    pub fn is_subset_of(&self, other: &RejectionSet) -> bool {
        self.ids.iter().all(|&i| other.contains(i))
    }
}

/// `|R| alpha / k`, the largest p-value allowed in a set of size `m`.
#[inline]
pub(crate) fn p_threshold(m: usize, k: usize, alpha: f64) -> f64 {
    alpha * m as f64 / k as f64
}

#[inline]
pub(crate) fn passes(mode: Mode, value: f64, m: usize, k: usize, alpha: f64) -> bool {
    match mode {
        Mode::P => value <= p_threshold(m, k, alpha),
        // compared on the reciprocal so e-BH and BH on 1/e agree exactly in floats
        Mode::E => 1.0 / value <= p_threshold(m, k, alpha),
    }
}
