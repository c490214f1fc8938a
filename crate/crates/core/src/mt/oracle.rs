//! Exhaustive oracles for the step-up and DAG procedures. Test and CLI use only.

use super::dag::DagConstraint;
use super::stepup::is_self_consistent;
use super::{Mode, Procedure, RejectionSet};
use crate::error::{Error, Result};

pub const BRUTE_FORCE_LIMIT: usize = 16;
pub const CONSTRAINED_BRUTE_FORCE_LIMIT: usize = 20;

fn search(values: &[f64], alpha: f64, mode: Mode, keep: impl Fn(&[bool]) -> bool) -> Vec<usize> {
    let k = values.len();
    let mut best: Option<Vec<usize>> = None;
    let mut member = vec![false; k];
    for mask in 0u64..(1u64 << k) {
        for (i, slot) in member.iter_mut().enumerate() {
            *slot = mask >> i & 1 == 1;
        }
        if !keep(&member) {
            continue;
        }
        let ids: Vec<usize> = (0..k).filter(|&i| member[i]).collect();
        if !is_self_consistent(values, &ids, alpha, mode) {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => ids.len() > b.len() || (ids.len() == b.len() && ids < *b),
        };
        if better {
            best = Some(ids);
        }
    }
    best.unwrap_or_default()
}

fn procedure(mode: Mode, constrained: bool) -> Procedure {
    match (mode, constrained) {
        (Mode::P, false) => Procedure::Bh,
        (Mode::E, false) => Procedure::Ebh,
        (Mode::P, true) => Procedure::ConstrainedP,
        (Mode::E, true) => Procedure::ConstrainedE,
    }
}

/// Maximum-cardinality self-consistent set over all `2^k` subsets
/// (ties: lexicographically smallest id list).
pub fn brute_force_largest_self_consistent(values: &[f64], alpha: f64, mode: Mode) -> Result<RejectionSet> {
    if values.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge { k: values.len(), limit: BRUTE_FORCE_LIMIT });
    }
    let ids = search(values, alpha, mode, |_| true);
    Ok(RejectionSet { ids, level: alpha, procedure: procedure(mode, false) })
}

/// Same search restricted to predecessor-closed subsets.
pub fn brute_force_constrained(
    values: &[f64],
    alpha: f64,
    mode: Mode,
    dag: &DagConstraint,
) -> Result<RejectionSet> {
    if values.len() > CONSTRAINED_BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge { k: values.len(), limit: CONSTRAINED_BRUTE_FORCE_LIMIT });
    }
    let ids = search(values, alpha, mode, |m| dag.is_feasible(m));
    Ok(RejectionSet { ids, level: alpha, procedure: procedure(mode, true) })
}
