use super::{passes, Mode, Procedure, RejectionSet};
use crate::error::{domain, Result};

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        domain(format!("alpha = {alpha} outside (0, 1)"))
    }
}

/// Step-up over `order` (most significant first): the largest `m` whose
/// m-th entry passes at size `m`; returns the first `m` ids, sorted.
fn step_up(order: &[usize], pass_at: impl Fn(usize, usize) -> bool) -> Vec<usize> {
    let mut cut = 0;
    for m in (1..=order.len()).rev() {
        if pass_at(order[m - 1], m) {
            cut = m;
            break;
        }
    }
    let mut ids = order[..cut].to_vec();
    ids.sort_unstable();
    ids
}

fn ascending(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    order
}

fn descending(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

/// Benjamini-Hochberg: the largest p-self-consistent set.
pub fn bh(pvals: &[f64], alpha: f64) -> Result<RejectionSet> {
    check_alpha(alpha)?;
    if pvals.is_empty() {
        return domain("bh on an empty list");
    }
    if pvals.iter().any(|p| p.is_nan() || *p < 0.0) {
        return domain("p-values must be nonnegative numbers");
    }
    let k = pvals.len();
    let ids = step_up(&ascending(pvals), |i, m| passes(Mode::P, pvals[i], m, k, alpha));
    Ok(RejectionSet { ids, level: alpha, procedure: Procedure::Bh })
}

/// e-BH: the largest e-self-consistent set.
pub fn ebh(evals: &[f64], alpha: f64) -> Result<RejectionSet> {
    check_alpha(alpha)?;
    if evals.iter().any(|e| e.is_nan() || *e < 0.0) {
        return domain("e-values must be nonnegative");
    }
    let k = evals.len();
    let ids = step_up(&descending(evals), |i, m| passes(Mode::E, evals[i], m, k, alpha));
    Ok(RejectionSet { ids, level: alpha, procedure: Procedure::Ebh })
}

/// BH on `ln p` values. Used by the engine, where p-values can underflow.
pub fn bh_log(log_p: &[f64], alpha: f64) -> RejectionSet {
    let k = log_p.len();
    let (la, lk) = (alpha.ln(), (k as f64).ln());
    let ids = step_up(&ascending(log_p), |i, m| log_p[i] <= la + (m as f64).ln() - lk);
    RejectionSet { ids, level: alpha, procedure: Procedure::Bh }
}

/// e-BH on `ln e` values.
pub fn ebh_log(log_e: &[f64], alpha: f64) -> RejectionSet {
    let k = log_e.len();
    let (la, lk) = (alpha.ln(), (k as f64).ln());
    let ids = step_up(&descending(log_e), |i, m| log_e[i] >= lk - la - (m as f64).ln());
    RejectionSet { ids, level: alpha, procedure: Procedure::Ebh }
}

/// P mode: `max_{i in R} p_i <= |R| alpha / k`; E mode:
/// `min_{i in R} e_i >= k / (alpha |R|)`. The empty set is self-consistent.
pub fn is_self_consistent(values: &[f64], set: &[usize], alpha: f64, mode: Mode) -> bool {
    let k = values.len();
    let m = set.len();
    set.iter().all(|&i| i < k && passes(mode, values[i], m, k, alpha))
}
