//! Rejection sets constrained by a DAG: a hypothesis may only be rejected
//! together with all of its predecessors.

use serde::{Deserialize, Serialize};

use super::{passes, Mode, Procedure, RejectionSet};
use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DagConstraint {
    k: usize,
    edges: Vec<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

impl DagConstraint {
    /// `edges` are `(parent, child)` pairs over `0..k`.
    pub fn new(k: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut parents = vec![Vec::new(); k];
        let mut children = vec![Vec::new(); k];
        for &(p, c) in &edges {
            if p >= k || c >= k {
                return domain(format!("edge ({p}, {c}) outside 0..{k}"));
            }
            parents[c].push(p);
            children[p].push(c);
        }
        // Kahn
        let mut indeg: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut queue: Vec<usize> = (0..k).filter(|&v| indeg[v] == 0).collect();
        let mut topo = Vec::with_capacity(k);
        while let Some(v) = queue.pop() {
            topo.push(v);
            for &c in &children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    queue.push(c);
                }
            }
        }
        if topo.len() < k {
            let stuck = (0..k).find(|&v| indeg[v] > 0).unwrap_or(0);
            return Err(Error::Cycle(stuck));
        }
        Ok(DagConstraint { k, edges, parents, topo })
    }

    pub fn unconstrained(k: usize) -> Self {
        DagConstraint {
            k,
            edges: Vec::new(),
            parents: vec![Vec::new(); k],
            topo: (0..k).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    /// True iff `set` contains every parent of each member.
    pub fn is_feasible(&self, member: &[bool]) -> bool {
        (0..self.k).all(|v| !member[v] || self.parents[v].iter().all(|&p| member[p]))
    }

    /// The largest predecessor-closed subset of `eligible`: eligible nodes
    /// whose ancestors are all eligible.
    pub fn maximal_ideal_within(&self, eligible: &[bool]) -> Vec<bool> {
        let mut inside = vec![false; self.k];
        for &v in &self.topo {
            inside[v] = eligible[v] && self.parents[v].iter().all(|&p| inside[p]);
        }
        inside
    }
}

/// Largest DAG-feasible self-consistent set.
///
/// For each size `m` (descending), every feasible self-consistent set of
/// size `m` lies inside the maximal ideal of `{i : value_i passes at m}`.
/// The first `m` whose ideal has at least `m` members yields that ideal,
/// which is self-consistent at its own (larger or equal) size and is the
/// unique maximum.
pub fn largest_constrained_self_consistent(
    values: &[f64],
    alpha: f64,
    mode: Mode,
    dag: &DagConstraint,
) -> Result<RejectionSet> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("alpha = {alpha} outside (0, 1)"));
    }
    let k = values.len();
    if dag.k() != k {
        return domain(format!("dag covers {} hypotheses, got {k} values", dag.k()));
    }
    let procedure = match mode {
        Mode::P => Procedure::ConstrainedP,
        Mode::E => Procedure::ConstrainedE,
    };
    let mut eligible = vec![false; k];
    for m in (1..=k).rev() {
        for (slot, &v) in eligible.iter_mut().zip(values) {
            *slot = passes(mode, v, m, k, alpha);
        }
        let ideal = dag.maximal_ideal_within(&eligible);
        let size = ideal.iter().filter(|&&b| b).count();
        if size >= m {
            let ids = (0..k).filter(|&i| ideal[i]).collect();
            return Ok(RejectionSet { ids, level: alpha, procedure });
        }
    }
    Ok(RejectionSet::empty(alpha, procedure))
}
