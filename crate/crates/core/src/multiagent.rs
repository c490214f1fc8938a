//! Evidence aggregation across agents that join over time.
//!
//! When agent `l` starts on hypothesis `i` it records the current aggregate
//! `s_l`. From then on the aggregate is `(1/|A_i|) sum_l s_l e_l`, where
//! `e_l` is the agent's own e-process started at its arrival. A rejected
//! hypothesis keeps its aggregate. Rejections come from e-BH at `delta`.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::evidence::{EProcess, Evidence, EvidenceSpec};
use crate::mt::{ebh_log, RejectionSet};
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Slot {
    arrival: u64,
    log_snapshot: f64,
    log_e: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentReport {
    pub hypothesis: usize,
    pub agent: usize,
    /// `ln e` of the agent's own e-process for this hypothesis.
    pub log_e: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PoolEvent {
    Register { round: u64, hypothesis: usize, agent: usize },
    Step { round: u64, reports: Vec<AgentReport> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentPool {
    delta: f64,
    agents: Vec<BTreeMap<usize, Slot>>,
    log_agg: Vec<f64>,
    rejected: Vec<bool>,
    set: RejectionSet,
    round: u64,
    log: Vec<PoolEvent>,
}

impl AgentPool {
    pub fn new(k: usize, delta: f64) -> Result<Self> {
        if k == 0 {
            return domain("need at least one hypothesis");
        }
        if !(delta > 0.0 && delta < 1.0) {
            return domain(format!("delta = {delta} outside (0, 1)"));
        }
        Ok(AgentPool {
            delta,
            agents: vec![BTreeMap::new(); k],
            log_agg: vec![0.0; k],
            rejected: vec![false; k],
            set: RejectionSet::empty(delta, crate::mt::Procedure::Ebh),
            round: 0,
            log: Vec::new(),
        })
    }

    pub fn k(&self) -> usize {
        self.log_agg.len()
    }

    /// Agent `agent` starts contributing to `hypothesis` in round `round`.
    /// Its snapshot is the aggregate after round `round - 1`.
    pub fn register(&mut self, round: u64, hypothesis: usize, agent: usize) -> Result<()> {
        if hypothesis >= self.k() {
            return domain(format!("hypothesis {hypothesis} >= {}", self.k()));
        }
        if round <= self.round {
            return domain(format!("arrival round {round} is not after round {}", self.round));
        }
        if self.agents[hypothesis].contains_key(&agent) {
            return domain(format!("agent {agent} already registered for hypothesis {hypothesis}"));
        }
        let slot = Slot { arrival: round, log_snapshot: self.log_agg[hypothesis], log_e: 0.0 };
        self.agents[hypothesis].insert(agent, slot);
        self.log.push(PoolEvent::Register { round, hypothesis, agent });
        Ok(())
    }

    /// Apply one round of reports, then run e-BH. Agents that do not report
    /// keep their previous value (1 before their first report).
    pub fn aggregate_step(&mut self, round: u64, reports: &[AgentReport]) -> Result<&RejectionSet> {
        if round <= self.round {
            return domain(format!("round {round} is not after round {}", self.round));
        }
        let mut sorted = reports.to_vec();
        sorted.sort_by_key(|r| (r.hypothesis, r.agent));
        for w in sorted.windows(2) {
            if (w[0].hypothesis, w[0].agent) == (w[1].hypothesis, w[1].agent) {
                return domain(format!("agent {} reported twice for hypothesis {}", w[0].agent, w[0].hypothesis));
            }
        }
        for r in &sorted {
            let registered = self
                .agents
                .get(r.hypothesis)
                .and_then(|m| m.get(&r.agent))
                .is_some_and(|s| s.arrival <= round);
            if !registered {
                return Err(Error::UnregisteredAgent { hypothesis: r.hypothesis, agent: r.agent });
            }
            if r.log_e.is_nan() {
                return domain("NaN e-value report");
            }
        }
        for r in &sorted {
            if !self.rejected[r.hypothesis] {
                self.agents[r.hypothesis].get_mut(&r.agent).expect("checked").log_e = r.log_e;
            }
        }
        for i in 0..self.k() {
            if self.rejected[i] {
                continue;
            }
            let terms: Vec<f64> = self.agents[i]
                .values()
                .filter(|s| s.arrival <= round)
                .map(|s| s.log_snapshot + s.log_e)
                .collect();
            if !terms.is_empty() {
                self.log_agg[i] = log_mean_exp(&terms);
            }
        }
        self.round = round;
        self.set = ebh_log(&self.log_agg, self.delta);
        for &i in &self.set.ids {
            self.rejected[i] = true;
        }
        self.log.push(PoolEvent::Step { round, reports: sorted });
        Ok(&self.set)
    }

    pub fn log_aggregate(&self, hypothesis: usize) -> f64 {
        self.log_agg[hypothesis]
    }

    pub fn aggregate(&self, hypothesis: usize) -> f64 {
        self.log_agg[hypothesis].exp()
    }

    pub fn rejections(&self) -> &RejectionSet {
        &self.set
    }

    pub fn events(&self) -> &[PoolEvent] {
        &self.log
    }

    /// Rebuild a pool from its event log.
    pub fn replay(k: usize, delta: f64, events: &[PoolEvent]) -> Result<Self> {
        let mut pool = AgentPool::new(k, delta)?;
        for ev in events {
            match ev {
                PoolEvent::Register { round, hypothesis, agent } => pool.register(*round, *hypothesis, *agent)?,
                PoolEvent::Step { round, reports } => {
                    pool.aggregate_step(*round, reports)?;
                }
            }
        }
        Ok(pool)
    }
}

fn log_mean_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    m + (terms.iter().map(|v| (v - m).exp()).sum::<f64>() / terms.len() as f64).ln()
}

/// Whether agents see the same rewards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// Every agent observes the same reward stream.
    Shared,
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub arrival: u64,
    pub evidence: EvidenceSpec,
}

/// Agents each pull every hypothesis's arm once per round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSimSpec {
    pub means: Vec<f64>,
    pub mu0: f64,
    pub agents: Vec<AgentSpec>,
    pub coupling: Coupling,
    pub rounds: u64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSimResult {
    pub seed: u64,
    /// Running maximum of each aggregate over the run.
    pub log_sup: Vec<f64>,
    pub log_final: Vec<f64>,
    pub rejections: RejectionSet,
}

pub fn simulate_agents(spec: &AgentSimSpec, seed: u64) -> Result<AgentSimResult> {
    if spec.agents.is_empty() {
        return domain("need at least one agent");
    }
    if let Some(a) = spec.agents.iter().find(|a| !a.evidence.is_e() || a.arrival == 0) {
        return domain(format!("agents need e-process evidence and arrival >= 1, got {a:?}"));
    }
    let k = spec.means.len();
    let mut pool = AgentPool::new(k, spec.delta)?;
    let mut rng = stream(seed, Stream::Agents);
    let mut states: Vec<Vec<Option<EProcess>>> = vec![vec![None; k]; spec.agents.len()];
    let mut log_sup = vec![0.0; k];
    let mut reports = Vec::new();
    let mut shared = vec![0.0; k];
    for t in 1..=spec.rounds {
        for (l, a) in spec.agents.iter().enumerate() {
            if a.arrival == t {
                for (i, slot) in states[l].iter_mut().enumerate() {
                    pool.register(t, i, l)?;
                    *slot = match a.evidence.build(spec.mu0) {
                        Evidence::E(e) => Some(e),
                        Evidence::P(_) => unreachable!("checked above"),
                    };
                }
            }
        }
        if spec.coupling == Coupling::Shared {
            for (x, &m) in shared.iter_mut().zip(&spec.means) {
                *x = m + rng.sample::<f64, _>(StandardNormal);
            }
        }
        reports.clear();
        for (l, row) in states.iter_mut().enumerate() {
            for (i, slot) in row.iter_mut().enumerate() {
                let Some(e) = slot else { continue };
                let x = match spec.coupling {
                    Coupling::Shared => shared[i],
                    Coupling::Independent => spec.means[i] + rng.sample::<f64, _>(StandardNormal),
                };
                e.update(x);
                reports.push(AgentReport { hypothesis: i, agent: l, log_e: e.log_value() });
            }
        }
        pool.aggregate_step(t, &reports)?;
        for (s, i) in log_sup.iter_mut().zip(0..k) {
            *s = f64::max(*s, pool.log_aggregate(i));
        }
    }
    Ok(AgentSimResult {
        seed,
        log_sup,
        log_final: (0..k).map(|i| pool.log_aggregate(i)).collect(),
        rejections: pool.rejections().clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(hypothesis: usize, agent: usize, e: f64) -> AgentReport {
        AgentReport { hypothesis, agent, log_e: e.ln() }
    }

    #[test]
    fn worked_example() {
        let mut pool = AgentPool::new(1, 0.05).unwrap();
        pool.register(1, 0, 1).unwrap();
        pool.aggregate_step(1, &[report(0, 1, 2.0)]).unwrap();
        pool.aggregate_step(2, &[report(0, 1, 4.0)]).unwrap();
        assert!((pool.aggregate(0) - 4.0).abs() < 1e-12);
        pool.register(3, 0, 2).unwrap();
        pool.aggregate_step(3, &[report(0, 1, 8.0), report(0, 2, 2.0)]).unwrap();
        assert!((pool.aggregate(0) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn single_agent_is_its_own_process() {
        let mut pool = AgentPool::new(1, 0.05).unwrap();
        pool.register(1, 0, 0).unwrap();
        for (t, e) in [0.5, 3.0, 0.1, 7.0].into_iter().enumerate() {
            pool.aggregate_step(t as u64 + 1, &[report(0, 0, e)]).unwrap();
            assert!((pool.aggregate(0) - e).abs() < 1e-12);
        }
    }

    #[test]
    fn inactive_agents_keep_snapshot_average() {
        let mut pool = AgentPool::new(1, 0.05).unwrap();
        pool.register(1, 0, 0).unwrap();
        pool.aggregate_step(1, &[report(0, 0, 3.0)]).unwrap();
        pool.register(2, 0, 1).unwrap();
        for t in 2..10 {
            pool.aggregate_step(t, &[report(0, 0, 1.0), report(0, 1, 1.0)]).unwrap();
            assert!((pool.aggregate(0) - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn frozen_after_rejection() {
        let mut pool = AgentPool::new(1, 0.05).unwrap();
        pool.register(1, 0, 0).unwrap();
        assert_eq!(pool.aggregate_step(1, &[report(0, 0, 25.0)]).unwrap().ids, vec![0]);
        pool.aggregate_step(2, &[report(0, 0, 0.01)]).unwrap();
        assert!((pool.aggregate(0) - 25.0).abs() < 1e-9);
    }

    #[test]
    fn errors() {
        let mut pool = AgentPool::new(2, 0.05).unwrap();
        pool.register(1, 0, 0).unwrap();
        assert!(matches!(
            pool.aggregate_step(1, &[report(1, 0, 2.0)]),
            Err(Error::UnregisteredAgent { hypothesis: 1, agent: 0 })
        ));
        pool.register(5, 1, 3).unwrap();
        assert!(matches!(pool.aggregate_step(2, &[report(1, 3, 2.0)]), Err(Error::UnregisteredAgent { .. })));
        assert!(pool.register(1, 0, 0).is_err());
        assert!(pool.aggregate_step(1, &[report(0, 0, 1.0), report(0, 0, 2.0)]).is_err());
    }

    #[test]
    fn replay_reproduces() {
        let spec = AgentSimSpec {
            means: vec![0.0, 0.4],
            mu0: 0.0,
            agents: vec![
                AgentSpec { arrival: 1, evidence: EvidenceSpec::DiscreteMixture },
                AgentSpec { arrival: 30, evidence: EvidenceSpec::DiscreteMixture },
            ],
            coupling: Coupling::Independent,
            rounds: 200,
            delta: 0.05,
        };
        let a = simulate_agents(&spec, 4).unwrap();
        assert_eq!(a, simulate_agents(&spec, 4).unwrap());

        let mut pool = AgentPool::new(2, 0.05).unwrap();
        pool.register(1, 0, 0).unwrap();
        pool.aggregate_step(1, &[report(0, 0, 2.0)]).unwrap();
        pool.register(2, 0, 1).unwrap();
        pool.register(2, 1, 1).unwrap();
        pool.aggregate_step(2, &[report(0, 1, 0.5), report(0, 0, 3.0), report(1, 1, 9.0)]).unwrap();
        let again = AgentPool::replay(2, 0.05, pool.events()).unwrap();
        assert_eq!(again, pool);
    }
}
