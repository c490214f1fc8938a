//! Bandit multiple hypothesis testing with anytime false-discovery-rate control.
//!
//! The crate separates a bandit testing algorithm into an *exploration*
//! component, which decides which arms (or superarms) to query each round, and
//! an *evidence* component, which keeps one e-process or p-process per
//! hypothesis and turns them into a rejection set with e-BH or BH. FDR control
//! comes entirely from the evidence side, so exploration policies are opaque
//! selectors to the [`engine`].
//!
//! Modules:
//! - [`evidence`]: confidence-sequence boundaries, p-processes, e-processes,
//!   betting strategies and e-merging functions.
//! - [`mt`]: BH, e-BH, self-consistency, DAG-constrained rejection sets and
//!   the dependence-correction calculus.
//! - [`exploration`]: uniform, UCB, best-evidence and BAI-reduction policies.
//! - [`engine`]: the round loop, environments, streaming monitor and FDP/TPP.
//! - [`multiagent`]: wealth-splitting aggregation of per-agent e-processes.
//! - [`harness`]: experiment configs, Monte Carlo replication, validity
//!   oracles and CSV output.

pub mod engine;
pub mod error;
pub mod evidence;
pub mod exploration;
pub mod harness;
pub mod mt;
pub mod multiagent;
pub mod par;
pub(crate) mod rng;

pub use error::{Error, Result};
