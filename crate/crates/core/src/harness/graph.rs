//! Clique-graph comparison: BH on one kept sample per pull, BH on all
//! samples at the arbitrary-dependence level, and e-BH on all samples.
//! Every method samples superarms uniformly.

use super::config::{EnvKindName, ExperimentConfig, MethodConfig};
use super::experiment::{run_experiment, ExperimentOutput, RunOptions};
use crate::engine::Feedback;
use crate::error::{Error, Result};
use crate::evidence::{Boundary, EvidenceSpec, LambdaStrategy};
use crate::exploration::PolicySpec;
use crate::mt::{Adaptivity, Dependence, OutputKind};

pub const SINGLE_ARM_BH: &str = "single-arm-bh";
pub const FULL_BH: &str = "full-bh";
pub const EBH: &str = "ebh";

pub fn graph_methods(delta: f64) -> Vec<MethodConfig> {
    let p = EvidenceSpec::PBoundary { boundary: Boundary::PhiJj };
    let method = |id: &str, evidence, dependence, feedback| MethodConfig {
        id: id.to_string(),
        policy: PolicySpec::Uniform,
        evidence,
        adaptivity: Adaptivity::Adaptive,
        dependence,
        output: OutputKind::StepUp,
        feedback,
    };
    vec![
        method(SINGLE_ARM_BH, p, Dependence::Independent, Feedback::SingleRandom),
        method(FULL_BH, p, Dependence::Arbitrary, Feedback::UseAll),
        method(
            EBH,
            EvidenceSpec::Pmh { lambda: LambdaStrategy::DefaultWsr { alpha: delta } },
            Dependence::Arbitrary,
            Feedback::UseAll,
        ),
    ]
}

/// `config` with the fixed method set and e-BH as baseline.
pub fn graph_config(config: &ExperimentConfig) -> Result<ExperimentConfig> {
    if config.environment.kind != EnvKindName::CliqueGraph {
        return Err(Error::Config("graph experiment needs a clique_graph environment".into()));
    }
    if !config.methods.is_empty() {
        return Err(Error::Config("graph experiment uses a fixed method set; remove [[methods]]".into()));
    }
    let mut cfg = config.clone();
    cfg.methods = graph_methods(cfg.delta);
    cfg.baseline = Some(EBH.to_string());
    cfg.validate()?;
    Ok(cfg)
}

pub fn graph_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentOutput> {
    run_experiment(&graph_config(config)?, opts)
}
