//! Experiment configuration (TOML, unknown keys rejected).

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engine::{EnvKind, Environment, Feedback, Hypotheses, MtConfig, Noise, StoppingRule, TrialSpec};
use crate::error::{Error, Result};
use crate::evidence::EvidenceSpec;
use crate::exploration::PolicySpec;
use crate::mt::{Adaptivity, Dependence, DependenceSetting, OutputKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum H1Rule {
    Const(usize),
    FloorLogK,
    FloorSqrtK,
}

impl H1Rule {
    pub fn size(self, k: usize) -> usize {
        let n = match self {
            H1Rule::Const(n) => n,
            H1Rule::FloorLogK => (k as f64).ln().floor() as usize,
            H1Rule::FloorSqrtK => (k as f64).sqrt().floor() as usize,
        };
        n.min(k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    pub kind: EnvKindName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cliques: Option<usize>,
    #[serde(default)]
    pub noise: Noise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKindName {
    Standard,
    CliqueGraph,
    Streaming,
    DriftingNull,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesesConfig {
    pub k: usize,
    pub h1: H1Rule,
    #[serde(default = "default_mu1")]
    pub mu1: f64,
    #[serde(default)]
    pub mu0: f64,
}

fn default_mu1() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub id: String,
    pub policy: PolicySpec,
    pub evidence: EvidenceSpec,
    pub adaptivity: Adaptivity,
    pub dependence: Dependence,
    #[serde(default = "default_output")]
    pub output: OutputKind,
    #[serde(default)]
    pub feedback: Feedback,
}

fn default_output() -> OutputKind {
    OutputKind::StepUp
}

impl MethodConfig {
    pub fn setting(&self) -> DependenceSetting {
        DependenceSetting::new(self.adaptivity, self.dependence, self.output)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub delta: f64,
    pub environment: EnvironmentConfig,
    pub hypotheses: HypothesesConfig,
    pub stopping: StoppingRule,
    #[serde(default)]
    pub methods: Vec<MethodConfig>,
    /// Method whose mean time-to-target is the ratio denominator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<String>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_stride")]
    pub stride: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

fn default_reps() -> usize {
    500
}

fn default_stride() -> u64 {
    1
}

/// The fields that define a trial; replications, seeds and output paths
/// are excluded so overrides do not change the hash.
#[derive(Serialize)]
struct HashedFields<'a> {
    delta: f64,
    environment: &'a EnvironmentConfig,
    hypotheses: &'a HypothesesConfig,
    stopping: &'a StoppingRule,
    methods: &'a [MethodConfig],
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta = {} outside (0, 1)", self.delta));
        }
        if self.hypotheses.k == 0 {
            return bad("k must be positive".into());
        }
        if !(self.hypotheses.mu1.is_finite() && self.hypotheses.mu0.is_finite()) {
            return bad("mu0 and mu1 must be finite".into());
        }
        if self.environment.kind == EnvKindName::CliqueGraph && self.environment.cliques.is_none() {
            return bad("clique_graph needs `cliques`".into());
        }
        if self.environment.kind != EnvKindName::CliqueGraph && self.environment.cliques.is_some() {
            return bad("`cliques` only applies to clique_graph".into());
        }
        let mut ids: Vec<&str> = self.methods.iter().map(|m| m.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("duplicate method id".into());
        }
        if let Some(b) = &self.baseline {
            if !self.methods.is_empty() && !ids.contains(&b.as_str()) {
                return bad(format!("baseline `{b}` is not a method id"));
            }
        }
        self.environment()?;
        for m in &self.methods {
            if m.id.is_empty() || m.id.contains([',', '"', '\n']) {
                return bad(format!("method id `{}` must be nonempty without commas or quotes", m.id));
            }
            self.trial_spec(m)?.validate()?;
        }
        Ok(())
    }

    /// Short hex digest of the trial-defining fields.
    pub fn hash(&self) -> String {
        let fields = HashedFields {
            delta: self.delta,
            environment: &self.environment,
            hypotheses: &self.hypotheses,
            stopping: &self.stopping,
            methods: &self.methods,
        };
        let bytes = serde_json::to_vec(&fields).expect("plain data");
        hex::encode(&Sha256::digest(&bytes)[..8])
    }

    pub fn h1_size(&self) -> usize {
        self.hypotheses.h1.size(self.hypotheses.k)
    }

    /// Arm means: the last `|H1|` arms are non-null.
    pub fn means(&self) -> Vec<f64> {
        let k = self.hypotheses.k;
        let h1 = self.h1_size();
        (0..k)
            .map(|i| if i >= k - h1 { self.hypotheses.mu1 } else { self.hypotheses.mu0 })
            .collect()
    }

    pub fn environment(&self) -> Result<Environment> {
        let kind = match self.environment.kind {
            EnvKindName::Standard => EnvKind::Standard,
            EnvKindName::CliqueGraph => EnvKind::CliqueGraph { cliques: self.environment.cliques.unwrap_or(1) },
            EnvKindName::Streaming => EnvKind::Streaming,
            EnvKindName::DriftingNull => EnvKind::DriftingNull,
        };
        Environment::new(kind, self.means(), self.environment.noise)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn hypotheses(&self) -> Hypotheses {
        let k = self.hypotheses.k;
        let h1 = self.h1_size();
        let labels: Vec<bool> = (0..k).map(|i| i >= k - h1).collect();
        Hypotheses::per_arm_labelled(self.hypotheses.mu0, &labels)
    }

    pub fn method(&self, id: &str) -> Option<&MethodConfig> {
        self.methods.iter().find(|m| m.id == id)
    }

    pub fn trial_spec(&self, method: &MethodConfig) -> Result<TrialSpec> {
        let mut spec = TrialSpec::new(
            self.environment()?,
            self.hypotheses(),
            method.policy,
            method.evidence,
            MtConfig::new(self.delta, method.setting()),
            self.stopping,
        );
        spec.feedback = method.feedback;
        spec.stride = self.stride;
        Ok(spec)
    }
}
