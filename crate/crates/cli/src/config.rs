//! Experiment configuration: JSON in, validated structs out.
//!
//! Parsing is fail-closed. Every struct rejects unknown fields so a typo'd
//! key is an error instead of a silently ignored setting.

use std::fs;
use std::path::{Path, PathBuf};

use branchline_core::{Error, Grid, IntervalSpec, Result, StructureSet, StructureTriple};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t0: f64,
    pub dt: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        branchline_core::make_grid(self.t0, self.dt, self.n)
    }
}

/// One branch of the fixture: either a generator or a CSV file on disk.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum BranchSource {
    File(PathBuf),
    Generator(GeneratorSpec),
}

// Hand-written so a bad generator object reports its actual field error
// instead of serde's generic untagged-enum message.
impl<'de> Deserialize<'de> for BranchSource {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        let value = serde_json::Value::deserialize(deserializer)?;
        match value {
            serde_json::Value::String(s) => Ok(BranchSource::File(PathBuf::from(s))),
            other => serde_json::from_value::<GeneratorSpec>(other)
                .map(BranchSource::Generator)
                .map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Gaussian(GaussianParams),
    ModulatedGaussian(ModulatedGaussianParams),
    BandNoise(BandNoiseParams),
    Scenario(ScenarioParams),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianParams {
    pub a: f64,
    pub t_c: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulatedGaussianParams {
    pub a: f64,
    pub t_c: f64,
    pub sigma: f64,
    pub omega0: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandNoiseParams {
    pub omega: f64,
    pub seed: u64,
}

/// Shared history plus a divergence that switches on at `split_time`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioParams {
    pub base: Box<GeneratorSpec>,
    pub divergence: Box<GeneratorSpec>,
    pub split_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalKind {
    LeftRay,
    RightRay,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalDef {
    pub kind: IntervalKind,
    pub a: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extras: Vec<(f64, f64)>,
}

impl IntervalDef {
    pub fn build(&self) -> Result<IntervalSpec> {
        let ray = match self.kind {
            IntervalKind::LeftRay => IntervalSpec::left_ray(self.a),
            IntervalKind::RightRay => IntervalSpec::right_ray(self.a),
        };
        if self.extras.is_empty() {
            Ok(ray)
        } else {
            ray.with_extras(self.extras.clone())
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripleSpec {
    pub d: usize,
    pub k: usize,
    pub interval: IntervalDef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanPolicy {
    Uniform,
    Explicit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSpec {
    pub policy: PlanPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centers: Option<Vec<f64>>,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryMode {
    Segment,
    Sampling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Direct,
    Projection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoverySpec {
    pub mode: RecoveryMode,
    pub branch: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<IntervalDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_index: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    pub solver: SolverKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSpec,
    pub branches: Vec<BranchSource>,
    pub structure_set: Vec<TripleSpec>,
    pub plan: PlanSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recovery: Option<RecoverySpec>,
    pub seed: u64,
    pub outputs: PathBuf,
}

impl ExperimentConfig {
    pub fn structure(&self) -> Result<StructureSet> {
        let mut triples = Vec::with_capacity(self.structure_set.len());
        for t in &self.structure_set {
            triples.push(StructureTriple::new(t.d, t.k, t.interval.build()?));
        }
        Ok(StructureSet::new(self.branches.len(), triples))
    }

    /// Cross-field checks that serde cannot express.
    pub fn validate(&self) -> Result<()> {
        if self.branches.is_empty() {
            return Err(Error::InvalidArgument(
                "branches: at least one branch is required".into(),
            ));
        }
        match self.plan.policy {
            PlanPolicy::Explicit if self.plan.centers.is_none() => {
                return Err(Error::InvalidArgument(
                    "plan.centers: required when plan.policy is explicit".into(),
                ));
            }
            PlanPolicy::Uniform if self.plan.centers.is_some() => {
                return Err(Error::InvalidArgument(
                    "plan.centers: only valid when plan.policy is explicit".into(),
                ));
            }
            _ => {}
        }
        if let Some(rec) = &self.recovery {
            if rec.branch == 0 || rec.branch > self.branches.len() {
                return Err(Error::InvalidArgument(format!(
                    "recovery.branch: {} is outside 1..={}",
                    rec.branch,
                    self.branches.len()
                )));
            }
            match rec.mode {
                RecoveryMode::Segment => {
                    if rec.interval.is_none() {
                        return Err(Error::InvalidArgument(
                            "recovery.interval: required in segment mode".into(),
                        ));
                    }
                    if rec.stride.is_some() || rec.s_index.is_some() || rec.omega.is_some() {
                        return Err(Error::InvalidArgument(
                            "recovery.stride/s_index/omega: not valid in segment mode".into(),
                        ));
                    }
                }
                RecoveryMode::Sampling => {
                    if rec.interval.is_some() {
                        return Err(Error::InvalidArgument(
                            "recovery.interval: not valid in sampling mode".into(),
                        ));
                    }
                    if rec.stride.is_none() || rec.s_index.is_none() || rec.omega.is_none() {
                        return Err(Error::InvalidArgument(
                            "recovery.stride, recovery.s_index, recovery.omega: all required in sampling mode"
                                .into(),
                        ));
                    }
                    if rec.branch != 1 {
                        return Err(Error::InvalidArgument(
                            "recovery.branch: sampling mode observes branch 1".into(),
                        ));
                    }
                }
            }
            if let Some(l) = rec.lambda {
                if !(l.is_finite() && l >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "recovery.lambda: must be finite and nonnegative, got {l}"
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cfg: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}
