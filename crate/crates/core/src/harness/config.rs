use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{io_err, HarnessError, Result};
use crate::convert::{FormatDescriptor, FormatKind};
use crate::dsl::{self, ConstraintSpec};
use crate::mutate::{NeighborPolicy, OpKind, OpWeights, SigmaMode};
use crate::refine::{IsolatedMode, RefineConfig};

/// Argument placeholder replaced by the input file path.
pub const INPUT_PLACEHOLDER: &str = "{input}";

/// Overrides `rng_seed` when set.
pub const SEED_ENV: &str = "GRAPHREF_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    #[default]
    ExitCodeOnly,
    /// The first stdout line of an accepting run is its label.
    StdoutLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSpec {
    /// Program and arguments; exactly one argument contains `{input}`.
    pub command: Vec<String>,
    pub timeout_ms: u64,
    pub label_mode: LabelMode,
}

impl TargetSpec {
    pub fn new(command: Vec<String>, timeout_ms: u64, label_mode: LabelMode) -> Result<Self> {
        let spec = TargetSpec { command, timeout_ms, label_mode };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.command.is_empty() {
            return Err(HarnessError::Config("target command is empty".into()));
        }
        let count: usize = self.command.iter().map(|a| a.matches(INPUT_PLACEHOLDER).count()).sum();
        if count != 1 {
            return Err(HarnessError::Config(format!(
                "target command must contain {INPUT_PLACEHOLDER} exactly once, found {count}"
            )));
        }
        if self.timeout_ms == 0 {
            return Err(HarnessError::Config("target timeout must be positive".into()));
        }
        Ok(())
    }

    /// The argv with the placeholder substituted.
    pub fn argv(&self, input: &Path) -> Vec<String> {
        let path = input.to_string_lossy();
        self.command.iter().map(|a| a.replace(INPUT_PLACEHOLDER, &path)).collect()
    }
}

fn default_budget() -> usize {
    5
}
fn default_time_limit() -> f64 {
    60.0
}
fn default_hops() -> usize {
    2
}
fn default_rho() -> f64 {
    0.5
}
fn default_epsilon() -> f64 {
    dsl::DEFAULT_EPSILON
}
fn default_angle_tol() -> f64 {
    1e-3
}
fn default_max_iters() -> usize {
    10
}
fn default_isolated() -> IsolatedMode {
    IsolatedMode::ConnectWithinTriangle
}
fn default_timeout() -> u64 {
    10_000
}
fn default_workers() -> usize {
    1
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("graphref-out")
}

/// A campaign, read from a flat TOML document. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub seeds: Vec<PathBuf>,
    pub format: FormatKind,
    /// Neighbor count for point clouds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knn_k: Option<usize>,
    /// Constraint file. Meshes default to the bundled triangle-mesh spec,
    /// other formats to no constraints.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec_path: Option<PathBuf>,
    /// Mutations applied per generated input.
    #[serde(default = "default_budget")]
    pub budget_per_input: usize,
    #[serde(default = "default_time_limit")]
    pub time_limit_s: f64,
    /// Stops a seed after this many mutants; without it only the time limit
    /// ends a seed and the mutant count depends on machine speed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutants_per_seed: Option<usize>,
    #[serde(default)]
    pub no_refine: bool,
    #[serde(default)]
    pub no_neighbor: bool,
    /// Relative operator weights by name; unlisted operators keep weight 1.
    #[serde(default)]
    pub op_weights: BTreeMap<String, f64>,
    #[serde(default = "default_hops")]
    pub hops: usize,
    #[serde(default = "default_rho")]
    pub rho: f64,
    /// Fixed kernel width; omitted means the local mean edge length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub merge_tol: Option<f64>,
    #[serde(default = "default_angle_tol")]
    pub angle_tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_isolated")]
    pub isolated_mode: IsolatedMode,
    pub target: Vec<String>,
    #[serde(default = "default_timeout")]
    pub target_timeout_ms: u64,
    #[serde(default)]
    pub label_mode: LabelMode,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl CampaignConfig {
    /// A config with defaults for everything but the essentials.
    pub fn new(seeds: Vec<PathBuf>, format: FormatKind, target: Vec<String>) -> Self {
        let mut cfg: CampaignConfig = toml::from_str(&format!("format = \"{format}\"\nseeds = []\ntarget = []"))
            .expect("defaults deserialize");
        cfg.seeds = seeds;
        cfg.target = target;
        cfg
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Reads a config file. Relative paths are taken from the file's
    /// directory and `GRAPHREF_SEED` replaces `rng_seed` when set.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.seeds = cfg.seeds.iter().map(|s| resolve(base, s)).collect();
        cfg.spec_path = cfg.spec_path.as_deref().map(|s| resolve(base, s));
        cfg.out_dir = resolve(base, &cfg.out_dir);
        if let Some(program) = cfg.target.first_mut() {
            if program.contains(std::path::MAIN_SEPARATOR) && Path::new(program.as_str()).is_relative() {
                *program = resolve(base, Path::new(program.as_str())).to_string_lossy().into_owned();
            }
        }
        cfg.apply_env()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(raw) = std::env::var(SEED_ENV) {
            self.rng_seed = raw
                .trim()
                .parse()
                .map_err(|_| HarnessError::Config(format!("{SEED_ENV}=`{raw}` is not an unsigned integer")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if !(self.time_limit_s > 0.0 && self.time_limit_s.is_finite()) {
            return bad(format!("time_limit_s must be positive, got {}", self.time_limit_s));
        }
        if self.budget_per_input == 0 {
            return bad("budget_per_input must be at least 1".into());
        }
        if self.mutants_per_seed == Some(0) {
            return bad("mutants_per_seed must be at least 1".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if self.knn_k == Some(0) {
            return bad("knn_k must be at least 1".into());
        }
        self.op_weights()?;
        self.neighbor_policy().validate()?;
        self.refine_config().validate()?;
        self.target_spec().validate()
    }

    pub fn op_weights(&self) -> Result<OpWeights> {
        let mut w = OpWeights::default();
        for (name, &value) in &self.op_weights {
            let kind: OpKind = name.parse().map_err(HarnessError::Config)?;
            if !(value >= 0.0 && value.is_finite()) {
                return Err(HarnessError::Config(format!("weight of {name} must be >= 0")));
            }
            w.set(kind, value);
        }
        if w.0.iter().all(|&x| x == 0.0) {
            return Err(HarnessError::Config("all operator weights are zero".into()));
        }
        Ok(w)
    }

    pub fn neighbor_policy(&self) -> NeighborPolicy {
        NeighborPolicy {
            hops: self.hops,
            sigma: self.sigma.map_or(SigmaMode::MeanEdgeLength, SigmaMode::Fixed),
            rho: self.rho,
            enabled: !self.no_neighbor,
        }
    }

    pub fn refine_config(&self) -> RefineConfig {
        RefineConfig {
            epsilon: self.epsilon,
            merge_tol: self.merge_tol,
            angle_tol: self.angle_tol,
            max_iters: self.max_iters,
            isolated_mode: self.isolated_mode,
        }
    }

    pub fn target_spec(&self) -> TargetSpec {
        TargetSpec { command: self.target.clone(), timeout_ms: self.target_timeout_ms, label_mode: self.label_mode }
    }

    pub fn format_descriptor(&self) -> FormatDescriptor {
        let d = FormatDescriptor::new(self.format);
        match self.knn_k {
            Some(k) => d.with_option("knn_k", k),
            None => d,
        }
    }

    pub fn load_spec(&self) -> Result<ConstraintSpec> {
        match &self.spec_path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(io_err(p))?;
                Ok(dsl::parse_spec(&text)?)
            }
            None if self.format == FormatKind::ObjMesh => Ok(dsl::parse_spec(dsl::TRIANGLE_MESH_GCON)?),
            None => Ok(ConstraintSpec::default()),
        }
    }
}
