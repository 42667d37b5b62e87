//! Neighbor-aware graph mutation.
//!
//! An operator picks an anchor element at random. For cohort-aware operators
//! the anchor's graph neighborhood is sampled with a similarity kernel, and
//! the sampled cohort receives the same perturbation as the anchor plus a
//! small per-member jitter.

mod ops;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ElementRef, Family, Graph, GraphError, VertexId};

/// The generator used for every random choice in a campaign.
pub type FuzzRng = ChaCha8Rng;

/// A generator for `seed`, split onto an independent `stream`.
pub fn seeded_rng(seed: u64, stream: u64) -> FuzzRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Names the current position of a generator, e.g. `chacha8/3@128`.
pub fn rng_label(rng: &FuzzRng) -> String {
    format!("chacha8/{}@{}", rng.get_stream(), rng.get_word_pos())
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MutationError {
    #[error("{op} does not apply to {family} graphs")]
    NotApplicable { op: OpKind, family: Family },
    #[error("{op} found nothing to mutate: {reason}")]
    NoOp { op: OpKind, reason: String },
    #[error("mutation budget must be at least 1")]
    ZeroBudget,
    #[error("no operator with positive weight applies to {0} graphs")]
    NoApplicableOperator(Family),
    #[error("gave up after {failures} failed attempts ({applied} of {budget} mutations applied)")]
    RetriesExhausted { failures: usize, applied: usize, budget: usize },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl MutationError {
    /// Errors that mean "try a different operator".
    pub fn is_retryable(&self) -> bool {
        matches!(self, MutationError::NoOp { .. } | MutationError::NotApplicable { .. })
    }
}

pub type Result<T, E = MutationError> = std::result::Result<T, E>;

macro_rules! op_kinds {
    ($($name:ident),* $(,)?) => {
        /// The twenty mutation operators.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum OpKind { $($name),* }

        impl OpKind {
            pub const ALL: [OpKind; 20] = [$(OpKind::$name),*];

            pub fn name(self) -> &'static str {
                match self { $(OpKind::$name => stringify!($name)),* }
            }
        }
    };
}

op_kinds!(
    AddVertexNoise,
    AddEdgeNoise,
    SetVertexValue,
    SetEdgeValue,
    InsertVertexOnEdge,
    AddVertex,
    DeleteVertex,
    DeleteEdge,
    AddEdge,
    DeleteFace,
    EdgeFlip,
    EdgeCollapse,
    FaceSplit,
    TranslateCohort,
    ScaleCohort,
    RotateCohort,
    SmoothCohort,
    JitterSingleChannel,
    SwapVertexAttrs,
    DuplicateVertexFan,
);

impl OpKind {
    pub fn index(self) -> usize {
        OpKind::ALL.iter().position(|&k| k == self).expect("listed in ALL")
    }

    /// Operators that co-apply their perturbation to a sampled cohort.
    pub fn is_cohort_aware(self) -> bool {
        use OpKind::*;
        matches!(
            self,
            AddVertexNoise
                | AddEdgeNoise
                | SetVertexValue
                | SetEdgeValue
                | TranslateCohort
                | ScaleCohort
                | RotateCohort
                | SmoothCohort
                | JitterSingleChannel
        )
    }

    /// Whether the operator changes only attribute values, never topology.
    pub fn is_value_only(self) -> bool {
        self.is_cohort_aware() || self == OpKind::SwapVertexAttrs
    }

    pub fn applies_to(self, g: &Graph) -> bool {
        use OpKind::*;
        let family = g.family();
        match self {
            DeleteFace | EdgeFlip | FaceSplit => family == Family::TriangleMesh,
            RotateCohort => family != Family::Grid && g.attr_len() >= 3,
            // Grids keep a fixed lattice; only values may change.
            _ if family == Family::Grid => self.is_value_only(),
            _ => true,
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OpKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        OpKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown mutation operator `{s}`"))
    }
}

/// An operator with its configured noise scale. `None` uses 1% of the
/// graph's bounding-box diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutationOp {
    pub kind: OpKind,
    pub scale: Option<f64>,
}

impl MutationOp {
    pub fn new(kind: OpKind) -> Self {
        MutationOp { kind, scale: None }
    }

    pub fn with_scale(kind: OpKind, scale: f64) -> Self {
        MutationOp { kind, scale: Some(scale) }
    }
}

/// Fraction of the bounding-box diagonal used as the default noise scale.
pub const DEFAULT_NOISE_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMode {
    /// Mean length of the edges around the anchor's 1-hop neighborhood.
    MeanEdgeLength,
    Fixed(f64),
}

/// How far a perturbation spreads from its anchor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborPolicy {
    pub hops: usize,
    pub sigma: SigmaMode,
    /// Inclusion probability of the most similar neighbor.
    pub rho: f64,
    pub enabled: bool,
}

impl Default for NeighborPolicy {
    fn default() -> Self {
        NeighborPolicy { hops: 2, sigma: SigmaMode::MeanEdgeLength, rho: 0.5, enabled: true }
    }
}

impl NeighborPolicy {
    pub fn disabled() -> Self {
        NeighborPolicy { enabled: false, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hops == 0 {
            return Err(MutationError::InvalidParams("hops must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(MutationError::InvalidParams(format!("rho {} outside [0, 1]", self.rho)));
        }
        if let SigmaMode::Fixed(s) = self.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(MutationError::InvalidParams(format!("sigma {s} must be positive")));
            }
        }
        Ok(())
    }
}

/// What one operator application did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationRecord {
    pub op: OpKind,
    pub anchor: ElementRef,
    pub cohort: Vec<ElementRef>,
    pub params: BTreeMap<String, f64>,
    pub rng_state: String,
}

/// Relative operator frequencies, indexed like [`OpKind::ALL`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpWeights(pub [f64; 20]);

impl Default for OpWeights {
    fn default() -> Self {
        OpWeights([1.0; 20])
    }
}

impl OpWeights {
    /// All weight on a single operator.
    pub fn only(kind: OpKind) -> Self {
        let mut w = [0.0; 20];
        w[kind.index()] = 1.0;
        OpWeights(w)
    }

    pub fn get(&self, kind: OpKind) -> f64 {
        self.0[kind.index()]
    }

    pub fn set(&mut self, kind: OpKind, weight: f64) {
        self.0[kind.index()] = weight;
    }
}

/// Gaussian similarity of two vertices' attribute vectors.
pub fn similarity_weight(g: &Graph, u: VertexId, v: VertexId, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(MutationError::InvalidParams(format!("sigma {sigma} must be positive")));
    }
    let (a, b) = (g.attrs(u)?, g.attrs(v)?);
    if u == v {
        return Ok(1.0);
    }
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((-d2 / (2.0 * sigma * sigma)).exp())
}

/// Kernel width for `anchor` under `policy`.
pub fn kernel_sigma(g: &Graph, anchor: VertexId, policy: &NeighborPolicy) -> Result<f64> {
    match policy.sigma {
        SigmaMode::Fixed(s) => Ok(s),
        SigmaMode::MeanEdgeLength => {
            let mut around = g.neighbors(anchor, 1)?;
            around.insert(anchor);
            let mut edges = BTreeSet::new();
            for &v in &around {
                edges.extend(g.incident_edges(v)?.iter().copied());
            }
            let mut total = 0.0;
            for &e in &edges {
                let (a, b) = g.edge(e)?.endpoints;
                total += g.natural_distance(a, b)?;
            }
            let mean = if edges.is_empty() { 0.0 } else { total / edges.len() as f64 };
            Ok(if mean > 0.0 { mean } else { 1.0 })
        }
    }
}

/// Samples the anchor's cohort: the anchor, plus each neighbor within
/// `policy.hops` independently with probability `rho * w / max_w`.
pub fn select_cohort(
    g: &Graph,
    anchor: VertexId,
    policy: &NeighborPolicy,
    rng: &mut FuzzRng,
) -> Result<BTreeSet<VertexId>> {
    let mut cohort = BTreeSet::from([anchor]);
    g.vertex(anchor)?;
    if !policy.enabled || policy.rho <= 0.0 {
        return Ok(cohort);
    }
    let candidates = g.neighbors(anchor, policy.hops)?;
    if candidates.is_empty() {
        return Ok(cohort);
    }
    let sigma = kernel_sigma(g, anchor, policy)?;
    let weights: Vec<(VertexId, f64)> = candidates
        .into_iter()
        .map(|v| Ok((v, similarity_weight(g, anchor, v, sigma)?)))
        .collect::<Result<_>>()?;
    let max_w = weights.iter().map(|w| w.1).fold(0.0, f64::max);
    for (v, w) in weights {
        let p = if max_w > 0.0 { policy.rho * w / max_w } else { 0.0 };
        if rng.random::<f64>() < p {
            cohort.insert(v);
        }
    }
    Ok(cohort)
}

/// Applies one operator to a copy of `g`.
pub fn apply(
    g: &Graph,
    op: MutationOp,
    policy: &NeighborPolicy,
    rng: &mut FuzzRng,
) -> Result<(Graph, MutationRecord)> {
    let mut out = g.clone();
    let record = apply_in_place(&mut out, op, policy, rng)?;
    Ok((out, record))
}

/// Applies one operator to `g` directly. Retryable errors are raised before
/// the graph is touched.
pub fn apply_in_place(
    g: &mut Graph,
    op: MutationOp,
    policy: &NeighborPolicy,
    rng: &mut FuzzRng,
) -> Result<MutationRecord> {
    if !op.kind.applies_to(g) {
        return Err(MutationError::NotApplicable { op: op.kind, family: g.family() });
    }
    if let Some(s) = op.scale {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(MutationError::InvalidParams(format!("noise scale {s} must be >= 0")));
        }
    }
    policy.validate()?;
    if g.is_empty() {
        return Err(MutationError::NoOp { op: op.kind, reason: "graph is empty".into() });
    }
    let rng_state = rng_label(rng);
    let scale = op.scale.unwrap_or_else(|| default_scale(g));
    let mut ctx = ops::Ctx { g, rng, policy, scale, params: BTreeMap::new(), kind: op.kind };
    let (anchor, cohort) = ctx.run()?;
    let params = std::mem::take(&mut ctx.params);
    debug_assert!(g.check_invariants().is_ok(), "{} broke the graph", op.kind);
    Ok(MutationRecord { op: op.kind, anchor, cohort, params, rng_state })
}

pub fn default_scale(g: &Graph) -> f64 {
    let diag = g.bbox_diagonal();
    DEFAULT_NOISE_FRACTION * if diag > 0.0 { diag } else { 1.0 }
}

/// Applies exactly `budget` operators drawn from `weights`. Operators that
/// find nothing to do cost one retry; at most `5 * budget` retries are made.
pub fn mutate_n(
    g: &Graph,
    budget: usize,
    weights: &OpWeights,
    policy: &NeighborPolicy,
    rng: &mut FuzzRng,
) -> Result<(Graph, Vec<MutationRecord>)> {
    if budget == 0 {
        return Err(MutationError::ZeroBudget);
    }
    let masked: Vec<f64> = OpKind::ALL
        .iter()
        .map(|&k| if k.applies_to(g) { weights.get(k).max(0.0) } else { 0.0 })
        .collect();
    let dist = WeightedIndex::new(&masked).map_err(|_| MutationError::NoApplicableOperator(g.family()))?;
    let mut cur = g.clone();
    let mut records = Vec::with_capacity(budget);
    let mut failures = 0;
    while records.len() < budget {
        if failures >= 5 * budget {
            return Err(MutationError::RetriesExhausted { failures, applied: records.len(), budget });
        }
        let kind = OpKind::ALL[dist.sample(rng)];
        match apply_in_place(&mut cur, MutationOp::new(kind), policy, rng) {
            Ok(rec) => records.push(rec),
            Err(e) if e.is_retryable() => failures += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((cur, records))
}
