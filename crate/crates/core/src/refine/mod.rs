//! Constraint-guided repair.
//!
//! [`refine`] verifies a graph and, while violations remain, runs one ordered
//! repair pass per iteration. A pass that fails to lower the violation count
//! ends the loop and the last improving state is returned as discarded.

mod repairs;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{self, AttrName, ConstraintSpec, DslError, MathOp, ViolationReport};
use crate::graph::{ElementKind, ElementRef, Family, Graph, GraphError};

pub use repairs::{
    handle_isolated_vertices, merge_collinear_vertices, merge_duplicate_vertices, remove_dangling_edges,
    remove_degenerate_triangles, split_nonmanifold_vertices, trim_excess_faces,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RefineError {
    #[error("invalid refine configuration: {0}")]
    Config(String),
    #[error("repair left the graph inconsistent: {0}")]
    Internal(String),
    #[error(transparent)]
    Dsl(#[from] DslError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub type Result<T, E = RefineError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RepairKind {
    MergeDuplicateVertices,
    RemoveDegenerateTriangles,
    MergeCollinearVertices,
    RemoveIsolatedVertices,
    /// Connects a loose vertex into the nearest triangle.
    RestrictEdgeToTriangle,
    RemoveDanglingEdges,
    FlipFaceWinding,
    /// Keeps the two largest faces on an edge shared by more.
    RemoveExcessFaces,
    /// Gives each extra face fan of a bowtie vertex its own copy.
    SplitNonManifoldVertex,
    /// Drops faces whose normal constraint survives a winding flip.
    RemoveFaces,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairAction {
    pub kind: RepairKind,
    pub affected: Vec<ElementRef>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RefineStatus {
    Clean,
    Repaired,
    Discarded,
}

impl RefineStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RefineStatus::Clean => "clean",
            RefineStatus::Repaired => "repaired",
            RefineStatus::Discarded => "discarded",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineOutcome {
    pub status: RefineStatus,
    pub iterations: usize,
    pub actions: Vec<RepairAction>,
    pub final_report: ViolationReport,
    /// Violation count before the first pass and after each kept pass.
    pub trace: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IsolatedMode {
    Remove,
    ConnectWithinTriangle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineConfig {
    /// Value of `ε` in the constraint spec.
    pub epsilon: f64,
    /// Duplicate-vertex distance. `None` means 1e-6 of the bounding-box diagonal.
    pub merge_tol: Option<f64>,
    /// Radians short of a straight angle still treated as collinear.
    pub angle_tol: f64,
    pub max_iters: usize,
    pub isolated_mode: IsolatedMode,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            epsilon: dsl::DEFAULT_EPSILON,
            merge_tol: None,
            angle_tol: 1e-3,
            max_iters: 10,
            isolated_mode: IsolatedMode::ConnectWithinTriangle,
        }
    }
}

pub const MERGE_TOL_FRACTION: f64 = 1e-6;

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(RefineError::Config(m));
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon {} must be finite and >= 0", self.epsilon));
        }
        if let Some(t) = self.merge_tol {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("merge tolerance {t} must be positive"));
            }
        }
        if !(0.0..std::f64::consts::PI).contains(&self.angle_tol) {
            return bad(format!("angle tolerance {} outside [0, pi)", self.angle_tol));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        Ok(())
    }

    fn merge_tol_for(&self, g: &Graph) -> f64 {
        self.merge_tol.unwrap_or_else(|| {
            let diag = g.bbox_diagonal();
            MERGE_TOL_FRACTION * if diag > 0.0 { diag } else { 1.0 }
        })
    }
}

/// Which constraints drive which repair stage.
#[derive(Debug, Default)]
pub(crate) struct Plan {
    pub area: Vec<usize>,
    pub norm: Vec<usize>,
    pub faces_per_edge: Vec<usize>,
    pub fan: Vec<usize>,
}

impl Plan {
    fn new(spec: &ConstraintSpec) -> Self {
        let mut plan = Plan::default();
        for (i, c) in spec.constraints.iter().enumerate() {
            match c.element {
                ElementKind::Face if c.uses_call(MathOp::Area) => plan.area.push(i),
                ElementKind::Face if c.uses_attr(AttrName::Norm) => plan.norm.push(i),
                ElementKind::Edge if c.uses_call(MathOp::ConnectedFace) => plan.faces_per_edge.push(i),
                ElementKind::Vertex if c.uses_call(MathOp::FanConnected) => plan.fan.push(i),
                _ => {}
            }
        }
        plan
    }

    fn is_empty(&self) -> bool {
        self.area.is_empty() && self.norm.is_empty() && self.faces_per_edge.is_empty() && self.fan.is_empty()
    }
}

pub(crate) fn violates(
    spec: &ConstraintSpec,
    which: &[usize],
    g: &Graph,
    epsilon: f64,
    element: ElementRef,
) -> Result<bool> {
    for &i in which {
        if dsl::check_constraint(spec, i, g, epsilon, element)?.is_some() {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Verifies `g` against `spec` and repairs it until clean or out of budget.
pub fn refine(g: &Graph, spec: &ConstraintSpec, config: &RefineConfig) -> Result<(Graph, RefineOutcome)> {
    config.validate()?;
    let mut report = dsl::verify(spec, g, config.epsilon)?;
    let mut cur = g.clone();
    if report.is_clean() {
        let outcome = RefineOutcome {
            status: RefineStatus::Clean,
            iterations: 0,
            actions: Vec::new(),
            final_report: report,
            trace: vec![0],
        };
        return Ok((cur, outcome));
    }
    let plan = Plan::new(spec);
    let merge_tol = config.merge_tol_for(g);
    let mut actions = Vec::new();
    let mut trace = vec![report.len()];
    for iteration in 1..=config.max_iters {
        if g.family() != Family::TriangleMesh || plan.is_empty() {
            break;
        }
        let mut next = cur.clone();
        let pass = repairs::pass(&mut next, spec, &plan, config, merge_tol)?;
        let next_report = dsl::verify(spec, &next, config.epsilon)?;
        if pass.is_empty() || next_report.len() >= report.len() {
            log::debug!("refine pass {iteration} made no progress ({} -> {})", report.len(), next_report.len());
            break;
        }
        cur = next;
        report = next_report;
        actions.extend(pass);
        trace.push(report.len());
        if report.is_clean() {
            let outcome =
                RefineOutcome { status: RefineStatus::Repaired, iterations: iteration, actions, final_report: report, trace };
            return Ok((cur, outcome));
        }
    }
    let outcome = RefineOutcome {
        status: RefineStatus::Discarded,
        iterations: config.max_iters,
        actions,
        final_report: report,
        trace,
    };
    Ok((cur, outcome))
}
