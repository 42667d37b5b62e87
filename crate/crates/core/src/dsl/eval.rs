//! Evaluation of a [`ConstraintSpec`] against a graph.

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::{DslError, Result};
use crate::graph::{ElementKind, ElementRef, Family, Graph, VertexId};

/// What produced a violation: a `forall` constraint or an attribute
/// declaration with checkable semantics (`neighbor{dir=[..]}`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "source", content = "index", rename_all = "lowercase")]
pub enum Source {
    Constraint(usize),
    Declaration(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Violation {
    #[serde(flatten)]
    pub source: Source,
    pub element: ElementRef,
    pub measured: String,
}

impl Violation {
    pub fn constraint_index(&self) -> Option<usize> {
        match self.source {
            Source::Constraint(i) => Some(i),
            Source::Declaration(_) => None,
        }
    }
}

/// Violations in element-kind, element-id, then source order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub entries: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_clean(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

enum Measured {
    Num(f64),
    Bool(bool),
    Components(Vec<f64>),
}

fn required_family(spec: &ConstraintSpec) -> Option<(Family, String)> {
    for c in &spec.constraints {
        if c.element == ElementKind::Face
            || c.uses_call(MathOp::ConnectedFace)
            || c.uses_call(MathOp::FanConnected)
        {
            return Some((Family::TriangleMesh, c.to_string()));
        }
    }
    for a in &spec.attributes {
        if matches!(a.body, AttrBody::Directions(_)) {
            return Some((Family::Grid, a.to_string()));
        }
    }
    None
}

/// Checks that every constraint can be evaluated on `g`.
pub fn check_applicable(spec: &ConstraintSpec, g: &Graph) -> Result<()> {
    if let Some((family, what)) = required_family(spec) {
        if g.family() != family {
            return Err(DslError::FamilyMismatch { needed: family, found: g.family(), constraint: what });
        }
    }
    Ok(())
}

fn measure(g: &Graph, operand: Operand, element: ElementRef) -> Result<Measured> {
    Ok(match (operand, element) {
        (Operand::Call(MathOp::Area), ElementRef::Face(f)) => Measured::Num(g.face_area(f)?),
        (Operand::Call(MathOp::ConnectedFace), ElementRef::Edge(e)) => {
            Measured::Num(g.incident_faces(e)?.len() as f64)
        }
        (Operand::Call(MathOp::FanConnected), ElementRef::Vertex(v)) => {
            Measured::Bool(g.is_fan_connected(v)?)
        }
        (Operand::Field { attr: AttrName::Norm, field }, ElementRef::Face(f)) => {
            let n = g.face_normal(f)?;
            Measured::Num(match field {
                Field::X => n[0],
                Field::Y => n[1],
                _ => n[2],
            })
        }
        (Operand::Field { attr: AttrName::Degree, field }, ElementRef::Vertex(v)) => {
            Measured::Num(match field {
                Field::In => g.in_degree(v)?,
                _ => g.out_degree(v)?,
            } as f64)
        }
        (Operand::Field { attr: AttrName::Value, .. }, ElementRef::Vertex(v)) => {
            Measured::Components(g.attrs(v)?.to_vec())
        }
        (Operand::Field { attr: AttrName::Value, .. }, ElementRef::Edge(e)) => {
            Measured::Components(vec![g.edge(e)?.weight])
        }
        (operand, element) => {
            return Err(DslError::Internal(format!("`{operand}` cannot be measured on {element}")))
        }
    })
}

fn compare(m: &Measured, op: CmpOp, rhs: Value, epsilon: f64) -> (bool, String) {
    let bound = match rhs {
        Value::Number(n) => n,
        Value::Epsilon => epsilon,
        Value::Bool(b) => {
            return match m {
                Measured::Bool(x) => (op.holds(*x, b), x.to_string()),
                _ => (false, "type mismatch".into()),
            }
        }
    };
    match m {
        Measured::Num(x) => (op.holds(*x, bound), x.to_string()),
        Measured::Components(xs) => match xs.iter().find(|&&x| !op.holds(x, bound)) {
            Some(bad) => (false, bad.to_string()),
            None => (true, xs.first().map_or_else(String::new, f64::to_string)),
        },
        Measured::Bool(x) => (false, x.to_string()),
    }
}

/// Evaluates one constraint on one element. Returns the measured value when
/// the constraint is violated.
pub fn check_constraint(
    spec: &ConstraintSpec,
    index: usize,
    g: &Graph,
    epsilon: f64,
    element: ElementRef,
) -> Result<Option<String>> {
    let c = spec
        .constraints
        .get(index)
        .ok_or_else(|| DslError::Internal(format!("no constraint #{index}")))?;
    let mut measured: Vec<String> = Vec::new();
    for alt in &c.expr.alternatives {
        let m = measure(g, alt.lhs, element)?;
        let (ok, text) = compare(&m, alt.op, alt.rhs, epsilon);
        if ok {
            return Ok(None);
        }
        if !measured.contains(&text) {
            measured.push(text);
        }
    }
    Ok(Some(measured.join(", ")))
}

fn grid_neighbor(g: &Graph, v: VertexId, d: Direction) -> Option<VertexId> {
    let (w, h) = g.grid_dims()?;
    let (x, y) = (v.index() % w, v.index() / w);
    let (nx, ny) = match d {
        Direction::U => (x, y.checked_sub(1)?),
        Direction::D => (x, y + 1),
        Direction::L => (x.checked_sub(1)?, y),
        Direction::R => (x + 1, y),
    };
    (nx < w && ny < h).then(|| VertexId((ny * w + nx) as u32))
}

fn check_declaration(decl: &AttributeDecl, g: &Graph, v: VertexId) -> Option<String> {
    let AttrBody::Directions(dirs) = &decl.body else { return None };
    let missing: Vec<&str> = dirs
        .iter()
        .filter(|&&d| grid_neighbor(g, v, d).is_some_and(|n| g.edge_between(v, n).is_none()))
        .map(|d| d.as_str())
        .collect();
    (!missing.is_empty()).then(|| format!("missing {}", missing.join(",")))
}

/// Every violation of `spec` on `g`. `epsilon` is the value of `ε`.
pub fn verify(spec: &ConstraintSpec, g: &Graph, epsilon: f64) -> Result<ViolationReport> {
    check_applicable(spec, g)?;
    let mut entries = Vec::new();
    let indices = |kind: ElementKind| -> Vec<usize> {
        (0..spec.constraints.len()).filter(|&i| spec.constraints[i].element == kind).collect()
    };
    let (vc, ec, fc) = (indices(ElementKind::Vertex), indices(ElementKind::Edge), indices(ElementKind::Face));
    let grid_decls: Vec<usize> = (0..spec.attributes.len())
        .filter(|&i| matches!(spec.attributes[i].body, AttrBody::Directions(_)))
        .collect();

    let mut scan = |element: ElementRef, which: &[usize]| -> Result<()> {
        for &i in which {
            if let Some(measured) = check_constraint(spec, i, g, epsilon, element)? {
                entries.push(Violation { source: Source::Constraint(i), element, measured });
            }
        }
        Ok(())
    };
    for v in g.vertices() {
        scan(ElementRef::Vertex(v.id), &vc)?;
    }
    for e in g.edges() {
        scan(ElementRef::Edge(e.id), &ec)?;
    }
    for f in g.faces() {
        scan(ElementRef::Face(f.id), &fc)?;
    }
    if !grid_decls.is_empty() {
        let mut decl_entries = Vec::new();
        for v in g.vertices() {
            for &j in &grid_decls {
                if let Some(measured) = check_declaration(&spec.attributes[j], g, v.id) {
                    decl_entries.push(Violation {
                        source: Source::Declaration(j),
                        element: ElementRef::Vertex(v.id),
                        measured,
                    });
                }
            }
        }
        entries.extend(decl_entries);
        entries.sort_by(|a, b| a.element.cmp(&b.element).then(a.source.cmp(&b.source)));
    }
    Ok(ViolationReport { entries })
}

/// Histogram key for a violation: the constraint's measured quantity.
pub fn violation_kind(spec: &ConstraintSpec, v: &Violation) -> String {
    match v.source {
        Source::Constraint(i) => spec.constraints.get(i).map_or_else(|| format!("#{i}"), Constraint::label),
        Source::Declaration(j) => spec
            .attributes
            .get(j)
            .map_or_else(|| format!("decl#{j}"), |a| format!("{}.dir", a.attr.as_str())),
    }
}
