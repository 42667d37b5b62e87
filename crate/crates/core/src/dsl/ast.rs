use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::ElementKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrName {
    Degree,
    Value,
    Neighbor,
    Norm,
}

impl AttrName {
    pub const ALL: [AttrName; 4] = [AttrName::Degree, AttrName::Value, AttrName::Neighbor, AttrName::Norm];

    pub fn as_str(self) -> &'static str {
        match self {
            AttrName::Degree => "degree",
            AttrName::Value => "value",
            AttrName::Neighbor => "neighbor",
            AttrName::Norm => "norm",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.as_str() == s)
    }

    /// Fields the attribute exposes. `neighbor` takes directions instead.
    pub fn fields(self) -> &'static [Field] {
        match self {
            AttrName::Degree => &[Field::In, Field::Out],
            AttrName::Value => &[Field::Range],
            AttrName::Neighbor => &[],
            AttrName::Norm => &[Field::X, Field::Y, Field::Z],
        }
    }

    /// Element kinds the attribute can be attached to.
    pub fn elements(self) -> &'static [ElementKind] {
        match self {
            AttrName::Degree | AttrName::Neighbor => &[ElementKind::Vertex],
            AttrName::Value => &[ElementKind::Vertex, ElementKind::Edge],
            AttrName::Norm => &[ElementKind::Face],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    In,
    Out,
    Range,
    X,
    Y,
    Z,
}

impl Field {
    pub const ALL: [Field; 6] = [Field::In, Field::Out, Field::Range, Field::X, Field::Y, Field::Z];

    pub fn as_str(self) -> &'static str {
        match self {
            Field::In => "in",
            Field::Out => "out",
            Field::Range => "range",
            Field::X => "x",
            Field::Y => "y",
            Field::Z => "z",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    U,
    D,
    L,
    R,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::U => "U",
            Direction::D => "D",
            Direction::L => "L",
            Direction::R => "R",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "U" => Some(Direction::U),
            "D" => Some(Direction::D),
            "L" => Some(Direction::L),
            "R" => Some(Direction::R),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AttrBody {
    Fields(Vec<Field>),
    Directions(Vec<Direction>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeDecl {
    pub element: ElementKind,
    pub attr: AttrName,
    pub body: AttrBody,
}

impl AttributeDecl {
    /// Whether this declaration makes `attr.field` available on `element`.
    /// An empty field list declares every field of the attribute.
    pub fn declares(&self, element: ElementKind, attr: AttrName, field: Field) -> bool {
        self.element == element
            && self.attr == attr
            && match &self.body {
                AttrBody::Fields(fs) => fs.is_empty() || fs.contains(&field),
                AttrBody::Directions(_) => false,
            }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MathOp {
    Area,
    FanConnected,
    ConnectedFace,
}

impl MathOp {
    pub fn as_str(self) -> &'static str {
        match self {
            MathOp::Area => "area",
            MathOp::FanConnected => "fan_connected",
            MathOp::ConnectedFace => "connected_face",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Le,
    Ge,
    Lt,
    Gt,
}

impl CmpOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
        }
    }

    pub fn holds<T: PartialOrd>(self, lhs: T, rhs: T) -> bool {
        match self {
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Lt => lhs < rhs,
            CmpOp::Gt => lhs > rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Number(f64),
    Bool(bool),
    /// The verify-time area threshold.
    Epsilon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Operand {
    Field { attr: AttrName, field: Field },
    Call(MathOp),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub lhs: Operand,
    pub op: CmpOp,
    pub rhs: Value,
}

/// Comparisons joined by `or`; holds when any alternative holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expression {
    pub alternatives: Vec<Comparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub element: ElementKind,
    pub expr: Expression,
}

impl Constraint {
    /// Whether any alternative reads `op`.
    pub fn uses(&self, op: Operand) -> bool {
        self.expr.alternatives.iter().any(|c| c.lhs == op)
    }

    pub fn uses_call(&self, op: MathOp) -> bool {
        self.uses(Operand::Call(op))
    }

    pub fn uses_attr(&self, attr: AttrName) -> bool {
        self.expr
            .alternatives
            .iter()
            .any(|c| matches!(c.lhs, Operand::Field { attr: a, .. } if a == attr))
    }

    /// Short label naming what the constraint measures, e.g. `area()`.
    pub fn label(&self) -> String {
        let mut seen: Vec<String> = Vec::new();
        for c in &self.expr.alternatives {
            let s = c.lhs.to_string();
            if !seen.contains(&s) {
                seen.push(s);
            }
        }
        seen.join("|")
    }
}

/// A parsed constraint document.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub attributes: Vec<AttributeDecl>,
    pub constraints: Vec<Constraint>,
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Epsilon => f.write_str("ε"),
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Field { attr, field } => write!(f, "{}.{}", attr.as_str(), field.as_str()),
            Operand::Call(op) => write!(f, "{}()", op.as_str()),
        }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.lhs, self.op.as_str(), self.rhs)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.alternatives.iter().enumerate() {
            if i > 0 {
                f.write_str(" or ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Display for AttributeDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} ", self.element, self.attr.as_str())?;
        match &self.body {
            AttrBody::Fields(fs) => {
                let names: Vec<_> = fs.iter().map(|x| x.as_str()).collect();
                write!(f, "{{{}}}", names.join(", "))
            }
            AttrBody::Directions(ds) => {
                let names: Vec<_> = ds.iter().map(|x| x.as_str()).collect();
                write!(f, "{{dir=[{}]}}", names.join(","))
            }
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "forall ({}) {{{}}}", self.element, self.expr)
    }
}

/// Pretty-prints a document that parses back to an equal spec.
impl fmt::Display for ConstraintSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "G {{")?;
        writeln!(f, "  attributes {{")?;
        for a in &self.attributes {
            writeln!(f, "    {a}")?;
        }
        writeln!(f, "  }}")?;
        writeln!(f, "  constraints {{")?;
        for c in &self.constraints {
            writeln!(f, "    {c}")?;
        }
        writeln!(f, "  }}")?;
        writeln!(f, "}}")
    }
}
