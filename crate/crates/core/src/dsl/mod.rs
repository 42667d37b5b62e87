//! The graph constraint language: parsing, rendering and verification.
//!
//! A document declares element attributes and a list of `forall`
//! constraints:
//!
//! ```text
//! G {
//!   attributes { face norm {x, y, z} }
//!   constraints {
//!     forall (face) {norm.z>0}
//!     forall (edge) {connected_face()==1 or connected_face()==2}
//!   }
//! }
//! ```
//!
//! `//` starts a line comment. Numerals are non-negative decimals; `ε` (or
//! `epsilon`) stands for the threshold passed to [`verify`].

mod ast;
mod eval;
mod parser;

use thiserror::Error;

use crate::graph::{ElementKind, Family, GraphError};

pub use ast::*;
pub use eval::{check_applicable, check_constraint, verify, violation_kind, Source, Violation, ViolationReport};
pub use parser::parse_spec;

/// The triangle-mesh validity document shipped with the crate.
pub const TRIANGLE_MESH_GCON: &str = include_str!("../../specs/triangle_mesh.gcon");

/// Default value of `ε`, in squared model units.
pub const DEFAULT_EPSILON: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DslError {
    #[error("syntax error at {line}:{col}: found {found}{}", expected_list(.expected))]
    Syntax { line: usize, col: usize, found: String, expected: Vec<String> },
    #[error("{line}:{col}: {message}")]
    Semantic { line: usize, col: usize, message: String },
    #[error("`{constraint}` needs a {needed} graph, got {found}")]
    FamilyMismatch { needed: Family, found: Family, constraint: String },
    #[error("evaluation error: {0}")]
    Internal(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn expected_list(expected: &[String]) -> String {
    if expected.is_empty() {
        String::new()
    } else {
        format!(", expected one of: {}", expected.join(", "))
    }
}

pub type Result<T, E = DslError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueType {
    Numeric,
    Boolean,
}

/// A built-in math operator and where it may be used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Builtin {
    pub name: &'static str,
    pub op: MathOp,
    pub element: ElementKind,
    pub result: ValueType,
}

const BUILTINS: [Builtin; 3] = [
    Builtin { name: "area", op: MathOp::Area, element: ElementKind::Face, result: ValueType::Numeric },
    Builtin {
        name: "fan_connected",
        op: MathOp::FanConnected,
        element: ElementKind::Vertex,
        result: ValueType::Boolean,
    },
    Builtin {
        name: "connected_face",
        op: MathOp::ConnectedFace,
        element: ElementKind::Edge,
        result: ValueType::Numeric,
    },
];

/// The operators the evaluator understands.
pub fn builtin_catalog() -> &'static [Builtin] {
    &BUILTINS
}

pub(crate) fn builtin(name: &str) -> Option<Builtin> {
    BUILTINS.iter().copied().find(|b| b.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{ElementRef, FaceId, Graph, VertexId};

    fn listing() -> ConstraintSpec {
        parse_spec(TRIANGLE_MESH_GCON).unwrap()
    }

    #[test]
    fn golden_triangle_mesh_ast() {
        let spec = listing();
        let expected = ConstraintSpec {
            attributes: vec![AttributeDecl {
                element: ElementKind::Face,
                attr: AttrName::Norm,
                body: AttrBody::Fields(vec![Field::X, Field::Y, Field::Z]),
            }],
            constraints: vec![
                Constraint {
                    element: ElementKind::Face,
                    expr: Expression {
                        alternatives: vec![Comparison {
                            lhs: Operand::Field { attr: AttrName::Norm, field: Field::Z },
                            op: CmpOp::Gt,
                            rhs: Value::Number(0.0),
                        }],
                    },
                },
                Constraint {
                    element: ElementKind::Face,
                    expr: Expression {
                        alternatives: vec![Comparison {
                            lhs: Operand::Call(MathOp::Area),
                            op: CmpOp::Gt,
                            rhs: Value::Epsilon,
                        }],
                    },
                },
                Constraint {
                    element: ElementKind::Edge,
                    expr: Expression {
                        alternatives: vec![
                            Comparison {
                                lhs: Operand::Call(MathOp::ConnectedFace),
                                op: CmpOp::Eq,
                                rhs: Value::Number(1.0),
                            },
                            Comparison {
                                lhs: Operand::Call(MathOp::ConnectedFace),
                                op: CmpOp::Eq,
                                rhs: Value::Number(2.0),
                            },
                        ],
                    },
                },
                Constraint {
                    element: ElementKind::Vertex,
                    expr: Expression {
                        alternatives: vec![Comparison {
                            lhs: Operand::Call(MathOp::FanConnected),
                            op: CmpOp::Eq,
                            rhs: Value::Bool(true),
                        }],
                    },
                },
            ],
        };
        assert_eq!(spec, expected);
        assert_eq!(parse_spec(&spec.to_string()).unwrap(), spec);
    }

    #[test]
    fn empty_documents() {
        assert_eq!(parse_spec("G { attributes{} constraints{} }").unwrap(), ConstraintSpec::default());
        assert_eq!(parse_spec("G{}").unwrap(), ConstraintSpec::default());
    }

    #[test]
    fn semantic_errors_name_the_token() {
        let err = parse_spec("G { constraints{ forall (face) {norm.w>0} } }").unwrap_err();
        assert!(matches!(&err, DslError::Semantic { message, .. } if message.contains("unknown field `w`")), "{err}");
        let err = parse_spec("G { constraints{ forall (face) {volume()>0} } }").unwrap_err();
        assert!(err.to_string().contains("unknown operator `volume`"));
        let err = parse_spec("G { constraints{ forall (face) {color.x>0} } }").unwrap_err();
        assert!(err.to_string().contains("unknown attribute `color`"));
        let err = parse_spec("G { constraints{ forall (face) {norm.z>0} } }").unwrap_err();
        assert!(err.to_string().contains("not declared"));
        let err = parse_spec("G { constraints{ forall (edge) {area()>0} } }").unwrap_err();
        assert!(err.to_string().contains("applies to face"));
        let err = parse_spec("G { constraints{ forall (vertex) {fan_connected()==1} } }").unwrap_err();
        assert!(err.to_string().contains("boolean"));
        let err = parse_spec("G { constraints{ forall (vertex) {fan_connected()<true} } }").unwrap_err();
        assert!(err.to_string().contains("boolean"));
        let err = parse_spec("G { constraints{ forall (face) {area()>true} } }").unwrap_err();
        assert!(err.to_string().contains("numeric"));
    }

    #[test]
    fn syntax_errors_carry_position_and_expectations() {
        let err = parse_spec("G {\n  constraints {\n    forall face {area()>0}\n  }\n}").unwrap_err();
        match err {
            DslError::Syntax { line, col, expected, .. } => {
                assert_eq!((line, col), (3, 12));
                assert_eq!(expected, vec!["`(`".to_string()]);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_spec("G { } extra"), Err(DslError::Syntax { .. })));
        assert!(matches!(parse_spec("G { constraints { forall (face) {area() ~ 1} } }"), Err(DslError::Syntax { .. })));
    }

    #[test]
    fn grammar_spellings() {
        let spec = parse_spec(
            "G { attributes { vertice degree {in, out}, vertice value {range}, vertice neighbor {dir=[U,D,L,R]} }
                 constraints { forall(vertice){degree.in<=4}, forall(vertice){value.range<=255.5} } }",
        )
        .unwrap();
        assert_eq!(spec.attributes.len(), 3);
        assert_eq!(spec.constraints[1].expr.alternatives[0].rhs, Value::Number(255.5));
        assert_eq!(parse_spec(&spec.to_string()).unwrap(), spec);
    }

    #[test]
    fn catalog() {
        let cat = builtin_catalog();
        assert!(cat.iter().any(|b| b.name == "area" && b.element == ElementKind::Face && b.result == ValueType::Numeric));
        assert!(cat
            .iter()
            .any(|b| b.name == "fan_connected" && b.element == ElementKind::Vertex && b.result == ValueType::Boolean));
        assert!(cat.iter().all(|b| b.name != "volume"));
    }

    fn upward_triangle() -> Graph {
        let mut g = Graph::triangle_mesh();
        let a = g.add_vertex(vec![0., 0., 0.]).unwrap();
        let b = g.add_vertex(vec![1., 0., 0.]).unwrap();
        let c = g.add_vertex(vec![0., 1., 0.]).unwrap();
        g.add_face([a, b, c]).unwrap();
        g
    }

    #[test]
    fn verify_single_triangle() {
        let spec = listing();
        let mut g = upward_triangle();
        assert!(verify(&spec, &g, DEFAULT_EPSILON).unwrap().is_clean());

        g.flip_face(FaceId(0)).unwrap();
        let report = verify(&spec, &g, DEFAULT_EPSILON).unwrap();
        assert_eq!(report.entries.len(), 1);
        assert_eq!(report.entries[0].source, Source::Constraint(0));
        assert_eq!(report.entries[0].element, ElementRef::Face(FaceId(0)));
        assert_eq!(report.entries[0].measured, "-1");

        let mut g = upward_triangle();
        let lone = g.add_vertex(vec![3., 3., 3.]).unwrap();
        let report = verify(&spec, &g, DEFAULT_EPSILON).unwrap();
        assert_eq!(report.entries.len(), 1);
        assert_eq!(report.entries[0].source, Source::Constraint(3));
        assert_eq!(report.entries[0].element, ElementRef::Vertex(lone));
        assert_eq!(report.entries[0].measured, "false");
    }

    #[test]
    fn area_threshold_is_strict() {
        let spec = listing();
        let g = upward_triangle();
        let report = verify(&spec, &g, 0.5).unwrap();
        assert_eq!(report.entries.len(), 1);
        assert_eq!(report.entries[0].source, Source::Constraint(1));
    }

    #[test]
    fn face_constraints_need_meshes() {
        let spec = listing();
        let g = Graph::new(crate::graph::Family::Relational, 3).unwrap();
        assert!(matches!(verify(&spec, &g, 1e-9), Err(DslError::FamilyMismatch { .. })));
    }

    #[test]
    fn degree_and_value_on_sequences() {
        let spec = parse_spec(
            "G { attributes { vertex degree {in,out} edge value {range} }
                 constraints { forall (vertex) {degree.out<=1} forall (edge) {value.range<2} } }",
        )
        .unwrap();
        let mut g = crate::convert::text_to_graph(b"a b c").unwrap();
        assert!(verify(&spec, &g, 1e-9).unwrap().is_clean());
        g.add_edge(VertexId(0), VertexId(2), 5.0).unwrap();
        let report = verify(&spec, &g, 1e-9).unwrap();
        let kinds: Vec<_> = report.entries.iter().map(|v| (v.source, v.element)).collect();
        assert_eq!(
            kinds,
            vec![
                (Source::Constraint(0), ElementRef::Vertex(VertexId(0))),
                (Source::Constraint(1), ElementRef::Edge(crate::graph::EdgeId(2))),
            ]
        );
    }

    #[test]
    fn grid_neighbor_declarations() {
        let spec = parse_spec("G { attributes { vertex neighbor {dir=[U,D,L,R]} } }").unwrap();
        let img = b"P5\n3 3\n255\n\x01\x02\x03\x04\x05\x06\x07\x08\x09";
        let g = crate::convert::image_to_graph(img).unwrap();
        assert!(verify(&spec, &g, 1e-9).unwrap().is_clean());
        let mut broken = g.clone();
        let e = broken.edge_between(VertexId(4), VertexId(5)).unwrap();
        broken.remove_edge(e).unwrap();
        let report = verify(&spec, &broken, 1e-9).unwrap();
        assert_eq!(report.entries.len(), 2);
        assert_eq!(report.entries[0].measured, "missing R");
        assert_eq!(report.entries[1].measured, "missing L");
        let mesh = upward_triangle();
        assert!(verify(&spec, &mesh, 1e-9).is_err());
    }
}
