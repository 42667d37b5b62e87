//! Lexer and recursive-descent parser for constraint documents.

use super::ast::*;
use super::{builtin, DslError, Result, ValueType};
use crate::graph::ElementKind;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Epsilon,
    Cmp(CmpOp),
    Punct(char),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(n) => format!("number {n}"),
            Tok::Epsilon => "`ε`".into(),
            Tok::Cmp(op) => format!("`{}`", op.as_str()),
            Tok::Punct(c) => format!("`{c}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        let tok = if c == 'ε' {
            bump!();
            Tok::Epsilon
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                bump!();
            }
            let word: String = chars[start..i].iter().collect();
            if word == "epsilon" {
                Tok::Epsilon
            } else {
                Tok::Ident(word)
            }
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            if chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(char::is_ascii_digit) {
                bump!();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    bump!();
                }
            }
            let text: String = chars[start..i].iter().collect();
            Tok::Number(text.parse().expect("digits with optional fraction"))
        } else {
            let next = chars.get(i + 1).copied();
            let two = match (c, next) {
                ('=', Some('=')) => Some(CmpOp::Eq),
                ('!', Some('=')) => Some(CmpOp::Ne),
                ('<', Some('=')) => Some(CmpOp::Le),
                ('>', Some('=')) => Some(CmpOp::Ge),
                _ => None,
            };
            if let Some(op) = two {
                bump!();
                bump!();
                Tok::Cmp(op)
            } else {
                match c {
                    '<' => {
                        bump!();
                        Tok::Cmp(CmpOp::Lt)
                    }
                    '>' => {
                        bump!();
                        Tok::Cmp(CmpOp::Gt)
                    }
                    '{' | '}' | '(' | ')' | '[' | ']' | ',' | '.' | '=' => {
                        bump!();
                        Tok::Punct(c)
                    }
                    other => {
                        return Err(DslError::Syntax {
                            line: tl,
                            col: tc,
                            found: format!("`{other}`"),
                            expected: vec![],
                        })
                    }
                }
            }
        };
        out.push(Spanned { tok, line: tl, col: tc });
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        &self.toks[(self.pos + ahead).min(self.toks.len() - 1)].tok
    }

    fn advance(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T> {
        let t = self.peek();
        Err(DslError::Syntax {
            line: t.line,
            col: t.col,
            found: t.tok.describe(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn semantic<T>(&self, at: &Spanned, message: String) -> Result<T> {
        Err(DslError::Semantic { line: at.line, col: at.col, message })
    }

    fn eat_punct(&mut self, c: char) -> bool {
        if self.peek().tok == Tok::Punct(c) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, c: char) -> Result<()> {
        if self.eat_punct(c) {
            Ok(())
        } else {
            self.fail(&[&format!("`{c}`")])
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<()> {
        if self.at_keyword(kw) {
            self.advance();
            Ok(())
        } else {
            self.fail(&[&format!("`{kw}`")])
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Spanned)> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                Ok((s, self.advance()))
            }
            _ => self.fail(&[what]),
        }
    }

    fn element(&mut self) -> Result<ElementKind> {
        let (word, at) = self.ident("element kind")?;
        match word.as_str() {
            "vertice" | "vertex" => Ok(ElementKind::Vertex),
            "edge" => Ok(ElementKind::Edge),
            "face" => Ok(ElementKind::Face),
            other => self.semantic(&at, format!("unknown element `{other}`")),
        }
    }

    fn attribute(&mut self) -> Result<(AttrName, Spanned)> {
        let (word, at) = self.ident("attribute name")?;
        match AttrName::parse(&word) {
            Some(a) => Ok((a, at)),
            None => self.semantic(&at, format!("unknown attribute `{word}`")),
        }
    }

    fn field(&mut self) -> Result<(Field, Spanned)> {
        let (word, at) = self.ident("field name")?;
        match Field::parse(&word) {
            Some(f) => Ok((f, at)),
            None => self.semantic(&at, format!("unknown field `{word}`")),
        }
    }

    fn document(&mut self) -> Result<ConstraintSpec> {
        self.expect_keyword("G")?;
        self.expect_punct('{')?;
        let mut spec = ConstraintSpec::default();
        if self.at_keyword("attributes") {
            self.advance();
            self.expect_punct('{')?;
            while !self.eat_punct('}') {
                spec.attributes.push(self.attribute_decl()?);
                self.eat_punct(',');
            }
        }
        if self.at_keyword("constraints") {
            self.advance();
            self.expect_punct('{')?;
            while !self.eat_punct('}') {
                spec.constraints.push(self.constraint(&spec.attributes)?);
                self.eat_punct(',');
            }
        }
        if !self.eat_punct('}') {
            return self.fail(&["`attributes`", "`constraints`", "`}`"]);
        }
        if self.peek().tok != Tok::Eof {
            return self.fail(&["end of input"]);
        }
        Ok(spec)
    }

    fn attribute_decl(&mut self) -> Result<AttributeDecl> {
        if !matches!(self.peek().tok, Tok::Ident(_)) {
            return self.fail(&["element kind", "`}`"]);
        }
        let element = self.element()?;
        let (attr, at) = self.attribute()?;
        if !attr.elements().contains(&element) {
            return self.semantic(&at, format!("attribute `{}` does not apply to {element}", attr.as_str()));
        }
        self.expect_punct('{')?;
        let body = if self.at_keyword("dir") {
            let dir_at = self.advance();
            if attr != AttrName::Neighbor {
                return self.semantic(&dir_at, format!("`dir` list on attribute `{}`", attr.as_str()));
            }
            self.expect_punct('=')?;
            self.expect_punct('[')?;
            let mut dirs = Vec::new();
            loop {
                let (word, at) = self.ident("direction U, D, L or R")?;
                match Direction::parse(&word) {
                    Some(d) => dirs.push(d),
                    None => return self.semantic(&at, format!("unknown direction `{word}`")),
                }
                if !self.eat_punct(',') {
                    break;
                }
            }
            self.expect_punct(']')?;
            AttrBody::Directions(dirs)
        } else {
            if attr == AttrName::Neighbor {
                return self.fail(&["`dir`"]);
            }
            let mut fields = Vec::new();
            if !matches!(self.peek().tok, Tok::Punct('}')) {
                loop {
                    let (f, at) = self.field()?;
                    if !attr.fields().contains(&f) {
                        return self.semantic(
                            &at,
                            format!("field `{}` does not belong to `{}`", f.as_str(), attr.as_str()),
                        );
                    }
                    fields.push(f);
                    if !self.eat_punct(',') {
                        break;
                    }
                }
            }
            AttrBody::Fields(fields)
        };
        self.expect_punct('}')?;
        Ok(AttributeDecl { element, attr, body })
    }

    fn constraint(&mut self, decls: &[AttributeDecl]) -> Result<Constraint> {
        self.expect_keyword("forall")?;
        self.expect_punct('(')?;
        let element = self.element()?;
        self.expect_punct(')')?;
        self.expect_punct('{')?;
        let mut alternatives = vec![self.comparison(element, decls)?];
        while self.at_keyword("or") {
            self.advance();
            alternatives.push(self.comparison(element, decls)?);
        }
        self.expect_punct('}')?;
        Ok(Constraint { element, expr: Expression { alternatives } })
    }

    fn comparison(&mut self, element: ElementKind, decls: &[AttributeDecl]) -> Result<Comparison> {
        let start = self.peek().clone();
        let (lhs, ty) = match (&start.tok, self.peek_at(1)) {
            (Tok::Ident(name), Tok::Punct('(')) => {
                let name = name.clone();
                self.advance();
                self.advance();
                self.expect_punct(')')?;
                let Some(b) = builtin(&name) else {
                    return self.semantic(&start, format!("unknown operator `{name}`"));
                };
                if b.element != element {
                    return self.semantic(&start, format!("`{name}()` applies to {}, not {element}", b.element));
                }
                (Operand::Call(b.op), b.result)
            }
            (Tok::Ident(_), Tok::Punct('.')) => {
                let (attr, at) = self.attribute()?;
                self.advance();
                let (field, field_at) = self.field()?;
                if !attr.fields().contains(&field) {
                    return self.semantic(
                        &field_at,
                        format!("field `{}` does not belong to `{}`", field.as_str(), attr.as_str()),
                    );
                }
                if !attr.elements().contains(&element) {
                    return self.semantic(&at, format!("attribute `{}` does not apply to {element}", attr.as_str()));
                }
                if !decls.iter().any(|d| d.declares(element, attr, field)) {
                    return self.semantic(
                        &at,
                        format!("`{}.{}` is not declared for {element}", attr.as_str(), field.as_str()),
                    );
                }
                (Operand::Field { attr, field }, ValueType::Numeric)
            }
            _ => return self.fail(&["operator call", "attribute field"]),
        };
        let op = match self.peek().tok {
            Tok::Cmp(op) => {
                self.advance();
                op
            }
            _ => return self.fail(&["comparison operator"]),
        };
        let rhs_at = self.peek().clone();
        let rhs = match &rhs_at.tok {
            Tok::Number(n) => Value::Number(*n),
            Tok::Epsilon => Value::Epsilon,
            Tok::Ident(w) if w == "true" => Value::Bool(true),
            Tok::Ident(w) if w == "false" => Value::Bool(false),
            _ => return self.fail(&["number", "`true`", "`false`", "`ε`"]),
        };
        self.advance();
        match (ty, rhs) {
            (ValueType::Boolean, Value::Bool(_)) => {
                if !matches!(op, CmpOp::Eq | CmpOp::Ne) {
                    return self.semantic(&start, format!("boolean `{lhs}` compared with `{}`", op.as_str()));
                }
            }
            (ValueType::Numeric, Value::Number(_) | Value::Epsilon) => {}
            (ValueType::Boolean, _) => {
                return self.semantic(&rhs_at, format!("boolean `{lhs}` compared with a number"))
            }
            (ValueType::Numeric, _) => {
                return self.semantic(&rhs_at, format!("numeric `{lhs}` compared with a boolean"))
            }
        }
        Ok(Comparison { lhs, op, rhs })
    }
}

/// Parses a constraint document.
pub fn parse_spec(source: &str) -> Result<ConstraintSpec> {
    let toks = lex(source)?;
    Parser { toks, pos: 0 }.document()
}
