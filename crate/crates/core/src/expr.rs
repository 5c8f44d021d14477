//! Textual expressions for `phi(u, u1)` and auxiliary scalar fields.
//!
//! Grammar (see `docs/grammar.md`):
//!
//! ```text
//! expr    = term   { ("+" | "-") term } ;
//! term    = unary  { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = primary [ "^" unary ] ;
//! primary = number | ident | ident "(" expr ")" | "(" expr ")" ;
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-u^2`
//! is `-(u^2)`. Identifiers other than variables, `pi`, `e` and function
//! names are free parameters resolved at evaluation time.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::ad::{hd_arith, AdError, BinaryOp, HyperDual2, UnaryFn, Var};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("function `{name}` at {pos} takes exactly one argument")]
    Arity { name: String, pos: usize },
    #[error("missing parameter `{0}`")]
    MissingParam(String),
    #[error("`{0}` is a reserved constant and cannot be bound as a parameter")]
    ReservedName(String),
    #[error("evaluation failed at {pos}: {source}")]
    Eval { pos: usize, source: AdError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Number(f64),
    Const(Constant),
    Var(Var),
    Param(String),
    Unary(UnaryFn, Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
}

/// AST node. Equality compares structure only, not source positions.
#[derive(Debug, Clone)]
pub struct Node {
    pub kind: NodeKind,
    pub pos: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

/// Named parameter values bound at evaluation time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params(BTreeMap<String, f64>);

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, value: f64) -> Result<(), ExprError> {
        if name == "pi" || name == "e" {
            return Err(ExprError::ReservedName(name.to_string()));
        }
        self.0.insert(name.to_string(), value);
        Ok(())
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.insert(name, value).expect("reserved parameter name");
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }
}

/// Variable sets for the roles an expression can play.
pub const PHASE_VARS: &[Var] = &[Var::U, Var::U1];
pub const U_ONLY: &[Var] = &[Var::U];

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // exponent only if followed by digits
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lit = &text[start..i];
            let v: f64 = lit.parse().map_err(|_| ExprError::Syntax {
                pos: start,
                msg: format!("malformed number `{lit}`"),
            })?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
        } else if "+-*/^(),".contains(c) {
            out.push((Tok::Op(c), i));
            i += 1;
        } else {
            return Err(ExprError::Syntax {
                pos: i,
                msg: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

fn var_from_name(name: &str) -> Option<Var> {
    match name {
        "u" => Some(Var::U),
        "u1" => Some(Var::U1),
        _ => None,
    }
}

/// Names that look like jet coordinates: `x`, `u`, `u<digits>`.
fn is_coordinate_name(name: &str) -> bool {
    name == "x" || (name.starts_with('u') && name[1..].bytes().all(|b| b.is_ascii_digit()))
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    end: usize,
    vars: &'a [Var],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(_, p)| *p)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: char) -> Result<(), ExprError> {
        if self.eat(op) {
            Ok(())
        } else {
            Err(ExprError::Syntax {
                pos: self.pos(),
                msg: format!("expected `{op}`"),
            })
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let pos = self.pos();
            let op = if self.eat('+') {
                BinaryOp::Add
            } else if self.eat('-') {
                BinaryOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Node {
                kind: NodeKind::Binary(op, Box::new(lhs), Box::new(rhs)),
                pos,
            };
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let pos = self.pos();
            let op = if self.eat('*') {
                BinaryOp::Mul
            } else if self.eat('/') {
                BinaryOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Node {
                kind: NodeKind::Binary(op, Box::new(lhs), Box::new(rhs)),
                pos,
            };
        }
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        let pos = self.pos();
        if self.eat('-') {
            let inner = self.unary()?;
            return Ok(Node {
                kind: NodeKind::Unary(UnaryFn::Neg, Box::new(inner)),
                pos,
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.primary()?;
        let pos = self.pos();
        if self.eat('^') {
            let exponent = self.unary()?;
            return Ok(Node {
                kind: NodeKind::Binary(BinaryOp::Pow, Box::new(base), Box::new(exponent)),
                pos,
            });
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ExprError> {
        let pos = self.pos();
        match self.toks.get(self.at).cloned() {
            Some((Tok::Num(v), _)) => {
                self.at += 1;
                Ok(Node {
                    kind: NodeKind::Number(v),
                    pos,
                })
            }
            Some((Tok::Ident(name), _)) => {
                self.at += 1;
                if let Some(f) = UnaryFn::from_name(&name) {
                    if !self.eat('(') {
                        return Err(ExprError::Syntax {
                            pos: self.pos(),
                            msg: format!("expected `(` after function `{name}`"),
                        });
                    }
                    if self.peek() == Some(&Tok::Op(')')) {
                        return Err(ExprError::Arity { name, pos });
                    }
                    let arg = self.expr()?;
                    if self.peek() == Some(&Tok::Op(',')) {
                        return Err(ExprError::Arity { name, pos });
                    }
                    self.expect(')')?;
                    return Ok(Node {
                        kind: NodeKind::Unary(f, Box::new(arg)),
                        pos,
                    });
                }
                let kind = match name.as_str() {
                    "pi" => NodeKind::Const(Constant::Pi),
                    "e" => NodeKind::Const(Constant::E),
                    _ => match var_from_name(&name) {
                        Some(v) if self.vars.contains(&v) => NodeKind::Var(v),
                        _ if is_coordinate_name(&name) => {
                            return Err(ExprError::UnknownIdentifier { name, pos })
                        }
                        _ => NodeKind::Param(name),
                    },
                };
                if self.peek() == Some(&Tok::Op('(')) {
                    return Err(ExprError::Syntax {
                        pos: self.pos(),
                        msg: "unknown function".into(),
                    });
                }
                Ok(Node { kind, pos })
            }
            Some((Tok::Op('('), _)) => {
                self.at += 1;
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Some((Tok::Op(c), _)) => Err(ExprError::Syntax {
                pos,
                msg: format!("unexpected `{c}`"),
            }),
            None => Err(ExprError::Syntax {
                pos,
                msg: "unexpected end of input".into(),
            }),
        }
    }
}

/// Parses `text` allowing only the variables in `allowed_vars`.
pub fn parse(text: &str, allowed_vars: &[Var]) -> Result<Expr, ExprError> {
    let toks = tokenize(text)?;
    if toks.is_empty() {
        return Err(ExprError::Syntax {
            pos: 0,
            msg: "empty expression".into(),
        });
    }
    let mut p = Parser {
        toks,
        at: 0,
        end: text.len(),
        vars: allowed_vars,
    };
    let root = p.expr()?;
    if p.at != p.toks.len() {
        return Err(ExprError::Syntax {
            pos: p.pos(),
            msg: "unexpected trailing input".into(),
        });
    }
    Ok(Expr { root })
}

impl Expr {
    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Parameter names referenced by the expression, sorted and deduplicated.
    pub fn params(&self) -> Vec<String> {
        fn walk(n: &Node, out: &mut Vec<String>) {
            match &n.kind {
                NodeKind::Param(p) => out.push(p.clone()),
                NodeKind::Unary(_, c) => walk(c, out),
                NodeKind::Binary(_, l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
                _ => {}
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out.sort();
        out.dedup();
        out
    }

    pub fn uses_var(&self, v: Var) -> bool {
        fn walk(n: &Node, v: Var) -> bool {
            match &n.kind {
                NodeKind::Var(w) => *w == v,
                NodeKind::Unary(_, c) => walk(c, v),
                NodeKind::Binary(_, l, r) => walk(l, v) || walk(r, v),
                _ => false,
            }
        }
        walk(&self.root, v)
    }

    pub fn eval_hd(
        &self,
        u: HyperDual2,
        u1: HyperDual2,
        params: &Params,
    ) -> Result<HyperDual2, ExprError> {
        eval_node(&self.root, u, u1, params)
    }

    pub fn eval(&self, u: f64, u1: f64, params: &Params) -> Result<f64, ExprError> {
        Ok(self
            .eval_hd(HyperDual2::constant(u), HyperDual2::constant(u1), params)?
            .val)
    }

    /// Value and all partials at `(u, u1)`.
    pub fn jet(&self, u: f64, u1: f64, params: &Params) -> Result<HyperDual2, ExprError> {
        self.eval_hd(
            HyperDual2::lift(u, Var::U),
            HyperDual2::lift(u1, Var::U1),
            params,
        )
    }
}

fn eval_node(
    n: &Node,
    u: HyperDual2,
    u1: HyperDual2,
    params: &Params,
) -> Result<HyperDual2, ExprError> {
    let at = |source| ExprError::Eval { pos: n.pos, source };
    match &n.kind {
        NodeKind::Number(v) => Ok(HyperDual2::constant(*v)),
        NodeKind::Const(c) => Ok(HyperDual2::constant(c.value())),
        NodeKind::Var(Var::U) => Ok(u),
        NodeKind::Var(Var::U1) => Ok(u1),
        NodeKind::Param(p) => params
            .get(p)
            .map(HyperDual2::constant)
            .ok_or_else(|| ExprError::MissingParam(p.clone())),
        NodeKind::Unary(f, c) => eval_node(c, u, u1, params)?.apply(*f).map_err(at),
        NodeKind::Binary(op, l, r) => {
            let a = eval_node(l, u, u1, params)?;
            let b = eval_node(r, u, u1, params)?;
            hd_arith(a, b, *op).map_err(at)
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            NodeKind::Number(v) => write!(f, "{v:?}"),
            NodeKind::Const(Constant::Pi) => write!(f, "pi"),
            NodeKind::Const(Constant::E) => write!(f, "e"),
            NodeKind::Var(Var::U) => write!(f, "u"),
            NodeKind::Var(Var::U1) => write!(f, "u1"),
            NodeKind::Param(p) => write!(f, "{p}"),
            NodeKind::Unary(UnaryFn::Neg, c) => write!(f, "(-{c})"),
            NodeKind::Unary(func, c) => write!(f, "{}({c})", func.name()),
            NodeKind::Binary(op, l, r) => {
                let sym = match op {
                    BinaryOp::Add => '+',
                    BinaryOp::Sub => '-',
                    BinaryOp::Mul => '*',
                    BinaryOp::Div => '/',
                    BinaryOp::Pow => '^',
                };
                write!(f, "({l} {sym} {r})")
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}
