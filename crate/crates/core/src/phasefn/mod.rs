//! Real phase functions `f: N -> R` written in a small expression language.
//!
//! Phases are in cycles: the summand attached to `f` is `e(f(n))`. The
//! grammar is ordinary infix arithmetic over the single variable `n`, with
//! `^` for powers, the constant `pi`, the functions `sqrt`, `log`, `exp`,
//! `sin`, `cos`, `atan` and the cumulative sum `csum(a, g)` meaning
//! `sum_{k=a}^{n} g(k)`. Inside a `csum` body the summation index is `k`;
//! nested sums run up to the index of the enclosing sum.

mod eval;
mod parse;
mod source;

use std::fmt;

use crate::numeric::Dd;

pub use eval::{EvalError, Evaluator};
pub use parse::ParseError;
pub use source::{SequenceSource, SourceCursor, SourceError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }

    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Log,
    Exp,
    Sin,
    Cos,
    Atan,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Log => "log",
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Atan => "atan",
        }
    }

    pub(crate) fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "log" | "ln" => Func::Log,
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "atan" | "arctan" => Func::Atan,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Decimal literal; the source text is kept so printing is lossless.
    Literal { text: String, value: Dd },
    Pi,
    /// `n` at the top level, `k` inside a cumulative sum.
    Index,
    Neg(Box<Node>),
    Binary {
        op: BinOp,
        lhs: Box<Node>,
        rhs: Box<Node>,
    },
    Call { func: Func, arg: Box<Node> },
    /// `sum_{k=start}^{index} body(k)`; `slot` numbers the sums in parse order.
    CumSum {
        start: i64,
        body: Box<Node>,
        slot: usize,
    },
}

impl Node {
    fn precedence(&self) -> u8 {
        match self {
            Node::Binary { op, .. } => op.precedence(),
            Node::Neg(_) => 3,
            _ => 5,
        }
    }

    fn write(&self, out: &mut fmt::Formatter<'_>, depth: usize) -> fmt::Result {
        match self {
            Node::Literal { text, .. } => out.write_str(text),
            Node::Pi => out.write_str("pi"),
            Node::Index => out.write_str(if depth == 0 { "n" } else { "k" }),
            Node::Neg(inner) => {
                out.write_str("-")?;
                write_child(out, inner, inner.precedence() < 3, depth)
            }
            Node::Binary { op, lhs, rhs } => {
                let p = op.precedence();
                let (left_paren, right_paren) = if *op == BinOp::Pow {
                    (lhs.precedence() <= p, rhs.precedence() < 3)
                } else {
                    (lhs.precedence() < p, rhs.precedence() <= p)
                };
                write_child(out, lhs, left_paren, depth)?;
                write!(out, "{}", op.symbol())?;
                write_child(out, rhs, right_paren, depth)
            }
            Node::Call { func, arg } => {
                write!(out, "{}(", func.name())?;
                arg.write(out, depth)?;
                out.write_str(")")
            }
            Node::CumSum { start, body, .. } => {
                write!(out, "csum({start}, ")?;
                body.write(out, depth + 1)?;
                out.write_str(")")
            }
        }
    }

    fn renumber(&mut self, next: &mut usize) {
        match self {
            Node::Neg(inner) | Node::Call { arg: inner, .. } => inner.renumber(next),
            Node::Binary { lhs, rhs, .. } => {
                lhs.renumber(next);
                rhs.renumber(next);
            }
            Node::CumSum { body, slot, .. } => {
                *slot = *next;
                *next += 1;
                body.renumber(next);
            }
            _ => {}
        }
    }

    fn has_cumsum(&self) -> bool {
        match self {
            Node::CumSum { .. } => true,
            Node::Neg(inner) | Node::Call { arg: inner, .. } => inner.has_cumsum(),
            Node::Binary { lhs, rhs, .. } => lhs.has_cumsum() || rhs.has_cumsum(),
            _ => false,
        }
    }
}

fn write_child(
    out: &mut fmt::Formatter<'_>,
    node: &Node,
    paren: bool,
    depth: usize,
) -> fmt::Result {
    if paren {
        out.write_str("(")?;
        node.write(out, depth)?;
        out.write_str(")")
    } else {
        node.write(out, depth)
    }
}

/// A parsed phase function. Immutable; evaluation goes through an
/// [`Evaluator`], which owns the cumulative-sum caches.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseExpr {
    root: Node,
    cumsums: usize,
}

impl PhaseExpr {
    pub fn from_node(mut root: Node) -> Self {
        let mut cumsums = 0;
        root.renumber(&mut cumsums);
        PhaseExpr { root, cumsums }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub(crate) fn cumsum_count(&self) -> usize {
        self.cumsums
    }

    /// True when evaluation at `n` costs O(1) from a fresh evaluator.
    pub fn is_local(&self) -> bool {
        !self.root.has_cumsum()
    }

    pub fn evaluator(&self) -> Evaluator<'_> {
        Evaluator::new(self)
    }

    /// `self + c*n`, with `c` written as its shortest round-trip decimal.
    pub fn plus_linear(&self, c: f64) -> PhaseExpr {
        let text = format!("{c:?}");
        let coeff = literal(&text);
        PhaseExpr::from_node(Node::Binary {
            op: BinOp::Add,
            lhs: Box::new(self.root.clone()),
            rhs: Box::new(Node::Binary {
                op: BinOp::Mul,
                lhs: Box::new(coeff),
                rhs: Box::new(Node::Index),
            }),
        })
    }

    /// Converts a phase in radians to cycles by appending `/(2*pi)`.
    pub fn radians_to_cycles(&self) -> PhaseExpr {
        PhaseExpr::from_node(Node::Binary {
            op: BinOp::Div,
            lhs: Box::new(self.root.clone()),
            rhs: Box::new(Node::Binary {
                op: BinOp::Mul,
                lhs: Box::new(literal("2")),
                rhs: Box::new(Node::Pi),
            }),
        })
    }
}

fn literal(text: &str) -> Node {
    let value = parse::decimal_value(text).expect("formatted float is a valid literal");
    match text.strip_prefix('-') {
        Some(rest) => Node::Neg(Box::new(Node::Literal {
            text: rest.to_string(),
            value: -value,
        })),
        None => Node::Literal {
            text: text.to_string(),
            value,
        },
    }
}

impl fmt::Display for PhaseExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.write(f, 0)
    }
}

impl std::str::FromStr for PhaseExpr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, ParseError> {
        parse_phase(s)
    }
}

pub fn parse_phase(text: &str) -> Result<PhaseExpr, ParseError> {
    parse::parse(text)
}

/// `f(n)` as a double. Builds a fresh evaluator; use [`Evaluator`] for sweeps.
pub fn eval_phase(f: &PhaseExpr, n: u64) -> Result<f64, EvalError> {
    Ok(f.evaluator().eval(n)?.to_f64())
}

/// `Δf(n)` (order 1) or `Δ²f(n)` (order 2) from evaluated values.
pub fn finite_difference(f: &PhaseExpr, n: u64, order: u8) -> Result<f64, EvalError> {
    let mut ev = f.evaluator();
    match order {
        1 => ev.delta(n),
        2 => ev.delta2(n),
        _ => Err(EvalError::UnsupportedOrder(order)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondDifferenceTail {
    /// `sum_{n=N0}^{H} |Δ²f(n)|`.
    pub sum: f64,
    /// `|Δ²f(H)|`.
    pub last_term: f64,
    pub terms: u64,
}

/// `sum_{n=first}^{last} |Δ²f(n)|`, compensated.
pub fn second_difference_tail(
    f: &PhaseExpr,
    first: u64,
    last: u64,
) -> Result<SecondDifferenceTail, EvalError> {
    if first == 0 || last < first {
        return Err(EvalError::InvalidRange { first, last });
    }
    let mut ev = f.evaluator();
    let mut sum = crate::numeric::NeumaierSum::new();
    let mut last_term = 0.0;
    for n in first..=last {
        last_term = ev.delta2(n)?.abs();
        sum.add(last_term);
    }
    Ok(SecondDifferenceTail {
        sum: sum.value(),
        last_term,
        terms: last - first + 1,
    })
}
