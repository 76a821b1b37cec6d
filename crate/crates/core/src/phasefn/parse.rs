use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use super::{BinOp, Func, Node, PhaseExpr};
use crate::numeric::Dd;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("`{name}` at byte {offset} takes {expected} argument(s), found {found}")]
    Arity {
        name: String,
        offset: usize,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Sym(char),
    End,
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == b'.' {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
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
            let text = &src[start..i];
            if text == "." {
                return Err(ParseError::Syntax {
                    offset: start,
                    message: "stray `.`".into(),
                });
            }
            out.push((Tok::Num(text.to_string()), start));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else if b"+-*/^(),".contains(&c) {
            out.push((Tok::Sym(c as char), i));
            i += 1;
        } else {
            let ch = src[i..].chars().next().unwrap_or('?');
            return Err(ParseError::Syntax {
                offset: i,
                message: format!("unexpected character `{ch}`"),
            });
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

/// Exact value of a decimal literal, split into a double-double.
pub(crate) fn decimal_value(text: &str) -> Option<Dd> {
    let hi: f64 = text.parse().ok()?;
    if !hi.is_finite() {
        return None;
    }
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(p) => (&body[..p], body[p + 1..].parse::<i64>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(p) => (&mantissa[..p], &mantissa[p + 1..]),
        None => (mantissa, ""),
    };
    let digits = format!("{int_part}{frac_part}");
    let digits = if digits.is_empty() { "0".to_string() } else { digits };
    let mut num: BigInt = digits.parse().ok()?;
    let scale = exponent - frac_part.len() as i64;
    if scale.unsigned_abs() > 400 {
        return Some(Dd::from_f64(hi));
    }
    let ten = BigInt::from(10u32);
    let mut den = BigInt::one();
    if scale >= 0 {
        num *= num_traits::pow(ten, scale as usize);
    } else {
        den = num_traits::pow(ten, (-scale) as usize);
    }
    if neg {
        num = -num;
    }
    let exact = BigRational::new(num, den);
    let hi_exact = BigRational::from_float(hi)?;
    let diff = exact - hi_exact;
    let lo = if diff.is_zero() {
        0.0
    } else {
        diff.to_f64().unwrap_or(0.0)
    };
    Some(Dd::new(hi, lo))
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    depth: usize,
}

pub(super) fn parse(src: &str) -> Result<PhaseExpr, ParseError> {
    let mut p = Parser {
        toks: tokenize(src)?,
        pos: 0,
        depth: 0,
    };
    let root = p.expr()?;
    if p.peek() != &Tok::End {
        return Err(p.unexpected("end of expression"));
    }
    Ok(PhaseExpr::from_node(root))
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        let found = match self.peek() {
            Tok::Num(t) | Tok::Ident(t) => format!("`{t}`"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::End => "end of input".to_string(),
        };
        ParseError::Syntax {
            offset: self.offset(),
            message: format!("expected {wanted}, found {found}"),
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.peek() == &Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{c}`")))
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Node::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Node::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.peek() == &Tok::Sym('-') {
            self.bump();
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.peek() == &Tok::Sym('+') {
            self.bump();
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if self.peek() == &Tok::Sym('^') {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Node::Binary {
                op: BinOp::Pow,
                lhs: Box::new(base),
                rhs: Box::new(exponent),
            });
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Num(text) => {
                self.bump();
                let value = decimal_value(&text).ok_or_else(|| ParseError::Syntax {
                    offset,
                    message: format!("invalid number `{text}`"),
                })?;
                Ok(Node::Literal { text, value })
            }
            Tok::Sym('(') => {
                self.bump();
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                if self.peek() == &Tok::Sym('(') {
                    return self.call(name, offset);
                }
                match name.as_str() {
                    "pi" => Ok(Node::Pi),
                    "n" if self.depth == 0 => Ok(Node::Index),
                    "k" if self.depth > 0 => Ok(Node::Index),
                    _ => Err(ParseError::UnknownIdentifier { name, offset }),
                }
            }
            _ => Err(self.unexpected("a number, identifier or `(`")),
        }
    }

    fn call(&mut self, name: String, offset: usize) -> Result<Node, ParseError> {
        let func = Func::lookup(&name);
        let is_csum = name == "csum";
        if func.is_none() && !is_csum {
            return Err(ParseError::UnknownIdentifier { name, offset });
        }
        self.expect('(')?;
        let mut args = Vec::new();
        let mut arg_offsets = Vec::new();
        if self.peek() != &Tok::Sym(')') {
            loop {
                arg_offsets.push(self.offset());
                // The first csum argument is the lower limit, evaluated in
                // the enclosing scope; the second is the body.
                if is_csum && args.len() == 1 {
                    self.depth += 1;
                    let body = self.expr();
                    self.depth -= 1;
                    args.push(body?);
                } else {
                    args.push(self.expr()?);
                }
                if self.peek() == &Tok::Sym(',') {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(')')?;
        let expected = if is_csum { 2 } else { 1 };
        if args.len() != expected {
            return Err(ParseError::Arity {
                name,
                offset,
                expected,
                found: args.len(),
            });
        }
        if is_csum {
            let body = args.pop().unwrap();
            let start = integer_literal(&args[0]).ok_or_else(|| ParseError::Syntax {
                offset: arg_offsets[0],
                message: "csum lower limit must be an integer literal".into(),
            })?;
            return Ok(Node::CumSum {
                start,
                body: Box::new(body),
                slot: 0,
            });
        }
        Ok(Node::Call {
            func: func.unwrap(),
            arg: Box::new(args.pop().unwrap()),
        })
    }
}

fn integer_literal(node: &Node) -> Option<i64> {
    match node {
        Node::Literal { text, value }
            if text.bytes().all(|b| b.is_ascii_digit()) && value.hi.abs() < 9e15 =>
        {
            Some(value.hi as i64)
        }
        Node::Neg(inner) => integer_literal(inner).map(|v| -v),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasefn::parse_phase;

    #[test]
    fn errors_carry_offsets() {
        match parse_phase("n + * 2") {
            Err(ParseError::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
        match parse_phase("n + foo") {
            Err(ParseError::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "foo");
                assert_eq!(offset, 4);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_phase("sqrt(n, 2)"),
            Err(ParseError::Arity { expected: 1, found: 2, .. })
        ));
        assert!(matches!(
            parse_phase("csum(1)"),
            Err(ParseError::Arity { expected: 2, found: 1, .. })
        ));
        assert!(matches!(parse_phase("(n"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse_phase("n $ 2"), Err(ParseError::Syntax { offset: 2, .. })));
        assert!(matches!(parse_phase(""), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn scoping_of_index_names() {
        assert!(matches!(parse_phase("k"), Err(ParseError::UnknownIdentifier { .. })));
        assert!(matches!(
            parse_phase("csum(1, n)"),
            Err(ParseError::UnknownIdentifier { .. })
        ));
        assert!(parse_phase("csum(2, csum(2, sin(k)/(k*log(k)^2)))").is_ok());
        assert!(matches!(
            parse_phase("csum(n, k)"),
            Err(ParseError::Syntax { .. })
        ));
    }

    #[test]
    fn literal_low_word_is_exact() {
        let d = decimal_value("0.3").unwrap();
        assert_eq!(d.hi, 0.3);
        // 0.3 - 0.299999999999999988897769753748... = 1.1102230246251565e-17
        assert!((d.lo - 1.110_223_024_625_156_5e-17).abs() < 1e-32);
        assert_eq!(decimal_value("0.5").unwrap().lo, 0.0);
        assert_eq!(decimal_value("12").unwrap(), Dd::from_f64(12.0));
        assert!(decimal_value("2.5e3").unwrap().hi == 2500.0);
    }
}
