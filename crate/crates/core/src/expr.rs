//! A small arithmetic expression language.
//!
//! Grammar (usual precedence, `^` right-associative and binding tighter
//! than unary minus):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Identifiers are either bound variables (fixed at parse time), the
//! constants `pi` and `e`, or one of the functions `exp`, `expm1`, `ln`,
//! `log`, `sqrt`, `abs`, `sin`, `cos`, `tan`, `sinh`, `cosh`, `tanh`,
//! `min`, `max`, `pow`.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent f64 methods shadow it when std is linked
use num_traits::Float;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Exp,
    Expm1,
    Ln,
    Sqrt,
    Abs,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Min,
    Max,
    Pow,
}

impl Func {
    fn lookup(name: &str) -> Option<(Func, usize)> {
        let f = match name {
            "exp" => (Func::Exp, 1),
            "expm1" => (Func::Expm1, 1),
            "ln" | "log" => (Func::Ln, 1),
            "sqrt" => (Func::Sqrt, 1),
            "abs" => (Func::Abs, 1),
            "sin" => (Func::Sin, 1),
            "cos" => (Func::Cos, 1),
            "tan" => (Func::Tan, 1),
            "sinh" => (Func::Sinh, 1),
            "cosh" => (Func::Cosh, 1),
            "tanh" => (Func::Tanh, 1),
            "min" => (Func::Min, 2),
            "max" => (Func::Max, 2),
            "pow" => (Func::Pow, 2),
            _ => return None,
        };
        Some(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

fn power(base: f64, exp: f64) -> f64 {
    if exp.fract() == 0.0 && exp.abs() < 1024.0 {
        base.powi(exp as i32)
    } else {
        base.powf(exp)
    }
}

impl Node {
    fn eval(&self, args: &[f64]) -> f64 {
        match self {
            Node::Const(c) => *c,
            Node::Var(i) => args[*i],
            Node::Neg(a) => -a.eval(args),
            Node::Bin(op, a, b) => {
                let (x, y) = (a.eval(args), b.eval(args));
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x / y,
                    BinOp::Pow => power(x, y),
                }
            }
            Node::Call(func, xs) => {
                let x = xs[0].eval(args);
                match func {
                    Func::Exp => x.exp(),
                    Func::Expm1 => x.exp_m1(),
                    Func::Ln => x.ln(),
                    Func::Sqrt => x.sqrt(),
                    Func::Abs => x.abs(),
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => x.tan(),
                    Func::Sinh => x.sinh(),
                    Func::Cosh => x.cosh(),
                    Func::Tanh => x.tanh(),
                    Func::Min => x.min(xs[1].eval(args)),
                    Func::Max => x.max(xs[1].eval(args)),
                    Func::Pow => power(x, xs[1].eval(args)),
                }
            }
        }
    }
}

/// A parsed expression with variables bound to argument slots.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    vars: Vec<String>,
    source: String,
}

impl Expr {
    /// Parses `source`, binding each name in `vars` to the argument slot of
    /// the same index.
    pub fn parse(source: &str, vars: &[&str]) -> Result<Self> {
        let tokens = tokenize(source)?;
        let mut parser = Parser {
            tokens: &tokens,
            pos: 0,
            vars,
            end: source.len(),
        };
        let root = parser.expr()?;
        if let Some(tok) = parser.peek() {
            return Err(Error::Parse {
                position: tok.offset,
                message: format!("unexpected {}", tok.kind.describe()),
            });
        }
        Ok(Self {
            root,
            vars: vars.iter().map(|v| v.to_string()).collect(),
            source: source.to_string(),
        })
    }

    pub fn eval(&self, args: &[f64]) -> f64 {
        debug_assert_eq!(args.len(), self.vars.len());
        self.root.eval(args)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn variables(&self) -> &[String] {
        &self.vars
    }

    /// True if the expression reads the variable at `slot`.
    pub fn uses(&self, slot: usize) -> bool {
        fn walk(n: &Node, slot: usize) -> bool {
            match n {
                Node::Const(_) => false,
                Node::Var(i) => *i == slot,
                Node::Neg(a) => walk(a, slot),
                Node::Bin(_, a, b) => walk(a, slot) || walk(b, slot),
                Node::Call(_, xs) => xs.iter().any(|x| walk(x, slot)),
            }
        }
        walk(&self.root, slot)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

impl TokKind {
    fn describe(&self) -> String {
        match self {
            TokKind::Num(v) => format!("number {v}"),
            TokKind::Ident(s) => format!("identifier '{s}'"),
            TokKind::Op(c) => format!("operator '{c}'"),
            TokKind::LParen => "'('".to_string(),
            TokKind::RParen => "')'".to_string(),
            TokKind::Comma => "','".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokKind,
    offset: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
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
            let v: f64 = text.parse().map_err(|_| Error::Parse {
                position: start,
                message: format!("malformed number '{text}'"),
            })?;
            out.push(Token {
                kind: TokKind::Num(v),
                offset: start,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                kind: TokKind::Ident(src[start..i].to_string()),
                offset: start,
            });
            continue;
        }
        let kind = match c {
            '+' | '-' | '*' | '/' | '^' => TokKind::Op(c),
            '(' => TokKind::LParen,
            ')' => TokKind::RParen,
            ',' => TokKind::Comma,
            _ => {
                return Err(Error::Parse {
                    position: start,
                    message: format!("unexpected character '{c}'"),
                })
            }
        };
        out.push(Token { kind, offset: start });
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    vars: &'a [&'a str],
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.end, |t| t.offset)
    }

    fn eat_op(&mut self, op: char) -> bool {
        if matches!(self.peek(), Some(Token { kind: TokKind::Op(c), .. }) if *c == op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokKind) -> Result<()> {
        match self.peek() {
            Some(t) if t.kind == kind => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(Error::Parse {
                position: t.offset,
                message: format!("expected {}, found {}", kind.describe(), t.kind.describe()),
            }),
            None => Err(Error::Parse {
                position: self.end,
                message: format!("expected {}, found end of input", kind.describe()),
            }),
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat_op('+') {
                BinOp::Add
            } else if self.eat_op('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat_op('*') {
                BinOp::Mul
            } else if self.eat_op('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat_op('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat_op('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat_op('^') {
            let exp = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let Some(tok) = self.peek().cloned() else {
            return Err(Error::Parse {
                position: self.end,
                message: "unexpected end of input".to_string(),
            });
        };
        self.pos += 1;
        match tok.kind {
            TokKind::Num(v) => Ok(Node::Const(v)),
            TokKind::LParen => {
                let inner = self.expr()?;
                self.expect(TokKind::RParen)?;
                Ok(inner)
            }
            TokKind::Ident(name) => {
                if matches!(self.peek(), Some(Token { kind: TokKind::LParen, .. })) {
                    let Some((func, arity)) = Func::lookup(&name) else {
                        return Err(Error::Parse {
                            position: tok.offset,
                            message: format!("unknown function '{name}'"),
                        });
                    };
                    self.pos += 1;
                    let mut args = Vec::new();
                    loop {
                        args.push(self.expr()?);
                        if matches!(self.peek(), Some(Token { kind: TokKind::Comma, .. })) {
                            self.pos += 1;
                            continue;
                        }
                        break;
                    }
                    self.expect(TokKind::RParen)?;
                    if args.len() != arity {
                        return Err(Error::Parse {
                            position: tok.offset,
                            message: format!(
                                "function '{name}' takes {arity} argument(s), got {}",
                                args.len()
                            ),
                        });
                    }
                    return Ok(Node::Call(func, args));
                }
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Node::Var(i));
                }
                match name.as_str() {
                    "pi" => Ok(Node::Const(core::f64::consts::PI)),
                    "e" => Ok(Node::Const(core::f64::consts::E)),
                    _ => Err(Error::Parse {
                        position: tok.offset,
                        message: format!("unknown variable '{name}'"),
                    }),
                }
            }
            other => Err(Error::Parse {
                position: self.offset().min(tok.offset),
                message: format!("unexpected {}", other.describe()),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, t: f64) -> f64 {
        Expr::parse(src, &["t"]).unwrap().eval(&[t])
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", 0.0), 7.0);
        assert_eq!(ev("2 ^ 3 ^ 2", 0.0), 512.0);
        assert_eq!(ev("-t^2", 3.0), -9.0);
        assert_eq!(ev("(1 + t) * 2", 1.0), 4.0);
        assert_eq!(ev("t / 2 / 2", 8.0), 2.0);
        assert_eq!(ev("2^-1", 0.0), 0.5);
    }

    #[test]
    fn functions_and_constants() {
        assert!((ev("exp(t) - 1 - expm1(t)", 0.3)).abs() < 1e-15);
        assert!((ev("3*(1+t^2)^(-5/2)", 0.0) - 3.0).abs() < 1e-15);
        assert_eq!(ev("max(t, 2)", 1.0), 2.0);
        assert!((ev("cos(pi)", 0.0) + 1.0).abs() < 1e-15);
        assert!((ev("ln(e)", 0.0) - 1.0).abs() < 1e-15);
        assert_eq!(ev("1.5e2 + 2E-1", 0.0), 150.2);
    }

    #[test]
    fn multi_variable_binding() {
        let e = Expr::parse("u1*u2^2", &["x", "u1", "u2"]).unwrap();
        assert_eq!(e.eval(&[0.0, 2.0, 3.0]), 18.0);
        assert!(e.uses(1) && e.uses(2) && !e.uses(0));
    }

    #[test]
    fn errors_carry_positions() {
        let err = Expr::parse("t + s", &["t"]).unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                position: 4,
                message: "unknown variable 's'".into()
            }
        );
        assert!(matches!(Expr::parse("(t", &["t"]), Err(Error::Parse { position: 2, .. })));
        assert!(matches!(Expr::parse("foo(t)", &["t"]), Err(Error::Parse { position: 0, .. })));
        assert!(matches!(Expr::parse("max(t)", &["t"]), Err(Error::Parse { .. })));
        assert!(matches!(Expr::parse("t $ 2", &["t"]), Err(Error::Parse { position: 2, .. })));
        assert!(matches!(Expr::parse("t 2", &["t"]), Err(Error::Parse { position: 2, .. })));
    }
}
