//! Parsing and evaluation of the scalar expressions in which coefficient
//! functions are stated.
//!
//! The grammar covers real literals, identifiers (conventionally `t`, `x`,
//! `u`, `n`), unary minus, the binary operators `+ - * / ^`, and the
//! functions `exp`, `ln`, `sin`, `cos`, `sqrt`, `abs`, `sign`, `floor`.
//! `^` binds tightest and is right-associative, then unary minus, then
//! `* /`, then `+ -`; equal-precedence binary operators associate left
//! except `^`. So `-2^2` is `-(2^2)` and `2^3^2` is `2^(3^2)`.
//!
//! Parse errors carry 0-based byte offsets. Evaluation is IEEE double
//! precision and total over finite bindings: it returns a finite value or a
//! classified error, never an unclassified NaN/infinity.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Binary operators in increasing precedence order: `+ -`, `* /`, `^`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

/// The built-in single-argument functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
    Sqrt,
    Abs,
    Sign,
    Floor,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sign => "sign",
            Func::Floor => "floor",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "sign" => Func::Sign,
            "floor" => Func::Floor,
            _ => return None,
        })
    }
}

/// Abstract syntax tree of a parsed expression. Immutable after parsing;
/// safe to share and evaluate from concurrent tasks.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Var(String),
    Neg(Box<Expr>),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Call {
        func: Func,
        arg: Box<Expr>,
    },
}

/// Error produced while parsing, with a 0-based byte offset into the source.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("syntax error at byte {offset}: {kind}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("expected {expected}, found {found}")]
    Unexpected {
        expected: &'static str,
        found: String,
    },
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("malformed numeric literal")]
    BadNumber,
}

/// Error produced while evaluating an expression.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("domain error: {func}({arg}) is undefined")]
    Domain { func: &'static str, arg: f64 },
    #[error("non-finite result in `{op}`")]
    NonFinite { op: &'static str },
}

impl Expr {
    /// Parse `source` into an AST.
    pub fn parse(source: &str) -> Result<Expr, ParseError> {
        let tokens = lex(source)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            end: source.len(),
        };
        let expr = parser.expr_bp(0)?;
        match parser.peek() {
            None => Ok(expr),
            Some(tok) => Err(ParseError {
                offset: tok.offset,
                kind: ParseErrorKind::Unexpected {
                    expected: "operator or end of input",
                    found: tok.kind.describe(),
                },
            }),
        }
    }

    /// Evaluate with the given variable bindings (linear scan, first match).
    pub fn eval(&self, bindings: &[(&str, f64)]) -> Result<f64, EvalError> {
        match self {
            Expr::Number(v) => Ok(*v),
            Expr::Var(name) => bindings
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| EvalError::UnboundVariable(name.clone())),
            Expr::Neg(inner) => Ok(-inner.eval(bindings)?),
            Expr::Binary { op, lhs, rhs } => {
                let l = lhs.eval(bindings)?;
                let r = rhs.eval(bindings)?;
                let v = match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => l / r,
                    BinOp::Pow => l.powf(r),
                };
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(EvalError::NonFinite { op: op.symbol() })
                }
            }
            Expr::Call { func, arg } => {
                let a = arg.eval(bindings)?;
                let v = match func {
                    Func::Exp => a.exp(),
                    Func::Ln => {
                        if a <= 0.0 {
                            return Err(EvalError::Domain { func: "ln", arg: a });
                        }
                        a.ln()
                    }
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(EvalError::Domain {
                                func: "sqrt",
                                arg: a,
                            });
                        }
                        a.sqrt()
                    }
                    Func::Abs => a.abs(),
                    Func::Sign => {
                        if a == 0.0 {
                            0.0
                        } else {
                            a.signum()
                        }
                    }
                    Func::Floor => a.floor(),
                };
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(EvalError::NonFinite { op: func.name() })
                }
            }
        }
    }

    /// The set of variable names occurring in the expression.
    pub fn variables(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Expr::Number(_) => {}
            Expr::Var(name) => {
                out.insert(name.as_str());
            }
            Expr::Neg(inner) => inner.collect_vars(out),
            Expr::Binary { lhs, rhs, .. } => {
                lhs.collect_vars(out);
                rhs.collect_vars(out);
            }
            Expr::Call { arg, .. } => arg.collect_vars(out),
        }
    }

    /// Replace every occurrence of `var` with `replacement`.
    pub fn substitute(&self, var: &str, replacement: &Expr) -> Expr {
        match self {
            Expr::Number(v) => Expr::Number(*v),
            Expr::Var(name) => {
                if name == var {
                    replacement.clone()
                } else {
                    Expr::Var(name.clone())
                }
            }
            Expr::Neg(inner) => Expr::Neg(Box::new(inner.substitute(var, replacement))),
            Expr::Binary { op, lhs, rhs } => Expr::Binary {
                op: *op,
                lhs: Box::new(lhs.substitute(var, replacement)),
                rhs: Box::new(rhs.substitute(var, replacement)),
            },
            Expr::Call { func, arg } => Expr::Call {
                func: *func,
                arg: Box::new(arg.substitute(var, replacement)),
            },
        }
    }

    pub fn number(v: f64) -> Expr {
        Expr::Number(v)
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_owned())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(inner: Expr) -> Expr {
        Expr::Neg(Box::new(inner))
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn div(lhs: Expr, rhs: Expr) -> Expr {
        Expr::binary(BinOp::Div, lhs, rhs)
    }

    pub fn call(func: Func, arg: Expr) -> Expr {
        Expr::Call {
            func,
            arg: Box::new(arg),
        }
    }
}

/// Canonical printer: fully parenthesized, so `parse(format!("{e}"))`
/// rebuilds the identical tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(v) => write!(f, "{v}"),
            Expr::Var(name) => write!(f, "{name}"),
            Expr::Neg(inner) => write!(f, "(-{inner})"),
            Expr::Binary { op, lhs, rhs } => write!(f, "({lhs}{}{rhs})", op.symbol()),
            Expr::Call { func, arg } => write!(f, "{}({arg})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Number(v) => format!("number `{v}`"),
            TokenKind::Ident(s) => format!("`{s}`"),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Slash => "`/`".into(),
            TokenKind::Caret => "`^`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn lex(source: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let offset = i;
        match b {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
            }
            b'+' => {
                tokens.push(Token {
                    kind: TokenKind::Plus,
                    offset,
                });
                i += 1;
            }
            b'-' => {
                tokens.push(Token {
                    kind: TokenKind::Minus,
                    offset,
                });
                i += 1;
            }
            b'*' => {
                tokens.push(Token {
                    kind: TokenKind::Star,
                    offset,
                });
                i += 1;
            }
            b'/' => {
                tokens.push(Token {
                    kind: TokenKind::Slash,
                    offset,
                });
                i += 1;
            }
            b'^' => {
                tokens.push(Token {
                    kind: TokenKind::Caret,
                    offset,
                });
                i += 1;
            }
            b'(' => {
                tokens.push(Token {
                    kind: TokenKind::LParen,
                    offset,
                });
                i += 1;
            }
            b')' => {
                tokens.push(Token {
                    kind: TokenKind::RParen,
                    offset,
                });
                i += 1;
            }
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    if i >= bytes.len() || !bytes[i].is_ascii_digit() {
                        return Err(ParseError {
                            offset,
                            kind: ParseErrorKind::BadNumber,
                        });
                    }
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                // Exponent part only when unambiguously numeric: `e`/`E`
                // followed by digits or a signed digit run.
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &source[offset..i];
                let value: f64 = text.parse().map_err(|_| ParseError {
                    offset,
                    kind: ParseErrorKind::BadNumber,
                })?;
                if !value.is_finite() {
                    return Err(ParseError {
                        offset,
                        kind: ParseErrorKind::BadNumber,
                    });
                }
                tokens.push(Token {
                    kind: TokenKind::Number(value),
                    offset,
                });
            }
            b'A'..=b'Z' | b'a'..=b'z' | b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                tokens.push(Token {
                    kind: TokenKind::Ident(source[offset..i].to_owned()),
                    offset,
                });
            }
            _ => {
                let ch = source[i..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    offset,
                    kind: ParseErrorKind::UnexpectedChar(ch),
                });
            }
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
}

const NEG_BP: u8 = 5;

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.pos).cloned();
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn error_here(&self, expected: &'static str) -> ParseError {
        match self.peek() {
            Some(tok) => ParseError {
                offset: tok.offset,
                kind: ParseErrorKind::Unexpected {
                    expected,
                    found: tok.kind.describe(),
                },
            },
            None => ParseError {
                offset: self.end,
                kind: ParseErrorKind::Unexpected {
                    expected,
                    found: "end of input".into(),
                },
            },
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Some(tok) if tok.kind == TokenKind::RParen => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error_here("`)`")),
        }
    }

    fn expr_bp(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        let tok = match self.peek() {
            Some(_) => self.next().unwrap(),
            None => return Err(self.error_here("expression")),
        };
        let mut lhs = match tok.kind {
            TokenKind::Number(v) => Expr::Number(v),
            TokenKind::Ident(name) => {
                let is_call = matches!(
                    self.peek(),
                    Some(Token {
                        kind: TokenKind::LParen,
                        ..
                    })
                );
                if is_call {
                    let func = Func::from_name(&name).ok_or(ParseError {
                        offset: tok.offset,
                        kind: ParseErrorKind::UnknownFunction(name.clone()),
                    })?;
                    self.pos += 1; // consume `(`
                    let arg = self.expr_bp(0)?;
                    self.expect_rparen()?;
                    Expr::call(func, arg)
                } else if Func::from_name(&name).is_some() {
                    return Err(ParseError {
                        offset: tok.offset,
                        kind: ParseErrorKind::Unexpected {
                            expected: "`(` after function name",
                            found: format!("`{name}`"),
                        },
                    });
                } else {
                    Expr::Var(name)
                }
            }
            TokenKind::Minus => {
                let operand = self.expr_bp(NEG_BP)?;
                Expr::neg(operand)
            }
            TokenKind::LParen => {
                let inner = self.expr_bp(0)?;
                self.expect_rparen()?;
                inner
            }
            _ => {
                return Err(ParseError {
                    offset: tok.offset,
                    kind: ParseErrorKind::Unexpected {
                        expected: "expression",
                        found: tok.kind.describe(),
                    },
                })
            }
        };

        loop {
            let (op, l_bp, r_bp) = match self.peek().map(|t| &t.kind) {
                Some(TokenKind::Plus) => (BinOp::Add, 1, 2),
                Some(TokenKind::Minus) => (BinOp::Sub, 1, 2),
                Some(TokenKind::Star) => (BinOp::Mul, 3, 4),
                Some(TokenKind::Slash) => (BinOp::Div, 3, 4),
                Some(TokenKind::Caret) => (BinOp::Pow, 8, 7),
                _ => break,
            };
            if l_bp < min_bp {
                break;
            }
            self.pos += 1;
            let rhs = self.expr_bp(r_bp)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }
}
