//! Small arithmetic expression language for conformal factors, test
//! functions, and parametric boundary curves.
//!
//! Grammar: `+ - * / ^` with usual precedence (`^` binds tightest, right
//! associative), unary minus, parentheses, decimal literals, the functions
//! `exp`, `log`, `sqrt`, and a caller-supplied variable list (typically
//! `x, y` or `t`). Expressions compile to a flat postfix program.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Op {
    Push(f64),
    Var(usize),
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Neg,
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
}

/// A compiled expression over a fixed variable list.
#[derive(Clone, Debug)]
pub struct Expr {
    ops: Vec<Op>,
    src: String,
    n_vars: usize,
}

impl Expr {
    /// Parse `src` over the given variable names.
    pub fn parse(src: &str, vars: &[&str]) -> Result<Expr> {
        let tokens = lex(src)?;
        let mut p = Parser {
            tokens,
            pos: 0,
            vars,
            ops: Vec::new(),
            src,
        };
        p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(p.err(&format!("unexpected trailing input at offset {}", p.offset())));
        }
        Ok(Expr {
            ops: p.ops,
            src: src.to_string(),
            n_vars: vars.len(),
        })
    }

    pub fn source(&self) -> &str {
        &self.src
    }

    /// Evaluate with one value per variable, in declaration order.
    pub fn eval(&self, vals: &[f64]) -> f64 {
        debug_assert_eq!(vals.len(), self.n_vars);
        let mut stack = [0.0f64; 32];
        let mut top = 0usize;
        for op in &self.ops {
            match op {
                Op::Push(c) => {
                    stack[top] = *c;
                    top += 1;
                }
                Op::Var(i) => {
                    stack[top] = vals[*i];
                    top += 1;
                }
                Op::Neg => stack[top - 1] = -stack[top - 1],
                Op::Exp => stack[top - 1] = stack[top - 1].exp(),
                Op::Log => stack[top - 1] = stack[top - 1].ln(),
                Op::Sqrt => stack[top - 1] = stack[top - 1].sqrt(),
                Op::Sin => stack[top - 1] = stack[top - 1].sin(),
                Op::Cos => stack[top - 1] = stack[top - 1].cos(),
                Op::Add => {
                    stack[top - 2] += stack[top - 1];
                    top -= 1;
                }
                Op::Sub => {
                    stack[top - 2] -= stack[top - 1];
                    top -= 1;
                }
                Op::Mul => {
                    stack[top - 2] *= stack[top - 1];
                    top -= 1;
                }
                Op::Div => {
                    stack[top - 2] /= stack[top - 1];
                    top -= 1;
                }
                Op::Pow => {
                    stack[top - 2] = stack[top - 2].powf(stack[top - 1]);
                    top -= 1;
                }
            }
        }
        stack[top - 1]
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push((Tok::Plus, i));
                i += 1;
            }
            '-' => {
                out.push((Tok::Minus, i));
                i += 1;
            }
            '*' => {
                out.push((Tok::Star, i));
                i += 1;
            }
            '/' => {
                out.push((Tok::Slash, i));
                i += 1;
            }
            '^' => {
                out.push((Tok::Caret, i));
                i += 1;
            }
            '(' => {
                out.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, i));
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    if d.is_ascii_digit() || d == '.' {
                        i += 1;
                    } else if (d == 'e' || d == 'E')
                        && i + 1 < bytes.len()
                        && ((bytes[i + 1] as char).is_ascii_digit()
                            || bytes[i + 1] == b'+'
                            || bytes[i + 1] == b'-')
                    {
                        i += 2;
                        while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                            i += 1;
                        }
                        break;
                    } else {
                        break;
                    }
                }
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| Error::Expr {
                    field: String::new(),
                    message: format!("bad number literal `{text}` at offset {start}"),
                })?;
                out.push((Tok::Num(v), start));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    if d.is_ascii_alphanumeric() || d == '_' {
                        i += 1;
                    } else {
                        break;
                    }
                }
                out.push((Tok::Ident(src[start..i].to_string()), start));
            }
            _ => {
                return Err(Error::Expr {
                    field: String::new(),
                    message: format!("unexpected character `{c}` at offset {i}"),
                })
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    vars: &'a [&'a str],
    ops: Vec<Op>,
    src: &'a str,
}

impl<'a> Parser<'a> {
    fn err(&self, message: &str) -> Error {
        Error::Expr {
            field: String::new(),
            message: format!("{message} (in `{}`)", self.src),
        }
    }

    fn offset(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|t| t.1)
            .unwrap_or(self.src.len())
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.0)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).map(|t| t.0.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<()> {
        self.term()?;
        while let Some(t) = self.peek() {
            match t {
                Tok::Plus => {
                    self.pos += 1;
                    self.term()?;
                    self.ops.push(Op::Add);
                }
                Tok::Minus => {
                    self.pos += 1;
                    self.term()?;
                    self.ops.push(Op::Sub);
                }
                _ => break,
            }
        }
        Ok(())
    }

    fn term(&mut self) -> Result<()> {
        self.unary()?;
        while let Some(t) = self.peek() {
            match t {
                Tok::Star => {
                    self.pos += 1;
                    self.unary()?;
                    self.ops.push(Op::Mul);
                }
                Tok::Slash => {
                    self.pos += 1;
                    self.unary()?;
                    self.ops.push(Op::Div);
                }
                _ => break,
            }
        }
        Ok(())
    }

    fn unary(&mut self) -> Result<()> {
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.pos += 1;
            self.unary()?;
            self.ops.push(Op::Neg);
            return Ok(());
        }
        self.power()
    }

    fn power(&mut self) -> Result<()> {
        self.atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.pos += 1;
            // right associative; exponent may carry a unary minus
            self.unary()?;
            self.ops.push(Op::Pow);
        }
        Ok(())
    }

    fn atom(&mut self) -> Result<()> {
        let off = self.offset();
        match self.bump() {
            Some(Tok::Num(v)) => {
                self.ops.push(Op::Push(v));
                Ok(())
            }
            Some(Tok::LParen) => {
                self.expr()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(()),
                    _ => Err(self.err(&format!("missing `)` for `(` before offset {off}"))),
                }
            }
            Some(Tok::Ident(name)) => {
                if matches!(self.peek(), Some(Tok::LParen)) {
                    self.pos += 1;
                    self.expr()?;
                    match self.bump() {
                        Some(Tok::RParen) => {}
                        _ => {
                            return Err(
                                self.err(&format!("missing `)` in call to `{name}` at offset {off}"))
                            )
                        }
                    }
                    match name.as_str() {
                        "exp" => self.ops.push(Op::Exp),
                        "log" => self.ops.push(Op::Log),
                        "sqrt" => self.ops.push(Op::Sqrt),
                        "sin" => self.ops.push(Op::Sin),
                        "cos" => self.ops.push(Op::Cos),
                        _ => {
                            return Err(self.err(&format!(
                                "unknown function `{name}` (supported: exp, log, sqrt, sin, cos)"
                            )))
                        }
                    }
                    Ok(())
                } else if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    self.ops.push(Op::Var(i));
                    Ok(())
                } else {
                    Err(self.err(&format!(
                        "unknown variable `{name}` (expected one of {:?})",
                        self.vars
                    )))
                }
            }
            _ => Err(self.err(&format!("expected a value at offset {off}"))),
        }
    }
}
