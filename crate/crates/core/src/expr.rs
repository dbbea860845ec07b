//! Arithmetic expressions for models written inline in a scenario file.
//!
//! Grammar: numbers, named variables, `+ - * / ^`, unary minus, parentheses
//! and the one-argument functions `sin cos tan asin acos atan sinh cosh tanh
//! exp ln log sqrt abs`. `^` is right-associative and binds tighter than
//! unary minus (`-x^2 = -(x^2)`). Constants `pi` and `e` are predefined.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("unexpected character `{ch}` at offset {pos} in `{src}`")]
    UnexpectedChar { src: String, ch: char, pos: usize },
    #[error("unexpected end of expression `{0}`")]
    UnexpectedEnd(String),
    #[error("unexpected token at offset {pos} in `{src}`")]
    UnexpectedToken { src: String, pos: usize },
    #[error("unknown variable `{name}` in `{src}`")]
    UnknownVariable { src: String, name: String },
    #[error("unknown function `{name}` in `{src}`")]
    UnknownFunction { src: String, name: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Sin,
    Cos,
    Tan,
    Asin,
    Acos,
    Atan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "asin" => Func::Asin,
            "acos" => Func::Acos,
            "atan" => Func::Atan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "exp" => Func::Exp,
            "ln" | "log" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Asin => x.asin(),
            Func::Acos => x.acos(),
            Func::Atan => x.atan(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Tanh => x.tanh(),
            Func::Exp => x.exp(),
            Func::Ln => x.ln(),
            Func::Sqrt => x.sqrt(),
            Func::Abs => x.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn eval(&self, vars: &[f64]) -> f64 {
        match self {
            Node::Const(c) => *c,
            Node::Var(i) => vars[*i],
            Node::Neg(a) => -a.eval(vars),
            Node::Add(a, b) => a.eval(vars) + b.eval(vars),
            Node::Sub(a, b) => a.eval(vars) - b.eval(vars),
            Node::Mul(a, b) => a.eval(vars) * b.eval(vars),
            Node::Div(a, b) => a.eval(vars) / b.eval(vars),
            Node::Pow(a, b) => {
                let base = a.eval(vars);
                match **b {
                    Node::Const(c) if c.fract() == 0.0 && c.abs() < 64.0 => base.powi(c as i32),
                    _ => base.powf(b.eval(vars)),
                }
            }
            Node::Call(f, a) => f.apply(a.eval(vars)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<(usize, Token)>, ExprError> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, ch) = chars[i];
        if ch.is_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                i += 1;
            }
            // exponent part
            if i < chars.len() && (chars[i].1 == 'e' || chars[i].1 == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j].1 == '+' || chars[j].1 == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].1.is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].1.is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let end = chars.get(i).map_or(src.len(), |c| c.0);
            let text = &src[chars[start].0..end];
            let value = text
                .parse::<f64>()
                .map_err(|_| ExprError::UnexpectedChar { src: src.into(), ch, pos })?;
            out.push((pos, Token::Num(value)));
        } else if ch.is_ascii_alphabetic() || ch == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            let end = chars.get(i).map_or(src.len(), |c| c.0);
            out.push((pos, Token::Ident(src[chars[start].0..end].to_string())));
        } else {
            let tok = match ch {
                '+' | '-' | '*' | '/' | '^' => Token::Op(ch),
                '(' => Token::LParen,
                ')' => Token::RParen,
                _ => return Err(ExprError::UnexpectedChar { src: src.into(), ch, pos }),
            };
            out.push((pos, tok));
            i += 1;
        }
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<(usize, Token)>,
    at: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.at).map(|t| &t.1)
    }

    fn unexpected(&self) -> ExprError {
        match self.tokens.get(self.at) {
            Some((pos, _)) => ExprError::UnexpectedToken { src: self.src.into(), pos: *pos },
            None => ExprError::UnexpectedEnd(self.src.into()),
        }
    }

    fn expression(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        while let Some(Token::Op(op @ ('+' | '-'))) = self.peek() {
            let op = *op;
            self.at += 1;
            let rhs = self.term()?;
            lhs = if op == '+' { Node::Add(lhs.into(), rhs.into()) } else { Node::Sub(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(op @ ('*' | '/'))) = self.peek() {
            let op = *op;
            self.at += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' { Node::Mul(lhs.into(), rhs.into()) } else { Node::Div(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        match self.peek() {
            Some(Token::Op('-')) => {
                self.at += 1;
                Ok(Node::Neg(self.unary()?.into()))
            }
            Some(Token::Op('+')) => {
                self.at += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if let Some(Token::Op('^')) = self.peek() {
            self.at += 1;
            let exponent = self.unary()?;
            return Ok(Node::Pow(base.into(), exponent.into()));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        let Some((_, tok)) = self.tokens.get(self.at).cloned() else {
            return Err(ExprError::UnexpectedEnd(self.src.into()));
        };
        self.at += 1;
        match tok {
            Token::Num(v) => Ok(Node::Const(v)),
            Token::LParen => {
                let inner = self.expression()?;
                match self.peek() {
                    Some(Token::RParen) => {
                        self.at += 1;
                        Ok(inner)
                    }
                    _ => Err(self.unexpected()),
                }
            }
            Token::Ident(name) => {
                if let Some(Token::LParen) = self.peek() {
                    let func = Func::from_name(&name).ok_or_else(|| ExprError::UnknownFunction {
                        src: self.src.into(),
                        name: name.clone(),
                    })?;
                    self.at += 1;
                    let arg = self.expression()?;
                    match self.peek() {
                        Some(Token::RParen) => self.at += 1,
                        _ => return Err(self.unexpected()),
                    }
                    return Ok(Node::Call(func, arg.into()));
                }
                if let Some(slot) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Node::Var(slot));
                }
                match name.as_str() {
                    "pi" => Ok(Node::Const(std::f64::consts::PI)),
                    "e" => Ok(Node::Const(std::f64::consts::E)),
                    _ => Err(ExprError::UnknownVariable { src: self.src.into(), name }),
                }
            }
            _ => {
                self.at -= 1;
                Err(self.unexpected())
            }
        }
    }
}

/// A compiled expression over a fixed, ordered variable list.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    /// Compile `src`; `vars` fixes the slot order expected by [`Expr::eval`].
    pub fn compile(src: &str, vars: &[&str]) -> Result<Self, ExprError> {
        let tokens = tokenize(src)?;
        let mut parser = Parser { src, tokens, at: 0, vars };
        let root = parser.expression()?;
        if parser.at != parser.tokens.len() {
            return Err(parser.unexpected());
        }
        Ok(Expr { source: src.to_string(), root })
    }

    pub fn eval(&self, vars: &[f64]) -> f64 {
        self.root.eval(vars)
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}
