//! Complexity expressions carried in an application's `Order` tag.
//!
//! The language is a single-variable arithmetic grammar:
//!
//! ```text
//! Expr    := Term (('+' | '-') Term)*
//! Term    := Unary (('*' | '/') Unary)*
//! Unary   := '-' Unary | Postfix
//! Postfix := Primary '!'*
//! Primary := number | 'N' | 'ln' '(' Expr ')' | 'pow' '(' Expr ',' Expr ')' | '(' Expr ')'
//! ```
//!
//! Evaluating an expression at an input value yields an estimated instruction
//! count for the task. Factorial is defined through the gamma function so
//! non-integer arguments are accepted.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Parse failure, with the byte offset of the offending token.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("order syntax error at offset {position}: {message}")]
pub struct OrderSyntaxError {
    pub position: usize,
    pub message: String,
}

impl OrderSyntaxError {
    fn new(position: usize, message: impl Into<String>) -> Self {
        Self {
            position,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("evaluation domain error: {0}")]
    Domain(String),
    #[error("evaluation overflow: result is not finite")]
    Overflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
        }
    }
}

/// Parsed complexity expression. Call arity is fixed by the variant shapes.
#[derive(Debug, Clone, PartialEq)]
pub enum OrderExpr {
    Literal(f64),
    Var,
    Neg(Box<OrderExpr>),
    Factorial(Box<OrderExpr>),
    Binary {
        op: BinaryOp,
        lhs: Box<OrderExpr>,
        rhs: Box<OrderExpr>,
    },
    Ln(Box<OrderExpr>),
    Pow(Box<OrderExpr>, Box<OrderExpr>),
}

impl OrderExpr {
    /// Parses an `Order` expression.
    pub fn parse(source: &str) -> Result<Self, OrderSyntaxError> {
        let tokens = tokenize(source)?;
        let mut parser = Parser {
            tokens: &tokens,
            pos: 0,
            end: source.len(),
        };
        let expr = parser.expr()?;
        if let Some(tok) = parser.peek() {
            return Err(OrderSyntaxError::new(
                tok.offset,
                format!("unexpected {}", tok.kind.describe()),
            ));
        }
        Ok(expr)
    }

    /// Estimated instruction count at input value `n`.
    ///
    /// `n` must be positive. The result is finite and nonnegative, otherwise
    /// an error is returned.
    pub fn eval(&self, n: f64) -> Result<f64, EvalError> {
        if !(n.is_finite() && n > 0.0) {
            return Err(EvalError::Domain(format!(
                "input value must be positive, got {n}"
            )));
        }
        let value = self.eval_at(n)?;
        if value < 0.0 {
            return Err(EvalError::Domain(format!(
                "negative instruction count {value}"
            )));
        }
        Ok(value)
    }

    fn eval_at(&self, n: f64) -> Result<f64, EvalError> {
        let value = match self {
            OrderExpr::Literal(v) => *v,
            OrderExpr::Var => n,
            OrderExpr::Neg(inner) => -inner.eval_at(n)?,
            OrderExpr::Factorial(inner) => factorial(inner.eval_at(n)?)?,
            OrderExpr::Binary { op, lhs, rhs } => {
                let a = lhs.eval_at(n)?;
                let b = rhs.eval_at(n)?;
                match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::Domain("division by zero".into()));
                        }
                        a / b
                    }
                }
            }
            OrderExpr::Ln(inner) => {
                let x = inner.eval_at(n)?;
                if x <= 0.0 {
                    return Err(EvalError::Domain(format!("ln of non-positive value {x}")));
                }
                x.ln()
            }
            OrderExpr::Pow(base, exp) => {
                let b = base.eval_at(n)?;
                let e = exp.eval_at(n)?;
                let v = b.powf(e);
                if v.is_nan() {
                    return Err(EvalError::Domain(format!("pow({b}, {e}) is undefined")));
                }
                v
            }
        };
        if value.is_nan() {
            Err(EvalError::Domain("result is not a number".into()))
        } else if value.is_infinite() {
            Err(EvalError::Overflow)
        } else {
            Ok(value)
        }
    }
}

/// Γ(x + 1) for x ≥ 0. Integers below the overflow point use the running
/// product; everything else goes through log-gamma.
fn factorial(x: f64) -> Result<f64, EvalError> {
    if x < 0.0 {
        return Err(EvalError::Domain(format!("factorial of negative value {x}")));
    }
    if x.fract() == 0.0 && x <= 170.0 {
        return Ok((2..=x as u32).map(f64::from).product());
    }
    let (log_gamma, _sign) = libm::lgamma_r(x + 1.0);
    let value = log_gamma.exp();
    if value.is_finite() {
        Ok(value)
    } else {
        Err(EvalError::Overflow)
    }
}

impl FromStr for OrderExpr {
    type Err = OrderSyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OrderExpr::parse(s)
    }
}

// Binary and negation nodes are always parenthesized, so the rendering
// re-parses to the same tree.
impl fmt::Display for OrderExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrderExpr::Literal(v) => write!(f, "{v}"),
            OrderExpr::Var => f.write_str("N"),
            OrderExpr::Neg(inner) => write!(f, "(-{inner})"),
            OrderExpr::Factorial(inner) => write!(f, "{inner}!"),
            OrderExpr::Binary { op, lhs, rhs } => write!(f, "({lhs} {} {rhs})", op.symbol()),
            OrderExpr::Ln(inner) => write!(f, "ln({inner})"),
            OrderExpr::Pow(base, exp) => write!(f, "pow({base}, {exp})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64),
    Var,
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Bang,
    LParen,
    RParen,
    Comma,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Number(v) => format!("number {v}"),
            TokenKind::Var => "variable N".into(),
            TokenKind::Ident(name) => format!("identifier '{name}'"),
            TokenKind::Plus => "'+'".into(),
            TokenKind::Minus => "'-'".into(),
            TokenKind::Star => "'*'".into(),
            TokenKind::Slash => "'/'".into(),
            TokenKind::Bang => "'!'".into(),
            TokenKind::LParen => "'('".into(),
            TokenKind::RParen => "')'".into(),
            TokenKind::Comma => "','".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn tokenize(source: &str) -> Result<Vec<Token>, OrderSyntaxError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let kind = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => TokenKind::Plus,
            b'-' => TokenKind::Minus,
            b'*' => TokenKind::Star,
            b'/' => TokenKind::Slash,
            b'!' => TokenKind::Bang,
            b'(' => TokenKind::LParen,
            b')' => TokenKind::RParen,
            b',' => TokenKind::Comma,
            b'0'..=b'9' | b'.' => {
                i = scan_number(bytes, i);
                let text = &source[start..i];
                let value: f64 = text.parse().map_err(|_| {
                    OrderSyntaxError::new(start, format!("malformed number '{text}'"))
                })?;
                if !value.is_finite() {
                    return Err(OrderSyntaxError::new(start, "number out of range"));
                }
                tokens.push(Token {
                    kind: TokenKind::Number(value),
                    offset: start,
                });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let word = &source[start..i];
                let kind = if word == "N" {
                    TokenKind::Var
                } else {
                    TokenKind::Ident(word.to_string())
                };
                tokens.push(Token {
                    kind,
                    offset: start,
                });
                continue;
            }
            _ => {
                let ch = source[start..].chars().next().unwrap_or('?');
                return Err(OrderSyntaxError::new(
                    start,
                    format!("unexpected character '{ch}'"),
                ));
            }
        };
        tokens.push(Token {
            kind,
            offset: start,
        });
        i += 1;
    }
    Ok(tokens)
}

fn scan_number(bytes: &[u8], mut i: usize) -> usize {
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
    i
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_kind(&self) -> Option<&TokenKind> {
        self.peek().map(|t| &t.kind)
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.end, |t| t.offset)
    }

    fn expect(&mut self, kind: TokenKind) -> Result<(), OrderSyntaxError> {
        match self.peek() {
            Some(tok) if tok.kind == kind => {
                self.pos += 1;
                Ok(())
            }
            Some(tok) => Err(OrderSyntaxError::new(
                tok.offset,
                format!("expected {}, found {}", kind.describe(), tok.kind.describe()),
            )),
            None => Err(OrderSyntaxError::new(
                self.end,
                format!("expected {}, found end of input", kind.describe()),
            )),
        }
    }

    fn expr(&mut self) -> Result<OrderExpr, OrderSyntaxError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Plus) => BinaryOp::Add,
                Some(TokenKind::Minus) => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = OrderExpr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
    }

    fn term(&mut self) -> Result<OrderExpr, OrderSyntaxError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Star) => BinaryOp::Mul,
                Some(TokenKind::Slash) => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = OrderExpr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
    }

    fn unary(&mut self) -> Result<OrderExpr, OrderSyntaxError> {
        if self.peek_kind() == Some(&TokenKind::Minus) {
            self.pos += 1;
            return Ok(OrderExpr::Neg(Box::new(self.unary()?)));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<OrderExpr, OrderSyntaxError> {
        let mut expr = self.primary()?;
        while self.peek_kind() == Some(&TokenKind::Bang) {
            self.pos += 1;
            expr = OrderExpr::Factorial(Box::new(expr));
        }
        Ok(expr)
    }

    fn primary(&mut self) -> Result<OrderExpr, OrderSyntaxError> {
        let offset = self.offset();
        let Some(tok) = self.peek() else {
            return Err(OrderSyntaxError::new(offset, "unexpected end of input"));
        };
        match tok.kind.clone() {
            TokenKind::Number(v) => {
                self.pos += 1;
                Ok(OrderExpr::Literal(v))
            }
            TokenKind::Var => {
                self.pos += 1;
                Ok(OrderExpr::Var)
            }
            TokenKind::LParen => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                self.pos += 1;
                let args = self.call_args(&name, offset)?;
                match (name.as_str(), args.len()) {
                    ("ln", 1) => {
                        let mut args = args;
                        Ok(OrderExpr::Ln(Box::new(args.remove(0))))
                    }
                    ("pow", 2) => {
                        let mut args = args.into_iter();
                        let base = args.next().expect("arity checked");
                        let exp = args.next().expect("arity checked");
                        Ok(OrderExpr::Pow(Box::new(base), Box::new(exp)))
                    }
                    ("ln", n) | ("pow", n) => {
                        let expected = if name == "ln" { 1 } else { 2 };
                        Err(OrderSyntaxError::new(
                            offset,
                            format!("{name} takes {expected} argument(s), got {n}"),
                        ))
                    }
                    _ => Err(OrderSyntaxError::new(
                        offset,
                        format!("unknown function '{name}'"),
                    )),
                }
            }
            other => Err(OrderSyntaxError::new(
                offset,
                format!("unexpected {}", other.describe()),
            )),
        }
    }

    fn call_args(&mut self, name: &str, offset: usize) -> Result<Vec<OrderExpr>, OrderSyntaxError> {
        if self.peek_kind() != Some(&TokenKind::LParen) {
            return Err(OrderSyntaxError::new(
                offset,
                format!("unknown identifier '{name}'"),
            ));
        }
        self.pos += 1;
        let mut args = vec![self.expr()?];
        while self.peek_kind() == Some(&TokenKind::Comma) {
            self.pos += 1;
            args.push(self.expr()?);
        }
        self.expect(TokenKind::RParen)?;
        Ok(args)
    }
}
