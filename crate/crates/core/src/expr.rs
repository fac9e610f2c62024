//! A small arithmetic expression language for distance functions `d(x,y)`,
//! self-maps `T(x)` and comparison functions `phi(t)`.
//!
//! Grammar (lowest to highest precedence, all binaries left-associative):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' factor)*
//! factor := '-' factor | atom
//! atom   := number | ident | call | '(' expr ')'
//! call   := ('abs' | 'max' | 'min') '(' args ')' | 'if' '(' expr cmp expr ',' expr ',' expr ')'
//! cmp    := '<' | '<=' | '='
//! ```
//!
//! A minus sign applied directly to a number literal folds into a negative
//! constant, so `-3` is `Const(-3)` while `-(3)` is `Neg(Const(3))`.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown variable `{name}` at offset {offset}")]
    UnknownVariable { name: String, offset: usize },
    #[error("no binding for variable `{0}`")]
    MissingBinding(String),
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Abs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
        }
    }

    fn holds(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Eq => a == b,
        }
    }
}

/// Expression tree. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Const(f64),
    Var(String),
    Unary(UnaryOp, Box<Expression>),
    Binary(BinaryOp, Box<Expression>, Box<Expression>),
    If {
        cmp: CmpOp,
        lhs: Box<Expression>,
        rhs: Box<Expression>,
        then: Box<Expression>,
        otherwise: Box<Expression>,
    },
}

impl Expression {
    /// Parse `source`, accepting only identifiers listed in `variables`.
    pub fn parse(source: &str, variables: &[&str]) -> Result<Expression, ExprError> {
        if source.trim().is_empty() {
            return Err(ExprError::Syntax {
                offset: 0,
                message: "empty expression".into(),
            });
        }
        let mut parser = Parser {
            src: source.as_bytes(),
            pos: 0,
            variables,
        };
        let expr = parser.expr()?;
        parser.skip_ws();
        if parser.pos < parser.src.len() {
            return Err(parser.error("unexpected trailing input"));
        }
        Ok(expr)
    }

    /// Evaluate with the given `(name, value)` bindings.
    pub fn evaluate(&self, bindings: &[(&str, f64)]) -> Result<f64, ExprError> {
        let value = self.eval_inner(bindings)?;
        if value.is_finite() {
            Ok(value)
        } else {
            Err(ExprError::Domain(format!("non-finite result {value}")))
        }
    }

    /// Convenience for single-variable expressions.
    pub fn eval1(&self, name: &str, value: f64) -> Result<f64, ExprError> {
        self.evaluate(&[(name, value)])
    }

    /// Convenience for two-variable expressions.
    pub fn eval2(&self, a: (&str, f64), b: (&str, f64)) -> Result<f64, ExprError> {
        self.evaluate(&[a, b])
    }

    /// Names of all variables referenced by the tree.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expression::Const(_) => {}
            Expression::Var(name) => {
                out.insert(name.clone());
            }
            Expression::Unary(_, a) => a.collect_vars(out),
            Expression::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expression::If {
                lhs,
                rhs,
                then,
                otherwise,
                ..
            } => {
                lhs.collect_vars(out);
                rhs.collect_vars(out);
                then.collect_vars(out);
                otherwise.collect_vars(out);
            }
        }
    }

    fn eval_inner(&self, bindings: &[(&str, f64)]) -> Result<f64, ExprError> {
        Ok(match self {
            Expression::Const(c) => *c,
            Expression::Var(name) => bindings
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| ExprError::MissingBinding(name.clone()))?,
            Expression::Unary(op, a) => {
                let a = a.eval_inner(bindings)?;
                match op {
                    UnaryOp::Neg => -a,
                    UnaryOp::Abs => a.abs(),
                }
            }
            Expression::Binary(op, a, b) => {
                let a = a.eval_inner(bindings)?;
                let b = b.eval_inner(bindings)?;
                match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => {
                        if b == 0.0 {
                            return Err(ExprError::Domain(format!("division of {a} by zero")));
                        }
                        a / b
                    }
                    BinaryOp::Pow => {
                        if a == 0.0 && b < 0.0 {
                            return Err(ExprError::Domain(format!("0 raised to {b}")));
                        }
                        if a < 0.0 && b.fract() != 0.0 {
                            return Err(ExprError::Domain(format!(
                                "negative base {a} with fractional exponent {b}"
                            )));
                        }
                        a.powf(b)
                    }
                    BinaryOp::Max => a.max(b),
                    BinaryOp::Min => a.min(b),
                }
            }
            Expression::If {
                cmp,
                lhs,
                rhs,
                then,
                otherwise,
            } => {
                let l = lhs.eval_inner(bindings)?;
                let r = rhs.eval_inner(bindings)?;
                if cmp.holds(l, r) {
                    then.eval_inner(bindings)?
                } else {
                    otherwise.eval_inner(bindings)?
                }
            }
        })
    }
}

// Printing emits enough parentheses that the parser rebuilds the same tree.
impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expression::Const(c) => {
                if c.is_sign_negative() {
                    write!(f, "(-{})", -c)
                } else {
                    write!(f, "{c}")
                }
            }
            Expression::Var(name) => f.write_str(name),
            Expression::Unary(UnaryOp::Abs, a) => write!(f, "abs({a})"),
            Expression::Unary(UnaryOp::Neg, a) => write!(f, "(-({a}))"),
            Expression::Binary(BinaryOp::Max, a, b) => write!(f, "max({a}, {b})"),
            Expression::Binary(BinaryOp::Min, a, b) => write!(f, "min({a}, {b})"),
            Expression::Binary(op, a, b) => {
                let sym = match op {
                    BinaryOp::Add => "+",
                    BinaryOp::Sub => "-",
                    BinaryOp::Mul => "*",
                    BinaryOp::Div => "/",
                    BinaryOp::Pow => "^",
                    BinaryOp::Max | BinaryOp::Min => unreachable!(),
                };
                write!(f, "({a} {sym} {b})")
            }
            Expression::If {
                cmp,
                lhs,
                rhs,
                then,
                otherwise,
            } => write!(
                f,
                "if({lhs} {} {rhs}, {then}, {otherwise})",
                cmp.symbol()
            ),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    variables: &'a [&'a str],
}

impl<'a> Parser<'a> {
    fn error(&self, message: &str) -> ExprError {
        ExprError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expression, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinaryOp::Add,
                Some(b'-') => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expression::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expression, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinaryOp::Mul,
                Some(b'/') => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expression::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expression, ExprError> {
        if self.eat(b'-') {
            if let Some(c) = self.literal_after_minus()? {
                return self.power_tail(c);
            }
            let inner = self.unary()?;
            return Ok(Expression::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        let base = self.atom()?;
        self.power_tail(base)
    }

    fn factor(&mut self) -> Result<Expression, ExprError> {
        if self.eat(b'-') {
            if let Some(c) = self.literal_after_minus()? {
                return Ok(c);
            }
            let inner = self.factor()?;
            return Ok(Expression::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        self.atom()
    }

    /// After a consumed `-`: if a number literal follows, fold it.
    fn literal_after_minus(&mut self) -> Result<Option<Expression>, ExprError> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let v = self.number()?;
                Ok(Some(Expression::Const(-v)))
            }
            _ => Ok(None),
        }
    }

    fn power_tail(&mut self, mut base: Expression) -> Result<Expression, ExprError> {
        while self.eat(b'^') {
            let exp = self.factor()?;
            base = Expression::Binary(BinaryOp::Pow, Box::new(base), Box::new(exp));
        }
        Ok(base)
    }

    fn number(&mut self) -> Result<f64, ExprError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        text.parse::<f64>().map_err(|_| ExprError::Syntax {
            offset: start,
            message: format!("malformed number `{text}`"),
        })
    }

    fn atom(&mut self) -> Result<Expression, ExprError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => Ok(Expression::Const(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii ident");
                match name {
                    "abs" => {
                        let mut args = self.call_args(1)?;
                        Ok(Expression::Unary(UnaryOp::Abs, Box::new(args.remove(0))))
                    }
                    "max" | "min" => {
                        let mut args = self.call_args(2)?;
                        let b = args.pop().expect("two args");
                        let a = args.pop().expect("two args");
                        let op = if name == "max" {
                            BinaryOp::Max
                        } else {
                            BinaryOp::Min
                        };
                        Ok(Expression::Binary(op, Box::new(a), Box::new(b)))
                    }
                    "if" => self.if_call(),
                    _ if self.variables.contains(&name) => Ok(Expression::Var(name.to_string())),
                    _ => Err(ExprError::UnknownVariable {
                        name: name.to_string(),
                        offset: start,
                    }),
                }
            }
            Some(c) => Err(self.error(&format!("unexpected character `{}`", c as char))),
        }
    }

    fn call_args(&mut self, arity: usize) -> Result<Vec<Expression>, ExprError> {
        self.expect(b'(')?;
        let mut args = Vec::with_capacity(arity);
        for i in 0..arity {
            if i > 0 {
                self.expect(b',')?;
            }
            args.push(self.expr()?);
        }
        self.expect(b')')?;
        Ok(args)
    }

    fn if_call(&mut self) -> Result<Expression, ExprError> {
        self.expect(b'(')?;
        let lhs = self.expr()?;
        let cmp = match self.peek() {
            Some(b'<') => {
                self.pos += 1;
                if self.src.get(self.pos) == Some(&b'=') {
                    self.pos += 1;
                    CmpOp::Le
                } else {
                    CmpOp::Lt
                }
            }
            Some(b'=') => {
                self.pos += 1;
                CmpOp::Eq
            }
            _ => return Err(self.error("expected comparison `<`, `<=` or `=`")),
        };
        let rhs = self.expr()?;
        self.expect(b',')?;
        let then = self.expr()?;
        self.expect(b',')?;
        let otherwise = self.expr()?;
        self.expect(b')')?;
        Ok(Expression::If {
            cmp,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
            then: Box::new(then),
            otherwise: Box::new(otherwise),
        })
    }
}
