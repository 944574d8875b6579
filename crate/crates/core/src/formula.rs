//! Boolean formulas over variables `x1..xm`: AST, parser, evaluation and
//! truth tables.
//!
//! Concrete syntax, loosest binding first:
//!
//! ```text
//! formula := iff
//! iff     := impl ("<->" impl)?
//! impl    := or ("->" impl)?
//! or      := and ("|" and)*
//! and     := unary ("&" unary)*
//! unary   := ("!" | "~") unary | atom
//! atom    := "x" digits | "0" | "1" | "(" formula ")"
//! ```
//!
//! `->` associates to the right. Chained `<->` without parentheses is a
//! syntax error.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    /// 1-based variable index.
    Var(usize),
    Const(bool),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("variable x{index} at byte {pos} is out of range 1..={m}")]
    VarOutOfRange { index: usize, m: usize, pos: usize },
    #[error("assignment has length {got}, formula needs at least {need}")]
    LengthMismatch { got: usize, need: usize },
    #[error("system must have at least one variable and one equation")]
    EmptySystem,
    #[error("equation {equation} references x{index} but m = {m}")]
    SystemVarOutOfRange { equation: usize, index: usize, m: usize },
}

impl Formula {
    pub fn var(index: usize) -> Self {
        Formula::Var(index)
    }

    pub fn constant(value: bool) -> Self {
        Formula::Const(value)
    }

    // Named `negate` so it does not shadow `std::ops::Not::not`.
    pub fn negate(self) -> Self {
        Formula::Not(Box::new(self))
    }

    pub fn and(self, rhs: Formula) -> Self {
        Formula::And(Box::new(self), Box::new(rhs))
    }

    pub fn or(self, rhs: Formula) -> Self {
        Formula::Or(Box::new(self), Box::new(rhs))
    }

    pub fn implies(self, rhs: Formula) -> Self {
        Formula::Implies(Box::new(self), Box::new(rhs))
    }

    pub fn iff(self, rhs: Formula) -> Self {
        Formula::Iff(Box::new(self), Box::new(rhs))
    }

    /// Largest variable index referenced, or 0 for a variable-free formula.
    pub fn max_var(&self) -> usize {
        match self {
            Formula::Var(i) => *i,
            Formula::Const(_) => 0,
            Formula::Not(a) => a.max_var(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.max_var().max(b.max_var())
            }
        }
    }

    /// Truth value at assignment `x`, where `x[k]` is the value of `x{k+1}`.
    pub fn evaluate(&self, x: &[bool]) -> Result<bool, FormulaError> {
        let need = self.max_var();
        if x.len() < need || x.is_empty() {
            return Err(FormulaError::LengthMismatch {
                got: x.len(),
                need: need.max(1),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: &[bool]) -> bool {
        match self {
            Formula::Var(i) => x[i - 1],
            Formula::Const(c) => *c,
            Formula::Not(a) => !a.eval_unchecked(x),
            Formula::And(a, b) => a.eval_unchecked(x) && b.eval_unchecked(x),
            Formula::Or(a, b) => a.eval_unchecked(x) || b.eval_unchecked(x),
            Formula::Implies(a, b) => !a.eval_unchecked(x) || b.eval_unchecked(x),
            Formula::Iff(a, b) => a.eval_unchecked(x) == b.eval_unchecked(x),
        }
    }

    /// Values at `itob(1), ..., itob(2^m)`, i.e. assignments in
    /// lexicographic order with `x1` as the most significant bit.
    pub fn truth_table(&self, m: usize) -> Result<Vec<bool>, FormulaError> {
        if m == 0 || self.max_var() > m {
            return Err(FormulaError::LengthMismatch {
                got: m,
                need: self.max_var().max(1),
            });
        }
        let mut x = vec![false; m];
        Ok((0..1usize << m)
            .map(|code| {
                for (k, bit) in x.iter_mut().enumerate() {
                    *bit = (code >> (m - 1 - k)) & 1 == 1;
                }
                self.eval_unchecked(&x)
            })
            .collect())
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Iff(..) => 1,
            Formula::Implies(..) => 2,
            Formula::Or(..) => 3,
            Formula::And(..) => 4,
            Formula::Not(_) => 5,
            Formula::Var(_) | Formula::Const(_) => 6,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let own = self.precedence();
        if own < min {
            f.write_str("(")?;
        }
        match self {
            Formula::Var(i) => write!(f, "x{i}")?,
            Formula::Const(c) => f.write_str(if *c { "1" } else { "0" })?,
            Formula::Not(a) => {
                f.write_str("!")?;
                a.fmt_prec(f, 5)?;
            }
            Formula::And(a, b) => {
                a.fmt_prec(f, 4)?;
                f.write_str(" & ")?;
                b.fmt_prec(f, 5)?;
            }
            Formula::Or(a, b) => {
                a.fmt_prec(f, 3)?;
                f.write_str(" | ")?;
                b.fmt_prec(f, 4)?;
            }
            Formula::Implies(a, b) => {
                a.fmt_prec(f, 3)?;
                f.write_str(" -> ")?;
                b.fmt_prec(f, 2)?;
            }
            Formula::Iff(a, b) => {
                a.fmt_prec(f, 2)?;
                f.write_str(" <-> ")?;
                b.fmt_prec(f, 2)?;
            }
        }
        if own < min {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Parses `text` into a formula whose variables all lie in `1..=m`.
pub fn parse_formula(text: &str, m: usize) -> Result<Formula, FormulaError> {
    let mut parser = Parser {
        src: text.as_bytes(),
        pos: 0,
        m,
    };
    let formula = parser.iff()?;
    parser.skip_ws();
    if parser.pos < parser.src.len() {
        return Err(parser.error("unexpected trailing input"));
    }
    Ok(formula)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    m: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(token.as_bytes()) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn error(&self, msg: &str) -> FormulaError {
        FormulaError::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn iff(&mut self) -> Result<Formula, FormulaError> {
        let lhs = self.implication()?;
        if self.eat("<->") {
            let rhs = self.implication()?;
            self.skip_ws();
            if self.src[self.pos..].starts_with(b"<->") {
                return Err(self.error("chained '<->' needs parentheses"));
            }
            return Ok(lhs.iff(rhs));
        }
        Ok(lhs)
    }

    fn implication(&mut self) -> Result<Formula, FormulaError> {
        let lhs = self.disjunction()?;
        if self.eat("->") {
            let rhs = self.implication()?;
            return Ok(lhs.implies(rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, FormulaError> {
        let mut acc = self.conjunction()?;
        while self.eat("|") {
            acc = acc.or(self.conjunction()?);
        }
        Ok(acc)
    }

    fn conjunction(&mut self) -> Result<Formula, FormulaError> {
        let mut acc = self.unary()?;
        while self.eat("&") {
            acc = acc.and(self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        if self.eat("!") || self.eat("~") {
            return Ok(self.unary()?.negate());
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Formula, FormulaError> {
        self.skip_ws();
        let start = self.pos;
        match self.src.get(self.pos) {
            Some(b'x') => {
                self.pos += 1;
                let digits_start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                if digits_start == self.pos {
                    return Err(self.error("expected digits after 'x'"));
                }
                // Digits are ASCII so the slice is valid UTF-8.
                let digits = std::str::from_utf8(&self.src[digits_start..self.pos]).unwrap();
                let index: usize = digits.parse().map_err(|_| FormulaError::Syntax {
                    pos: digits_start,
                    msg: "variable index too large".into(),
                })?;
                if index == 0 || index > self.m {
                    return Err(FormulaError::VarOutOfRange {
                        index,
                        m: self.m,
                        pos: start,
                    });
                }
                Ok(Formula::Var(index))
            }
            Some(b'0') => {
                self.pos += 1;
                Ok(Formula::Const(false))
            }
            Some(b'1') => {
                self.pos += 1;
                Ok(Formula::Const(true))
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.iff()?;
                if !self.eat(")") {
                    return Err(self.error("expected ')'"));
                }
                Ok(inner)
            }
            Some(_) => Err(self.error("expected variable, constant or '('")),
            None => Err(self.error("unexpected end of input")),
        }
    }
}

/// A single private equation `formula(x) = rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equation {
    pub formula: Formula,
    pub rhs: bool,
}

/// `n` Boolean equations over `m` shared variables; equation `i` belongs
/// to network node `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BooleanSystem {
    m: usize,
    equations: Vec<Equation>,
}

impl BooleanSystem {
    pub fn new(m: usize, equations: Vec<Equation>) -> Result<Self, FormulaError> {
        if m == 0 || equations.is_empty() {
            return Err(FormulaError::EmptySystem);
        }
        for (i, eq) in equations.iter().enumerate() {
            let index = eq.formula.max_var();
            if index > m {
                return Err(FormulaError::SystemVarOutOfRange {
                    equation: i + 1,
                    index,
                    m,
                });
            }
        }
        Ok(Self { m, equations })
    }

    /// Builds a system from `(formula text, rhs)` pairs.
    pub fn parse<S: AsRef<str>>(m: usize, equations: &[(S, bool)]) -> Result<Self, FormulaError> {
        let equations = equations
            .iter()
            .map(|(text, rhs)| {
                Ok(Equation {
                    formula: parse_formula(text.as_ref(), m)?,
                    rhs: *rhs,
                })
            })
            .collect::<Result<Vec<_>, FormulaError>>()?;
        Self::new(m, equations)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.equations.len()
    }

    pub fn equations(&self) -> &[Equation] {
        &self.equations
    }

    /// True when `x` satisfies every equation.
    pub fn is_solution(&self, x: &[bool]) -> Result<bool, FormulaError> {
        if x.len() != self.m {
            return Err(FormulaError::LengthMismatch {
                got: x.len(),
                need: self.m,
            });
        }
        Ok(self.equations.iter().all(|eq| eq.formula.eval_unchecked(x) == eq.rhs))
    }
}
