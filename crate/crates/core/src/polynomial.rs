//! Sparse multivariate polynomials over the integers, parsed from text and
//! evaluated modulo a prime.
//!
//! The accepted grammar is
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary ('*' unary)*
//! unary  := ('+' | '-') unary | power
//! power  := atom ('^' integer)?
//! atom   := integer | 'x' index | '(' expr ')'
//! ```
//!
//! with variables `x1 … xr`. Whitespace is ignored.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Largest residue modulus accepted by the modular routines. Products of two
/// reduced residues then fit in a `u64`.
pub const MAX_MODULUS: u64 = 1 << 31;

const MAX_EXPONENT: u64 = 1024;

pub(crate) fn check_modulus(p: u64) -> Result<()> {
    if !(2..MAX_MODULUS).contains(&p) {
        return Err(Error::Domain(format!(
            "modulus {p} outside the supported range [2, 2^31)"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    pub coefficient: i64,
    pub exponents: Vec<u32>,
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }
}

/// A polynomial in `nvars` variables. Terms have distinct exponent vectors,
/// nonzero coefficients, and are kept in descending graded-lex order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Polynomial {
    nvars: usize,
    terms: Vec<Monomial>,
}

fn graded_key(exps: &[u32]) -> (u32, Vec<u32>) {
    (exps.iter().sum(), exps.to_vec())
}

impl Polynomial {
    /// Builds a canonical polynomial from arbitrary (coefficient, exponents)
    /// pairs, merging like terms and dropping zeros.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, Vec<u32>)>,
    {
        let mut map: BTreeMap<Vec<u32>, i64> = BTreeMap::new();
        for (c, e) in terms {
            if e.len() != nvars {
                return Err(Error::DimensionMismatch {
                    expected: nvars,
                    found: e.len(),
                });
            }
            let slot = map.entry(e).or_insert(0);
            *slot = slot
                .checked_add(c)
                .ok_or_else(|| Error::Overflow("polynomial coefficient".into()))?;
        }
        Ok(Self::from_map(nvars, map))
    }

    fn from_map(nvars: usize, map: BTreeMap<Vec<u32>, i64>) -> Self {
        let mut terms: Vec<Monomial> = map
            .into_iter()
            .filter(|(_, c)| *c != 0)
            .map(|(exponents, coefficient)| Monomial {
                coefficient,
                exponents,
            })
            .collect();
        terms.sort_by(|a, b| graded_key(&b.exponents).cmp(&graded_key(&a.exponents)));
        Self { nvars, terms }
    }

    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: Vec::new(),
        }
    }

    pub fn parse(text: &str, nvars: usize) -> Result<Self> {
        let mut parser = Parser {
            src: text.as_bytes(),
            pos: 0,
            nvars,
        };
        let poly = parser.expr()?;
        parser.skip_ws();
        if parser.pos < parser.src.len() {
            return Err(parser.error("unexpected trailing input"));
        }
        Ok(poly.into_polynomial(nvars))
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Degree in variable `var` (0-based).
    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms
            .iter()
            .map(|t| t.exponents[var])
            .max()
            .unwrap_or(0)
    }

    /// The constant term, when the polynomial has no other terms.
    pub fn as_constant(&self) -> Option<i64> {
        match self.terms.as_slice() {
            [] => Some(0),
            [t] if t.degree() == 0 => Some(t.coefficient),
            _ => None,
        }
    }

    /// `self - c`.
    pub fn minus_constant(&self, c: i64) -> Result<Self> {
        let zero = vec![0u32; self.nvars];
        let neg = c
            .checked_neg()
            .ok_or_else(|| Error::Overflow("polynomial coefficient".into()))?;
        Self::from_terms(
            self.nvars,
            self.terms
                .iter()
                .map(|t| (t.coefficient, t.exponents.clone()))
                .chain(std::iter::once((neg, zero))),
        )
    }

    /// `f(x) mod p`, reducing coefficients before accumulation.
    pub fn eval_mod(&self, x: &[u64], p: u64) -> Result<u64> {
        check_modulus(p)?;
        if x.len() != self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                found: x.len(),
            });
        }
        let xs: Vec<u64> = x.iter().map(|v| v % p).collect();
        let mut acc = 0u64;
        for t in &self.terms {
            let mut v = reduce(t.coefficient, p);
            for (xi, &e) in xs.iter().zip(&t.exponents) {
                if e > 0 {
                    v = v * crate::numtheory::pow_mod(*xi, e as u64, p) % p;
                }
            }
            acc = (acc + v) % p;
        }
        Ok(acc)
    }

    /// Substitutes the first `prefix.len()` variables and reduces the
    /// coefficients into `[0, p)`. The result lives in the remaining
    /// `nvars - prefix.len()` variables.
    pub fn partial_fix(&self, prefix: &[u64], p: u64) -> Result<Self> {
        check_modulus(p)?;
        if prefix.len() >= self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars - 1,
                found: prefix.len(),
            });
        }
        let k = prefix.len();
        let mut map: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
        for t in &self.terms {
            let mut v = reduce(t.coefficient, p);
            for (xi, &e) in prefix.iter().zip(&t.exponents[..k]) {
                v = v * crate::numtheory::pow_mod(*xi % p, e as u64, p) % p;
            }
            let slot = map.entry(t.exponents[k..].to_vec()).or_insert(0);
            *slot = (*slot + v) % p;
        }
        // Residues are below 2^31 so the cast is lossless.
        let map = map.into_iter().map(|(e, c)| (e, c as i64)).collect();
        Ok(Self::from_map(self.nvars - k, map))
    }
}

pub(crate) fn reduce(c: i64, p: u64) -> u64 {
    c.rem_euclid(p as i64) as u64
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            let negative = t.coefficient < 0;
            let magnitude = t.coefficient.unsigned_abs();
            match (i, negative) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let factors: Vec<String> = t
                .exponents
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(j, &e)| {
                    if e == 1 {
                        format!("x{}", j + 1)
                    } else {
                        format!("x{}^{}", j + 1, e)
                    }
                })
                .collect();
            if factors.is_empty() {
                write!(f, "{magnitude}")?;
            } else {
                if magnitude != 1 {
                    write!(f, "{magnitude}*")?;
                }
                write!(f, "{}", factors.join("*"))?;
            }
        }
        Ok(())
    }
}

/// Intermediate form used while parsing.
#[derive(Debug, Clone)]
struct Sparse(BTreeMap<Vec<u32>, i64>);

impl Sparse {
    fn constant(nvars: usize, c: i64) -> Self {
        let mut m = BTreeMap::new();
        if c != 0 {
            m.insert(vec![0; nvars], c);
        }
        Sparse(m)
    }

    fn variable(nvars: usize, j: usize) -> Self {
        let mut e = vec![0; nvars];
        e[j] = 1;
        let mut m = BTreeMap::new();
        m.insert(e, 1);
        Sparse(m)
    }

    fn add(mut self, other: &Sparse, sign: i64) -> Option<Self> {
        for (e, c) in &other.0 {
            let slot = self.0.entry(e.clone()).or_insert(0);
            *slot = slot.checked_add(c.checked_mul(sign)?)?;
        }
        self.0.retain(|_, c| *c != 0);
        Some(self)
    }

    fn mul(&self, other: &Sparse) -> Option<Self> {
        let mut out: BTreeMap<Vec<u32>, i64> = BTreeMap::new();
        for (ea, ca) in &self.0 {
            for (eb, cb) in &other.0 {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                let slot = out.entry(e).or_insert(0);
                *slot = slot.checked_add(ca.checked_mul(*cb)?)?;
            }
        }
        out.retain(|_, c| *c != 0);
        Some(Sparse(out))
    }

    fn pow(&self, nvars: usize, mut exp: u64) -> Option<Self> {
        let mut acc = Sparse::constant(nvars, 1);
        let mut base = self.clone();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            exp >>= 1;
            if exp > 0 {
                base = base.mul(&base)?;
            }
        }
        Some(acc)
    }

    fn into_polynomial(self, nvars: usize) -> Polynomial {
        Polynomial::from_map(nvars, self.0)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    nvars: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::Parse {
            position: self.pos,
            message: message.to_string(),
        }
    }

    fn overflow(&self) -> Error {
        self.error("coefficient overflow")
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

    fn integer(&mut self) -> Result<u64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an integer"));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        digits.parse::<u64>().map_err(|_| Error::Parse {
            position: start,
            message: "integer literal too large".into(),
        })
    }

    fn expr(&mut self) -> Result<Sparse> {
        let mut acc = self.term()?;
        loop {
            let sign = match self.peek() {
                Some(b'+') => 1,
                Some(b'-') => -1,
                _ => return Ok(acc),
            };
            self.pos += 1;
            let rhs = self.term()?;
            acc = acc.add(&rhs, sign).ok_or_else(|| self.overflow())?;
        }
    }

    fn term(&mut self) -> Result<Sparse> {
        let mut acc = self.unary()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            let rhs = self.unary()?;
            acc = acc.mul(&rhs).ok_or_else(|| self.overflow())?;
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Sparse> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                let inner = self.unary()?;
                Sparse::constant(self.nvars, 0)
                    .add(&inner, -1)
                    .ok_or_else(|| self.overflow())
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Sparse> {
        let base = self.atom()?;
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        if self.peek() == Some(b'-') {
            return Err(self.error("negative exponent"));
        }
        let exp_pos = self.pos;
        let exp = self.integer()?;
        if exp > MAX_EXPONENT {
            return Err(Error::Parse {
                position: exp_pos,
                message: format!("exponent {exp} exceeds the limit {MAX_EXPONENT}"),
            });
        }
        base.pow(self.nvars, exp).ok_or_else(|| self.overflow())
    }

    fn atom(&mut self) -> Result<Sparse> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(b'x') => {
                let var_pos = self.pos;
                self.pos += 1;
                if !matches!(self.src.get(self.pos), Some(c) if c.is_ascii_digit()) {
                    return Err(self.error("expected a variable index after 'x'"));
                }
                let idx = self.integer()?;
                if idx == 0 || idx > self.nvars as u64 {
                    return Err(Error::Parse {
                        position: var_pos,
                        message: format!(
                            "variable x{idx} outside x1..x{}",
                            self.nvars
                        ),
                    });
                }
                Ok(Sparse::variable(self.nvars, idx as usize - 1))
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                let v = self.integer()?;
                let v = i64::try_from(v).map_err(|_| Error::Parse {
                    position: start,
                    message: "integer literal too large".into(),
                })?;
                Ok(Sparse::constant(self.nvars, v))
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }
}
