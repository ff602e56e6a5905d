//! Boxes `Ω = I_1 × … × I_r ⊆ [0,1)^r` with exact rational endpoints and
//! their dilations `pΩ`. Every interval is half-open, `[α, β)`.

use num_rational::Ratio;
use num_traits::CheckedMul;

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

/// `c · n / d` rounded up, for `d > 0`.
fn ceil_scaled(c: u64, r: &Rational) -> i128 {
    let num = c as i128 * *r.numer() as i128;
    let den = *r.denom() as i128;
    num.div_euclid(den) + (num.rem_euclid(den) != 0) as i128
}

/// Parses `"num/den"` or a bare integer into a reduced rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let text = text.trim();
    let bad = || Error::Region(format!("malformed rational '{text}'"));
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (
            n.trim().parse::<i64>().map_err(|_| bad())?,
            d.trim().parse::<i64>().map_err(|_| bad())?,
        ),
        None => (text.parse::<i64>().map_err(|_| bad())?, 1),
    };
    if den == 0 {
        return Err(Error::Region(format!("zero denominator in '{text}'")));
    }
    Ok(Rational::new(num, den))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    lo: Rational,
    hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self> {
        let zero = Rational::from_integer(0);
        let one = Rational::from_integer(1);
        if lo < zero || hi > one || lo > hi {
            return Err(Error::Region(format!(
                "interval [{lo}, {hi}) must satisfy 0 <= lo <= hi <= 1"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn unit() -> Self {
        Self {
            lo: Rational::from_integer(0),
            hi: Rational::from_integer(1),
        }
    }

    pub fn parse(lo: &str, hi: &str) -> Result<Self> {
        Self::new(parse_rational(lo)?, parse_rational(hi)?)
    }

    pub fn lo(&self) -> Rational {
        self.lo
    }

    pub fn hi(&self) -> Rational {
        self.hi
    }

    pub fn length(&self) -> Rational {
        self.hi - self.lo
    }

    /// Integers `m ∈ [0, p-1]` with `α ≤ m/p < β`, as an inclusive range;
    /// `None` when empty.
    pub fn integer_range(&self, p: u64) -> Option<(u64, u64)> {
        let first = ceil_scaled(p, &self.lo).max(0);
        let last = (ceil_scaled(p, &self.hi) - 1).min(p as i128 - 1);
        (first <= last).then_some((first as u64, last as u64))
    }

    /// Exact membership `α ≤ m/p < β` by cross-multiplication.
    pub fn contains_scaled(&self, m: u64, p: u64) -> bool {
        let m = m as i128;
        let p = p as i128;
        let lo_ok = *self.lo.numer() as i128 * p <= m * *self.lo.denom() as i128;
        let hi_ok = m * (*self.hi.denom() as i128) < *self.hi.numer() as i128 * p;
        lo_ok && hi_ok
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoxRegion {
    intervals: Vec<Interval>,
}

impl BoxRegion {
    pub fn new(intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::Region("a box needs at least one interval".into()));
        }
        Ok(Self { intervals })
    }

    /// `[0,1)^r`.
    pub fn unit(r: usize) -> Self {
        Self {
            intervals: vec![Interval::unit(); r],
        }
    }

    /// Parses `[["num/den", "num/den"], …]`-style endpoint pairs.
    pub fn parse<S: AsRef<str>>(pairs: &[[S; 2]]) -> Result<Self> {
        let intervals = pairs
            .iter()
            .map(|[lo, hi]| Interval::parse(lo.as_ref(), hi.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(intervals)
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_unit(&self) -> bool {
        self.intervals.iter().all(|i| *i == Interval::unit())
    }

    pub fn contains(&self, x: &[u64], p: u64) -> Result<bool> {
        if x.len() != self.intervals.len() {
            return Err(Error::DimensionMismatch {
                expected: self.intervals.len(),
                found: x.len(),
            });
        }
        Ok(self
            .intervals
            .iter()
            .zip(x)
            .all(|(i, &xj)| i.contains_scaled(xj, p)))
    }

    pub fn volume(&self) -> Result<Rational> {
        self.intervals
            .iter()
            .try_fold(Rational::from_integer(1), |acc, i| {
                acc.checked_mul(&i.length())
                    .ok_or_else(|| Error::Overflow("box volume".into()))
            })
    }

    pub fn volume_f64(&self) -> Result<f64> {
        let v = self.volume()?;
        Ok(*v.numer() as f64 / *v.denom() as f64)
    }

    /// Number of lattice points of `pΩ` inside `[0, p-1]^r`, saturating at
    /// `u128::MAX`.
    pub fn lattice_count(&self, p: u64) -> u128 {
        self.intervals
            .iter()
            .map(|i| i.integer_range(p).map_or(0, |(a, b)| (b - a + 1) as u128))
            .fold(1u128, |acc, n| acc.saturating_mul(n))
    }
}

/// `#{m ∈ [0, p-1] : m ∈ pI, m ≡ b (mod a)}`.
pub fn progression_count(interval: &Interval, p: u64, a: u64, b: u64) -> Result<u64> {
    if a == 0 {
        return Err(Error::Domain("progression modulus must be positive".into()));
    }
    if b >= a {
        return Err(Error::Domain(format!("residue {b} not reduced modulo {a}")));
    }
    Ok(match interval.integer_range(p) {
        None => 0,
        Some((lo, hi)) => count_in_range(lo, hi, a, b),
    })
}

/// Integers `m ∈ [lo, hi]` with `m ≡ b (mod a)`.
pub(crate) fn count_in_range(lo: u64, hi: u64, a: u64, b: u64) -> u64 {
    let (lo, hi, a, b) = (lo as i128, hi as i128, a as i128, b as i128);
    ((hi - b).div_euclid(a) - (lo - 1 - b).div_euclid(a)) as u64
}
