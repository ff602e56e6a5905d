//! Complete exponential sums over `V(F_p)`, incomplete sums over
//! progressions in an interval, and the bounds they are checked against.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numtheory::gcd;
use crate::region::{count_in_range, Interval};
use crate::variety::{Enumerator, PointFilter, PointStream, VarietySpec};

use std::f64::consts::{PI, TAU};

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.compensation);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct ComplexSum {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl ComplexSum {
    fn add(&mut self, (re, im): (f64, f64)) {
        self.re.add(re);
        self.im.add(im);
    }

    fn merge(&mut self, other: &ComplexSum) {
        self.re.merge(&other.re);
        self.im.merge(&other.im);
    }

    fn value(&self) -> (f64, f64) {
        (self.re.value(), self.im.value())
    }
}

/// `e_p(k) = exp(2πik/p)` for `k ∈ [0, p)`.
#[derive(Debug, Clone)]
pub struct RootTable {
    p: u64,
    roots: Vec<(f64, f64)>,
}

impl RootTable {
    pub fn new(p: u64) -> Self {
        let roots = (0..p)
            .map(|k| {
                let (s, c) = (TAU * k as f64 / p as f64).sin_cos();
                (c, s)
            })
            .collect();
        Self { p, roots }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// `e_p(k)` for any residue `k` (reduced internally).
    pub fn at(&self, k: u64) -> (f64, f64) {
        self.roots[(k % self.p) as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Bombieri,
    Katz,
    WeilKloosterman,
    /// `|S(0)| <= #V`.
    Trivial,
}

impl BoundKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::Bombieri => "bombieri",
            BoundKind::Katz => "katz",
            BoundKind::WeilKloosterman => "weil-kloosterman",
            BoundKind::Trivial => "trivial",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpSumRecord {
    pub p: u64,
    pub u: Vec<u64>,
    pub re: f64,
    pub im: f64,
    pub magnitude: f64,
    pub bound: f64,
    /// `magnitude / bound`.
    pub ratio: f64,
    pub bound_kind: BoundKind,
}

impl ExpSumRecord {
    fn new(p: u64, u: Vec<u64>, (re, im): (f64, f64), bound: f64, bound_kind: BoundKind) -> Self {
        let magnitude = re.hypot(im);
        let ratio = if bound > 0.0 { magnitude / bound } else { 0.0 };
        Self {
            p,
            u,
            re,
            im,
            magnitude,
            bound,
            ratio,
            bound_kind,
        }
    }

    pub fn u_joined(&self) -> String {
        self.u
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// `(4d+9)^{n+r} p^{n-1/2}`.
pub fn bombieri_bound(variety: &VarietySpec, p: u64) -> f64 {
    let (n, r, d) = shape(variety);
    (4.0 * d + 9.0).powf(n + r) * (p as f64).powf(n - 0.5)
}

/// `(4d+9)^{n+r} p^{(n+1+δ)/2}`.
pub fn katz_bound(variety: &VarietySpec, p: u64, delta: i32) -> f64 {
    let (n, r, d) = shape(variety);
    (4.0 * d + 9.0).powf(n + r) * (p as f64).powf((n + 1.0 + delta as f64) / 2.0)
}

/// `2 sqrt(p)`, Weil's bound for Kloosterman sums on `xy = 1`.
pub fn kloosterman_bound(p: u64) -> f64 {
    2.0 * (p as f64).sqrt()
}

fn shape(variety: &VarietySpec) -> (f64, f64, f64) {
    (
        variety.dim() as f64,
        variety.ambient_dim() as f64,
        variety.degree() as f64,
    )
}

fn reduce_frequency(variety: &VarietySpec, p: u64, u: &[u64]) -> Result<Vec<u64>> {
    if u.len() != variety.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: variety.ambient_dim(),
            found: u.len(),
        });
    }
    Ok(u.iter().map(|x| x % p).collect())
}

fn dot_mod(u: &[u64], x: &[u64], p: u64) -> u64 {
    u.iter().zip(x).fold(0, |acc, (a, b)| (acc + a * b) % p)
}

/// `S(u) = Σ_{x ∈ V(F_p)} e_p(u·x)` against the Bombieri bound, or the
/// trivial bound `#V` at `u = 0`.
pub fn complete_variety_sum(variety: &VarietySpec, p: u64, u: &[u64]) -> Result<ExpSumRecord> {
    let u = reduce_frequency(variety, p, u)?;
    let enumerator = Enumerator::new(variety, p)?;
    let table = RootTable::new(p);
    let partials = enumerator.map_stripes(
        &PointFilter::none(),
        || (ComplexSum::default(), 0u64),
        |(acc, count), x| {
            acc.add(table.at(dot_mod(&u, x, p)));
            *count += 1;
        },
    )?;
    let mut total = ComplexSum::default();
    let mut count = 0;
    for (part, c) in &partials {
        total.merge(part);
        count += c;
    }
    if u.iter().all(|&x| x == 0) {
        // Every summand is exactly 1.
        return Ok(ExpSumRecord::new(
            p,
            u,
            (count as f64, 0.0),
            count as f64,
            BoundKind::Trivial,
        ));
    }
    let bound = bombieri_bound(variety, p);
    Ok(ExpSumRecord::new(p, u, total.value(), bound, BoundKind::Bombieri))
}

/// `S(u)` against the Katz bound with an asserted singular-locus dimension
/// `delta >= -1`. A ratio above 1 falsifies the assertion (or the
/// dimension hypothesis on the sections at infinity); it never confirms it.
pub fn katz_bound_check(
    variety: &VarietySpec,
    p: u64,
    u: &[u64],
    delta: i32,
) -> Result<ExpSumRecord> {
    let engine = ExpSumEngine::new(variety, p)?;
    engine.katz(u, delta)
}

/// Points of `V(F_p)` collected once, for sweeps over many frequencies.
/// Each sum runs over the points in lexicographic order on one thread, so
/// results are bit-identical across runs and thread counts.
#[derive(Debug, Clone)]
pub struct ExpSumEngine<'v> {
    variety: &'v VarietySpec,
    p: u64,
    points: PointStream,
    table: RootTable,
}

impl<'v> ExpSumEngine<'v> {
    pub fn new(variety: &'v VarietySpec, p: u64) -> Result<Self> {
        let points = Enumerator::new(variety, p)?.points(&PointFilter::none())?;
        Ok(Self {
            variety,
            p,
            points,
            table: RootTable::new(p),
        })
    }

    pub fn point_count(&self) -> u64 {
        self.points.len() as u64
    }

    pub fn points(&self) -> &PointStream {
        &self.points
    }

    /// Raw `S(u)`.
    pub fn value(&self, u: &[u64]) -> Result<(f64, f64)> {
        let u = reduce_frequency(self.variety, self.p, u)?;
        Ok(self.value_reduced(&u))
    }

    fn value_reduced(&self, u: &[u64]) -> (f64, f64) {
        let mut acc = ComplexSum::default();
        for x in self.points.iter() {
            acc.add(self.table.at(dot_mod(u, x, self.p)));
        }
        acc.value()
    }

    pub fn record(&self, u: &[u64], kind: BoundKind, delta: Option<i32>) -> Result<ExpSumRecord> {
        let u = reduce_frequency(self.variety, self.p, u)?;
        let zero = u.iter().all(|&x| x == 0);
        if zero {
            if kind == BoundKind::Katz {
                return Err(Error::Precondition(
                    "the Katz bound needs a nonzero frequency".into(),
                ));
            }
            let n = self.point_count() as f64;
            return Ok(ExpSumRecord::new(self.p, u, (n, 0.0), n, BoundKind::Trivial));
        }
        let bound = match kind {
            BoundKind::Bombieri => bombieri_bound(self.variety, self.p),
            BoundKind::Katz => {
                let delta = delta.ok_or_else(|| {
                    Error::Precondition("the Katz bound needs an asserted delta".into())
                })?;
                self.check_katz(delta)?;
                katz_bound(self.variety, self.p, delta)
            }
            BoundKind::WeilKloosterman => kloosterman_bound(self.p),
            BoundKind::Trivial => self.point_count() as f64,
        };
        let value = self.value_reduced(&u);
        Ok(ExpSumRecord::new(self.p, u, value, bound, kind))
    }

    fn check_katz(&self, delta: i32) -> Result<()> {
        if self.variety.dim() < 2 {
            return Err(Error::Precondition(format!(
                "the Katz bound needs dim V >= 2, got {}",
                self.variety.dim()
            )));
        }
        if delta < -1 {
            return Err(Error::Domain(format!("delta = {delta} below -1")));
        }
        Ok(())
    }

    pub fn katz(&self, u: &[u64], delta: i32) -> Result<ExpSumRecord> {
        self.record(u, BoundKind::Katz, Some(delta))
    }

    /// Records for the given frequencies, computed in parallel and returned
    /// in input order.
    pub fn records(
        &self,
        frequencies: &[Vec<u64>],
        kind: BoundKind,
        delta: Option<i32>,
    ) -> Result<Vec<ExpSumRecord>> {
        frequencies
            .par_iter()
            .map(|u| self.record(u, kind, delta))
            .collect()
    }

    /// `S(u)` for every `u ∈ F_p^r` in lexicographic order. Only one of each
    /// pair `{u, -u}` is summed; the other is its conjugate.
    pub fn all_values(&self) -> Vec<(Vec<u64>, (f64, f64))> {
        let p = self.p;
        let r = self.variety.ambient_dim();
        let total = (p as usize).pow(r as u32);
        let decode = |mut idx: usize| -> Vec<u64> {
            let mut u = vec![0u64; r];
            for j in (0..r).rev() {
                u[j] = (idx % p as usize) as u64;
                idx /= p as usize;
            }
            u
        };
        let encode = |u: &[u64]| u.iter().fold(0usize, |acc, &x| acc * p as usize + x as usize);
        let negate = |u: &[u64]| u.iter().map(|&x| (p - x) % p).collect::<Vec<_>>();

        let canonical: Vec<usize> = (0..total)
            .filter(|&i| encode(&negate(&decode(i))) >= i)
            .collect();
        let computed: Vec<(usize, (f64, f64))> = canonical
            .par_iter()
            .map(|&i| (i, self.value_reduced(&decode(i))))
            .collect();
        let mut values = vec![(0.0, 0.0); total];
        for (i, (re, im)) in computed {
            values[i] = (re, im);
            values[encode(&negate(&decode(i)))] = (re, -im);
        }
        values
            .into_iter()
            .enumerate()
            .map(|(i, v)| (decode(i), v))
            .collect()
    }
}

impl ExpSumEngine<'_> {
    /// [`ExpSumEngine::all_values`] as records against one bound.
    pub fn all_records(&self, kind: BoundKind, delta: Option<i32>) -> Result<Vec<ExpSumRecord>> {
        if kind == BoundKind::Katz {
            let delta = delta.ok_or_else(|| {
                Error::Precondition("the Katz bound needs an asserted delta".into())
            })?;
            self.check_katz(delta)?;
        }
        let n_points = self.point_count() as f64;
        Ok(self
            .all_values()
            .into_iter()
            .map(|(u, value)| {
                if u.iter().all(|&x| x == 0) {
                    return ExpSumRecord::new(self.p, u, (n_points, 0.0), n_points, BoundKind::Trivial);
                }
                let bound = match kind {
                    BoundKind::Bombieri => bombieri_bound(self.variety, self.p),
                    BoundKind::Katz => katz_bound(self.variety, self.p, delta.unwrap_or(-1)),
                    BoundKind::WeilKloosterman => kloosterman_bound(self.p),
                    BoundKind::Trivial => n_points,
                };
                ExpSumRecord::new(self.p, u, value, bound, kind)
            })
            .collect())
    }
}

/// Formula tag for a bound kind.
pub fn bound_formula(kind: BoundKind) -> &'static str {
    match kind {
        BoundKind::Bombieri => "(4d+9)^(n+r)p^(n-1/2)",
        BoundKind::Katz => "(4d+9)^(n+r)p^((n+1+delta)/2)",
        BoundKind::WeilKloosterman => "2p^(1/2)",
        BoundKind::Trivial => "#V",
    }
}

/// `Σ |S(u)|²` over all `u ∈ F_p^r` and the orthogonality value `p^r #V`.
pub fn parseval_sides(variety: &VarietySpec, p: u64) -> Result<(f64, f64)> {
    let engine = ExpSumEngine::new(variety, p)?;
    let mut lhs = CompensatedSum::default();
    for (_, (re, im)) in engine.all_values() {
        lhs.add(re * re + im * im);
    }
    let rhs = (p as f64).powi(variety.ambient_dim() as i32) * engine.point_count() as f64;
    Ok((lhs.value(), rhs))
}

/// `Σ_{m ∈ pI, m ≡ b (mod a)} e_p(-u m)`, summed term by term.
pub fn incomplete_progression_sum(
    p: u64,
    interval: &Interval,
    a: u64,
    b: u64,
    u: u64,
) -> Result<(f64, f64)> {
    check_progression(p, a, b)?;
    let mut acc = ComplexSum::default();
    if let Some((lo, hi)) = interval.integer_range(p) {
        let u = u % p;
        let first = lo + (b + a - lo % a) % a;
        let mut m = first;
        while m <= hi {
            let k = (p - u * m % p) % p;
            let (s, c) = (TAU * k as f64 / p as f64).sin_cos();
            acc.add((c, s));
            m += a;
        }
    }
    Ok(acc.value())
}

fn check_progression(p: u64, a: u64, b: u64) -> Result<()> {
    if a == 0 {
        return Err(Error::Domain("progression modulus must be positive".into()));
    }
    if b >= a {
        return Err(Error::Domain(format!("residue {b} not reduced modulo {a}")));
    }
    crate::polynomial::check_modulus(p)
}

/// `|Σ_{m ∈ pI, m ≡ b (mod a)} e_p(-u m)|` from the geometric-series closed
/// form `|sin(π u a N / p)| / |sin(π u a / p)|`, `N` the number of terms.
/// Needs `u a ≢ 0 (mod p)`.
pub fn incomplete_sum_magnitude(p: u64, interval: &Interval, a: u64, b: u64, u: u64) -> Result<f64> {
    check_progression(p, a, b)?;
    let step = a % p * (u % p) % p;
    if step == 0 {
        return Err(Error::Precondition("u*a must be nonzero modulo p".into()));
    }
    let terms = interval
        .integer_range(p)
        .map_or(0, |(lo, hi)| count_in_range(lo, hi, a, b));
    let top = step * (terms % p) % p;
    Ok(((PI * top as f64 / p as f64).sin() / (PI * step as f64 / p as f64).sin()).abs())
}

/// `p / |s|` with `s` the least absolute residue of `a u mod p`.
pub fn per_u_bound(p: u64, a: u64, u: u64) -> Result<f64> {
    if gcd(a, p) != 1 {
        return Err(Error::Precondition(format!("gcd({a}, {p}) != 1")));
    }
    let s = a % p * (u % p) % p;
    if s == 0 {
        return Err(Error::Domain("u must be nonzero modulo p".into()));
    }
    let least = s.min(p - s);
    Ok(p as f64 / least as f64)
}

/// `Σ_{u ≠ 0} |incomplete sum|` for one progression, with the `2p log p`
/// bound it is checked against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncompleteSumTotal {
    pub p: u64,
    pub a: u64,
    pub b: u64,
    pub interval: (String, String),
    pub total: f64,
    pub bound: f64,
    pub holds: bool,
}

pub fn incomplete_sum_total(p: u64, interval: &Interval, a: u64, b: u64) -> Result<IncompleteSumTotal> {
    if gcd(a, p) != 1 {
        return Err(Error::Precondition(format!("gcd({a}, {p}) != 1")));
    }
    let mut total = CompensatedSum::default();
    for u in 1..p {
        total.add(incomplete_sum_magnitude(p, interval, a, b, u)?);
    }
    let total = total.value();
    let bound = 2.0 * p as f64 * (p as f64).ln();
    Ok(IncompleteSumTotal {
        p,
        a,
        b,
        interval: (interval.lo().to_string(), interval.hi().to_string()),
        total,
        bound,
        holds: total <= bound,
    })
}
