//! Lehmer points, visible points and visible Lehmer points.
//!
//! Exact values always come from a direct scan of the point stream. The
//! Möbius route `Σ_k μ(k) M(k)` is kept as an independent cross-check of the
//! visible count, never as the primary path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numtheory::{gcd, gcd_tuple, phi_r, zeta, ArithCache};
use crate::region::BoxRegion;
use crate::report::{Budget, CountReport, Quantity};
use crate::variety::{Enumerator, PointFilter, VarietySpec};

const ZETA_TOL: f64 = 1e-13;

/// Congruence conditions `x_j ≡ b_j (mod a_j)` on canonical
/// representatives `x_j ∈ [0, p-1]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CongruenceSpec {
    moduli: Vec<u64>,
    residues: Vec<u64>,
}

impl CongruenceSpec {
    /// Residues may be any integers; they are reduced into `[0, a_j)`.
    pub fn new(moduli: Vec<u64>, residues: &[i64]) -> Result<Self> {
        if moduli.len() != residues.len() {
            return Err(Error::DimensionMismatch {
                expected: moduli.len(),
                found: residues.len(),
            });
        }
        if moduli.contains(&0) {
            return Err(Error::Domain("moduli must be positive".into()));
        }
        let residues = moduli
            .iter()
            .zip(residues)
            .map(|(&a, &b)| b.rem_euclid(a as i64) as u64)
            .collect();
        Ok(Self { moduli, residues })
    }

    /// The same modulus `a` in every coordinate.
    pub fn shared(a: u64, residues: &[i64]) -> Result<Self> {
        Self::new(vec![a; residues.len()], residues)
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn residues(&self) -> &[u64] {
        &self.residues
    }

    fn progressions(&self) -> Vec<(u64, u64)> {
        self.moduli
            .iter()
            .copied()
            .zip(self.residues.iter().copied())
            .collect()
    }
}

/// Constant and optional singular-locus assertion used by the visible
/// budgets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetOptions {
    pub constant: f64,
    /// Asserted upper bound on the singular-locus dimension of the
    /// hyperplane sections at infinity (`-1` means smooth).
    pub delta: Option<i32>,
}

impl Default for BudgetOptions {
    fn default() -> Self {
        Self {
            constant: 1.0,
            delta: None,
        }
    }
}

fn check_region(variety: &VarietySpec, region: &BoxRegion) -> Result<()> {
    if region.dim() != variety.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: variety.ambient_dim(),
            found: region.dim(),
        });
    }
    Ok(())
}

struct Shape {
    p: f64,
    log_p: f64,
    r: f64,
    n: f64,
    d: f64,
}

impl Shape {
    fn new(variety: &VarietySpec, p: u64) -> Self {
        Self {
            p: p as f64,
            log_p: (p as f64).ln(),
            r: variety.ambient_dim() as f64,
            n: variety.dim() as f64,
            d: variety.degree() as f64,
        }
    }

    fn lehmer_proof(&self) -> Budget {
        Budget::new(
            "2^r(4d+9)^(n+r)p^(n-1/2)log^r(p)",
            2f64.powf(self.r)
                * (4.0 * self.d + 9.0).powf(self.n + self.r)
                * self.p.powf(self.n - 0.5)
                * self.log_p.powf(self.r),
        )
    }

    fn lehmer_statement(&self) -> Budget {
        Budget::new(
            "2^r(4d+9)^(2n+1)p^(n-1/2)log^r(p)",
            2f64.powf(self.r)
                * (4.0 * self.d + 9.0).powf(2.0 * self.n + 1.0)
                * self.p.powf(self.n - 0.5)
                * self.log_p.powf(self.r),
        )
    }

    fn lehmer_curve(&self) -> Budget {
        Budget::new(
            "2^r*d^2*p^(1/2)log^r(p)",
            2f64.powf(self.r) * self.d * self.d * self.p.sqrt() * self.log_p.powf(self.r),
        )
    }

    /// `C p^{r(n+1/2)/(r+1)} log^k p`.
    fn visible_balanced(&self, c: f64, log_power: f64) -> Budget {
        let tag = if log_power == self.r {
            "C*p^(r(n+1/2)/(r+1))log^r(p)"
        } else {
            "C*p^(r(n+1/2)/(r+1))log^(r-1)(p)"
        };
        Budget::new(
            tag,
            c * self.p.powf(self.r * (self.n + 0.5) / (self.r + 1.0)) * self.log_p.powf(log_power),
        )
    }

    /// `C (p^{n-1/2} + p^{(n+3+δ)r/(2(r+1))} log^r p)`.
    fn visible_singular(&self, c: f64, delta: i32) -> Budget {
        let exp = (self.n + 3.0 + delta as f64) * self.r / (2.0 * (self.r + 1.0));
        Budget::new(
            format!("C*(p^(n-1/2)+p^((n+3+delta)r/(2(r+1)))log^r(p)), delta={delta}"),
            c * (self.p.powf(self.n - 0.5) + self.p.powf(exp) * self.log_p.powf(self.r)),
        )
    }
}

/// Lehmer points of `V ∩ pΩ` in the classes `x_j ≡ b_j (mod a_j)`.
pub fn count_lehmer(
    variety: &VarietySpec,
    p: u64,
    region: &BoxRegion,
    spec: &CongruenceSpec,
) -> Result<CountReport> {
    check_region(variety, region)?;
    if spec.moduli().len() != variety.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: variety.ambient_dim(),
            found: spec.moduli().len(),
        });
    }
    if let Some(a) = spec.moduli().iter().find(|&&a| gcd(a, p) != 1) {
        return Err(Error::Precondition(format!("modulus {a} is not coprime to p = {p}")));
    }
    let enumerator = Enumerator::new(variety, p)?;
    let filter = PointFilter::region(region).with_progressions(spec.progressions());
    let exact = enumerator.count(&filter)?;

    let shape = Shape::new(variety, p);
    let modulus_product: f64 = spec.moduli().iter().map(|&a| a as f64).product();
    let main = region.volume_f64()? * shape.p.powf(shape.n) / modulus_product;
    let (budget, alternates) = if variety.is_curve() {
        (
            shape.lehmer_curve(),
            vec![shape.lehmer_proof(), shape.lehmer_statement()],
        )
    } else {
        (shape.lehmer_proof(), vec![shape.lehmer_statement()])
    };
    Ok(CountReport::new(
        variety.label(),
        p,
        Quantity::Lehmer,
        exact,
        main,
        budget,
        alternates,
    ))
}

/// Nonzero points of `V ∩ pΩ` whose coordinate gcd is divisible by `k`.
pub fn count_m(variety: &VarietySpec, p: u64, region: &BoxRegion, k: u64) -> Result<u64> {
    check_region(variety, region)?;
    let enumerator = Enumerator::new(variety, p)?;
    count_m_with(&enumerator, region, k)
}

fn count_m_with(enumerator: &Enumerator<'_>, region: &BoxRegion, k: u64) -> Result<u64> {
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    if k >= enumerator.p() {
        return Ok(0);
    }
    let r = enumerator.variety().ambient_dim();
    let filter = PointFilter::region(region).with_progressions(vec![(k, 0); r]);
    enumerator.count_where(&filter, |pt| pt.iter().any(|&x| x != 0))
}

/// `Σ_{K < k <= p} M(k)`, the sieve tail discarded by a truncation at `K`.
pub fn moebius_tail_mass(
    variety: &VarietySpec,
    p: u64,
    region: &BoxRegion,
    cutoff: u64,
) -> Result<u64> {
    check_region(variety, region)?;
    let enumerator = Enumerator::new(variety, p)?;
    let mut total = 0;
    for k in cutoff + 1..p {
        total += count_m_with(&enumerator, region, k)?;
    }
    Ok(total)
}

fn visible_budgets(shape: &Shape, options: &BudgetOptions, log_power: f64) -> (Budget, Vec<Budget>) {
    let balanced = shape.visible_balanced(options.constant, log_power);
    match options.delta {
        Some(delta) if shape.n >= 2.0 => {
            let singular = shape.visible_singular(options.constant, delta);
            if shape.n > shape.r / 2.0 {
                (balanced, vec![singular])
            } else {
                (singular, vec![balanced])
            }
        }
        _ => (balanced, Vec::new()),
    }
}

/// Visible points of `V ∩ pΩ`, by a direct gcd test.
pub fn count_visible(variety: &VarietySpec, p: u64, region: &BoxRegion) -> Result<CountReport> {
    count_visible_with(variety, p, region, &BudgetOptions::default())
}

pub fn count_visible_with(
    variety: &VarietySpec,
    p: u64,
    region: &BoxRegion,
    options: &BudgetOptions,
) -> Result<CountReport> {
    check_region(variety, region)?;
    let enumerator = Enumerator::new(variety, p)?;
    let exact = enumerator.count_where(&PointFilter::region(region), |pt| {
        gcd_tuple(pt).is_ok_and(|g| g == 1)
    })?;
    let shape = Shape::new(variety, p);
    let main = region.volume_f64()? * shape.p.powf(shape.n)
        / zeta(variety.ambient_dim() as u32, ZETA_TOL)?;
    let (budget, alternates) = visible_budgets(&shape, options, shape.r);
    Ok(CountReport::new(
        variety.label(),
        p,
        Quantity::Visible,
        exact,
        main,
        budget,
        alternates,
    ))
}

/// `Σ_{k=1}^{p-1} μ(k) M(k)` with the shared Möbius cache.
pub fn count_visible_via_moebius(
    variety: &VarietySpec,
    p: u64,
    region: &BoxRegion,
) -> Result<u64> {
    count_visible_via_moebius_with(variety, p, region, ArithCache::shared())
}

pub fn count_visible_via_moebius_with(
    variety: &VarietySpec,
    p: u64,
    region: &BoxRegion,
    cache: &ArithCache,
) -> Result<u64> {
    check_region(variety, region)?;
    let enumerator = Enumerator::new(variety, p)?;
    let mut total: i128 = 0;
    for k in 1..p {
        let mu = cache.moebius(k)?;
        if mu != 0 {
            total += mu as i128 * count_m_with(&enumerator, region, k)? as i128;
        }
    }
    u64::try_from(total).map_err(|_| {
        Error::Precondition(format!(
            "Möbius sum {total} is negative; the Möbius table is inconsistent"
        ))
    })
}

/// Visible points in the classes `x_j ≡ b_j (mod a)` for one shared `a`.
pub fn count_visible_lehmer(
    variety: &VarietySpec,
    p: u64,
    region: &BoxRegion,
    a: u64,
    residues: &[i64],
) -> Result<CountReport> {
    count_visible_lehmer_with(variety, p, region, a, residues, &BudgetOptions::default())
}

pub fn count_visible_lehmer_with(
    variety: &VarietySpec,
    p: u64,
    region: &BoxRegion,
    a: u64,
    residues: &[i64],
    options: &BudgetOptions,
) -> Result<CountReport> {
    check_region(variety, region)?;
    if a == 0 || a >= p || gcd(a, p) != 1 {
        return Err(Error::Precondition(format!(
            "shared modulus a = {a} must satisfy 1 <= a < p = {p} and gcd(a, p) = 1"
        )));
    }
    let spec = CongruenceSpec::shared(a, residues)?;
    if spec.residues().len() != variety.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: variety.ambient_dim(),
            found: spec.residues().len(),
        });
    }
    let enumerator = Enumerator::new(variety, p)?;
    let filter = PointFilter::region(region).with_progressions(spec.progressions());
    let exact = enumerator.count_where(&filter, |pt| gcd_tuple(pt).is_ok_and(|g| g == 1))?;

    let shape = Shape::new(variety, p);
    let class_gcd = spec.residues().iter().fold(a, |g, &b| gcd(g, b));
    let main = if class_gcd != 1 {
        0.0
    } else {
        let r = variety.ambient_dim() as u32;
        region.volume_f64()? * shape.p.powf(shape.n)
            / (zeta(r, ZETA_TOL)? * phi_r(a, r)? as f64)
    };
    let (budget, alternates) = visible_budgets(&shape, options, shape.r - 1.0);
    Ok(CountReport::new(
        variety.label(),
        p,
        Quantity::VisibleLehmer,
        exact,
        main,
        budget,
        alternates,
    ))
}

/// Classes `c mod lcm(a_1, …, a_r)` refining `x_j ≡ b_j (mod a_j)` that can
/// hold visible points, i.e. `gcd(c_1, …, c_r, lcm) = 1`. Lexicographic.
pub fn admissible_classes(moduli: &[u64], residues: &[i64]) -> Result<(u64, Vec<Vec<u64>>)> {
    let spec = CongruenceSpec::new(moduli.to_vec(), residues)?;
    let modulus = spec
        .moduli()
        .iter()
        .fold(1u64, |l, &a| l / gcd(l, a) * a);
    let per_coord: Vec<Vec<u64>> = spec
        .moduli()
        .iter()
        .zip(spec.residues())
        .map(|(&a, &b)| (0..modulus).filter(|c| c % a == b).collect())
        .collect();
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(moduli.len());
    fn rec(
        j: usize,
        per_coord: &[Vec<u64>],
        modulus: u64,
        current: &mut Vec<u64>,
        out: &mut Vec<Vec<u64>>,
    ) {
        if j == per_coord.len() {
            if current.iter().fold(modulus, |g, &c| gcd(g, c)) == 1 {
                out.push(current.clone());
            }
            return;
        }
        for &c in &per_coord[j] {
            current.push(c);
            rec(j + 1, per_coord, modulus, current, out);
            current.pop();
        }
    }
    rec(0, &per_coord, modulus, &mut current, &mut out);
    Ok((modulus, out))
}

/// Ratio of visible counts in two congruence classes with mixed moduli.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRatio {
    pub p: u64,
    pub modulus: u64,
    pub numerator_classes: Vec<Vec<u64>>,
    pub denominator_classes: Vec<Vec<u64>>,
    pub numerator_count: u64,
    pub denominator_count: u64,
    pub ratio: f64,
    /// Ratio of admissible class counts, the limit of `ratio`.
    pub predicted: f64,
}

pub fn class_ratio_experiment(
    variety: &VarietySpec,
    p: u64,
    region: &BoxRegion,
    moduli: &[u64],
    numerator: &[i64],
    denominator: &[i64],
) -> Result<ClassRatio> {
    let (modulus, numerator_classes) = admissible_classes(moduli, numerator)?;
    let (_, denominator_classes) = admissible_classes(moduli, denominator)?;
    let total = |classes: &[Vec<u64>]| -> Result<u64> {
        classes.iter().try_fold(0u64, |acc, c| {
            let b: Vec<i64> = c.iter().map(|&x| x as i64).collect();
            Ok(acc + count_visible_lehmer(variety, p, region, modulus, &b)?.exact)
        })
    };
    let numerator_count = total(&numerator_classes)?;
    let denominator_count = total(&denominator_classes)?;
    if denominator_count == 0 {
        return Err(Error::DivisionByZero(
            "no visible points in the denominator classes".into(),
        ));
    }
    Ok(ClassRatio {
        p,
        modulus,
        predicted: numerator_classes.len() as f64 / denominator_classes.len() as f64,
        numerator_classes,
        denominator_classes,
        numerator_count,
        denominator_count,
        ratio: numerator_count as f64 / denominator_count as f64,
    })
}

/// Visible points of the plane in `(1, 0)` versus `(0, 1)` modulo `(2, 3)`.
pub fn lehmer_class_ratio_experiment(p: u64, region: &BoxRegion) -> Result<ClassRatio> {
    if p <= 6 {
        return Err(Error::Precondition(format!("p = {p} must exceed 6")));
    }
    let plane = VarietySpec::full_space(2)?;
    class_ratio_experiment(&plane, p, region, &[2, 3], &[1, 0], &[0, 1])
}

/// `K = p^{(r-n+1/2)/(r+1)}`, the sieve cutoff balancing the truncation
/// error against the tail. Diagnostic only.
pub fn balancing_k(p: f64, r: u32, n: u32) -> Result<f64> {
    if r < 2 || n < 1 || n > r {
        return Err(Error::Domain(format!("need r >= 2 and 1 <= n <= r, got r={r}, n={n}")));
    }
    let (r, n) = (r as f64, n as f64);
    Ok(p.powf((r - n + 0.5) / (r + 1.0)))
}

/// One row of the classical opposite-parity problem on `xy = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OppositeParityRow {
    pub p: u64,
    pub count: u64,
    pub main_term: f64,
    pub deviation: f64,
    /// `sqrt(p) log^2 p`.
    pub budget: f64,
}

/// Number of `x ∈ [1, p-1]` whose inverse mod `p` has the opposite
/// parity, computed as two Lehmer counts on the hyperbola `x1*x2 = 1`.
pub fn opposite_parity_count(p: u64) -> Result<OppositeParityRow> {
    let hyperbola = VarietySpec::parse("xy=1", 2, &["x1*x2 - 1"], 1, 2)?;
    let unit = BoxRegion::unit(2);
    let even_odd = count_lehmer(&hyperbola, p, &unit, &CongruenceSpec::new(vec![2, 2], &[0, 1])?)?;
    let odd_even = count_lehmer(&hyperbola, p, &unit, &CongruenceSpec::new(vec![2, 2], &[1, 0])?)?;
    let count = even_odd.exact + odd_even.exact;
    let pf = p as f64;
    Ok(OppositeParityRow {
        p,
        count,
        main_term: pf / 2.0,
        deviation: count as f64 - pf / 2.0,
        budget: pf.sqrt() * pf.ln().powi(2),
    })
}
