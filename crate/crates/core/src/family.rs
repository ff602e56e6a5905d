//! Fibers `V_c = {x : f_1(x) = c_1, …, f_m(x) = c_m}` of a polynomial map,
//! swept in one pass over the ambient box.
//!
//! The family is given as a [`VarietySpec`] whose polynomials are the map
//! components `f_j` and whose `dim`/`degree` describe a typical fiber.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numtheory::{gcd_tuple, zeta};
use crate::region::BoxRegion;
use crate::variety::{Enumerator, PointFilter, VarietySpec};

/// Ambient sizes above this produce a warning.
pub const SCALE_WARN: f64 = 1e9;
/// Ambient sizes above this are rejected unless overridden.
pub const SCALE_REJECT: f64 = 1e10;
/// Largest number of fibers `p^m` kept as a dense table.
pub const MAX_FIBERS: u64 = 10_000_000;

pub const AVERAGING_FORMULA: &str = "p^((n+m-1/2)(1-1/r)+1)log^(r-1)(p) + p^r + p^(n+m-1)";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepOptions {
    pub scale_guard_override: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberRow {
    pub c: Vec<u64>,
    pub points: u64,
    pub visible: u64,
    /// `|N(c) - vol·p^n/ζ(r)|`.
    pub deviation: f64,
}

impl FiberRow {
    pub fn c_joined(&self) -> String {
        self.c
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(";")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySweepReport {
    pub label: String,
    pub p: u64,
    pub fiber_dim: u32,
    pub m: usize,
    pub main_term: f64,
    /// Every `c ∈ F_p^m` in lexicographic order, empty fibers included.
    pub per_fiber: Vec<FiberRow>,
    pub total_deviation: f64,
    pub averaging_budget: f64,
    /// `total_deviation / averaging_budget`.
    pub ratio: f64,
    pub budget_formula: String,
    pub partition_ok: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl FamilySweepReport {
    pub fn fiber(&self, c: &[u64]) -> Option<&FiberRow> {
        let idx = c
            .iter()
            .try_fold(0u64, |acc, &x| (x < self.p).then(|| acc * self.p + x))?;
        self.per_fiber.get(idx as usize)
    }

    /// Fraction of fibers whose deviation exceeds `p^n / log p`.
    pub fn exceptional_fraction(&self) -> f64 {
        let p = self.p as f64;
        let threshold = p.powi(self.fiber_dim as i32) / p.ln();
        let bad = self
            .per_fiber
            .iter()
            .filter(|row| row.deviation > threshold)
            .count();
        bad as f64 / self.per_fiber.len() as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("c,points,visible,deviation\n");
        for row in &self.per_fiber {
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.c_joined(),
                row.points,
                row.visible,
                row.deviation
            ));
        }
        out.push_str(&format!(
            "total,{},{},{}\n",
            self.total_deviation, self.averaging_budget, self.budget_formula
        ));
        out
    }
}

/// `p^{(n+m-1/2)(1-1/r)+1} log^{r-1} p + p^r + p^{n+m-1}` with constant 1.
pub fn averaging_budget(p: u64, n: u32, m: usize, r: usize) -> f64 {
    let (p, n, m, r) = (p as f64, n as f64, m as f64, r as f64);
    p.powf((n + m - 0.5) * (1.0 - 1.0 / r) + 1.0) * p.ln().powf(r - 1.0)
        + p.powf(r)
        + p.powf(n + m - 1.0)
}

fn check_family(family: &VarietySpec, p: u64, region: &BoxRegion, options: &SweepOptions) -> Result<Vec<String>> {
    if family.polys().is_empty() {
        return Err(Error::Precondition("a family needs m >= 1 map components".into()));
    }
    if region.dim() != family.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: family.ambient_dim(),
            found: region.dim(),
        });
    }
    let ambient = (p as f64).powi(family.ambient_dim() as i32);
    let mut warnings = Vec::new();
    if ambient > SCALE_REJECT && !options.scale_guard_override {
        return Err(Error::ScaleGuard(format!(
            "p^r = {ambient:e} exceeds {SCALE_REJECT:e}"
        )));
    }
    if ambient > SCALE_WARN {
        warnings.push(format!("p^r = {ambient:e} exceeds {SCALE_WARN:e}"));
    }
    let fibers = (p as u128).checked_pow(family.polys().len() as u32);
    if fibers.is_none_or(|f| f > MAX_FIBERS as u128) {
        return Err(Error::ScaleGuard(format!(
            "p^m fibers exceed the dense-table limit {MAX_FIBERS}"
        )));
    }
    Ok(warnings)
}

/// One scan of `pΩ`, bucketing each lattice point by its fiber.
pub fn sweep_family(family: &VarietySpec, p: u64, region: &BoxRegion) -> Result<FamilySweepReport> {
    sweep_family_with(family, p, region, &SweepOptions::default())
}

pub fn sweep_family_with(
    family: &VarietySpec,
    p: u64,
    region: &BoxRegion,
    options: &SweepOptions,
) -> Result<FamilySweepReport> {
    let warnings = check_family(family, p, region, options)?;
    let r = family.ambient_dim();
    let m = family.polys().len();
    let fibers = p.pow(m as u32) as usize;
    let ambient = VarietySpec::full_space(r)?;
    let enumerator = Enumerator::new(&ambient, p)?;

    let fiber_index = |x: &[u64]| -> usize {
        family.polys().iter().fold(0usize, |acc, f| {
            // Arity matches by construction and p is a checked modulus.
            let c = f.eval_mod(x, p).expect("map component evaluation");
            acc * p as usize + c as usize
        })
    };
    let (points, visible) = enumerator.par_fold(
        &PointFilter::region(region),
        || (vec![0u64; fibers], vec![0u64; fibers]),
        |(points, visible), x| {
            let idx = fiber_index(x);
            points[idx] += 1;
            if gcd_tuple(x).is_ok_and(|g| g == 1) {
                visible[idx] += 1;
            }
        },
        |(mut pa, mut va), (pb, vb)| {
            for (a, b) in pa.iter_mut().zip(pb) {
                *a += b;
            }
            for (a, b) in va.iter_mut().zip(vb) {
                *a += b;
            }
            (pa, va)
        },
    )?;

    let main_term = region.volume_f64()? * (p as f64).powi(family.dim() as i32)
        / zeta(r as u32, 1e-13)?;
    let per_fiber: Vec<FiberRow> = (0..fibers)
        .map(|idx| {
            let mut c = vec![0u64; m];
            let mut rest = idx as u64;
            for j in (0..m).rev() {
                c[j] = rest % p;
                rest /= p;
            }
            FiberRow {
                c,
                points: points[idx],
                visible: visible[idx],
                deviation: (visible[idx] as f64 - main_term).abs(),
            }
        })
        .collect();
    let mut total = crate::expsum::CompensatedSum::default();
    for row in &per_fiber {
        total.add(row.deviation);
    }
    let total_deviation = total.value();
    let lattice: u128 = per_fiber.iter().map(|row| row.points as u128).sum();
    let partition_ok = lattice == region.lattice_count(p);
    let averaging_budget = averaging_budget(p, family.dim(), m, r);
    Ok(FamilySweepReport {
        label: family.label().to_string(),
        p,
        fiber_dim: family.dim(),
        m,
        main_term,
        per_fiber,
        total_deviation,
        averaging_budget,
        ratio: total_deviation / averaging_budget,
        budget_formula: AVERAGING_FORMULA.to_string(),
        partition_ok,
        warnings,
    })
}

/// The fiber `V_c` as an explicit variety with the family's dimension and
/// degree.
pub fn fiber_variety(family: &VarietySpec, c: &[u64]) -> Result<VarietySpec> {
    if c.len() != family.polys().len() {
        return Err(Error::DimensionMismatch {
            expected: family.polys().len(),
            found: c.len(),
        });
    }
    let polys = family
        .polys()
        .iter()
        .zip(c)
        .map(|(f, &cj)| {
            let cj = i64::try_from(cj).map_err(|_| Error::Overflow(format!("fiber value {cj}")))?;
            f.minus_constant(cj)
        })
        .collect::<Result<Vec<_>>>()?;
    let label = format!(
        "{}[c={}]",
        family.label(),
        c.iter().map(u64::to_string).collect::<Vec<_>>().join(";")
    );
    VarietySpec::new(label, family.ambient_dim(), polys, family.dim(), family.degree())
}

/// `Σ_c M_{Ω,V_c}(k)` against `∏|pI_j| / k^r`. The bound is a
/// leading-order statement and small instances can exceed it, so the
/// excess is reported rather than treated as an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SieveMass {
    pub p: u64,
    pub k: u64,
    pub mass: u64,
    pub bound: f64,
    pub exceeds: bool,
}

pub fn fiber_sieve_mass(family: &VarietySpec, p: u64, region: &BoxRegion, k: u64) -> Result<SieveMass> {
    check_family(family, p, region, &SweepOptions::default())?;
    if k == 0 {
        return Err(Error::Domain("sieve level must be positive".into()));
    }
    let m = family.polys().len();
    let fibers = p.pow(m as u32) as usize;
    let r = family.ambient_dim();
    let ambient = VarietySpec::full_space(r)?;
    let filter = PointFilter::region(region).with_progressions(vec![(k, 0); r]);
    let buckets = Enumerator::new(&ambient, p)?.par_fold(
        &filter,
        || vec![0u64; fibers],
        |buckets, x| {
            if x.iter().any(|&xj| xj != 0) {
                let idx = family.polys().iter().fold(0usize, |acc, f| {
                    acc * p as usize + f.eval_mod(x, p).expect("map component evaluation") as usize
                });
                buckets[idx] += 1;
            }
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            a
        },
    )?;
    let mass = buckets.iter().sum();
    let bound = region.lattice_count(p) as f64 / (k as f64).powi(r as i32);
    Ok(SieveMass {
        p,
        k,
        mass,
        bound,
        exceeds: mass as f64 > bound,
    })
}
