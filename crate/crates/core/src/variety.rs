//! Varieties given by polynomial systems, exhaustive enumeration of their
//! `F_p`-points, and Lang–Weil consistency reports.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{CoordSet, Kernel};
use crate::numtheory::is_prime;
use crate::polynomial::{check_modulus, Polynomial};
use crate::region::BoxRegion;
use crate::report::{Budget, CountReport, Quantity};

/// `V ⊆ A^r` cut out by `polys`, with an asserted dimension and degree.
/// An empty system is the whole affine space.
#[derive(Debug, Clone, PartialEq)]
pub struct VarietySpec {
    label: String,
    r: usize,
    polys: Vec<Polynomial>,
    dim: u32,
    degree: u32,
}

impl VarietySpec {
    pub fn new(
        label: impl Into<String>,
        r: usize,
        polys: Vec<Polynomial>,
        dim: u32,
        degree: u32,
    ) -> Result<Self> {
        if r < 2 {
            return Err(Error::Variety(format!("ambient dimension {r} < 2")));
        }
        if let Some(f) = polys.iter().find(|f| f.nvars() != r) {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: f.nvars(),
            });
        }
        if dim < 1 || dim as usize > r {
            return Err(Error::Variety(format!(
                "asserted dimension {dim} outside 1..={r}"
            )));
        }
        if degree < 1 {
            return Err(Error::Variety("asserted degree must be at least 1".into()));
        }
        if polys.is_empty() && (dim as usize != r || degree != 1) {
            return Err(Error::Variety(format!(
                "an empty system is A^{r}: dimension {r}, degree 1"
            )));
        }
        Ok(Self {
            label: label.into(),
            r,
            polys,
            dim,
            degree,
        })
    }

    pub fn parse<S: AsRef<str>>(
        label: impl Into<String>,
        r: usize,
        polys: &[S],
        dim: u32,
        degree: u32,
    ) -> Result<Self> {
        let polys = polys
            .iter()
            .map(|s| Polynomial::parse(s.as_ref(), r))
            .collect::<Result<Vec<_>>>()?;
        Self::new(label, r, polys, dim, degree)
    }

    pub fn full_space(r: usize) -> Result<Self> {
        Self::new(format!("A^{r}"), r, Vec::new(), r as u32, 1)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn ambient_dim(&self) -> usize {
        self.r
    }

    pub fn polys(&self) -> &[Polynomial] {
        &self.polys
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn is_curve(&self) -> bool {
        self.dim == 1
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

/// The built-in test catalog: the Kloosterman curve `xy = 1`, the norm-one
/// threefold `x1 x2 x3 = 1`, the surface `x3 = x1 x2`, the elliptic curve
/// `y^2 = x^3 + x` and the full planes `A^2`, `A^3`.
pub fn catalog() -> Vec<VarietySpec> {
    let entries: [(&str, usize, &[&str], u32, u32); 4] = [
        ("xy=1", 2, &["x1*x2 - 1"], 1, 2),
        ("x1x2x3=1", 3, &["x1*x2*x3 - 1"], 2, 3),
        ("x3=x1x2", 3, &["x3 - x1*x2"], 2, 2),
        ("y^2=x^3+x", 2, &["x2^2 - x1^3 - x1"], 1, 3),
    ];
    let mut out: Vec<VarietySpec> = entries
        .iter()
        .map(|&(label, r, polys, dim, deg)| {
            VarietySpec::parse(label, r, polys, dim, deg).expect("catalog entry parses")
        })
        .collect();
    out.push(VarietySpec::full_space(2).expect("A^2"));
    out.push(VarietySpec::full_space(3).expect("A^3"));
    out
}

/// Restricts enumeration to a box `pΩ` and to arithmetic progressions
/// `x_j ≡ b_j (mod a_j)`.
#[derive(Debug, Clone, Default)]
pub struct PointFilter<'a> {
    pub region: Option<&'a BoxRegion>,
    pub progressions: Option<Vec<(u64, u64)>>,
}

impl<'a> PointFilter<'a> {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn region(region: &'a BoxRegion) -> Self {
        Self {
            region: Some(region),
            progressions: None,
        }
    }

    pub fn with_progressions(mut self, progressions: Vec<(u64, u64)>) -> Self {
        self.progressions = Some(progressions);
        self
    }
}

/// A variety compiled for one prime; cheap to enumerate repeatedly under
/// different filters.
#[derive(Debug, Clone)]
pub struct Enumerator<'v> {
    variety: &'v VarietySpec,
    p: u64,
    kernel: Kernel,
}

/// Points of one enumeration in lexicographic order, stored flat.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointStream {
    r: usize,
    coords: Vec<u64>,
}

impl PointStream {
    pub fn len(&self) -> usize {
        self.coords.len() / self.r.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u64]> + '_ {
        self.coords.chunks_exact(self.r)
    }

    pub fn to_vecs(&self) -> Vec<Vec<u64>> {
        self.iter().map(<[u64]>::to_vec).collect()
    }

    /// One CSV row per point, header `x1,…,xr`.
    pub fn to_csv(&self) -> String {
        let mut out = (1..=self.r)
            .map(|j| format!("x{j}"))
            .collect::<Vec<_>>()
            .join(",");
        out.push('\n');
        for pt in self.iter() {
            let row: Vec<String> = pt.iter().map(u64::to_string).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

impl<'v> Enumerator<'v> {
    pub fn new(variety: &'v VarietySpec, p: u64) -> Result<Self> {
        check_modulus(p)?;
        if p < 3 || !is_prime(p) {
            return Err(Error::Precondition(format!("p = {p} must be an odd prime")));
        }
        Ok(Self {
            variety,
            p,
            kernel: Kernel::new(variety.polys(), variety.ambient_dim(), p),
        })
    }

    pub fn variety(&self) -> &VarietySpec {
        self.variety
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    fn sets(&self, filter: &PointFilter<'_>) -> Result<Option<Vec<CoordSet>>> {
        let r = self.variety.ambient_dim();
        if let Some(region) = filter.region {
            if region.dim() != r {
                return Err(Error::DimensionMismatch {
                    expected: r,
                    found: region.dim(),
                });
            }
        }
        if let Some(prog) = &filter.progressions {
            if prog.len() != r {
                return Err(Error::DimensionMismatch {
                    expected: r,
                    found: prog.len(),
                });
            }
            if let Some((a, b)) = prog.iter().find(|(a, b)| *a == 0 || b >= a) {
                return Err(Error::Domain(format!(
                    "progression residue {b} mod {a} is not reduced"
                )));
            }
        }
        let mut sets = Vec::with_capacity(r);
        for j in 0..r {
            let range = match filter.region {
                Some(region) => region.intervals()[j].integer_range(self.p),
                None => Some((0, self.p - 1)),
            };
            let (a, b) = filter.progressions.as_ref().map_or((1, 0), |v| v[j]);
            match range.and_then(|(lo, hi)| CoordSet::new(lo, hi, a, b)) {
                Some(s) => sets.push(s),
                None => return Ok(None),
            }
        }
        Ok(Some(sets))
    }

    /// Visits the points in lexicographic order on the calling thread.
    pub fn for_each(&self, filter: &PointFilter<'_>, mut visit: impl FnMut(&[u64])) -> Result<()> {
        if let Some(sets) = self.sets(filter)? {
            self.kernel.run(&sets, &mut visit);
        }
        Ok(())
    }

    /// Parallel fold over `x_1`-stripes. Each stripe folds into a private
    /// accumulator; accumulators are merged in an unspecified order, so
    /// `merge` must be associative and commutative.
    pub fn par_fold<T, I, F, M>(
        &self,
        filter: &PointFilter<'_>,
        identity: I,
        fold: F,
        merge: M,
    ) -> Result<T>
    where
        T: Send,
        I: Fn() -> T + Sync + Send,
        F: Fn(&mut T, &[u64]) + Sync + Send,
        M: Fn(T, T) -> T + Sync + Send,
    {
        let Some(sets) = self.sets(filter)? else {
            return Ok(identity());
        };
        let stripes: Vec<u64> = sets[0].iter().collect();
        Ok(stripes
            .into_par_iter()
            .fold(&identity, |mut acc, x1| {
                self.kernel
                    .run_stripe(x1, &sets, &mut |pt| fold(&mut acc, pt));
                acc
            })
            .reduce(&identity, &merge))
    }

    /// Folds every `x_1`-stripe into its own accumulator, in parallel, and
    /// returns the accumulators in stripe order so a sequential merge is
    /// deterministic.
    pub fn map_stripes<T, I, F>(&self, filter: &PointFilter<'_>, identity: I, fold: F) -> Result<Vec<T>>
    where
        T: Send,
        I: Fn() -> T + Sync + Send,
        F: Fn(&mut T, &[u64]) + Sync + Send,
    {
        let Some(sets) = self.sets(filter)? else {
            return Ok(Vec::new());
        };
        let stripes: Vec<u64> = sets[0].iter().collect();
        Ok(stripes
            .into_par_iter()
            .map(|x1| {
                let mut acc = identity();
                self.kernel
                    .run_stripe(x1, &sets, &mut |pt| fold(&mut acc, pt));
                acc
            })
            .collect())
    }

    pub fn count(&self, filter: &PointFilter<'_>) -> Result<u64> {
        self.count_where(filter, |_| true)
    }

    pub fn count_where(
        &self,
        filter: &PointFilter<'_>,
        pred: impl Fn(&[u64]) -> bool + Sync + Send,
    ) -> Result<u64> {
        self.par_fold(
            filter,
            || 0u64,
            |acc, pt| *acc += pred(pt) as u64,
            |a, b| a + b,
        )
    }

    pub fn points(&self, filter: &PointFilter<'_>) -> Result<PointStream> {
        let r = self.variety.ambient_dim();
        let stripes = self.map_stripes(filter, Vec::new, |buf: &mut Vec<u64>, pt| {
            buf.extend_from_slice(pt)
        })?;
        Ok(PointStream {
            r,
            coords: stripes.concat(),
        })
    }
}

/// All points of `V(F_p)` (inside `pΩ` when a region is given), in
/// lexicographic order.
pub fn enumerate_points(
    variety: &VarietySpec,
    p: u64,
    region: Option<&BoxRegion>,
) -> Result<PointStream> {
    let filter = PointFilter {
        region,
        progressions: None,
    };
    Enumerator::new(variety, p)?.points(&filter)
}

/// Exact `#V(F_p)` with its Lang–Weil residual.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LangWeilReport {
    #[serde(flatten)]
    pub report: CountReport,
    /// `|#V - p^n| / p^{n - 1/2}`.
    pub residual: f64,
    /// Constant the residual is compared against.
    pub constant: f64,
    pub exceeds: bool,
}

/// `(d-1)(d-2) + d`. The Lang–Weil constant is not explicit; this default
/// is an artifact choice that stays positive for lines and conics.
pub fn default_lang_weil_constant(degree: u32) -> f64 {
    let d = degree as f64;
    (d - 1.0) * (d - 2.0) + d
}

pub fn count_points(variety: &VarietySpec, p: u64) -> Result<LangWeilReport> {
    count_points_with_constant(variety, p, default_lang_weil_constant(variety.degree()))
}

pub fn count_points_with_constant(
    variety: &VarietySpec,
    p: u64,
    constant: f64,
) -> Result<LangWeilReport> {
    let exact = Enumerator::new(variety, p)?.count(&PointFilter::none())?;
    let n = variety.dim() as f64;
    let pf = p as f64;
    let main = pf.powf(n);
    let scale = pf.powf(n - 0.5);
    let report = CountReport::new(
        variety.label(),
        p,
        Quantity::Points,
        exact,
        main,
        Budget::new("C*p^(n-1/2), C=(d-1)(d-2)+d", constant * scale),
        Vec::new(),
    );
    let residual = report.deviation.abs() / scale;
    Ok(LangWeilReport {
        report,
        residual,
        constant,
        exceeds: residual > constant,
    })
}

/// Lang–Weil reports along a prime ladder.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LangWeilLadder {
    pub reports: Vec<LangWeilReport>,
    /// Raised when the residual exceeds its constant at each of the
    /// largest three primes (or every prime of a shorter ladder), which
    /// suggests the variety is not absolutely irreducible.
    pub irreducibility_warning: bool,
}

pub fn lang_weil_ladder(variety: &VarietySpec, primes: &[u64]) -> Result<LangWeilLadder> {
    let mut reports = primes
        .iter()
        .map(|&p| count_points(variety, p))
        .collect::<Result<Vec<_>>>()?;
    reports.sort_by_key(|r| r.report.p);
    let tail = reports.len().min(3);
    let irreducibility_warning =
        tail > 0 && reports[reports.len() - tail..].iter().all(|r| r.exceeds);
    Ok(LangWeilLadder {
        reports,
        irreducibility_warning,
    })
}
