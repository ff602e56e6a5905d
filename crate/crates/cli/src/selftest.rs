//! Runs the built-in catalog through the invariant suites at small primes.

use lehmer_visible::counting::{
    count_lehmer, count_visible, count_visible_lehmer, count_visible_via_moebius_with,
    CongruenceSpec,
};
use lehmer_visible::expsum::{parseval_sides, ExpSumEngine};
use lehmer_visible::family::sweep_family;
use lehmer_visible::numtheory::{gcd, primes_between, ArithCache};
use lehmer_visible::variety::{catalog, count_points};
use lehmer_visible::{BoxRegion, Enumerator, PointFilter, VarietySpec};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Fault {
    /// Flip the sign of μ(2) in the sieve's Möbius table.
    Moebius,
}

const MAX_PRIME: u64 = 31;
const PARSEVAL_MAX_PRIME: u64 = 13;
const PARSEVAL_REL_TOL: f64 = 1e-6;

type Suite = fn(&[VarietySpec], &ArithCache) -> Result<String, String>;

pub fn run(fault: Option<Fault>, log: &mut impl std::io::Write) -> Result<(), CliError> {
    let cache = match fault {
        Some(Fault::Moebius) => ArithCache::new(1000).with_moebius_override(2, 1),
        None => ArithCache::new(1000),
    };
    let varieties = catalog();
    let suites: [(&str, Suite); 8] = [
        ("moebius-direct", moebius_direct),
        ("enumeration-filters", enumeration_filters),
        ("lehmer-partition", lehmer_partition),
        ("visible-lehmer-partition", visible_lehmer_partition),
        ("family-partition", family_partition),
        ("parseval", parseval),
        ("kloosterman-bound", kloosterman_bound),
        ("hasse-residual", hasse_residual),
    ];
    for (name, suite) in suites {
        match suite(&varieties, &cache) {
            Ok(detail) => writeln!(log, "ok   {name}: {detail}")?,
            Err(detail) => {
                writeln!(log, "FAIL {name}: {detail}")?;
                return Err(CliError::Invariant(format!("{name}: {detail}")));
            }
        }
    }
    Ok(())
}

fn primes() -> Vec<u64> {
    primes_between(3, MAX_PRIME)
}

fn lib<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn moebius_direct(vs: &[VarietySpec], cache: &ArithCache) -> Result<String, String> {
    let mut n = 0;
    for v in vs {
        let unit = BoxRegion::unit(v.ambient_dim());
        for p in primes() {
            let direct = count_visible(v, p, &unit).map_err(lib)?.exact;
            let sieve = count_visible_via_moebius_with(v, p, &unit, cache).map_err(lib)?;
            if direct != sieve {
                return Err(format!(
                    "Möbius/direct mismatch on {} at p={p}: sieve {sieve}, direct {direct}",
                    v.label()
                ));
            }
            n += 1;
        }
    }
    Ok(format!("{n} instances"))
}

/// Region and progression filtering must agree with filtering the full
/// point list afterwards.
fn enumeration_filters(vs: &[VarietySpec], _: &ArithCache) -> Result<String, String> {
    let mut n = 0;
    for v in vs {
        let r = v.ambient_dim();
        let pairs: Vec<[&str; 2]> = (0..r)
            .map(|j| if j % 2 == 0 { ["1/4", "5/6"] } else { ["0", "2/3"] })
            .collect();
        let region = BoxRegion::parse(&pairs).map_err(lib)?;
        let prog: Vec<(u64, u64)> = (0..r).map(|j| (2 + j as u64 % 2, 1)).collect();
        for p in primes() {
            let e = Enumerator::new(v, p).map_err(lib)?;
            let all = e.points(&PointFilter::none()).map_err(lib)?;
            let want: Vec<Vec<u64>> = all
                .iter()
                .filter(|x| region.contains(x, p).unwrap_or(false))
                .filter(|x| x.iter().zip(&prog).all(|(&xj, &(a, b))| xj % a == b))
                .map(<[u64]>::to_vec)
                .collect();
            let filter = PointFilter::region(&region).with_progressions(prog.clone());
            let got = e.points(&filter).map_err(lib)?.to_vecs();
            if got != want {
                return Err(format!("{} at p={p}: filtered stream differs", v.label()));
            }
            n += 1;
        }
    }
    Ok(format!("{n} instances"))
}

fn residue_tuples(a: u64, r: usize) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..r {
        out = out
            .into_iter()
            .flat_map(|t: Vec<i64>| {
                (0..a as i64).map(move |b| {
                    let mut t = t.clone();
                    t.push(b);
                    t
                })
            })
            .collect();
    }
    out
}

fn lehmer_partition(vs: &[VarietySpec], _: &ArithCache) -> Result<String, String> {
    let mut n = 0;
    for v in vs {
        let r = v.ambient_dim();
        let unit = BoxRegion::unit(r);
        for p in primes().into_iter().filter(|&p| p > 3) {
            let total = Enumerator::new(v, p)
                .and_then(|e| e.count(&PointFilter::none()))
                .map_err(lib)?;
            let mut sum = 0;
            for b in residue_tuples(3, r) {
                let spec = CongruenceSpec::new(vec![3; r], &b).map_err(lib)?;
                sum += count_lehmer(v, p, &unit, &spec).map_err(lib)?.exact;
            }
            if sum != total {
                return Err(format!("{} at p={p}: classes sum to {sum}, #V = {total}", v.label()));
            }
            n += 1;
        }
    }
    Ok(format!("{n} partitions"))
}

fn visible_lehmer_partition(vs: &[VarietySpec], _: &ArithCache) -> Result<String, String> {
    let mut n = 0;
    for v in vs {
        let r = v.ambient_dim();
        let unit = BoxRegion::unit(r);
        for p in primes().into_iter().filter(|&p| p > 4) {
            let total = count_visible(v, p, &unit).map_err(lib)?.exact;
            let a = 4;
            let mut sum = 0;
            for b in residue_tuples(a, r) {
                let exact = count_visible_lehmer(v, p, &unit, a, &b).map_err(lib)?.exact;
                let g = b.iter().fold(a, |g, &x| gcd(g, x as u64));
                if g != 1 && exact != 0 {
                    return Err(format!(
                        "{} at p={p}: class {b:?} mod {a} has {exact} visible points",
                        v.label()
                    ));
                }
                sum += exact;
            }
            if sum != total {
                return Err(format!("{} at p={p}: classes sum to {sum}, visible = {total}", v.label()));
            }
            n += 1;
        }
    }
    Ok(format!("{n} partitions"))
}

/// Fibers of each defining system partition the ambient box. The full
/// spaces are swept as fibers of the first coordinate.
fn family_partition(vs: &[VarietySpec], _: &ArithCache) -> Result<String, String> {
    let mut n = 0;
    for v in vs {
        let r = v.ambient_dim();
        let family = if v.polys().is_empty() {
            VarietySpec::parse(format!("{} by x1", v.label()), r, &["x1"], r as u32 - 1, 1)
                .map_err(lib)?
        } else {
            v.clone()
        };
        for p in primes() {
            let report = sweep_family(&family, p, &BoxRegion::unit(r)).map_err(lib)?;
            if !report.partition_ok {
                return Err(format!("{} at p={p}: fibers do not partition", family.label()));
            }
            n += 1;
        }
    }
    Ok(format!("{n} sweeps"))
}

fn parseval(vs: &[VarietySpec], _: &ArithCache) -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for v in vs.iter().filter(|v| v.ambient_dim() <= 3) {
        for p in primes_between(3, PARSEVAL_MAX_PRIME) {
            let (lhs, rhs) = parseval_sides(v, p).map_err(lib)?;
            let rel = (lhs - rhs).abs() / rhs;
            worst = worst.max(rel);
            if rel > PARSEVAL_REL_TOL {
                return Err(format!("{} at p={p}: Σ|S|² = {lhs}, p^r #V = {rhs}", v.label()));
            }
        }
    }
    Ok(format!("max relative error {worst:.1e}"))
}

fn kloosterman_bound(vs: &[VarietySpec], _: &ArithCache) -> Result<String, String> {
    let v = vs
        .iter()
        .find(|v| v.label() == "xy=1")
        .ok_or("catalog lacks xy=1")?;
    for p in primes() {
        let engine = ExpSumEngine::new(v, p).map_err(lib)?;
        let bound = 2.0 * (p as f64).sqrt() + 1e-9;
        for (u, (re, im)) in engine.all_values() {
            if u.iter().any(|&x| x != 0) && re.hypot(im) > bound {
                return Err(format!("p={p} u={u:?}: |S| = {}", re.hypot(im)));
            }
        }
    }
    Ok("all u != 0".into())
}

fn hasse_residual(vs: &[VarietySpec], _: &ArithCache) -> Result<String, String> {
    for v in vs.iter().filter(|v| v.is_curve()) {
        for p in primes() {
            let rep = count_points(v, p).map_err(lib)?;
            let res = (rep.report.exact as f64 - p as f64).abs() / (p as f64).sqrt();
            if res > 2.0 {
                return Err(format!("{} at p={p}: residual {res}", v.label()));
            }
        }
    }
    Ok("curves within 2 sqrt(p)".into())
}
