//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use lehmer_visible::counting::{
    count_visible, count_visible_lehmer, count_visible_via_moebius, lehmer_class_ratio_experiment,
    opposite_parity_count,
};
use lehmer_visible::expsum::{incomplete_sum_total, parseval_sides, BoundKind, ExpSumEngine};
use lehmer_visible::family::sweep_family;
use lehmer_visible::numtheory::{gcd, phi_r, primes_between};
use lehmer_visible::region::{Interval, Rational};
use lehmer_visible::variety::{catalog, count_points};
use lehmer_visible::{BoxRegion, VarietySpec};

/// Relative tolerance on Σ|S(u)|² against p^r #V.
const PARSEVAL_REL_TOL: f64 = 1e-6;
/// Absolute tolerance on the p = 7 Kloosterman value.
const KLOOSTERMAN_VALUE_TOL: f64 = 1e-9;
/// Floating-point slack when comparing |S(u)| with 2 sqrt(p).
const KLOOSTERMAN_BOUND_SLACK: f64 = 1e-9;
/// Allowed relative distance of the class ratio from 4/3.
const RATIO_REL_TOL: f64 = 0.10;
/// Hasse-grade constant for the Lang-Weil residual.
const LANG_WEIL_SLACK: f64 = 2.0;

type Outcome = Result<String, String>;

fn odd_primes_upto(n: u64) -> Vec<u64> {
    primes_between(3, n)
}

fn hyperbola() -> VarietySpec {
    VarietySpec::parse("xy=1", 2, &["x1*x2 - 1"], 1, 2).unwrap()
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn moebius_matches_direct() -> Outcome {
    let boxes = [
        BoxRegion::unit(2),
        BoxRegion::parse(&[["1/3", "1"], ["0", "3/4"]]).unwrap(),
    ];
    let mut checked = 0;
    for v in catalog() {
        let r = v.ambient_dim();
        for p in odd_primes_upto(31) {
            for b in &boxes {
                let region = if r == 2 { b.clone() } else { BoxRegion::unit(r) };
                let direct = count_visible(&v, p, &region).map_err(err)?.exact;
                let sieve = count_visible_via_moebius(&v, p, &region).map_err(err)?;
                if direct != sieve {
                    return Err(format!("{} p={p}: direct {direct} vs sieve {sieve}", v.label()));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} instances equal"))
}

fn classical_lehmer() -> Outcome {
    let r13 = opposite_parity_count(13).map_err(err)?.count;
    if r13 != 6 {
        return Err(format!("r(13) = {r13}"));
    }
    let mut worst: f64 = 0.0;
    for p in [101u64, 499, 997, 4999] {
        let row = opposite_parity_count(p).map_err(err)?;
        let pf = p as f64;
        let bound = pf.sqrt() * pf.ln().powi(2);
        let dev = (row.count as f64 - pf / 2.0).abs();
        worst = worst.max(dev / bound);
        if dev > bound {
            return Err(format!("p={p}: |r(p) - p/2| = {dev} > {bound}"));
        }
    }
    Ok(format!("r(13)=6, max |r(p)-p/2|/(sqrt(p)log^2 p) = {worst:.4}"))
}

/// Tuples `b ∈ [0, a)^r` with `gcd(b, a) = 1`, by propagating the
/// distribution of `gcd(a, b_1, …, b_j)` one coordinate at a time.
fn coprime_tuple_oracle(a: u64, r: u32) -> u64 {
    let mut dist: BTreeMap<u64, u64> = BTreeMap::from([(a, 1)]);
    for _ in 0..r {
        let mut next = BTreeMap::new();
        for (&g, &n) in &dist {
            for b in 0..a {
                *next.entry(gcd(g, b)).or_insert(0) += n;
            }
        }
        dist = next;
    }
    dist.get(&1).copied().unwrap_or(0)
}

fn phi_oracle() -> Outcome {
    for a in 1..=128u64 {
        for r in 1..=4u32 {
            let got = phi_r(a, r).map_err(err)?;
            let want = coprime_tuple_oracle(a, r);
            if got != want {
                return Err(format!("phi_{r}({a}) = {got}, oracle {want}"));
            }
        }
    }
    Ok("512 values equal".into())
}

fn fractions_upto(den: i64) -> Vec<Rational> {
    let mut out: Vec<Rational> = (1..=den)
        .flat_map(|d| (0..=d).map(move |n| Rational::new(n, d)))
        .collect();
    out.sort();
    out.dedup();
    out
}

fn incomplete_sum_certificate() -> Outcome {
    let fracs = fractions_upto(8);
    let intervals: Vec<Interval> = fracs
        .iter()
        .flat_map(|&lo| fracs.iter().filter(move |&&hi| hi > lo).map(move |&hi| (lo, hi)))
        .map(|(lo, hi)| Interval::new(lo, hi).unwrap())
        .collect();
    let primes = primes_between(2, 499);
    let results: Vec<Result<(u64, f64), String>> = primes
        .par_iter()
        .map(|&p| {
            let mut cases = 0u64;
            let mut worst: f64 = 0.0;
            for a in 1..=10u64 {
                if gcd(a, p) != 1 {
                    continue;
                }
                for b in 0..a {
                    for i in &intervals {
                        let t = incomplete_sum_total(p, i, a, b).map_err(err)?;
                        if !t.holds {
                            return Err(format!(
                                "p={p} a={a} b={b} [{}, {}): {} > {}",
                                i.lo(),
                                i.hi(),
                                t.total,
                                t.bound
                            ));
                        }
                        worst = worst.max(t.total / t.bound);
                        cases += 1;
                    }
                }
            }
            Ok((cases, worst))
        })
        .collect();
    let mut cases = 0;
    let mut worst: f64 = 0.0;
    for r in results {
        let (c, w) = r?;
        cases += c;
        worst = worst.max(w);
    }
    Ok(format!("{cases} cases, max total/(2p log p) = {worst:.4}"))
}

fn parseval() -> Outcome {
    let mut worst: f64 = 0.0;
    for v in catalog().iter().filter(|v| v.ambient_dim() <= 3) {
        for p in odd_primes_upto(13) {
            let (lhs, rhs) = parseval_sides(v, p).map_err(err)?;
            let rel = (lhs - rhs).abs() / rhs;
            worst = worst.max(rel);
            if rel > PARSEVAL_REL_TOL {
                return Err(format!("{} p={p}: {lhs} vs {rhs}", v.label()));
            }
        }
    }
    Ok(format!("max relative error {worst:.2e}"))
}

fn kloosterman() -> Outcome {
    let v = hyperbola();
    let engine = ExpSumEngine::new(&v, 7).map_err(err)?;
    let (re, im) = engine.value(&[1, 1]).map_err(err)?;
    let oracle = 4.0 * (TAU / 7.0).cos() + 2.0 * (2.0 * TAU / 7.0).cos();
    if (re - oracle).abs() > KLOOSTERMAN_VALUE_TOL || im.abs() > KLOOSTERMAN_VALUE_TOL {
        return Err(format!("S(1,1) mod 7 = {re}+{im}i, oracle {oracle}"));
    }
    let mut worst_weil: f64 = 0.0;
    let mut worst_bombieri: f64 = 0.0;
    for p in odd_primes_upto(199) {
        let engine = ExpSumEngine::new(&v, p).map_err(err)?;
        let bound = 2.0 * (p as f64).sqrt();
        for (u, (re, im)) in engine.all_values() {
            if u.iter().all(|&x| x == 0) {
                continue;
            }
            let mag = re.hypot(im);
            worst_weil = worst_weil.max(mag / bound);
            if mag > bound + KLOOSTERMAN_BOUND_SLACK {
                return Err(format!("p={p} u={u:?}: |S| = {mag} > {bound}"));
            }
        }
        let sample: Vec<Vec<u64>> = (1..p).map(|a| vec![a, 1]).collect();
        for rec in engine.records(&sample, BoundKind::Bombieri, None).map_err(err)? {
            worst_bombieri = worst_bombieri.max(rec.ratio);
            if rec.ratio > 1.0 {
                return Err(format!("p={p} u={:?}: Bombieri ratio {}", rec.u, rec.ratio));
            }
        }
    }
    Ok(format!(
        "max |S|/2sqrt(p) = {worst_weil:.4}, max Bombieri ratio = {worst_bombieri:.2e}"
    ))
}

fn surface_trend() -> Outcome {
    let v = VarietySpec::parse("x3=x1x2", 3, &["x3 - x1*x2"], 2, 2).unwrap();
    let unit = BoxRegion::unit(3);
    let mut rel_errors = Vec::new();
    let mut normalized = Vec::new();
    for p in [101u64, 199, 499, 997] {
        let rep = count_visible(&v, p, &unit).map_err(err)?;
        let pf = p as f64;
        let scale = pf.powf(0.75 * 2.5) * pf.ln().powi(3);
        let norm = (rep.exact as f64 - rep.main_term).abs() / scale;
        if norm >= 1.0 {
            return Err(format!("p={p}: normalized deviation {norm}"));
        }
        normalized.push(norm);
        rel_errors.push(rep.relative_error().ok_or("zero main term")?);
    }
    if rel_errors.windows(2).any(|w| w[1] >= w[0]) {
        return Err(format!("relative errors not decreasing: {rel_errors:?}"));
    }
    Ok(format!(
        "normalized {:?}, relative {:?}",
        normalized.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>(),
        rel_errors.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>()
    ))
}

fn residue_tuples(a: u64, r: usize) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..r {
        out = out
            .into_iter()
            .flat_map(|t| {
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

fn visible_lehmer_classes() -> Outcome {
    let mut zero_checks = 0;
    let mut partitions = 0;
    for v in catalog() {
        let r = v.ambient_dim();
        let unit = BoxRegion::unit(r);
        for p in odd_primes_upto(31) {
            let total = count_visible(&v, p, &unit).map_err(err)?.exact;
            for a in (1..=4u64).filter(|&a| a < p) {
                let mut sum = 0;
                for b in residue_tuples(a, r) {
                    let rep = count_visible_lehmer(&v, p, &unit, a, &b).map_err(err)?;
                    let g = b.iter().fold(a, |g, &x| gcd(g, x as u64));
                    if g != 1 {
                        if rep.exact != 0 {
                            return Err(format!("{} p={p} a={a} b={b:?}: {}", v.label(), rep.exact));
                        }
                        zero_checks += 1;
                    }
                    sum += rep.exact;
                }
                if sum != total {
                    return Err(format!("{} p={p} a={a}: Σ_b = {sum}, visible = {total}", v.label()));
                }
                partitions += 1;
            }
        }
    }
    let ratio = lehmer_class_ratio_experiment(997, &BoxRegion::unit(2)).map_err(err)?;
    let rel = (ratio.ratio / (4.0 / 3.0) - 1.0).abs();
    if rel > RATIO_REL_TOL {
        return Err(format!("class ratio at 997 = {}", ratio.ratio));
    }
    Ok(format!(
        "{zero_checks} vanishing classes, {partitions} partitions, ratio {:.4}",
        ratio.ratio
    ))
}

fn family_sweep() -> Outcome {
    let xy = VarietySpec::parse("xy-c", 2, &["x1*x2"], 1, 2).unwrap();
    let table = sweep_family(&xy, 7, &BoxRegion::unit(2)).map_err(err)?;
    let zero = table.fiber(&[0]).ok_or("missing c=0")?;
    if (zero.points, zero.visible) != (13, 2) {
        return Err(format!("c=0: {} points, {} visible", zero.points, zero.visible));
    }
    for c in 1..7 {
        let pts = table.fiber(&[c]).ok_or("missing fiber")?.points;
        if pts != 6 {
            return Err(format!("c={c}: {pts} points"));
        }
    }
    let total: u64 = table.per_fiber.iter().map(|f| f.points).sum();
    if total != 49 {
        return Err(format!("Σ points = {total}"));
    }
    let families = [
        xy.clone(),
        VarietySpec::parse("x1^2+3x2", 2, &["x1^2 + 3*x2"], 1, 2).unwrap(),
        VarietySpec::parse("x1x2x3", 3, &["x1*x2*x3"], 2, 3).unwrap(),
        VarietySpec::parse("pair", 3, &["x1 + x2", "x2*x3"], 1, 2).unwrap(),
    ];
    let mut ratios = Vec::new();
    for f in &families {
        let r = f.ambient_dim();
        for p in odd_primes_upto(31) {
            let rep = sweep_family(f, p, &BoxRegion::unit(r)).map_err(err)?;
            if !rep.partition_ok {
                return Err(format!("{} p={p}: partition failed", f.label()));
            }
            if p == 31 {
                ratios.push(format!("{}: {:.3e}", f.label(), rep.ratio));
            }
        }
    }
    Ok(format!("fiber table ok, partitions exact; p=31 ratios {ratios:?}"))
}

fn lang_weil() -> Outcome {
    let curves = [
        hyperbola(),
        VarietySpec::parse("y^2=x^3+x", 2, &["x2^2 - x1^3 - x1"], 1, 3).unwrap(),
    ];
    let primes = odd_primes_upto(10_000);
    let mut worst: f64 = 0.0;
    for v in &curves {
        let residuals: Vec<Result<f64, String>> = primes
            .par_iter()
            .map(|&p| {
                let rep = count_points(v, p).map_err(err)?;
                let res = (rep.report.exact as f64 - p as f64).abs() / (p as f64).sqrt();
                if res > LANG_WEIL_SLACK {
                    Err(format!("{} p={p}: residual {res}", v.label()))
                } else {
                    Ok(res)
                }
            })
            .collect();
        for r in residuals {
            worst = worst.max(r?);
        }
    }
    Ok(format!("{} primes, max residual {worst:.4}", primes.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Duration); 10] = [
        ("moebius-matches-direct", moebius_matches_direct, Duration::from_secs(10)),
        ("classical-lehmer", classical_lehmer, Duration::from_secs(30)),
        ("phi-r-oracle", phi_oracle, Duration::from_secs(10)),
        ("incomplete-sum-certificate", incomplete_sum_certificate, Duration::from_secs(120)),
        ("parseval", parseval, Duration::from_secs(60)),
        ("kloosterman-calibration", kloosterman, Duration::from_secs(60)),
        ("surface-trend", surface_trend, Duration::from_secs(300)),
        ("visible-lehmer-classes", visible_lehmer_classes, Duration::from_secs(120)),
        ("family-sweep", family_sweep, Duration::from_secs(60)),
        ("lang-weil-ladder", lang_weil, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > *limit => {
                Err(format!("{detail}; took {elapsed:.1?}, limit {limit:?}"))
            }
            other => other,
        };
        match outcome {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail}) [{elapsed:.2?}]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({detail}) [{elapsed:.2?}]", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
