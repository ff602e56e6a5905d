use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lehmer_visible::counting::{
    count_lehmer, count_visible_lehmer_with, count_visible_via_moebius, count_visible_with,
    opposite_parity_count, BudgetOptions, CongruenceSpec,
};
use lehmer_visible::expsum::{bound_formula, incomplete_sum_total, BoundKind, ExpSumEngine};
use lehmer_visible::family::{fiber_sieve_mass, sweep_family_with, SweepOptions};
use lehmer_visible::variety::{default_lang_weil_constant, lang_weil_ladder};
use lehmer_visible::{Budget, CountReport, Enumerator, Interval, PointFilter, Quantity};

use crate::config::{BoundChoice, LadderQuantity, Sweep, Task, Validated};
use crate::error::CliError;
use crate::output::{count_row, joined, Output, COUNT_HEADER};

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub seed: u64,
    pub scale_guard_override: bool,
}

pub fn run(config: &Validated, options: &RunOptions) -> Result<Output, CliError> {
    match &config.task {
        Task::Points { dump } => points(config, *dump),
        Task::Lehmer { moduli, residues } => lehmer(config, moduli, residues),
        Task::Visible {
            delta_assert,
            constant,
        } => visible(config, budget_options(*delta_assert, *constant)),
        Task::VisibleLehmer {
            a,
            residues,
            delta_assert,
            constant,
        } => visible_lehmer(config, *a, residues, budget_options(*delta_assert, *constant)),
        Task::Expsum {
            u,
            bound,
            delta_assert,
        } => expsum(config, u, *bound, *delta_assert, options.seed),
        Task::Lemma1 { a, b } => incomplete_sums(config, *a, *b),
        Task::Family { sieve_k } => family(config, *sieve_k, options),
        Task::Ladder { quantity } => match quantity {
            LadderQuantity::LehmerClassical => lehmer_classical(config),
            LadderQuantity::LangWeil => lang_weil(config),
        },
    }
}

fn budget_options(delta: Option<i32>, constant: Option<f64>) -> BudgetOptions {
    BudgetOptions {
        constant: constant.unwrap_or(1.0),
        delta,
    }
}

fn points(config: &Validated, dump: bool) -> Result<Output, CliError> {
    let v = config.variety();
    let region = config.region_or_unit(v.ambient_dim());
    let mut out = Output::new("points", &COUNT_HEADER);
    let constant = default_lang_weil_constant(v.degree());
    for &p in &config.primes {
        let enumerator = Enumerator::new(v, p)?;
        let filter = PointFilter::region(&region);
        let exact = if dump {
            let stream = enumerator.points(&filter)?;
            out.side_files
                .push((format!("points-p{p}.csv"), stream.to_csv()));
            stream.len() as u64
        } else {
            enumerator.count(&filter)?
        };
        let pf = p as f64;
        let n = v.dim() as f64;
        let report = CountReport::new(
            v.label(),
            p,
            Quantity::Points,
            exact,
            region.volume_f64()? * pf.powf(n),
            Budget::new("C*p^(n-1/2), C=(d-1)(d-2)+d", constant * pf.powf(n - 0.5)),
            Vec::new(),
        );
        out.row(count_row(&report));
        out.record(&report)?;
    }
    Ok(out)
}

fn lehmer(config: &Validated, moduli: &[u64], residues: &[i64]) -> Result<Output, CliError> {
    let v = config.variety();
    let region = config.region_or_unit(v.ambient_dim());
    let spec = CongruenceSpec::new(moduli.to_vec(), residues)?;
    let mut out = Output::new("lehmer", &COUNT_HEADER);
    for &p in &config.primes {
        let report = count_lehmer(v, p, &region, &spec)?;
        out.row(count_row(&report));
        out.record(&report)?;
    }
    Ok(out)
}

fn visible(config: &Validated, options: BudgetOptions) -> Result<Output, CliError> {
    let v = config.variety();
    let region = config.region_or_unit(v.ambient_dim());
    let mut out = Output::new("visible", &COUNT_HEADER);
    for &p in &config.primes {
        let report = count_visible_with(v, p, &region, &options)?;
        let sieve = count_visible_via_moebius(v, p, &region)?;
        if sieve != report.exact {
            out.violations.push(format!(
                "{} p={p}: Möbius/direct mismatch, sieve {sieve} vs direct {}",
                v.label(),
                report.exact
            ));
        }
        out.row(count_row(&report));
        out.record(&report)?;
    }
    Ok(out)
}

fn visible_lehmer(
    config: &Validated,
    a: u64,
    residues: &[i64],
    options: BudgetOptions,
) -> Result<Output, CliError> {
    let v = config.variety();
    let region = config.region_or_unit(v.ambient_dim());
    let mut out = Output::new("visible-lehmer", &COUNT_HEADER);
    for &p in &config.primes {
        let report = count_visible_lehmer_with(v, p, &region, a, residues, &options)?;
        out.row(count_row(&report));
        out.record(&report)?;
    }
    Ok(out)
}

fn expsum(
    config: &Validated,
    sweep: &Sweep,
    bound: BoundChoice,
    delta: Option<i32>,
    seed: u64,
) -> Result<Output, CliError> {
    let v = config.variety();
    let kind = match bound {
        BoundChoice::Bombieri => BoundKind::Bombieri,
        BoundChoice::Katz => BoundKind::Katz,
        BoundChoice::WeilKloosterman => BoundKind::WeilKloosterman,
    };
    let mut out = Output::new(
        "expsum",
        &[
            "label",
            "p",
            "u",
            "re",
            "im",
            "magnitude",
            "bound",
            "ratio",
            "bound_kind",
            "budget_formula",
        ],
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = v.ambient_dim();
    for &p in &config.primes {
        let engine = ExpSumEngine::new(v, p)?;
        let records = match sweep {
            Sweep::All => engine.all_records(kind, delta)?,
            Sweep::List(list) => engine.records(list, kind, delta)?,
            Sweep::Sample(n) => {
                let sample: Vec<Vec<u64>> = (0..*n)
                    .map(|_| loop {
                        let u: Vec<u64> = (0..r).map(|_| rng.gen_range(0..p)).collect();
                        if u.iter().any(|&x| x != 0) {
                            break u;
                        }
                    })
                    .collect();
                engine.records(&sample, kind, delta)?
            }
        };
        for rec in &records {
            out.row(vec![
                v.label().to_string(),
                p.to_string(),
                joined(&rec.u),
                rec.re.to_string(),
                rec.im.to_string(),
                rec.magnitude.to_string(),
                rec.bound.to_string(),
                rec.ratio.to_string(),
                rec.bound_kind.as_str().to_string(),
                bound_formula(rec.bound_kind).to_string(),
            ]);
            out.record(rec)?;
            if rec.ratio > 1.0 {
                out.warnings.push(format!(
                    "p={p} u={}: ratio {} exceeds the {} bound",
                    joined(&rec.u),
                    rec.ratio,
                    rec.bound_kind.as_str()
                ));
            }
        }
    }
    Ok(out)
}

fn incomplete_sums(config: &Validated, a: u64, b: u64) -> Result<Output, CliError> {
    let interval = match &config.region {
        Some(region) => region.intervals()[0].clone(),
        None => Interval::unit(),
    };
    let mut out = Output::new(
        "lemma1",
        &["p", "a", "b", "lo", "hi", "total", "bound", "holds", "budget_formula"],
    );
    for &p in &config.primes {
        let t = incomplete_sum_total(p, &interval, a, b)?;
        if !t.holds {
            out.violations.push(format!(
                "p={p} a={a} b={b}: total {} exceeds 2p log p = {}",
                t.total, t.bound
            ));
        }
        out.row(vec![
            p.to_string(),
            a.to_string(),
            b.to_string(),
            t.interval.0.clone(),
            t.interval.1.clone(),
            t.total.to_string(),
            t.bound.to_string(),
            t.holds.to_string(),
            "2p*log(p)".to_string(),
        ]);
        out.record(&t)?;
    }
    Ok(out)
}

fn family(config: &Validated, sieve_k: Option<u64>, options: &RunOptions) -> Result<Output, CliError> {
    let v = config.variety();
    let region = config.region_or_unit(v.ambient_dim());
    let sweep_options = SweepOptions {
        scale_guard_override: options.scale_guard_override,
    };
    let mut out = Output::new(
        "family",
        &[
            "p",
            "c",
            "points",
            "visible",
            "deviation",
            "total_deviation",
            "averaging_budget",
            "budget_formula",
        ],
    );
    for &p in &config.primes {
        let report = sweep_family_with(v, p, &region, &sweep_options)?;
        for row in &report.per_fiber {
            out.row(vec![
                p.to_string(),
                row.c_joined(),
                row.points.to_string(),
                row.visible.to_string(),
                row.deviation.to_string(),
                String::new(),
                String::new(),
                report.budget_formula.clone(),
            ]);
        }
        out.row(vec![
            p.to_string(),
            "total".into(),
            report.per_fiber.iter().map(|f| f.points).sum::<u64>().to_string(),
            report.per_fiber.iter().map(|f| f.visible).sum::<u64>().to_string(),
            String::new(),
            report.total_deviation.to_string(),
            report.averaging_budget.to_string(),
            report.budget_formula.clone(),
        ]);
        if !report.partition_ok {
            out.violations
                .push(format!("{} p={p}: fiber counts do not partition the box", v.label()));
        }
        out.warnings.extend(report.warnings.iter().cloned());
        out.record(&report)?;
        if let Some(k) = sieve_k {
            let mass = fiber_sieve_mass(v, p, &region, k)?;
            if mass.exceeds {
                out.warnings.push(format!(
                    "p={p} k={k}: sieve mass {} exceeds {}",
                    mass.mass, mass.bound
                ));
            }
            out.row(vec![
                p.to_string(),
                format!("sieve-mass(k={k})"),
                mass.mass.to_string(),
                String::new(),
                String::new(),
                String::new(),
                mass.bound.to_string(),
                "|pI_1|...|pI_r|/k^r".into(),
            ]);
            out.record(&mass)?;
        }
    }
    Ok(out)
}

fn lehmer_classical(config: &Validated) -> Result<Output, CliError> {
    let mut out = Output::new(
        "ladder",
        &["p", "count", "main_term", "deviation", "budget", "budget_formula"],
    );
    for &p in &config.primes {
        let row = opposite_parity_count(p)?;
        out.row(vec![
            p.to_string(),
            row.count.to_string(),
            row.main_term.to_string(),
            row.deviation.to_string(),
            row.budget.to_string(),
            "sqrt(p)log^2(p)".into(),
        ]);
        out.record(&row)?;
    }
    Ok(out)
}

fn lang_weil(config: &Validated) -> Result<Output, CliError> {
    let v = config.variety();
    let ladder = lang_weil_ladder(v, &config.primes)?;
    let mut header = COUNT_HEADER.to_vec();
    header.extend(["residual", "constant", "exceeds"]);
    let mut out = Output::new("ladder", &header);
    for rep in &ladder.reports {
        let mut row = count_row(&rep.report);
        row.extend([
            rep.residual.to_string(),
            rep.constant.to_string(),
            rep.exceeds.to_string(),
        ]);
        out.row(row);
    }
    if ladder.irreducibility_warning {
        out.warnings.push(format!(
            "{}: Lang-Weil residual exceeds its constant at the largest primes; V may not be absolutely irreducible",
            v.label()
        ));
    }
    out.record(&ladder)?;
    Ok(out)
}

