//! Verb dispatch: each verb turns a config into files and a [`RunReport`].

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use lpmax_core::cnd::{build_fp, cnd_test, pmin_search, Battery, Verdict};
use lpmax_core::diagnostics::{
    ec_sequence, ergodicity_diagnostic, mixing_report, noise_invariance_check, stationarity_moment_check, Probe,
};
use lpmax_core::field::LpSimulator;
use lpmax_core::stats::{ks_two_sample, Z99};
use lpmax_core::stdf::{ec_bounds_from, extremal_coefficient, fidi_cdf_mc, madogram_ec, PathBank, StdfEvaluator};
use lpmax_core::transform::transform_p_to_q;
use lpmax_core::{derive_seed, BoundModel, Estimate, FieldJob, PIndex, SampleMatrix, Truncation};
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, StdfSource, Verb};
use crate::error::{CliError, Result};
use crate::output::{fmt_f64, OutputSet, RunReport, Status};
use crate::parallel::{simulate_matrix, thread_pool};
use crate::plotdata::{cdf_grid_rows, cesaro_rows, ec_sequence_rows, emit_plotdata};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub threads: Option<usize>,
    /// Store wall-clock time in the report, which makes it nondeterministic.
    pub record_timing: bool,
}

struct Outcome {
    status: Status,
    metrics: Value,
    required: Option<usize>,
}

impl Outcome {
    fn new(status: Status, metrics: Value) -> Self {
        Self { status, metrics, required: None }
    }
}

/// Runs `config`, writes its files and returns the report path and report.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<(PathBuf, RunReport)> {
    config.validate()?;
    let pool = thread_pool(opts.threads)?;
    let start = Instant::now();
    let mut out = OutputSet::new(config)?;
    let outcome = pool.install(|| dispatch(config, &mut out))?;
    let report = RunReport {
        software: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        config_hash: out.hash().to_string(),
        status: outcome.status,
        metrics: outcome.metrics,
        files: Vec::new(),
        required_replicates: outcome.required,
        wall_clock_seconds: opts.record_timing.then(|| start.elapsed().as_secs_f64()),
    };
    out.finish(report)
}

fn dispatch(c: &ExperimentConfig, out: &mut OutputSet) -> Result<Outcome> {
    match c.verb {
        Verb::Simulate => run_simulate(c, out),
        Verb::Fidi => run_fidi(c, out),
        Verb::Ec => run_ec(c, out),
        Verb::Bounds => run_bounds(c, out),
        Verb::CndCheck => run_cnd(c, out),
        Verb::Pmin => run_pmin(c, out),
        Verb::TransformCheck => run_transform(c, out),
        Verb::Diagnose => run_diagnose(c, out),
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn bound(c: &ExperimentConfig) -> Result<BoundModel> {
    Ok(c.model.bind(&c.sites)?)
}

fn truncation(c: &ExperimentConfig, b: &BoundModel) -> Result<Truncation> {
    c.truncation.resolve(b, c.p()?)
}

fn job(c: &ExperimentConfig) -> Result<FieldJob> {
    let b = bound(c)?;
    Ok(FieldJob::new(&c.model, &c.sites, c.p()?, c.route, truncation(c, &b)?)?)
}

fn index_of(c: &ExperimentConfig, label: i64) -> Result<usize> {
    c.sites.index_of(label).ok_or_else(|| CliError::Config(format!("site {label} is not in the site set")))
}

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

fn closed_stdf(b: &BoundModel, p: PIndex) -> Option<StdfEvaluator> {
    StdfEvaluator::closed_form(b, p)
}

/// Replicates needed to bring a 99% half-width `hw` from `m` replicates
/// down to `tol`.
/// Kolmogorov distribution quantile at 0.99.
const KS_99: f64 = 1.6276;

fn required_replicates(m: usize, hw: f64, tol: f64) -> usize {
    (m as f64 * (hw / tol).powi(2)).ceil() as usize
}

fn run_simulate(c: &ExperimentConfig, out: &mut OutputSet) -> Result<Outcome> {
    let job = job(c)?;
    let mat = simulate_matrix(&job, c.seed, c.replicates);
    if c.output.matrix {
        out.write_matrix(&mat, c.output.binary)?;
    }
    let metrics = json!({
        "route": job.route(),
        "replicates": mat.replicates(),
        "sites": c.sites.labels(),
        "truncation": job.truncation_report(),
    });
    Ok(Outcome::new(Status::Pass, metrics))
}

fn default_grid(n: usize) -> Vec<Vec<f64>> {
    const LEVELS: [f64; 3] = [0.5, 1.0, 2.0];
    if n > 3 {
        return LEVELS.iter().map(|&v| vec![v; n]).collect();
    }
    let mut grid = vec![Vec::new()];
    for _ in 0..n {
        grid = grid.into_iter().flat_map(|g| LEVELS.iter().map(move |&v| [g.clone(), vec![v]].concat())).collect();
    }
    grid
}

fn run_fidi(c: &ExperimentConfig, out: &mut OutputSet) -> Result<Outcome> {
    let p = c.p()?;
    let b = bound(c)?;
    let job = job(c)?;
    let mat = simulate_matrix(&job, c.seed, c.replicates);
    let grid = if c.check.points.is_empty() { default_grid(c.sites.len()) } else { c.check.points.clone() };
    let m = mat.replicates() as f64;
    let closed = closed_stdf(&b, p);
    let mut empirical = Vec::new();
    let mut reference = Vec::new();
    for (k, x) in grid.iter().enumerate() {
        if x.len() != c.sites.len() {
            return Err(CliError::Config(format!("grid point {k} has {} coordinates", x.len())));
        }
        let e = mat.joint_cdf(x);
        empirical.push(Estimate { value: e, se: (e * (1.0 - e) / m).sqrt(), n: mat.replicates() });
        reference.push(match &closed {
            Some(l) => {
                if x.iter().any(|v| !(*v > 0.0)) {
                    return Err(lpmax_core::Error::Domain("cdf arguments must be positive".into()).into());
                }
                let inv: Vec<f64> = x.iter().map(|v| 1.0 / v).collect();
                Estimate::exact((-l.eval(&inv)?.value).exp())
            }
            None => fidi_cdf_mc(&b, p, x, c.replicates, derive_seed(c.seed, 1))?,
        });
    }
    let errors: Vec<f64> = empirical.iter().zip(&reference).map(|(a, b)| (a.value - b.value).abs()).collect();
    let sup = errors.iter().copied().fold(0.0, f64::max);
    let hw = empirical.iter().zip(&reference).map(|(a, b)| Z99 * a.se.hypot(b.se)).fold(0.0, f64::max);
    let tol = c.tolerances.cdf;
    let (status, required) = if sup < tol {
        (Status::Pass, None)
    } else if hw > tol {
        (Status::Inconclusive, Some(required_replicates(c.replicates, hw, tol)))
    } else {
        (Status::Fail, None)
    };
    let mut csv = String::from("point,x,empirical,empirical_se,reference,reference_se,abs_error\n");
    for (k, x) in grid.iter().enumerate() {
        let xs: Vec<String> = x.iter().map(|v| fmt_f64(*v)).collect();
        let (e, r) = (&empirical[k], &reference[k]);
        writeln!(csv, "{k},{},{},{},{},{},{}", xs.join(";"), fmt_f64(e.value), fmt_f64(e.se), fmt_f64(r.value), fmt_f64(r.se), fmt_f64(errors[k]))
            .unwrap();
    }
    out.write_csv(".csv", &csv)?;
    if c.output.plotdata {
        out.write(".plot.csv", emit_plotdata(&cdf_grid_rows(&empirical, &reference)).as_bytes())?;
    }
    let metrics = json!({
        "reference": if closed.is_some() { "closed-form" } else { "monte-carlo" },
        "sup_abs_error": sup,
        "max_half_width": hw,
        "tol": tol,
        "truncation": job.truncation_report(),
        "grid_points": grid.len(),
    });
    Ok(Outcome { status, metrics, required })
}

fn run_ec(c: &ExperimentConfig, out: &mut OutputSet) -> Result<Outcome> {
    let p = c.p()?;
    let b = bound(c)?;
    let job = job(c)?;
    let mat = simulate_matrix(&job, c.seed, c.replicates);
    let subsets: Vec<Vec<usize>> = if c.check.subsets.is_empty() {
        all_pairs(c.sites.len()).into_iter().map(|(i, j)| vec![i, j]).collect()
    } else {
        c.check.subsets.iter().map(|s| s.iter().map(|&l| index_of(c, l)).collect()).collect::<Result<_>>()?
    };
    let target_l = match closed_stdf(&b, p) {
        Some(l) => l,
        None => StdfEvaluator::MonteCarlo(PathBank::from_sampler(&b, p, c.replicates.max(2), derive_seed(c.seed, 1))?),
    };
    let tol = c.tolerances.ec;
    let mut rows = Vec::new();
    let mut csv = String::from("subset,theta,se,ci_lo,ci_hi,target,target_se,madogram,pass\n");
    let (mut all_pass, mut worst_hw) = (true, 0.0f64);
    for s in &subsets {
        let th = extremal_coefficient(&mat, s)?;
        let target = target_l.extremal_coefficient(s)?;
        let mdg = if s.len() == 2 { Some(madogram_ec(&mat, s[0], s[1])?) } else { None };
        let pass = (th.theta - target.value).abs() <= tol;
        all_pass &= pass;
        let hw = Z99 * th.se.hypot(target.se);
        worst_hw = worst_hw.max(hw);
        let labels: Vec<String> = th.sites.iter().map(i64::to_string).collect();
        let (lo, hi) = th.estimate().ci();
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{pass}",
            labels.join(";"),
            fmt_f64(th.theta),
            fmt_f64(th.se),
            fmt_f64(lo),
            fmt_f64(hi),
            fmt_f64(target.value),
            fmt_f64(target.se),
            mdg.map(fmt_f64).unwrap_or_default()
        )
        .unwrap();
        rows.push(json!({ "estimate": th, "target": target, "madogram": mdg, "pass": pass }));
    }
    out.write_csv(".csv", &csv)?;
    let (status, required) = if all_pass {
        (Status::Pass, None)
    } else if worst_hw > tol {
        (Status::Inconclusive, Some(required_replicates(c.replicates, worst_hw, tol)))
    } else {
        (Status::Fail, None)
    };
    Ok(Outcome { status, metrics: json!({ "tol": tol, "subsets": rows }), required })
}

fn run_bounds(c: &ExperimentConfig, out: &mut OutputSet) -> Result<Outcome> {
    let p = c.p()?;
    let b = bound(c)?;
    let job = job(c)?;
    let mat = simulate_matrix(&job, c.seed, c.replicates);
    let pairs = if c.check.pairs.is_empty() {
        all_pairs(c.sites.len())
    } else {
        c.check.pairs.iter().map(|[a, b]| Ok((index_of(c, *a)?, index_of(c, *b)?))).collect::<Result<_>>()?
    };
    let rows = ec_bounds_from(&mat, &b, p, &pairs, c.replicates, derive_seed(c.seed, 1))?;
    let mut csv = String::from("pair,lower,estimate,upper,pass,lower_se,estimate_se,upper_se,tol_lower,tol_upper\n");
    for r in &rows {
        writeln!(
            csv,
            "{};{},{},{},{},{},{},{},{},{},{}",
            r.pair.0,
            r.pair.1,
            fmt_f64(r.lower.value),
            fmt_f64(r.theta.theta),
            fmt_f64(r.upper.value),
            r.pass,
            fmt_f64(r.lower.se),
            fmt_f64(r.theta.se),
            fmt_f64(r.upper.se),
            fmt_f64(r.tol_lower),
            fmt_f64(r.tol_upper)
        )
        .unwrap();
    }
    out.write_csv(".csv", &csv)?;
    let pass = rows.iter().all(|r| r.pass);
    Ok(Outcome::new(Status::from_pass(pass), json!({ "pairs": rows })))
}

fn stdf_for(c: &ExperimentConfig) -> Result<StdfEvaluator> {
    let n = c.sites.len();
    Ok(match c.check.stdf {
        StdfSource::Independence => StdfEvaluator::Independence { n },
        StdfSource::Logistic { r } => StdfEvaluator::Logistic { r, n },
        StdfSource::Model { p } => {
            let b = bound(c)?;
            match closed_stdf(&b, p) {
                Some(l) => l,
                None => StdfEvaluator::MonteCarlo(PathBank::from_sampler(&b, p, c.replicates.max(2), c.seed)?),
            }
        }
    })
}

fn unit_vectors(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

fn run_cnd(c: &ExperimentConfig, out: &mut OutputSet) -> Result<Outcome> {
    let p = c.p()?;
    let l = stdf_for(c)?;
    let points = if c.check.points.is_empty() { unit_vectors(c.sites.len()) } else { c.check.points.clone() };
    let cert = cnd_test(&build_fp(&l, p.get())?, &points, c.tolerances.eig)?;
    let json = serde_json::to_string_pretty(&cert).expect("certificates serialize") + "\n";
    out.write(".certificate.json", json.as_bytes())?;
    let status = match cert.verdict {
        Verdict::NoViolationFound => Status::Pass,
        Verdict::Violation => Status::Fail,
        Verdict::Inconclusive => Status::Inconclusive,
    };
    Ok(Outcome { status, required: cert.required_replicates, metrics: json!({ "stdf": l.describe(), "certificate": cert }) })
}

fn run_pmin(c: &ExperimentConfig, out: &mut OutputSet) -> Result<Outcome> {
    let l = stdf_for(c)?;
    let battery = Battery::default_for(c.sites.len(), c.check.battery_seed);
    let r = pmin_search(&l, &battery, c.tolerances.bisect, c.tolerances.eig)?;
    let mut csv = String::from("p,verdict,lambda_max,threshold\n");
    for s in &r.steps {
        writeln!(
            csv,
            "{},{},{},{}",
            fmt_f64(s.p),
            to_value(&s.verdict).as_str().unwrap_or_default(),
            fmt_f64(s.certificate.lambda_max),
            fmt_f64(s.certificate.threshold)
        )
        .unwrap();
    }
    out.write_csv(".csv", &csv)?;
    let status = if r.inconclusive { Status::Inconclusive } else { Status::Pass };
    let required = r.steps.iter().filter_map(|s| s.certificate.required_replicates).max();
    Ok(Outcome { status, required, metrics: json!({ "stdf": l.describe(), "result": r }) })
}

fn run_transform(c: &ExperimentConfig, out: &mut OutputSet) -> Result<Outcome> {
    let p = c.p()?;
    if p.is_infinite() {
        return Err(CliError::Config("transform-check needs finite p".into()));
    }
    let q = c.q.ok_or_else(|| CliError::Config("transform-check needs q".into()))?;
    let b = bound(c)?;
    let direct = job(c)?;
    let wq = transform_p_to_q(&b, p.get(), q)?;
    let lq = LpSimulator::new(&wq, q, Truncation::FixedCount { n: c.check.q_points })?;
    let a = simulate_matrix(&direct, c.seed, c.replicates);
    let z: SampleMatrix = simulate_matrix(&lq, derive_seed(c.seed, 1), c.replicates);
    let n = c.sites.len();
    let all: Vec<usize> = (0..n).collect();
    let mut ks: Vec<(String, f64)> =
        (0..n).map(|i| (c.sites.labels()[i].to_string(), ks_two_sample(&a.column(i), &z.column(i)))).collect();
    ks.push(("max".to_string(), ks_two_sample(&a.subset_max(&all), &z.subset_max(&all))));
    let tol = c.tolerances.ks;
    let mut csv = String::from("statistic,ks,pass\n");
    for (name, d) in &ks {
        writeln!(csv, "{name},{},{}", fmt_f64(*d), *d < tol).unwrap();
    }
    out.write_csv(".csv", &csv)?;
    let pass = ks.iter().all(|(_, d)| *d < tol);
    // 99% critical value of the two-sample statistic for equal sizes m.
    let critical = KS_99 * (2.0 / c.replicates as f64).sqrt();
    let (status, required) = if pass {
        (Status::Pass, None)
    } else if critical > tol {
        (Status::Inconclusive, Some(required_replicates(c.replicates, critical, tol)))
    } else {
        (Status::Fail, None)
    };
    let rows: Vec<Value> = ks.iter().map(|(s, d)| json!({ "statistic": s, "ks": d, "pass": *d < tol })).collect();
    let metrics = json!({
        "p": p,
        "q": q,
        "q_points": c.check.q_points,
        "direct_route": direct.route(),
        "tol": tol,
        "critical_99": critical,
        "ks": rows,
    });
    Ok(Outcome { status, metrics, required })
}

fn run_diagnose(c: &ExperimentConfig, out: &mut OutputSet) -> Result<Outcome> {
    let p = c.p()?;
    let r = c.check.max_lag;
    if r < 1 {
        return Err(CliError::Config("max_lag must be at least 1".into()));
    }
    let lags: Vec<i64> = (1..=r).collect();
    let span = lpmax_core::SiteSet::range(0, r)?;
    let trunc = c.truncation.resolve(&c.model.bind(&span)?, p)?;
    let tol = c.tolerances.mixing;
    let seq = ec_sequence(&c.model, p, 0, &lags, trunc, c.replicates, c.seed)?;
    let ergodic = ergodicity_diagnostic(&seq, tol);
    let noise = noise_invariance_check(&seq, tol);
    let stationarity = if c.check.shifts.is_empty() {
        None
    } else {
        let m = c.replicates.max(2);
        let seed = derive_seed(c.seed, 3);
        Some(stationarity_moment_check(&c.model, p, &Probe::default_set(), &c.check.shifts, m, 4 * m, seed)?)
    };
    let mut csv = String::from("lag,theta,theta_se,mean_max,mean_max_se,cesaro,lower,upper,sandwich_pass\n");
    for (k, row) in noise.rows.iter().enumerate() {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            row.lag,
            fmt_f64(row.theta),
            fmt_f64(seq.theta[k].se),
            fmt_f64(seq.mean_max[k].value),
            fmt_f64(seq.mean_max[k].se),
            fmt_f64(ergodic.cesaro[k]),
            fmt_f64(row.lower),
            fmt_f64(row.upper),
            row.pass
        )
        .unwrap();
    }
    out.write_csv(".csv", &csv)?;
    if c.output.plotdata {
        out.write(".plot.csv", emit_plotdata(&ec_sequence_rows(&seq)).as_bytes())?;
        out.write(".cesaro.plot.csv", emit_plotdata(&cesaro_rows(&seq, &ergodic)).as_bytes())?;
    }
    let pass = noise.pass && stationarity.as_ref().is_none_or(|s| s.pass);
    let mixing = mixing_report(seq, tol);
    let metrics = json!({
        "tol": tol,
        "max_lag": r,
        "consistent_with_mixing": mixing.consistent_with_mixing,
        "consistent_with_ergodicity": ergodic.consistent_with_ergodicity,
        "beta_bound": mixing.beta_bound,
        "noise_invariance": {
            "pass": noise.pass,
            "theta_reaches": noise.theta_reaches,
            "mean_max_reaches": noise.mean_max_reaches,
            "sandwich_violations": noise.rows.iter().filter(|r| !r.pass).map(|r| r.lag).collect::<Vec<_>>(),
        },
        "stationarity": stationarity,
    });
    Ok(Outcome::new(Status::from_pass(pass), metrics))
}
