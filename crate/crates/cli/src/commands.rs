//! Verb dispatch.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lfpp_core::estimate::{fit_scaling_exponent, order_quantile, replicate, xi_bounds_of_gamma, MonteCarlo, SampleSet};
use lfpp_core::experiments::{run_with, ExperimentKind, ExperimentSpec, Outcome, Param, Report, Verdict};
use lfpp_core::lfpp::{across_annulus, around_annulus, build_weighted_grid, crossing_length, distance, Square};
use lfpp_core::store::{
    parse_ladder, read_config, report_from_str, save_field, write_report, write_report_csv, CsvTable, RunConfig,
};
use lfpp_core::{AnnulusSpec, DistanceResult, GridSpec, Point, WeightedGrid};

use crate::fixture::Fixture;
use crate::output::{ensure_dir, out_paths, print_summary, print_verdicts, write_query, QueryReport};
use crate::{AnnulusArgs, Cli, Quantity, RunArgs, UsageError, Verb};

/// Executes a parsed command; the outcome decides the exit code.
pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.verb {
        Verb::Sample { run } => sample(run),
        Verb::Distance { run, from, to, fixture } => match fixture {
            Some(path) => check_fixture("distance", path, run),
            None => {
                let (a, b) = (*from, *to);
                query(
                    run,
                    "distance",
                    format!("D(({}, {}), ({}, {}))", a.x, a.y, b.x, b.y),
                    |spec| {
                        spec.node_of(a)?;
                        spec.node_of(b).map(drop)
                    },
                    move |g| distance(g, a, b, None),
                )
            }
        },
        Verb::Around { run, annulus, fixture } => match fixture {
            Some(path) => check_fixture("around", path, run),
            None => annulus_query(run, "around", annulus, around_annulus),
        },
        Verb::Across { run, annulus, fixture } => match fixture {
            Some(path) => check_fixture("across", path, run),
            None => annulus_query(run, "across", annulus, across_annulus),
        },
        Verb::Crossing {
            run,
            corner,
            side,
            fixture,
        } => match fixture {
            Some(path) => check_fixture("crossing", path, run),
            None => {
                let sq = Square {
                    x0: corner.x,
                    y0: corner.y,
                    side: *side,
                };
                query(
                    run,
                    "crossing",
                    format!("left-right crossing of {sq:?}"),
                    |spec| {
                        spec.node_of(Point::new(sq.x0, sq.y0))?;
                        spec.node_of(Point::new(sq.x0 + sq.side, sq.y0 + sq.side)).map(drop)
                    },
                    move |g| crossing_length(g, sq),
                )
            }
        },
        Verb::Estimate {
            run,
            quantity,
            quantile,
        } => estimate(run, *quantity, *quantile),
        Verb::Experiment {
            run,
            experiment,
            params,
            quantile,
        } => run_experiment(run, experiment, params, *quantile),
        Verb::Report { path, out } => summarize_report(path, out.as_deref()),
    }
}

/// Config file (or defaults) overlaid with the command-line flags.
fn settings(run: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &run.config {
        Some(p) => read_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = run.seed {
        cfg.root_seed = s;
    }
    if let Some(n) = run.n {
        cfg.grid.n = n;
    }
    if let Some(l) = run.half_width {
        cfg.grid.half_width = l;
    }
    if let Some(r) = run.replicas {
        cfg.replicas = r;
    }
    if let Some(o) = &run.out {
        cfg.out_dir = o.clone();
    }
    if let Some(w) = run.workers {
        cfg.workers = w;
    }
    if let Some(s) = run.source {
        cfg.source = s;
    }
    if run.eps.is_some() {
        cfg.eps = run.eps;
    }
    cfg.validate()?;
    cfg.grid_spec()?;
    Ok(cfg)
}

/// `--xi`, else `--gamma` through the midpoint of its enclosure, else the config.
fn resolve_xi(run: &RunArgs, cfg: &RunConfig) -> Result<f64> {
    if let Some(xi) = run.xi {
        if !(xi.is_finite() && xi > 0.0) {
            return Err(UsageError(format!("--xi {xi} must be positive and finite")).into());
        }
        return Ok(xi);
    }
    if let Some(gamma) = run.gamma {
        let (lo, hi) = xi_bounds_of_gamma(gamma)?;
        let xi = 0.5 * (lo + hi);
        eprintln!("gamma = {gamma}: xi = gamma / d_gamma lies in ({lo}, {hi}); using the midpoint xi = {xi}");
        return Ok(xi);
    }
    cfg.xis
        .first()
        .copied()
        .ok_or_else(|| UsageError("no xi given (use --xi, --gamma or estimate.xis)".into()).into())
}

fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("starting worker threads")?;
    Ok(pool.install(f))
}

fn annulus_query(
    run: &RunArgs,
    verb: &str,
    a: &AnnulusArgs,
    f: fn(&WeightedGrid, AnnulusSpec) -> lfpp_core::Result<DistanceResult>,
) -> Result<Outcome> {
    let ann = AnnulusSpec::new(a.center, a.r1, a.r2);
    let desc = format!("{verb} {} < |z - ({}, {})| < {}", a.r1, a.center.x, a.center.y, a.r2);
    query(run, verb, desc, move |spec| ann.validate(spec), move |g| f(g, ann))
}

fn quantile_summary(summary: &mut BTreeMap<String, f64>, values: &[f64]) {
    for (key, p) in [
        ("min", f64::MIN_POSITIVE),
        ("q05", 0.05),
        ("median", 0.5),
        ("q95", 0.95),
        ("max", 1.0),
    ] {
        summary.insert(key.into(), order_quantile(values, p));
    }
    summary.insert("mean".into(), values.iter().sum::<f64>() / values.len() as f64);
}

/// One geometric query per replica field.
fn query(
    run: &RunArgs,
    verb: &str,
    desc: String,
    check: impl FnOnce(&GridSpec) -> lfpp_core::Result<()>,
    q: impl Fn(&WeightedGrid) -> lfpp_core::Result<DistanceResult> + Sync + Send,
) -> Result<Outcome> {
    let cfg = settings(run)?;
    let grid = cfg.grid_spec()?;
    let xi = resolve_xi(run, &cfg)?;
    let eps = cfg.eps_or_default()?;
    check(&grid)?;
    let source = cfg.source;
    let rows = in_pool(cfg.workers, || {
        replicate(cfg.replicas, cfg.root_seed, |_, seed| {
            let m = source.realize(&grid, seed)?.mollified(eps)?;
            let r = q(&build_weighted_grid(&m, xi)?)?;
            Ok((seed, r.expect_finite(verb)?, r.relaxations))
        })
    })??;

    let mut table = CsvTable::new(&["replica", "seed", "value (lfpp)", "relaxations (count)"]);
    for (i, (seed, v, relax)) in rows.iter().enumerate() {
        table.push(vec![i.to_string(), seed.to_string(), v.to_string(), relax.to_string()]);
    }
    let values: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let mut summary = BTreeMap::new();
    quantile_summary(&mut summary, &values);
    let report = QueryReport {
        verb: verb.into(),
        query: desc,
        grid,
        source: Some(source),
        root_seed: cfg.root_seed,
        replicas: cfg.replicas,
        xi: Some(xi),
        eps: Some(eps),
        summary,
        verdicts: BTreeMap::new(),
        notes: Vec::new(),
    };
    println!("{verb}: {} over {} replicas", report.query, cfg.replicas);
    print_summary(&report.summary);
    write_query(&cfg.out_dir, verb, &table, &report)?;
    Ok(report.outcome())
}

fn check_fixture(verb: &str, path: &Path, run: &RunArgs) -> Result<Outcome> {
    let cfg = settings(run)?;
    let fx = Fixture::load(path)?;
    let cases: Vec<_> = fx.cases.iter().filter(|c| c.verb() == verb).collect();
    if cases.is_empty() {
        return Err(UsageError(format!("fixture {} has no `{verb}` cases", path.display())).into());
    }
    let grid = fx.weighted_grid()?;
    let mut table = CsvTable::new(&["case", "expected (lfpp)", "value (lfpp)", "match (bool)"]);
    let mut mismatches = Vec::new();
    let mut worst: f64 = 0.0;
    for (i, c) in cases.iter().enumerate() {
        let got = c.evaluate(&grid)?;
        let ok = c.matches(got);
        worst = worst.max((got - c.expected()).abs() / c.expected().abs().max(f64::MIN_POSITIVE));
        if !ok {
            mismatches.push(format!("case {i}: engine {got} vs oracle {}", c.expected()));
        }
        table.push(vec![
            i.to_string(),
            c.expected().to_string(),
            got.to_string(),
            ok.to_string(),
        ]);
    }
    let mut summary = BTreeMap::new();
    summary.insert("cases".into(), cases.len() as f64);
    summary.insert("mismatches".into(), mismatches.len() as f64);
    summary.insert("max_rel_error".into(), worst);
    let detail = if mismatches.is_empty() {
        format!("{} {verb} cases reproduce the oracle", cases.len())
    } else {
        format!(
            "{} of {} differ; first: {}",
            mismatches.len(),
            cases.len(),
            mismatches[0]
        )
    };
    let mut verdicts = BTreeMap::new();
    verdicts.insert(
        "oracle_equivalence".to_string(),
        Verdict::hard(mismatches.is_empty(), "mismatches", detail),
    );
    let report = QueryReport {
        verb: verb.into(),
        query: format!("oracle fixture {}", path.display()),
        grid: fx.grid_spec()?,
        source: None,
        root_seed: 0,
        replicas: 1,
        xi: Some(fx.xi),
        eps: Some(fx.eps),
        summary,
        verdicts,
        notes: Vec::new(),
    };
    print_verdicts(&report.verdicts);
    write_query(&cfg.out_dir, &format!("{verb}-fixture"), &table, &report)?;
    Ok(report.outcome())
}

fn sample(run: &RunArgs) -> Result<Outcome> {
    let cfg = settings(run)?;
    let grid = cfg.grid_spec()?;
    let eps = cfg.eps_or_default()?;
    let dir = cfg.out_dir.join("fields");
    ensure_dir(&dir)?;
    let source = cfg.source;
    let per_replica = in_pool(cfg.workers, || {
        replicate(cfg.replicas, cfg.root_seed, |i, seed| {
            let r = source.realize(&grid, seed)?;
            let mut files = Vec::new();
            if let Some(raw) = r.raw() {
                files.push(("raw", raw.clone()));
            }
            files.push(("mollified", r.mollified(eps)?));
            let center = grid.node_of(Point::ORIGIN)?;
            let mut rows = Vec::new();
            for (kind, f) in files {
                let path = dir.join(format!("field-{i:05}-{kind}.bin"));
                save_field(&f, &path)?;
                let v = f.values();
                let (lo, hi) = v
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                rows.push(vec![
                    i.to_string(),
                    seed.to_string(),
                    kind.to_string(),
                    path.display().to_string(),
                    mean.to_string(),
                    lo.to_string(),
                    hi.to_string(),
                    f.value(center).to_string(),
                ]);
            }
            Ok(rows)
        })
    })??;
    let mut table = CsvTable::new(&[
        "replica",
        "seed",
        "kind",
        "file",
        "mean (1)",
        "min (1)",
        "max (1)",
        "center (1)",
    ]);
    for row in per_replica.into_iter().flatten() {
        table.push(row);
    }
    let mut summary = BTreeMap::new();
    summary.insert("files".into(), table.rows.len() as f64);
    let report = QueryReport {
        verb: "sample".into(),
        query: format!("{} field replicas from {source}", cfg.replicas),
        grid,
        source: Some(source),
        root_seed: cfg.root_seed,
        replicas: cfg.replicas,
        xi: None,
        eps: Some(eps),
        summary,
        verdicts: BTreeMap::new(),
        notes: Vec::new(),
    };
    write_query(&cfg.out_dir, "sample", &table, &report)?;
    Ok(Outcome::Pass)
}

type Sampler = fn(&MonteCarlo, f64, f64) -> lfpp_core::Result<SampleSet>;

fn estimate(run: &RunArgs, quantity: Quantity, quantile: Option<f64>) -> Result<Outcome> {
    let cfg = settings(run)?;
    let grid = cfg.grid_spec()?;
    let xi = resolve_xi(run, &cfg)?;
    let p = quantile.unwrap_or(if quantity == Quantity::Around { cfg.p } else { 0.5 });
    if !(p > 0.0 && p < 1.0) {
        return Err(UsageError(format!("--quantile {p} must lie in (0, 1)")).into());
    }
    let ladder = match cfg.eps {
        Some(e) => vec![e],
        None => cfg.eps_ladder.clone(),
    };
    let delta = grid.delta();
    if let Some(e) = ladder.iter().find(|e| **e < 2.0 * delta) {
        return Err(lfpp_core::Error::Resolution { eps: *e, delta }.into());
    }
    let mc = MonteCarlo::new(grid, cfg.replicas, cfg.root_seed).with_source(cfg.source);
    let (name, sample): (&str, Sampler) = match quantity {
        Quantity::Crossing => ("a_eps", MonteCarlo::sample_crossing),
        Quantity::Around => ("alpha", MonteCarlo::sample_around),
        Quantity::Distance => ("beta", MonteCarlo::sample_unit_distance),
    };
    let mut table = CsvTable::new(&["eps (1)", "replica", "seed", "value (lfpp)"]);
    let mut summary = BTreeMap::new();
    let mut points = Vec::new();
    for &eps in &ladder {
        let set = in_pool(cfg.workers, || sample(&mc, xi, eps))??;
        for (i, (v, s)) in set.values().iter().zip(set.seeds()).enumerate() {
            table.push(vec![eps.to_string(), i.to_string(), s.to_string(), v.to_string()]);
        }
        let q = set.quantile(p)?;
        summary.insert(format!("{name}:eps={eps}"), q.point);
        summary.insert(format!("{name}_ci_lo:eps={eps}"), q.ci_lo);
        summary.insert(format!("{name}_ci_hi:eps={eps}"), q.ci_hi);
        println!("{name}(eps = {eps}) = {} [{}, {}]", q.point, q.ci_lo, q.ci_hi);
        points.push((eps, q.point));
    }
    let mut notes = Vec::new();
    if points.len() >= 3 {
        let fit = fit_scaling_exponent(&points)?;
        summary.insert("slope".into(), fit.slope);
        summary.insert("slope_stderr".into(), fit.stderr);
        summary.insert("r2".into(), fit.r2);
        println!("slope of log {name} vs log eps = {} (stderr {})", fit.slope, fit.stderr);
        if quantity == Quantity::Crossing {
            summary.insert("q_hat".into(), (1.0 - fit.slope) / xi);
            notes.push("q_hat = (1 - slope) / xi".into());
        }
    }
    let report = QueryReport {
        verb: "estimate".into(),
        query: format!("{p}-quantile of {quantity:?}").to_lowercase(),
        grid,
        source: Some(cfg.source),
        root_seed: cfg.root_seed,
        replicas: cfg.replicas,
        xi: Some(xi),
        eps: cfg.eps,
        summary,
        verdicts: BTreeMap::new(),
        notes,
    };
    write_query(&cfg.out_dir, "estimate", &table, &report)?;
    Ok(Outcome::Pass)
}

fn param_value(key: &str, text: &str) -> Result<Param> {
    let values = parse_ladder(text).map_err(|_| {
        UsageError(format!(
            "--param {key}={text}: expected a number, a comma-separated list or a ladder"
        ))
    })?;
    Ok(if values.len() == 1 && !text.contains(',') && !text.contains("..") {
        Param::Scalar(values[0])
    } else {
        Param::List(values)
    })
}

fn run_experiment(run: &RunArgs, name: &str, params: &[(String, String)], quantile: Option<f64>) -> Result<Outcome> {
    let cfg = settings(run)?;
    let kind: ExperimentKind = name.parse()?;
    let mut spec = ExperimentSpec::new(kind, cfg.grid_spec()?, cfg.replicas, cfg.root_seed).with_source(cfg.source);
    spec.timing = cfg.timing;
    spec.parameters = cfg.params.clone();
    for (k, v) in params {
        spec.parameters.insert(k.clone(), param_value(k, v)?);
    }

    // fill what the experiment needs from the flags and the config
    let (required, optional) = kind.parameters();
    let explicit_xi = run.xi.is_some() || run.gamma.is_some();
    let mut defaults: Vec<(&str, Param)> = Vec::new();
    for &key in required {
        match key {
            "xi" => defaults.push(("xi", Param::Scalar(resolve_xi(run, &cfg)?))),
            "xis" if explicit_xi => defaults.push(("xis", Param::List(vec![resolve_xi(run, &cfg)?]))),
            "xis" => defaults.push(("xis", Param::List(cfg.xis.clone()))),
            "gammas" => defaults.push(("gammas", Param::List(cfg.gammas.clone()))),
            "eps_ladder" => defaults.push(("eps_ladder", Param::List(cfg.eps_ladder.clone()))),
            _ => {}
        }
    }
    if optional.contains(&"eps") {
        if let Some(e) = cfg.eps {
            defaults.push(("eps", Param::Scalar(e)));
        }
    }
    if optional.contains(&"p") {
        defaults.push(("p", Param::Scalar(quantile.unwrap_or(cfg.p))));
    } else if quantile.is_some() {
        return Err(UsageError(format!("--quantile does not apply to {kind}")).into());
    }
    for (k, v) in defaults {
        spec.parameters.entry(k.to_string()).or_insert(v);
    }
    spec.validate()?;

    let report = in_pool(cfg.workers, || run_with(&spec, None))??;
    ensure_dir(&cfg.out_dir)?;
    let (csv, json) = out_paths(&cfg.out_dir, kind.name());
    write_report(&report, &json)?;
    write_report_csv(&report, &csv)?;
    println!("{kind}: {} records", report.per_replica.len());
    print_summary(&report.summary);
    print_verdicts(&report.verdicts);
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(report.outcome())
}

fn summarize_report(path: &Path, out: Option<&Path>) -> Result<Outcome> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if value.get("verb").is_some() {
        let r: QueryReport = serde_json::from_value(value)?;
        println!("{}: {}", r.verb, r.query);
        print_summary(&r.summary);
        print_verdicts(&r.verdicts);
        if out.is_some() {
            return Err(UsageError("--out only applies to experiment reports".into()).into());
        }
        println!("outcome: {}", r.outcome());
        return Ok(r.outcome());
    }
    let r: Report = report_from_str(&text)?;
    println!(
        "{} ({} records{})",
        r.spec.kind,
        r.per_replica.len(),
        if r.synthetic { ", synthetic source" } else { "" }
    );
    print_summary(&r.summary);
    print_verdicts(&r.verdicts);
    if let Some(out) = out {
        let out: PathBuf = out.into();
        write_report_csv(&r, &out)?;
        println!("wrote {}", out.display());
    }
    println!("outcome: {}", r.outcome());
    Ok(r.outcome())
}
