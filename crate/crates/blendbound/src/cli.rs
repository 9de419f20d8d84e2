//! Command-line front end.

use crate::blackwell::{blackwell_order, discretize_finite_pair, preference_witness, InformationStructure};
use crate::blends::{builtin_pair, default_window, verify_dual_on, PairName};
use crate::bounds::{pair_bound, BenchmarkMode, BoundResult};
use crate::curves::{iron_concave_hull, performance_curve, QuantileCurve};
use crate::dist::{Distribution, Objective};
use crate::error::{Error, Result};
use crate::mechanisms::{simulate, Mechanism};
use crate::pilp::{dual_certificate, solve_pi, InstanceSpec, PiOptions};
use crate::report::{Cell, Format, Table};
use crate::repro;
use clap::{Args, Parser, Subcommand};
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "blendbound", version, about = "Blend-based lower bounds for prior-independent mechanism design")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Worker threads for sweeps and grid checks.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Write the primary output here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that a built-in pair induces the same correlated density.
    VerifyBlend {
        #[arg(long)]
        pair: String,
        #[arg(long, default_value_t = 50)]
        grid: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Comparison window as `lo,hi`.
        #[arg(long, value_parser = parse_window)]
        window: Option<(f64, f64)>,
    },
    /// Lower bound from a built-in pair over one or more values of h.
    Bound {
        #[arg(long, default_value = "quad_unif_finite")]
        pair: String,
        #[arg(long, value_enum, default_value_t = Objective::Revenue)]
        objective: Objective,
        /// Truncation level; repeat for a sweep.
        #[arg(long)]
        h: Vec<f64>,
        /// Integer sweep `lo:hi`.
        #[arg(long, value_parser = parse_range)]
        h_range: Option<(u32, u32)>,
        /// Use the exact hull benchmark for residual surplus.
        #[arg(long)]
        exact: bool,
        /// Relative tolerance against the closed form.
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Export a performance curve and optionally its concave hull.
    Curve {
        /// `family(params)|op(arg)...`, e.g. `quadratic(1)|truncate(20)`, or a JSON record.
        #[arg(long)]
        dist: String,
        #[arg(long, value_enum, default_value_t = Objective::Revenue)]
        objective: Objective,
        #[arg(long, default_value_t = 512)]
        grid: usize,
        #[arg(long)]
        hull: bool,
    },
    /// Optimal prior-independent ratio of a discrete instance.
    LpAlpha {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Add the redundant non-super-optimality rows.
        #[arg(long)]
        non_super_optimal: bool,
        /// Write the program in plain text here.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Check a pair of discrete weight vectors as a dual certificate.
    Certify {
        #[command(flatten)]
        instance: InstanceArgs,
    },
    /// Blackwell comparison of two information structures.
    Garble {
        /// CSV with `state,signal,mass` rows.
        #[arg(long, requires = "second", conflicts_with = "h")]
        first: Option<PathBuf>,
        #[arg(long)]
        second: Option<PathBuf>,
        /// Discretize the finite pair at this `h` instead.
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, default_value_t = 6)]
        values: usize,
        #[arg(long, default_value_t = 12)]
        cells: usize,
    },
    /// Recompute every headline number and compare with its reference.
    Repro {
        /// Also run a seeded Monte Carlo cross-check with this many samples.
        #[arg(long)]
        monte_carlo: Option<usize>,
    },
}

#[derive(Debug, Args)]
pub struct InstanceArgs {
    /// JSON `{grid, n_agents, dists, objective, omega?, o?}`.
    #[arg(long, conflicts_with = "preset")]
    pub instance: Option<PathBuf>,
    /// Built-in instance.
    #[arg(long, value_parser = ["two-point"])]
    pub preset: Option<String>,
}

impl InstanceArgs {
    fn load(&self) -> Result<InstanceSpec> {
        match (&self.instance, &self.preset) {
            (Some(p), _) => Ok(serde_json::from_str(&std::fs::read_to_string(p)?)?),
            _ => Ok(InstanceSpec::two_point()),
        }
    }
}

fn parse_window(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected lo,hi")?;
    let (a, b): (f64, f64) = (a.trim().parse().map_err(|e| format!("{e}"))?, b.trim().parse().map_err(|e| format!("{e}"))?);
    if !(a < b) {
        return Err("window needs lo < hi".into());
    }
    Ok((a, b))
}

fn parse_range(s: &str) -> std::result::Result<(u32, u32), String> {
    let (a, b) = s.split_once(':').ok_or("expected lo:hi")?;
    let (a, b): (u32, u32) = (a.parse().map_err(|e| format!("{e}"))?, b.parse().map_err(|e| format!("{e}"))?);
    if a < 2 || a > b {
        return Err("range needs 2 <= lo <= hi".into());
    }
    Ok((a, b))
}

fn args_of(s: &str) -> Result<Vec<f64>> {
    if s.trim().is_empty() {
        return Ok(vec![]);
    }
    s.split(',').map(|a| a.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number {a}")))).collect()
}

/// Parses `family(params)|op(arg)|...` or a JSON distribution record.
pub fn parse_dist(spec: &str) -> Result<Distribution> {
    let spec = spec.trim();
    if spec.starts_with('{') {
        return Ok(serde_json::from_str(spec)?);
    }
    let mut parts = spec.split('|');
    let head = parts.next().unwrap_or("");
    let call = |s: &str| -> Result<(String, Vec<f64>)> {
        let s = s.trim();
        match s.split_once('(') {
            Some((name, rest)) => {
                let inner = rest.strip_suffix(')').ok_or_else(|| Error::Parse(format!("missing ) in {s}")))?;
                Ok((name.trim().to_string(), args_of(inner)?))
            }
            None => Ok((s.to_string(), vec![])),
        }
    };
    let (name, p) = call(head)?;
    let need = |n: usize| {
        if p.len() == n {
            Ok(())
        } else {
            Err(Error::Parse(format!("{name} takes {n} arguments")))
        }
    };
    let mut d = match name.as_str() {
        "uniform" | "ud" => {
            need(2)?;
            Distribution::uniform(p[0], p[1])?
        }
        "quadratic" | "qud" => {
            need(1)?;
            Distribution::quadratic(p[0])?
        }
        "shexp" | "sed" => {
            need(2)?;
            Distribution::shifted_exponential(p[0], p[1])?
        }
        "exponential" | "exd" => {
            need(1)?;
            Distribution::exponential(p[0])?
        }
        "shifted_quadratic" | "sqd" => {
            need(2)?;
            Distribution::shifted_quadratic(p[0], p[1])?
        }
        "point" | "pmd" => {
            need(1)?;
            Distribution::point_mass(p[0])?
        }
        other => return Err(Error::Parse(format!("unknown family {other}"))),
    };
    for op in parts {
        let (name, p) = call(op)?;
        let one = || p.first().copied().filter(|_| p.len() == 1).ok_or_else(|| Error::Parse(format!("{name} takes one argument")));
        d = match name.as_str() {
            "truncate" => d.truncate_top(one()?)?,
            "condition" => d.condition_above(one()?)?,
            "rescale" => d.rescale(one()?)?,
            "invert" => d.invert()?,
            other => return Err(Error::Parse(format!("unknown transform {other}"))),
        };
    }
    Ok(d)
}

/// Outcome of a subcommand: primary table, optional extra tables, and whether all assertions held.
struct Outcome {
    tables: Vec<(String, Table)>,
    ok: bool,
}

impl Outcome {
    fn one(t: Table, ok: bool) -> Outcome {
        Outcome { tables: vec![(String::new(), t)], ok }
    }
}

fn verify_blend(pair: &str, grid: usize, tol: f64, window: Option<(f64, f64)>) -> Result<Outcome> {
    if grid < 2 || !(tol > 0.0) {
        return Err(Error::InvalidParameter("grid >= 2 and tol > 0 required".into()));
    }
    let name: PairName = pair.parse()?;
    let (a, b) = builtin_pair(name)?;
    let w = window.unwrap_or_else(|| default_window(&a, &b));
    let r = verify_dual_on(&a, &b, w, grid, tol)?;
    let t = Table::key_values(vec![
        ("pair", pair.into()),
        ("first", a.name.clone().into()),
        ("second", b.name.clone().into()),
        ("grid", r.grid.clone().into()),
        ("points", r.points.into()),
        ("max_rel_err_2d", r.max_rel_err_2d.into()),
        ("max_rel_err_1d", r.max_rel_err_1d.into()),
        ("max_abs_err_0d", r.max_abs_err_0d.into()),
        ("max_rel_err_diag", r.max_rel_err_diag.into()),
        ("tol", r.tol.into()),
        ("pass", r.pass.into()),
    ]);
    Ok(Outcome::one(t, r.pass))
}

fn bound_rows(results: &[BoundResult], tol: f64) -> (Table, bool) {
    let mut t = Table::new(&["pair", "objective", "h", "opt_benchmark", "opt_ceiling", "ratio", "closed_form", "rel_err", "class", "valid_for", "oriented", "notes"]);
    let mut ok = true;
    for r in results {
        if r.rel_err.is_some_and(|e| !(e <= tol)) {
            ok = false;
        }
        t.push(vec![
            r.pair.clone().into(),
            r.objective.to_string().into(),
            r.h.into(),
            r.opt_benchmark.into(),
            r.opt_ceiling.into(),
            r.ratio.into(),
            r.closed_form.into(),
            r.rel_err.into(),
            r.class_tag.clone().into(),
            r.valid_for.join(";").into(),
            r.oriented.into(),
            r.method_notes.clone().into(),
        ]);
    }
    (t, ok)
}

fn bound(pair: &str, obj: Objective, hs: &[f64], range: Option<(u32, u32)>, exact: bool, tol: f64) -> Result<Outcome> {
    let base: PairName = pair.parse()?;
    let mut list: Vec<f64> = hs.to_vec();
    if let Some((a, b)) = range {
        list.extend((a..=b).map(f64::from));
    }
    if list.iter().any(|h| !(*h > 1.0 && h.is_finite())) {
        return Err(Error::InvalidParameter("h must exceed 1".into()));
    }
    let names: Vec<PairName> = match base {
        PairName::QuadUnifFinite(h0) => {
            if list.is_empty() {
                vec![PairName::QuadUnifFinite(h0)]
            } else {
                list.iter().map(|h| PairName::QuadUnifFinite(*h)).collect()
            }
        }
        other => vec![other],
    };
    let mode = if exact { BenchmarkMode::Exact } else { BenchmarkMode::Relaxed };
    use rayon::prelude::*;
    let results: Vec<BoundResult> = names.par_iter().map(|n| pair_bound(*n, obj, mode)).collect::<Result<_>>()?;
    let (t, ok) = bound_rows(&results, tol);
    Ok(Outcome::one(t, ok))
}

fn curve_table(curve: &QuantileCurve, hull: Option<&QuantileCurve>) -> Table {
    let mut t = Table::new(if hull.is_some() { &["q", "R", "R_ironed", "tag"] } else { &["q", "R", "tag"] });
    let src = hull.unwrap_or(curve);
    for (k, (q, r)) in src.samples().enumerate() {
        let tag = src.tags().get(k).map(|t| t.as_str()).unwrap_or("end");
        match hull {
            Some(_) => t.push(vec![q.into(), curve.eval(q).into(), r.into(), tag.into()]),
            None => t.push(vec![q.into(), r.into(), tag.into()]),
        }
    }
    t
}

fn curve(dist: &str, obj: Objective, grid: usize, hull: bool) -> Result<Outcome> {
    let d = parse_dist(dist)?;
    let c = performance_curve(&d, obj, grid)?;
    let t = if hull {
        let (h, _) = iron_concave_hull(&c);
        curve_table(&c, Some(&h))
    } else {
        curve_table(&c, None)
    };
    Ok(Outcome::one(t, true))
}

fn lp_alpha(spec: &InstanceSpec, non_super_optimal: bool, dump: Option<&PathBuf>) -> Result<Outcome> {
    let (grid, dists) = spec.build()?;
    let opts = PiOptions { non_super_optimal };
    if let Some(p) = dump {
        std::fs::write(p, crate::pilp::build_pi_lp(&grid, &dists, spec.objective, opts)?.lp.dump())?;
    }
    let s = solve_pi(&grid, &dists, spec.objective, opts)?;
    let mut t = Table::new(&["dist", "opt", "performance", "ratio"]);
    for (i, (o, p)) in s.opts.iter().zip(&s.performance).enumerate() {
        t.push(vec![format!("F{i}").into(), (*o).into(), (*p).into(), (o / p).into()]);
    }
    let summary = Table::key_values(vec![
        ("alpha", s.alpha.into()),
        ("guarantee", s.ratio_guarantee.into()),
        ("duality_gap", s.lp.duality_gap().into()),
        ("primal_residual", s.lp.primal_residual.into()),
        ("slackness_residual", s.lp.slackness_residual.into()),
        ("pivots", s.lp.iterations.into()),
    ]);
    let ok = s.lp.duality_gap() <= 1e-7 && s.lp.primal_residual < 1e-8;
    Ok(Outcome { tables: vec![(String::new(), summary), ("per distribution".into(), t)], ok })
}

fn certify(spec: &InstanceSpec) -> Result<Outcome> {
    let (grid, dists) = spec.build()?;
    let (Some(omega), Some(o)) = (&spec.omega, &spec.o) else {
        return Err(Error::InvalidParameter("instance needs omega and o weights".into()));
    };
    let c = dual_certificate(&grid, &dists, omega, o, spec.objective)?;
    let t = Table::key_values(vec![
        ("accepted", c.accepted.into()),
        ("max_density_err", c.max_density_err.into()),
        ("worst_profile", format!("{:?}", c.worst_profile).into()),
        ("kappa", c.kappa.into()),
        ("opt_benchmark", c.opt_benchmark.into()),
        ("opt_ceiling", c.opt_ceiling.into()),
        ("ratio", c.ratio.into()),
        ("alpha", c.alpha.into()),
        ("reason", c.reason.clone().into()),
    ]);
    Ok(Outcome::one(t, c.accepted))
}

fn garble(first: Option<&PathBuf>, second: Option<&PathBuf>, h: Option<f64>, values: usize, cells: usize) -> Result<Outcome> {
    let mut rows: Vec<(&str, Cell)> = Vec::new();
    let (a, b, witness) = match (first, second) {
        (Some(f), Some(s)) => (InformationStructure::from_csv(std::fs::File::open(f)?)?, InformationStructure::from_csv(std::fs::File::open(s)?)?, None),
        _ => {
            let h = h.unwrap_or(20.0);
            if !(h > 1.0) {
                return Err(Error::InvalidParameter("h must exceed 1".into()));
            }
            let d = discretize_finite_pair(h, values, cells)?;
            let w = preference_witness(&d.grid, &d.first, &d.second)?;
            rows.push(("structures", format!("discretized quad_unif_finite({h}), {values} values, {cells} cells").into()));
            (d.first, d.second, Some(w))
        }
    };
    let r = blackwell_order(&a, &b)?;
    rows.push(("order", serde_json::to_value(r.order)?.as_str().unwrap_or_default().to_string().into()));
    rows.push(("forward_status", format!("{:?}", r.forward.status).to_lowercase().into()));
    rows.push(("forward_residual", r.forward.residual.into()));
    rows.push(("backward_status", format!("{:?}", r.backward.status).to_lowercase().into()));
    rows.push(("backward_residual", r.backward.residual.into()));
    if let Some(w) = &witness {
        rows.push(("revenue_margin", w.revenue_margin.into()));
        rows.push(("residual_margin", w.residual_margin.into()));
        rows.push(("witness", w.holds.into()));
    }
    Ok(Outcome::one(Table::key_values(rows), true))
}

fn repro_cmd(monte_carlo: Option<usize>) -> Result<Outcome> {
    let checks = repro::run_all();
    let ok = checks.iter().all(|c| c.pass);
    let mut tables = vec![(String::new(), repro::table(&checks))];
    if let Some(n) = monte_carlo {
        let seed: u64 = match std::env::var("BLENDBOUND_SEED") {
            Ok(s) => s.parse().map_err(|_| Error::InvalidParameter(format!("BLENDBOUND_SEED={s}")))?,
            Err(_) => 0,
        };
        let mut t = Table::new(&["quantity", "exact", "estimate", "stderr", "seed"]);
        let u = Distribution::uniform(0.0, 1.0)?;
        let q = Distribution::quadratic(1.0)?.truncate_top(20.0)?;
        for (label, m, d, obj, exact) in [
            ("SPA revenue Ud[0,1]", Mechanism::spa(), &u, Objective::Revenue, 1.0 / 3.0),
            ("lottery residual Qud_1 truncated at 20", Mechanism::lottery(), &q, Objective::ResidualSurplus, 1.0 + 20f64.ln()),
            ("posted(2) revenue Qud_1 truncated at 20", Mechanism::posted(2.0)?, &q, Objective::Revenue, 2.0 * (1.0 - 0.25)),
        ] {
            let (mean, se) = simulate(&m, d, obj, n, seed)?;
            t.push(vec![label.into(), exact.into(), mean.into(), se.into(), Cell::Int(seed as i64)]);
        }
        tables.push(("monte carlo".into(), t));
    }
    Ok(Outcome { tables, ok })
}

fn dispatch(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::VerifyBlend { pair, grid, tol, window } => verify_blend(pair, *grid, *tol, *window),
        Command::Bound { pair, objective, h, h_range, exact, tol } => bound(pair, *objective, h, *h_range, *exact, *tol),
        Command::Curve { dist, objective, grid, hull } => curve(dist, *objective, *grid, *hull),
        Command::LpAlpha { instance, non_super_optimal, dump } => lp_alpha(&instance.load()?, *non_super_optimal, dump.as_ref()),
        Command::Certify { instance } => certify(&instance.load()?),
        Command::Garble { first, second, h, values, cells } => garble(first.as_ref(), second.as_ref(), *h, *values, *cells),
        Command::Repro { monte_carlo } => repro_cmd(*monte_carlo),
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter(_) | Error::Parse(_) | Error::Json(_) | Error::Io(_) | Error::Csv(_) => 2,
        _ => 1,
    }
}

fn render(outcome: &Outcome, format: Format) -> Result<String> {
    if format == Format::Json && outcome.tables.len() > 1 {
        let mut parts = Vec::new();
        for (name, t) in &outcome.tables {
            let key = if name.is_empty() { "result" } else { name };
            parts.push(format!("{}:{}", serde_json::to_string(key)?, t.render(format)?.trim_end()));
        }
        return Ok(format!("{{{}}}\n", parts.join(",\n")));
    }
    let mut out = String::new();
    for (i, (name, t)) in outcome.tables.iter().enumerate() {
        if i > 0 {
            out.push('\n');
            if format == Format::Table {
                out.push_str(&format!("# {name}\n"));
            }
        }
        out.push_str(&t.render(format)?);
    }
    Ok(out)
}

/// Runs with explicit streams; returns the exit code.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    if cli.global.threads == 0 {
        let _ = writeln!(err, "error: --threads must be at least 1");
        return 2;
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.global.threads).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 1;
        }
    };
    let result = pool.install(|| dispatch(&cli.command)).and_then(|o| Ok((render(&o, cli.global.format)?, o.ok)));
    match result {
        Ok((text, ok)) => {
            let written = match &cli.global.output {
                Some(p) => std::fs::write(p, text.as_bytes()),
                None => out.write_all(text.as_bytes()),
            };
            if let Err(e) = written {
                let _ = writeln!(err, "error: {e}");
                return 2;
            }
            if ok {
                0
            } else {
                let _ = writeln!(err, "assertion failed: see output");
                1
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs against stdout and stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_with(std::iter::once("blendbound").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap())
    }

    #[test]
    fn dist_specs() {
        let d = parse_dist("quadratic(1)|truncate(20)").unwrap();
        assert!((d.atom_mass(20.0) - 0.05).abs() < 1e-15);
        assert!(parse_dist("uniform(0,1)|rescale(2)").is_ok());
        assert!(parse_dist("nope(1)").is_err());
        assert!(parse_dist("uniform(1)").is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(call(&["bogus"]).0, 2);
        assert_eq!(call(&["bound", "--h", "0.5"]).0, 2);
        assert_eq!(call(&["verify-blend", "--pair", "nope"]).0, 2);
        assert_eq!(call(&["--help"]).0, 0);
    }

    #[test]
    fn bound_prints_ratio() {
        let (code, out) = call(&["bound", "--pair", "quad_unif_finite", "--objective", "revenue", "--h", "20", "--format", "json"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((v[0]["ratio"].as_f64().unwrap() - 1.22179450989).abs() < 1e-10);
    }
}
