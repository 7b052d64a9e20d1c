//! One function per subcommand, each producing a CSV table and a summary.

use std::path::{Path, PathBuf};

use super::args::*;
use crate::contour::{is_monotone, render_svg};
use crate::empirics::{self, AngularStatus, IntegrabilityTarget};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::mc::McConfig;
use crate::model::{two_point_scalar, LawFile, ModelSpec};
use crate::recursion::{finite_iteration_tail, moment_growth_curve, sample_r_batch, StopReason, StopRule};
use crate::spectral::{lyapunov, spectral_curve, ColumnSample, CurveMethod, LyapunovMethod, S_MAX};
use crate::tail::{alpha_curve, contour_grid, solve_alpha, AlphaOptions, AlphaStatus, ContourGrid, ContourParam};
use crate::transfer::{bin_center, build_operator, eigenfunction_representation_check, power_iterate};

/// Figure settings from the captions; `s` runs over `(0, 10]`.
pub const FIG1_ETA: f64 = 0.75;
pub const FIG1_B: std::ops::RangeInclusive<usize> = 1..=12;
pub const FIG2_B: usize = 5;
pub const FIG2_ETA_GRID: &str = "0.05:0.05:1.5";
pub const FIG_S_GRID: &str = "0.1:0.1:10";
pub const FIG_SAMPLES: u64 = 200_000;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Table { header: header.iter().map(|h| h.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

/// Shortest round-trip form; scientific outside `[1e-5, 1e16)`.
fn f(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-5..1e16).contains(&a) { format!("{x}") } else { format!("{x:e}") }
}

fn u<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub table: Table,
    pub summary: String,
    /// Extra files (SVG, polylines).
    pub files: Vec<(PathBuf, Vec<u8>)>,
    /// A demanded result was not obtained; exit code 3.
    pub status_failure: bool,
}

pub struct Context<'a> {
    pub model: &'a ModelArgs,
    pub mc: McConfig,
    pub out: Option<&'a Path>,
}

impl Context<'_> {
    fn spec(&self) -> Result<ModelSpec> {
        build_spec(self.model, None)
    }

    /// For commands that never use the step size.
    fn spec_any_eta(&self) -> Result<ModelSpec> {
        build_spec(self.model, Some(1.0))
    }

    /// Path for an extra output: explicit, else beside `--out`, else `fallback`.
    fn side_path(&self, explicit: &Option<PathBuf>, ext: &str, fallback: &str) -> PathBuf {
        match (explicit, self.out) {
            (Some(p), _) => p.clone(),
            (None, Some(out)) => out.with_extension(ext),
            (None, None) => PathBuf::from(fallback),
        }
    }
}

pub fn build_spec(m: &ModelArgs, eta_default: Option<f64>) -> Result<ModelSpec> {
    let eta = m.eta.or(eta_default).ok_or_else(|| Error::Config("missing --eta".into()))?;
    let b = m.b.unwrap_or(1);
    let laws = || -> Result<LawFile> {
        match (&m.laws, &m.law_file) {
            (Some(l), _) => Ok(l.clone()),
            (None, Some(p)) => LawFile::read(p),
            (None, None) => Err(Error::Config("model needs --law-file (or [model.laws] in the config)".into())),
        }
    };
    match m.model.unwrap_or(ModelName::Rank1Gauss) {
        ModelName::Rank1Gauss => ModelSpec::rank1_gauss(m.d.unwrap_or(1), b, eta),
        ModelName::Rank1 => ModelSpec::new(laws()?.rank1_kind()?, m.d.unwrap_or(1), b, eta),
        ModelName::Symm => ModelSpec::new(laws()?.symm_kind()?, m.d.unwrap_or(1), b, eta),
        ModelName::SymmDetIdentity => {
            let d = m.d.unwrap_or(1);
            let mut e1 = vec![0.0; d];
            e1[0] = 1.0;
            ModelSpec::deterministic(Mat::identity(d), e1, b, eta)
        }
        ModelName::TwoPoint => {
            if m.d.is_some_and(|d| d != 1) {
                return Err(Error::Config("the two-point model has d = 1".into()));
            }
            two_point_scalar(0.5, 2.5, eta)?.with_b(b)
        }
    }
}

pub fn execute(command: &Command, ctx: &Context) -> Result<Outcome> {
    match command {
        Command::Simulate(a) => simulate(a, ctx),
        Command::Kcurve(a) => kcurve(a, ctx),
        Command::Lyapunov(a) => lyapunov_cmd(a, ctx),
        Command::Alpha(a) => alpha(a, ctx),
        Command::Alphacurve(a) => alphacurve(a, ctx),
        Command::Contour(a) => contour(a, ctx),
        Command::Operator(a) => operator(a, ctx),
        Command::Tailfit(a) => tailfit(a, ctx),
        Command::Angular(a) => angular(a, ctx),
        Command::Integrability(a) => integrability(a, ctx),
        Command::Gausscheck(a) => gausscheck(a, ctx),
        Command::Moments(a) => moments(a, ctx),
        Command::Tailbound(a) => tailbound(a, ctx),
        Command::ReproduceFig1(a) => figure(a, ctx, 1),
        Command::ReproduceFig2(a) => figure(a, ctx, 2),
    }
}

fn reason_name(r: StopReason) -> &'static str {
    match r {
        StopReason::ProductBelowTol => "product-below-tol",
        StopReason::MaxIterations => "max-iterations",
        StopReason::Diverged => "diverged",
    }
}

fn status_name(s: AlphaStatus) -> &'static str {
    match s {
        AlphaStatus::Converged => "converged",
        AlphaStatus::NoRootBelowSMax => "no-root-below-s-max",
        AlphaStatus::GammaNonNegative => "gamma-non-negative",
    }
}

fn simulate(a: &SimulateArgs, ctx: &Context) -> Result<Outcome> {
    let spec = ctx.spec()?;
    let stop = StopRule { tol_prod: a.tol_prod.unwrap_or(1e-12), n_max: a.n_max.unwrap_or(100_000) };
    let draws = sample_r_batch(&spec, stop, a.samples.unwrap_or(1000), &ctx.mc);
    let mut header: Vec<String> = ["draw", "n", "reason", "norm", "error_bound"].iter().map(|s| s.to_string()).collect();
    header.extend((1..=spec.d()).map(|i| format!("r{i}")));
    let mut table = Table::new(&header);
    for (i, r) in draws.iter().enumerate() {
        let mut row = vec![u(i), u(r.n), reason_name(r.reason).into(), f(r.norm()), f(r.error_bound())];
        row.extend(r.r.iter().map(|&x| f(x)));
        table.push(row);
    }
    let capped = draws.iter().filter(|r| r.reason != StopReason::ProductBelowTol).count();
    let mut norms: Vec<f64> = draws.iter().map(|r| r.norm()).collect();
    norms.sort_by(f64::total_cmp);
    let median = norms.get(norms.len() / 2).copied().unwrap_or(f64::NAN);
    Ok(Outcome {
        table,
        summary: format!("{} draws, median |R| = {median}, {capped} stopped before the product tolerance", draws.len()),
        ..Default::default()
    })
}

fn kcurve(a: &KcurveArgs, ctx: &Context) -> Result<Outcome> {
    let spec = ctx.spec()?;
    let grid = parse_grid(a.s_grid.as_deref().unwrap_or("0:0.5:4"))?;
    let method = match a.method.unwrap_or(CurveMethodName::Closed) {
        CurveMethodName::Closed => CurveMethod::ClosedForm,
        CurveMethodName::Product => CurveMethod::ProductLimit { n: a.n.unwrap_or(40) },
        CurveMethodName::Quadrature => CurveMethod::Quadrature,
    };
    let curve = spectral_curve(&spec, &grid, method, a.s_max.unwrap_or(S_MAX), a.samples.unwrap_or(100_000), &ctx.mc)?;
    let mut table = Table::new(&["s", "k", "stderr", "method"]);
    for (s, v) in curve.s_grid.iter().zip(&curve.values) {
        table.push(vec![f(*s), f(v.mean), f(v.stderr), method.label().into()]);
    }
    let summary = format!("k(s) at {} points by the {} method", curve.s_grid.len(), method.label());
    Ok(Outcome { table, summary, ..Default::default() })
}

fn lyapunov_cmd(a: &LyapunovArgs, ctx: &Context) -> Result<Outcome> {
    let spec = ctx.spec()?;
    let samples = a.samples.unwrap_or(100_000);
    let which = a.method.unwrap_or(LyapunovMethodName::All);
    let mut table = Table::new(&["method", "gamma", "stderr"]);
    let mut parts = Vec::new();
    let mut add = |name: &str, g: f64, se: f64| {
        table.push(vec![name.into(), f(g), f(se)]);
        parts.push(format!("{name} {g:.5} ({se:.1e})"));
    };
    if matches!(which, LyapunovMethodName::All | LyapunovMethodName::Closed) {
        let e = lyapunov(&spec, LyapunovMethod::ClosedForm, samples, &ctx.mc)?;
        add("closed", e.gamma, e.stderr);
    }
    if matches!(which, LyapunovMethodName::All | LyapunovMethodName::Subadditive) {
        let e = lyapunov(&spec, LyapunovMethod::subadditive(a.n.unwrap_or(200)), samples, &ctx.mc.derive(1))?;
        add("subadditive", e.gamma, e.stderr);
    }
    if matches!(which, LyapunovMethodName::All | LyapunovMethodName::Fd) {
        let e = ColumnSample::for_spec(&spec, samples, &ctx.mc.derive(2)).fd_slope_at_zero(spec.xi(), a.ds.unwrap_or(1e-3));
        add("fd", e.mean, e.stderr);
    }
    Ok(Outcome { table, summary: format!("gamma: {}", parts.join(", ")), ..Default::default() })
}

fn alpha_options(tol: Option<f64>, s_max: Option<f64>) -> AlphaOptions {
    let d = AlphaOptions::default();
    AlphaOptions { tol_root: tol.unwrap_or(d.tol_root), s_max: s_max.unwrap_or(d.s_max), ..d }
}

fn alpha(a: &AlphaArgs, ctx: &Context) -> Result<Outcome> {
    let spec = ctx.spec()?;
    let sol = solve_alpha(&spec, &alpha_options(a.tol, a.s_max), a.samples.unwrap_or(100_000), &ctx.mc);
    let mut table = Table::new(&["eta", "b", "xi", "alpha", "stderr", "residual", "gamma", "gamma_stderr", "status"]);
    table.push(vec![
        f(spec.eta()),
        u(spec.b()),
        f(sol.xi),
        f(sol.alpha),
        f(sol.stderr_alpha),
        f(sol.residual),
        f(sol.gamma.mean),
        f(sol.gamma.stderr),
        status_name(sol.status).into(),
    ]);
    let summary = if sol.is_converged() {
        format!("alpha = {:.4} +- {:.1e} at xi = {}", sol.alpha, sol.stderr_alpha, sol.xi)
    } else {
        format!("no tail index: {} at xi = {}", status_name(sol.status), sol.xi)
    };
    Ok(Outcome { table, summary, status_failure: !sol.is_converged() && a.allow_no_root != Some(true), ..Default::default() })
}

fn alphacurve(a: &AlphacurveArgs, ctx: &Context) -> Result<Outcome> {
    let spec = ctx.spec_any_eta()?;
    let b = spec.b() as f64;
    let xi_grid: Vec<f64> = parse_grid(a.eta_grid.as_deref().unwrap_or("0.05:0.05:1.5"))?.iter().map(|e| e / b).collect();
    let curve = alpha_curve(&spec, &xi_grid, &alpha_options(a.tol, a.s_max), a.samples.unwrap_or(100_000), &ctx.mc);
    let mut table = Table::new(&["eta", "xi", "alpha", "stderr", "residual", "status"]);
    for p in &curve.points {
        table.push(vec![f(p.xi * b), f(p.xi), f(p.alpha), f(p.stderr_alpha), f(p.residual), status_name(p.status).into()]);
    }
    let xi1 = curve.xi1.as_ref().map_or("none".to_string(), |x| format!("{:.5} (eta {:.5})", x.xi1, x.xi1 * b));
    let m = &curve.monotonicity;
    let summary = format!(
        "xi_1 = {xi1}; alpha strictly decreasing: {} ({}/{} pairs resolved)",
        m.strictly_decreasing, m.resolved_pairs, m.pairs
    );
    Ok(Outcome { table, summary, ..Default::default() })
}

fn grid_outcome(grid: &ContourGrid, title: &str, clip: f64, svg: PathBuf, lines: Option<PathBuf>, sign: Option<f64>) -> Result<Outcome> {
    let mut table = Table::new(&[grid.param_name, "s", "h", "stderr"]);
    for (i, p) in grid.param_values.iter().enumerate() {
        for (j, s) in grid.s_grid.iter().enumerate() {
            table.push(vec![f(*p), f(*s), f(grid.values[i][j]), f(grid.stderr[i][j])]);
        }
    }
    let mut files = vec![(svg, render_svg(grid, title, clip).into_bytes())];
    if let Some(path) = lines {
        let mut t = Table::new(&["line", grid.param_name, "s"]);
        for (k, line) in grid.contour.iter().enumerate() {
            for &(x, y) in line {
                t.push(vec![u(k), f(x), f(y)]);
            }
        }
        files.push((path, t.to_csv()?));
    }
    let main = grid.main_contour();
    let mut summary = format!(
        "{} x {} grid, {} level-1 polyline(s), longest {} points",
        grid.param_values.len(),
        grid.s_grid.len(),
        grid.contour.len(),
        main.map_or(0, |l| l.len())
    );
    let mut status_failure = false;
    if let Some(sign) = sign {
        let ok = main.is_some_and(|l| l.len() >= 2 && is_monotone(l, sign));
        summary += &format!("; contour {} in {}: {ok}", if sign > 0.0 { "increasing" } else { "decreasing" }, grid.param_name);
        status_failure = !ok;
    }
    Ok(Outcome { table, summary, files, status_failure })
}

fn contour(a: &ContourArgs, ctx: &Context) -> Result<Outcome> {
    let param_kind = a.param.unwrap_or(ContourParamName::B);
    let spec = match param_kind {
        ContourParamName::B => ctx.spec()?,
        ContourParamName::Eta => ctx.spec_any_eta()?,
    };
    let values = parse_grid(a.values.as_deref().unwrap_or(match param_kind {
        ContourParamName::B => "1:1:12",
        ContourParamName::Eta => "0.05:0.05:1.5",
    }))?;
    let param = match param_kind {
        ContourParamName::B => {
            let bs = values
                .iter()
                .map(|&v| if v >= 1.0 && v.fract() == 0.0 { Ok(v as usize) } else { Err(Error::Config(format!("batch size {v} is not a positive integer"))) })
                .collect::<Result<Vec<_>>>()?;
            ContourParam::BatchSize(bs)
        }
        ContourParamName::Eta => ContourParam::StepSize(values),
    };
    let s_grid = parse_grid(a.s_grid.as_deref().unwrap_or(FIG_S_GRID))?;
    let grid = contour_grid(&spec, &param, &s_grid, a.samples.unwrap_or(FIG_SAMPLES), &ctx.mc)?;
    let title = format!("h over ({}, s), {}", param.name(), spec.kind().name());
    let svg = ctx.side_path(&a.svg, "svg", "contour.svg");
    grid_outcome(&grid, &title, a.clip.unwrap_or(2.0), svg, a.contour_out.clone(), None)
}

fn figure(a: &FigureArgs, ctx: &Context, which: u8) -> Result<Outcome> {
    let (spec, param, sign, title) = if which == 1 {
        let bs: Vec<usize> = FIG1_B.collect();
        (ModelSpec::rank1_gauss(2, 1, FIG1_ETA)?, ContourParam::BatchSize(bs), 1.0, "h over (b, s), Rank1Gauss, d = 2, eta = 0.75")
    } else {
        let etas = parse_grid(FIG2_ETA_GRID)?;
        (ModelSpec::rank1_gauss(2, FIG2_B, 1.0)?, ContourParam::StepSize(etas), -1.0, "h over (eta, s), Rank1Gauss, d = 2, b = 5")
    };
    let s_grid = parse_grid(FIG_S_GRID)?;
    let grid = contour_grid(&spec, &param, &s_grid, a.samples.unwrap_or(FIG_SAMPLES), &ctx.mc)?;
    let fallback = if which == 1 { "fig1.svg" } else { "fig2.svg" };
    let svg = ctx.side_path(&a.svg, "svg", fallback);
    grid_outcome(&grid, title, a.clip.unwrap_or(2.0), svg, a.contour_out.clone(), Some(sign))
}

fn operator(a: &OperatorArgs, ctx: &Context) -> Result<Outcome> {
    let spec = ctx.spec()?;
    let (s, bins, samples) = (a.s.unwrap_or(1.0), a.bins.unwrap_or(256), a.samples.unwrap_or(2000));
    let (tol, max_iter) = (a.tol.unwrap_or(1e-10), a.max_iter.unwrap_or(100_000));
    let op = build_operator(&spec, s, bins, samples, false, &ctx.mc)?;
    let adj = build_operator(&spec, s, bins, samples, true, &ctx.mc)?;
    let sp = power_iterate(&op, tol, max_iter)?;
    let sa = power_iterate(&adj, tol, max_iter)?;
    let rep = eigenfunction_representation_check(&sp, &sa, s);
    let mut table = Table::new(&["bin", "bin_angle", "eigenfunction", "eigenmeasure", "adjoint_eigenmeasure"]);
    for j in 0..bins {
        table.push(vec![u(j), f(bin_center(j, bins)), f(sp.eigenfunction[j]), f(sp.eigenmeasure[j]), f(sa.eigenmeasure[j])]);
    }
    let summary = format!(
        "eigenvalue {:.6} (adjoint {:.6}), representation deviation {:.3}, {} zero-image draws",
        sp.eigenvalue, sa.eigenvalue, rep.max_rel_deviation, op.skipped + adj.skipped
    );
    Ok(Outcome { table, summary, ..Default::default() })
}

fn read_samples(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    let col = r.headers()?.iter().position(|h| h == "norm").unwrap_or(0);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = rec.get(col).unwrap_or("");
        out.push(field.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad sample value '{field}'")))?);
    }
    Ok(out)
}

fn r_norms(ctx: &Context, samples: u64) -> Result<Vec<f64>> {
    let spec = ctx.spec()?;
    Ok(sample_r_batch(&spec, StopRule::default(), samples, &ctx.mc).iter().map(|r| r.norm()).collect())
}

fn tailfit(a: &TailfitArgs, ctx: &Context) -> Result<Outcome> {
    let x = match &a.input {
        Some(p) => read_samples(p)?,
        None => r_norms(ctx, a.samples.unwrap_or(100_000))?,
    };
    let n = x.len();
    let k = match (a.k, a.k_fraction) {
        (Some(k), _) => k,
        (None, Some(q)) => ((n as f64 * q) as usize).max(1),
        (None, None) => empirics::hill::default_k(n),
    };
    let fit = empirics::hill_estimate(&x, k)?;
    let scan = empirics::hill_stability_scan(&x)?;
    let mut table = Table::new(&["role", "k_fraction", "k", "alpha_hat", "ci_low", "ci_high", "amplitude", "threshold"]);
    let row = |role: &str, t: &empirics::TailFit| {
        vec![role.into(), f(t.k_order as f64 / t.n as f64), u(t.k_order), f(t.alpha_hat), f(t.ci.0), f(t.ci.1), f(t.amplitude), f(t.threshold)]
    };
    table.push(row("selected", &fit));
    for t in &scan.fits {
        table.push(row("scan", t));
    }
    let summary = format!(
        "alpha_hat = {:.4} [{:.4}, {:.4}] from k = {k} of {n}; scan drift z = {:.2}{}",
        fit.alpha_hat,
        fit.ci.0,
        fit.ci.1,
        scan.drift_z,
        if scan.drifting { " (drifting)" } else { "" }
    );
    Ok(Outcome { table, summary, ..Default::default() })
}

fn angular(a: &AngularArgs, ctx: &Context) -> Result<Outcome> {
    let spec = ctx.spec()?;
    if spec.d() != 2 {
        return Err(Error::Config(format!("the angular test needs d = 2, got {}", spec.d())));
    }
    let draws = sample_r_batch(&spec, StopRule::default(), a.samples.unwrap_or(100_000), &ctx.mc);
    let points: Vec<[f64; 2]> = draws.iter().map(|r| [r.r[0], r.r[1]]).collect();
    let level = a.level.unwrap_or(0.01);
    let rep = empirics::angular_exceedance_test(
        &points,
        a.threshold_quantile.unwrap_or(empirics::angular::DEFAULT_THRESHOLD_QUANTILE),
        level,
    )?;
    let mut table = Table::new(&["test", "statistic", "p_value", "exceedances", "pass"]);
    if let Some(ks) = &rep.ks {
        table.push(vec!["ks".into(), f(ks.statistic), f(ks.p_value), u(rep.exceedances), u(ks.passes(level))]);
    }
    if let Some(r) = &rep.rayleigh {
        table.push(vec!["rayleigh".into(), f(r.resultant_length), f(r.p_value), u(rep.exceedances), u(r.passes(level))]);
    }
    let status = match rep.status {
        AngularStatus::Pass => "pass",
        AngularStatus::Fail => "fail",
        AngularStatus::Inconclusive => "inconclusive",
    };
    let summary = format!("{status} at level {level} with {} exceedances above {:.4}", rep.exceedances, rep.threshold);
    Ok(Outcome { table, summary, ..Default::default() })
}

fn integrability(a: &IntegrabilityArgs, ctx: &Context) -> Result<Outcome> {
    let spec = ctx.spec()?;
    let target = match a.target.unwrap_or(TargetName::DetA) {
        TargetName::DetA => IntegrabilityTarget::DetA,
        TargetName::InvNormA => IntegrabilityTarget::InvNormA,
        TargetName::OffDiagonal => IntegrabilityTarget::OffDiagonal,
    };
    let caps = match &a.caps {
        Some(c) => parse_grid(c)?,
        None => empirics::integrability::DEFAULT_CAPS.to_vec(),
    };
    let rep = empirics::integrability_probe(&spec, target, a.delta.unwrap_or(0.25), a.samples.unwrap_or(1_000_000), &caps, &ctx.mc)?;
    let mut table = Table::new(&["cap", "truncated_mean", "stderr"]);
    for (c, m) in rep.caps.iter().zip(&rep.truncated_means) {
        table.push(vec![f(*c), f(m.mean), f(m.stderr)]);
    }
    let summary = format!(
        "{} ladder at delta = {}: last change {:.2e}, stabilized: {}",
        target.name(),
        rep.delta,
        rep.last_change,
        rep.stabilized
    );
    Ok(Outcome { table, summary, ..Default::default() })
}

fn gausscheck(a: &GausscheckArgs, ctx: &Context) -> Result<Outcome> {
    let spec = ctx.spec_any_eta()?;
    let samples = a.samples.unwrap_or(100_000);
    let level = a.level.unwrap_or(0.01);
    let mut table = Table::new(&["check", "param", "statistic", "p_value", "mean", "variance", "pass"]);
    let diag = empirics::chi2_diagonal_check(&spec, samples, &ctx.mc)?;
    for s in &diag.diagonals {
        let pass = s.ks.passes(level) && s.z_mean.abs() <= 4.0 && s.z_variance.abs() <= 4.0;
        table.push(vec!["chi2-diagonal".into(), u(s.index), f(s.ks.statistic), f(s.ks.p_value), f(s.mean), f(s.variance), u(pass)]);
    }
    let mut passed = diag.passes(level, 4.0);
    let stam_bs = match &a.stam_b {
        Some(text) => text
            .split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|_| Error::Config(format!("bad dimension '{t}'"))))
            .collect::<Result<Vec<_>>>()?,
        None => vec![4, 6, 10],
    };
    for (i, &b) in stam_bs.iter().enumerate() {
        let rep = empirics::stam_p2_check(b, samples, &ctx.mc.derive(100 + i as u64))?;
        let pass = rep.gof.passes(level);
        passed &= pass;
        table.push(vec!["stam".into(), u(b), f(rep.gof.statistic), f(rep.gof.p_value), f(rep.mean), f(rep.variance), u(pass)]);
    }
    Ok(Outcome { table, summary: format!("all checks pass at level {level}: {passed}"), ..Default::default() })
}

/// Exponent from the flag, else the solved tail index.
fn exponent_or_alpha(given: Option<f64>, spec: &ModelSpec, ctx: &Context) -> Result<f64> {
    if let Some(a) = given {
        return Ok(a);
    }
    let sol = solve_alpha(spec, &AlphaOptions::default(), 100_000, &ctx.mc.derive(7));
    if sol.is_converged() {
        Ok(sol.alpha)
    } else {
        Err(Error::Numerical(format!("no tail index to default to ({}); pass --alpha", status_name(sol.status))))
    }
}

fn moments(a: &MomentsArgs, ctx: &Context) -> Result<Outcome> {
    let spec = ctx.spec()?;
    let alpha = exponent_or_alpha(a.alpha, &spec, ctx)?;
    let n_grid = parse_grid(a.n_grid.as_deref().unwrap_or("50,100,200,400,800"))?
        .iter()
        .map(|&v| if v >= 1.0 && v.fract() == 0.0 { Ok(v as u64) } else { Err(Error::Config(format!("bad iteration count {v}"))) })
        .collect::<Result<Vec<_>>>()?;
    let curve = moment_growth_curve(&spec, alpha, &n_grid, a.samples.unwrap_or(100_000), &ctx.mc)?;
    let mut table = Table::new(&["n", "moment", "stderr", "per_step", "per_step_stderr"]);
    for p in &curve {
        let (m, se) = p.per_step();
        table.push(vec![u(p.n), f(p.moment.mean), f(p.moment.stderr), f(m), f(se)]);
    }
    let per: Vec<f64> = curve.iter().map(|p| p.per_step().0).collect();
    let (lo, hi) = per.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let summary = format!("(1/n) E|R_n|^{alpha:.4} ranges over [{lo:.4}, {hi:.4}], ratio {:.3}", hi / lo);
    Ok(Outcome { table, summary, ..Default::default() })
}

fn tailbound(a: &TailboundArgs, ctx: &Context) -> Result<Outcome> {
    let spec = ctx.spec()?;
    let alpha = exponent_or_alpha(a.alpha, &spec, ctx)?;
    let tb = finite_iteration_tail(&spec, alpha, a.eps.unwrap_or(0.5), a.n.unwrap_or(20), None, a.samples.unwrap_or(100_000), &ctx.mc)?;
    let mut table = Table::new(&["t", "prob", "count"]);
    for p in &tb.points {
        table.push(vec![f(p.t), f(p.prob), u(p.count)]);
    }
    let summary = format!(
        "top-decade slope {:.3} on [{:.3}, {:.3}] (reference {:.3}), {} exceedances{}",
        tb.slope,
        tb.decade.0,
        tb.decade.1,
        tb.target_slope,
        tb.top_decade_exceedances,
        if tb.widened { ", sparse" } else { "" }
    );
    Ok(Outcome { table, summary, ..Default::default() })
}
