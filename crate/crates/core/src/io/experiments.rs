use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use super::config::{ExperimentConfig, ProfileSection};
use super::csv::{read_numeric_csv, Cell};
use super::manifest::{create_run_dir, Artifacts, NamedFit, RunManifest, SCHEMA_VERSION};
use super::plot::{PlotOptions, Series};
use crate::analysis::{
    bernstein_monitor, default_window, fit_profile, gbu_point, normal_profile, ode_dominance, MonitorReport,
};
use crate::barriers::{
    comparison_coefficient, flux_exponents, lemma72_eta_search, lemma72_flux, lemma73_cross_check, BarrierParams,
    CutoffFit,
};
use crate::continuation::{
    boundary_loss, classify, default_k_schedule, default_tol_loss, order_report, threshold_bisect, viscosity_extend,
    ClassifyOptions, Verdict, CAUCHY_GAP_TOL,
};
use crate::error::{Error, Result};
use crate::geometry::Grid;
use crate::profiles::{constants, Constants};
use crate::solver::{gradient, max_gradient_norm, run, solve_elliptic, EllipticOptions, Field, StopReason};

/// The experiments reachable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Solve,
    Elliptic,
    Continue,
    Threshold,
    Profile,
    BarrierCheck,
    Sweep,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Solve,
        Experiment::Elliptic,
        Experiment::Continue,
        Experiment::Threshold,
        Experiment::Profile,
        Experiment::BarrierCheck,
        Experiment::Sweep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Solve => "solve",
            Experiment::Elliptic => "elliptic",
            Experiment::Continue => "continue",
            Experiment::Threshold => "threshold",
            Experiment::Profile => "profile",
            Experiment::BarrierCheck => "barrier-check",
            Experiment::Sweep => "sweep",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

/// Exit status of a finished experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Pass = 0,
    MonitorFailure = 1,
    ConfigError = 2,
}

impl ExitStatus {
    /// Configuration problems map to 2, everything else that failed to 1.
    pub fn for_error(e: &Error) -> ExitStatus {
        match e {
            Error::Config(_) | Error::InvalidParameter { .. } => ExitStatus::ConfigError,
            Error::Stage { source, .. } => ExitStatus::for_error(source),
            _ => ExitStatus::MonitorFailure,
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: RunManifest,
}

impl RunOutcome {
    pub fn status(&self) -> ExitStatus {
        if self.manifest.passed {
            ExitStatus::Pass
        } else {
            ExitStatus::MonitorFailure
        }
    }
}

/// Tags errors with the pipeline stage that raised them.
fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage: name.to_string(),
        source: Box::new(e),
    })
}

/// What an experiment body hands back to the driver.
struct Report {
    constants: Option<Constants>,
    monitors: Vec<MonitorReport>,
    fits: Vec<NamedFit>,
    results: serde_json::Value,
    passed: bool,
}

struct Timer(BTreeMap<String, f64>);

impl Timer {
    fn time<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t0 = Instant::now();
        let out = stage(name, f());
        self.0.insert(name.to_string(), t0.elapsed().as_secs_f64());
        out
    }
}

/// Runs `experiment` with `cfg`, writing a new run directory under `out`.
pub fn run_experiment(experiment: Experiment, cfg: &ExperimentConfig, out: &Path) -> Result<RunOutcome> {
    stage("config", cfg.validate())?;
    if let Some(e) = &cfg.experiment {
        if e != experiment.as_str() {
            return Err(Error::Config(format!(
                "config is for experiment `{e}`, not `{experiment}`"
            )));
        }
    }
    let dir = stage("output", create_run_dir(out, &cfg.name, experiment.as_str()))?;
    let mut art = Artifacts::new(dir.clone());
    let mut timer = Timer(BTreeMap::new());
    let report = match experiment {
        Experiment::Solve => solve(cfg, &mut art, &mut timer),
        Experiment::Elliptic => elliptic(cfg, &mut art, &mut timer),
        Experiment::Continue => continuation(cfg, &mut art, &mut timer),
        Experiment::Threshold => threshold(cfg, &mut art, &mut timer),
        Experiment::Profile => profile(cfg, &mut art, &mut timer),
        Experiment::BarrierCheck => barrier_check(cfg, &mut art, &mut timer),
        Experiment::Sweep => sweep(cfg, &mut art, &mut timer),
    }?;
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        tool: format!("gbu-lab {}", env!("CARGO_PKG_VERSION")),
        experiment: experiment.as_str().into(),
        name: cfg.name.clone(),
        created: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        passed: report.passed,
        config: serde_json::to_value(cfg)?,
        constants: report.constants,
        monitors: report.monitors,
        fits: report.fits,
        results: report.results,
        files: art.files().to_vec(),
        timings: timer.0,
    };
    stage("output", art.write_manifest(&manifest))?;
    Ok(RunOutcome { dir, manifest })
}

/// Reads a configuration file and runs it.
pub fn run_config_file(experiment: Experiment, path: &Path, out: &Path) -> Result<RunOutcome> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg = super::config::parse_config(&text)?;
    run_experiment(experiment, &cfg, out)
}

fn field_rows(field: &Field) -> Result<(Vec<&'static str>, Vec<Vec<Cell>>)> {
    let grid = field.grid();
    let grads = gradient(field)?;
    let two_d = grid.dims() == 2;
    let header = if two_d {
        vec!["x", "y", "u", "grad"]
    } else {
        vec!["x", "u", "grad"]
    };
    let rows = (0..grid.len())
        .map(|k| {
            let x = grid.coords(k);
            let g = grads[k][0].hypot(grads[k][1]);
            let mut row = vec![Cell::Num(x[0])];
            if two_d {
                row.push(Cell::Num(x[1]));
            }
            row.push(Cell::Num(field.values()[k]));
            row.push(Cell::Num(g));
            row
        })
        .collect();
    Ok((header, rows))
}

fn write_field(art: &mut Artifacts, name: &str, description: &str, field: &Field) -> Result<()> {
    let (header, rows) = field_rows(field)?;
    art.csv(name, description, &header, &rows)
}

fn pairs(rows: &[(f64, f64)]) -> Vec<Vec<Cell>> {
    rows.iter().map(|&(a, b)| vec![Cell::Num(a), Cell::Num(b)]).collect()
}

fn log_opts(title: &str, x: &str, y: &str, log_x: bool, log_y: bool) -> PlotOptions {
    PlotOptions {
        title: title.into(),
        x_label: x.into(),
        y_label: y.into(),
        log_x,
        log_y,
    }
}

/// Reads a field written by [`write_field`] back onto `grid`.
fn read_field(path: &Path, grid: &Arc<Grid>, time: f64) -> Result<Field> {
    let (header, cols) = read_numeric_csv(path)?;
    let u = header
        .iter()
        .position(|h| h == "u")
        .ok_or_else(|| Error::Config(format!("{} has no `u` column", path.display())))?;
    Field::new(grid.clone(), cols[u].clone(), time)
}

fn solve(cfg: &ExperimentConfig, art: &mut Artifacts, timer: &mut Timer) -> Result<Report> {
    let (grid, scfg, u0) = timer.time("setup", || {
        let grid = cfg.grid()?;
        let u0 = cfg.initial_field(&grid)?;
        Ok((grid, cfg.solver_config()?, u0))
    })?;
    let c = constants(scfg.p)?;
    let rec = timer.time("solve", || run(&u0, &scfg))?;
    timer.time("output", || {
        write_field(art, "final.csv", "field at the stopping time", &rec.final_field)?;
        if let Some(f) = &rec.pre_cap_field {
            write_field(art, "pre_cap.csv", "last field below the gradient cap", f)?;
        }
        if let Some(f) = rec.snapshot_before_pre_cap() {
            write_field(art, "pre_cap_prev.csv", "last snapshot before the blow-up time", f)?;
        }
        art.csv(
            "grad_series.csv",
            "max |grad u| against time",
            &["t", "grad_max"],
            &pairs(&rec.grad_max_series),
        )?;
        art.csv(
            "ut_series.csv",
            "max |u_t| against time",
            &["t", "ut_max"],
            &pairs(&rec.ut_max_series),
        )?;
        art.svg(
            "grad_norm.svg",
            "gradient norm against time",
            &[Series::lines("max |grad u|", rec.grad_max_series.clone())],
            &log_opts("Gradient norm", "t", "max |grad u|", false, true),
        )
    })?;
    let mut stability = MonitorReport::new("stability");
    stability.passed = rec.stop_reason != StopReason::Instability;
    stability.set("steps", rec.steps as f64);
    let mut monitors = vec![stability];
    if scfg.source.is_none() && scfg.boundary.is_homogeneous() {
        let mut mp = MonitorReport::new("maximum_principle");
        let m0 = u0.max_abs();
        let worst = rec
            .snapshots
            .iter()
            .map(Field::max_abs)
            .fold(rec.final_field.max_abs(), f64::max);
        mp.set("sup_u0", m0);
        mp.set("sup_u", worst);
        mp.passed = worst <= m0 + 1e-10;
        monitors.push(mp);
    }
    let passed = monitors.iter().all(|m| m.passed);
    Ok(Report {
        constants: Some(c),
        monitors,
        fits: Vec::new(),
        results: json!({
            "stop_reason": rec.stop_reason,
            "t_h": rec.t_h,
            "steps": rec.steps,
            "gradient_cap": rec.gradient_cap,
            "initial_grad": rec.initial_grad_norm(),
            "final_time": rec.final_field.time(),
            "final_sup": rec.final_field.max_abs(),
            "pre_cap_time": rec.pre_cap_field.as_ref().map(Field::time),
            "pre_cap_prev_time": rec.snapshot_before_pre_cap().map(Field::time),
            "snapshots": rec.snapshots.len(),
            "h": grid.h(),
        }),
        passed,
    })
}

fn elliptic(cfg: &ExperimentConfig, art: &mut Artifacts, timer: &mut Timer) -> Result<Report> {
    let sec = cfg
        .elliptic
        .clone()
        .ok_or_else(|| Error::Config("missing section [elliptic]".into()))?;
    let (scfg, f) = timer.time("setup", || {
        let grid = cfg.grid()?;
        Ok((cfg.solver_config()?, cfg.shape_field(&grid, sec.forcing)?))
    })?;
    let opts = EllipticOptions {
        tol: sec.tol,
        max_steps: sec.max_steps,
    };
    let sol = timer.time("solve", || solve_elliptic(&f, &scfg, opts))?;
    timer.time("output", || {
        write_field(art, "solution.csv", "steady state", &sol.field)?;
        let pts: Vec<(f64, f64)> = (0..sol.field.grid().len())
            .map(|k| (sol.field.grid().coords(k)[0], sol.field.values()[k]))
            .collect();
        if sol.field.grid().dims() == 1 {
            art.svg(
                "solution.svg",
                "steady state",
                &[Series::lines("u", pts)],
                &log_opts("Steady state", "x", "u", false, false),
            )?;
        }
        Ok(())
    })?;
    let mut m = MonitorReport::new("elliptic_convergence");
    m.passed = sol.converged;
    m.set("residual", sol.residual);
    Ok(Report {
        constants: Some(constants(scfg.p)?),
        monitors: vec![m],
        fits: Vec::new(),
        results: json!({
            "converged": sol.converged,
            "residual": sol.residual,
            "steps": sol.steps,
            "pseudo_time": sol.pseudo_time,
            "sup": sol.field.max_abs(),
        }),
        passed: sol.converged,
    })
}

/// The field to analyse, the snapshot before it, and `max|∇u0|`.
fn profile_source(cfg: &ExperimentConfig, sec: &ProfileSection, timer: &mut Timer) -> Result<(Field, Field, f64, f64)> {
    if let Some(dir) = &sec.run_dir {
        return timer.time("load", || {
            let dir = Path::new(dir);
            let m = RunManifest::read(dir)?;
            if m.experiment != "solve" {
                return Err(Error::Config(format!("{} is not a solve run", dir.display())));
            }
            let src: ExperimentConfig = serde_json::from_value(m.config.clone())?;
            let grid = src.grid()?;
            let time = |k: &str| m.results.get(k).and_then(|v| v.as_f64());
            let (Some(t1), Some(t0)) = (time("pre_cap_time"), time("pre_cap_prev_time")) else {
                return Err(Error::Precondition(format!(
                    "{} did not reach the gradient cap",
                    dir.display()
                )));
            };
            let field = read_field(&dir.join("pre_cap.csv"), &grid, t1)?;
            let prev = read_field(&dir.join("pre_cap_prev.csv"), &grid, t0)?;
            let g0 = time("initial_grad").unwrap_or(0.0);
            Ok((field, prev, g0, src.solver()?.p))
        });
    }
    let (scfg, u0) = timer.time("setup", || {
        let grid = cfg.grid()?;
        Ok((cfg.solver_config()?, cfg.initial_field(&grid)?))
    })?;
    let rec = timer.time("solve", || run(&u0, &scfg))?;
    let field = rec
        .pre_cap_field
        .clone()
        .ok_or_else(|| Error::Precondition("the run did not reach the gradient cap".into()))?;
    let prev = rec
        .snapshot_before_pre_cap()
        .cloned()
        .ok_or_else(|| Error::Precondition("no snapshot before the blow-up time".into()))?;
    Ok((field, prev, max_gradient_norm(&u0)?, scfg.p))
}

fn profile(cfg: &ExperimentConfig, art: &mut Artifacts, timer: &mut Timer) -> Result<Report> {
    let sec = cfg.profile.clone().unwrap_or_default();
    let (field, prev, g0, p) = profile_source(cfg, &sec, timer)?;
    let c = constants(p)?;
    let (fit, samples, mut monitors) = timer.time("analysis", || {
        let a = gbu_point(&field)?;
        let window = sec.window.unwrap_or_else(|| default_window(field.grid()));
        let samples = normal_profile(&field, a, window)?;
        let fit = fit_profile(&samples)?;
        let mut pf = MonitorReport::new("profile_fit");
        pf.set("exponent", fit.exponent);
        pf.set("amplitude", fit.amplitude);
        pf.set("beta", c.beta);
        pf.set("d_p", c.d_p);
        pf.passed = (fit.exponent - c.beta).abs() <= sec.exponent_tol
            && (fit.amplitude / c.d_p - 1.0).abs() <= sec.amplitude_tol;
        let bern = bernstein_monitor(&field, sec.eps, &c, sec.budget_factor * g0)?;
        let ode = ode_dominance(&field, &prev, &c, sec.theta_a, sec.dominance_tol)?;
        Ok((fit, samples, vec![pf, bern, ode]))
    })?;
    timer.time("output", || {
        let rows: Vec<Vec<Cell>> = samples
            .iter()
            .map(|&(s, g)| {
                vec![
                    Cell::Num(s),
                    Cell::Num(g),
                    Cell::Num(fit.amplitude * s.powf(-fit.exponent)),
                ]
            })
            .collect();
        art.csv(
            "profile.csv",
            "normal derivative along the normal at the GBU point",
            &["s", "g", "fit"],
            &rows,
        )?;
        let oracle: Vec<(f64, f64)> = samples.iter().map(|&(s, _)| (s, c.d_p * s.powf(-c.beta))).collect();
        let fitted: Vec<(f64, f64)> = samples
            .iter()
            .map(|&(s, _)| (s, fit.amplitude * s.powf(-fit.exponent)))
            .collect();
        art.svg(
            "profile.svg",
            "numeric normal profile against the oracle d_p s^-beta",
            &[
                Series::points("numeric", samples.clone()),
                Series::lines("oracle", oracle),
                Series::lines("fit", fitted),
            ],
            &log_opts("Normal profile", "s", "u_nu", true, true),
        )?;
        write_field(art, "field.csv", "analysed field", &field)
    })?;
    // An inactive dominance monitor means the singular region is empty; that
    // is not a failure of the analysed field.
    for m in &mut monitors {
        if m.is_inactive() {
            m.passed = true;
        }
    }
    let passed = monitors.iter().all(|m| m.passed);
    Ok(Report {
        constants: Some(c),
        monitors,
        fits: vec![NamedFit {
            name: "normal_profile".into(),
            fit,
        }],
        results: json!({
            "field_time": field.time(),
            "previous_time": prev.time(),
            "initial_grad": g0,
        }),
        passed,
    })
}

fn continuation(cfg: &ExperimentConfig, art: &mut Artifacts, timer: &mut Timer) -> Result<Report> {
    let sec = cfg.continuation.clone().unwrap_or_default();
    let (grid, scfg, u0) = timer.time("setup", || {
        let grid = cfg.grid()?;
        Ok((grid.clone(), cfg.solver_config()?, cfg.initial_field(&grid)?))
    })?;
    let c = constants(scfg.p)?;
    let horizon = sec.horizon.unwrap_or(scfg.t_end);
    let mut hcfg = scfg.clone();
    hcfg.t_end = horizon;
    hcfg.snapshot_times.retain(|&t| t <= horizon);
    let ks = match &sec.k_schedule {
        Some(k) => k.clone(),
        None => default_k_schedule(&u0)?,
    };
    let rec = timer.time("classical", || run(&u0, &hcfg))?;
    let mut ext = timer.time("extend", || viscosity_extend(&u0, horizon, &ks, &hcfg))?;
    let tol = sec.tol_loss.unwrap_or_else(|| default_tol_loss(&c, grid.h()));
    let (loss, max_trace) = boundary_loss(&ext, tol);
    ext.tol_loss = tol;
    ext.loss_time = loss;
    let mut mono = MonitorReport::new("k_monotone");
    let before = rec.t_h.unwrap_or(horizon);
    mono.set("gap_before_t_h", ext.gap_until(before));
    mono.set("levels", ks.len() as f64);
    mono.passed = ext.gap_until(before) <= CAUCHY_GAP_TOL;
    let mut monitors = vec![mono];
    let mut order = None;
    if let Some(factor) = sec.order_factor {
        let v0 = u0.scaled(factor);
        let rv = timer.time("order", || run(&v0, &hcfg))?;
        let ev = timer.time("order", || {
            let mut e = viscosity_extend(&v0, horizon, &default_k_schedule(&v0)?, &hcfg)?;
            let (l, _) = boundary_loss(&e, tol);
            e.tol_loss = tol;
            e.loss_time = l;
            Ok(e)
        })?;
        let rep = stage("order", order_report(&rec, Some(&ext), &rv, &ev))?;
        order = Some(rep.passed);
        monitors.push(rep);
    }
    timer.time("output", || {
        art.csv(
            "trace.csv",
            "boundary trace of the limit",
            &["t", "trace"],
            &pairs(&ext.boundary_trace),
        )?;
        art.csv(
            "gap.csv",
            "gap between the two largest truncation levels",
            &["t", "gap"],
            &pairs(&ext.cauchy_gap),
        )?;
        let tol_line: Vec<(f64, f64)> = ext.boundary_trace.iter().map(|&(t, _)| (t, tol)).collect();
        art.svg(
            "trace.svg",
            "boundary trace against the loss tolerance",
            &[
                Series::lines("trace", ext.boundary_trace.clone()),
                Series::lines("tol_loss", tol_line),
            ],
            &log_opts("Boundary trace", "t", "trace", false, false),
        )?;
        if let Some(f) = ext.limit_snapshots.last() {
            write_field(art, "limit_final.csv", "limit at the horizon", f)?;
        }
        Ok(())
    })?;
    let verdict = match (rec.t_h, loss) {
        (None, _) => None,
        (Some(_), Some(_)) => Some(Verdict::GbuLoss),
        (Some(_), None) => Some(Verdict::GbuNoLoss),
    };
    let passed = monitors.iter().all(|m| m.passed);
    Ok(Report {
        constants: Some(c),
        monitors,
        fits: Vec::new(),
        results: json!({
            "horizon": horizon,
            "k_schedule": ks,
            "t_h": rec.t_h,
            "loss_time": loss,
            "max_trace": max_trace,
            "tol_loss": tol,
            "verdict": verdict,
            "order_passed": order,
        }),
        passed,
    })
}

fn verdict_code(v: Verdict) -> f64 {
    match v {
        Verdict::Global => 0.0,
        Verdict::GbuNoLoss => 1.0,
        Verdict::GbuLoss => 2.0,
        Verdict::Undecided => -1.0,
    }
}

fn verdict_name(v: Verdict) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|j| j.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn threshold(cfg: &ExperimentConfig, art: &mut Artifacts, timer: &mut Timer) -> Result<Report> {
    let sec = cfg.threshold.clone().unwrap_or_default();
    let (scfg, phi) = timer.time("setup", || {
        let grid = cfg.grid()?;
        Ok((cfg.solver_config()?, cfg.shape_field(&grid, 1.0)?))
    })?;
    let horizon = sec.horizon.unwrap_or(scfg.t_end);
    let opts = ClassifyOptions {
        decay_frac: sec.decay_frac,
    };
    let res = timer.time("bisect", || threshold_bisect(&phi, horizon, sec.rel_tol, &scfg, opts))?;
    timer.time("output", || {
        let rows: Vec<Vec<Cell>> = res
            .classifications
            .iter()
            .map(|p| {
                vec![
                    Cell::Num(p.lambda),
                    Cell::Text(verdict_name(p.verdict)),
                    p.t_h.into(),
                    p.loss_time.into(),
                    p.decay_ratio.into(),
                ]
            })
            .collect();
        art.csv(
            "classifications.csv",
            "verdict per probed amplitude",
            &["lambda", "verdict", "t_h", "loss_time", "decay_ratio"],
            &rows,
        )?;
        let pts: Vec<(f64, f64)> = res
            .classifications
            .iter()
            .map(|p| (p.lambda, verdict_code(p.verdict)))
            .collect();
        art.svg(
            "threshold.svg",
            "verdict code (0 global, 1 no loss, 2 loss) against amplitude",
            &[Series::points("verdict", pts)],
            &log_opts("Threshold search", "lambda", "verdict", true, false),
        )
    })?;
    let mut m = MonitorReport::new("threshold_monotone");
    m.passed = res.is_monotone() && res.paused_at.is_none();
    m.set("lambda_lo", res.lambda_lo);
    m.set("lambda_hi", res.lambda_hi);
    if res.paused_at.is_some() {
        m.flags.push("paused".into());
    }
    let passed = m.passed;
    Ok(Report {
        constants: Some(constants(scfg.p)?),
        monitors: vec![m],
        fits: Vec::new(),
        results: serde_json::to_value(&res)?,
        passed,
    })
}

fn barrier_check(cfg: &ExperimentConfig, art: &mut Artifacts, timer: &mut Timer) -> Result<Report> {
    let sec = cfg.barrier.clone().unwrap_or_default();
    let mut monitors = Vec::new();
    let mut sweeps = Vec::new();
    let mut cutoffs = Vec::new();
    let mut sweep_rows = Vec::new();

    timer.time("comparison", || {
        let mut m = MonitorReport::new("comparison_coefficient");
        let mut worst_critical = 0.0f64;
        let mut worst_sub = f64::NEG_INFINITY;
        for p in [2.5, 3.0, 4.0, 5.0] {
            let d = constants(p)?.d_p;
            worst_critical = worst_critical.max(comparison_coefficient(p, d, 0.0, 1.0).abs());
            worst_sub = worst_sub.max(comparison_coefficient(p, 0.9 * d, 0.0, 1.0));
        }
        m.set("max_abs_critical", worst_critical);
        m.set("max_subcritical", worst_sub);
        m.passed = worst_critical <= 1e-12 && worst_sub < 0.0;
        monitors.push(m);
        Ok(())
    })?;

    timer.time("residual", || {
        let mut m = MonitorReport::new("barrier_residual");
        m.passed = true;
        for &p in &sec.p_values {
            let d = constants(p)?.d_p;
            let base = BarrierParams::new(p, sec.k_fraction * d, 0.5, sec.rho, sec.tau, sec.l, sec.c1_start)?;
            let search = lemma72_eta_search(&base, sec.c1_start, sec.max_halvings, sec.nx, sec.nt)?;
            for &(c1, r) in &search.tried {
                sweep_rows.push(vec![Cell::Num(p), Cell::Num(c1), Cell::Num(r)]);
            }
            match &search.accepted {
                Some(s) => m.set(&format!("min_residual_p{p}"), s.min_residual),
                None => m.passed = false,
            }
            sweeps.push(json!({ "p": p, "search": search }));
        }
        monitors.push(m);
        Ok(())
    })?;

    timer.time("cutoff", || {
        let mut m = MonitorReport::new("cutoff_bounds");
        m.passed = true;
        let side = (sec.cutoff_points as f64).sqrt().ceil() as usize;
        for &p in &sec.p_values {
            let mexp = (p + 1.0) / (2.0 * p);
            let fit = CutoffFit::new(2, mexp)?;
            let mut fails = 0usize;
            for i in 0..side {
                for j in 0..side {
                    let x = [
                        -1.2 + 2.4 * (i as f64 + 0.5) / side as f64,
                        -1.2 + 2.4 * (j as f64 + 0.5) / side as f64,
                    ];
                    if !fit.sample(&x, 1.0)?.bound_check {
                        fails += 1;
                    }
                }
            }
            m.set(&format!("C_m_p{p}"), fit.c_m);
            if fails > 0 {
                m.passed = false;
                m.set(&format!("failures_p{p}"), fails as f64);
            }
            cutoffs.push(json!({ "p": p, "fit": fit, "points": side * side, "failures": fails }));
        }
        monitors.push(m);
        Ok(())
    })?;

    let flux = timer.time("flux", || {
        let params = BarrierParams::new(3.0, 0.35, 0.5, 0.1, 1.0, 0.0, 0.05)?.with_recipe_eta()?;
        let value = lemma72_flux(&params, 0.5)?;
        let mut m = MonitorReport::new("flux_exponents");
        let mut worst = 0.0f64;
        for p in [2.5, 3.0, 4.0, 5.0] {
            let (a, b, c, d) = flux_exponents(p);
            worst = worst.max((a - b).abs()).max((c - d).abs());
        }
        m.set("max_identity_error", worst);
        m.set("example_flux", value);
        m.passed = worst <= 1e-14;
        monitors.push(m);
        Ok(value)
    })?;

    let cross = if sec.cross_check_h > 0.0 {
        Some(timer.time("bracket", || {
            let cc = lemma73_cross_check(3.0, &[0.2, 0.4, 0.6], &[0.01, 0.03, 0.1], 0.5, sec.cross_check_h)?;
            let mut m = MonitorReport::new("gradient_bracket");
            m.set("C_fit", cc.c_fit);
            m.set("max_violation", cc.max_violation);
            m.passed = cc.max_violation == 0.0 && cc.c_fit.is_finite();
            monitors.push(m);
            let rows: Vec<Vec<Cell>> = cc
                .samples
                .iter()
                .map(|s| {
                    [s.amplitude, s.n, s.m, s.radius, s.dt, s.grad, s.bracket, s.ratio]
                        .into_iter()
                        .map(Cell::Num)
                        .collect()
                })
                .collect();
            art.csv(
                "bracket.csv",
                "interior gradient against the bracket",
                &["amplitude", "N", "M", "R", "dt", "grad", "bracket", "ratio"],
                &rows,
            )?;
            Ok(cc)
        })?)
    } else {
        None
    };

    timer.time("output", || {
        art.csv(
            "residual_search.csv",
            "minimum barrier residual per tried c1",
            &["p", "c1", "min_residual"],
            &sweep_rows,
        )
    })?;
    let passed = monitors.iter().all(|m| m.passed);
    Ok(Report {
        constants: None,
        monitors,
        fits: Vec::new(),
        results: json!({
            "residual_sweeps": sweeps,
            "cutoff": cutoffs,
            "example_flux": flux,
            "bracket": cross,
        }),
        passed,
    })
}

fn sweep(cfg: &ExperimentConfig, art: &mut Artifacts, timer: &mut Timer) -> Result<Report> {
    let sec = cfg
        .sweep
        .clone()
        .ok_or_else(|| Error::Config("missing section [sweep]".into()))?;
    let (scfg, phi) = timer.time("setup", || {
        let grid = cfg.grid()?;
        Ok((cfg.solver_config()?, cfg.shape_field(&grid, 1.0)?))
    })?;
    let horizon = sec.horizon.unwrap_or(scfg.t_end);
    let opts = ClassifyOptions {
        decay_frac: sec.decay_frac,
    };
    let mut amps = sec.amplitudes.clone();
    amps.sort_by(f64::total_cmp);
    let results = timer.time("classify", || {
        amps.par_iter()
            .map(|&a| classify(&phi.scaled(a), horizon, &scfg, opts))
            .collect::<Result<Vec<_>>>()
    })?;
    timer.time("output", || {
        let rows: Vec<Vec<Cell>> = amps
            .iter()
            .zip(&results)
            .map(|(&a, c)| {
                vec![
                    Cell::Num(a),
                    Cell::Text(verdict_name(c.verdict)),
                    c.t_h.into(),
                    c.loss_time.into(),
                    c.decay_ratio.into(),
                ]
            })
            .collect();
        art.csv(
            "sweep.csv",
            "verdict per amplitude",
            &["amplitude", "verdict", "t_h", "loss_time", "decay_ratio"],
            &rows,
        )?;
        let pts: Vec<(f64, f64)> = amps
            .iter()
            .zip(&results)
            .map(|(&a, c)| (a, verdict_code(c.verdict)))
            .collect();
        art.svg(
            "sweep.svg",
            "verdict code against amplitude",
            &[Series::points("verdict", pts)],
            &log_opts("Amplitude sweep", "amplitude", "verdict", false, false),
        )
    })?;
    let first_blow = results
        .iter()
        .position(|c| !c.verdict.is_global())
        .unwrap_or(results.len());
    let mut m = MonitorReport::new("sweep_monotone");
    m.passed = results[first_blow..].iter().all(|c| !c.verdict.is_global());
    let passed = m.passed;
    Ok(Report {
        constants: Some(constants(scfg.p)?),
        monitors: vec![m],
        fits: Vec::new(),
        results: json!({
            "horizon": horizon,
            "amplitudes": amps,
            "classifications": results,
        }),
        passed,
    })
}
