//! Continuation past the blow-up time through monotone truncation, detection
//! of boundary-condition loss, and the global-existence threshold along a ray
//! of initial data.
//!
//! Boundary nodes are reset to their Dirichlet value after every step, so the
//! boundary trace of the limit is read at the interior nodes one spacing from
//! the wall.

use serde::{Deserialize, Serialize};

use crate::analysis::MonitorReport;
use crate::error::{invalid, Error, Result};
use crate::profiles::Constants;
use crate::solver::{max_gradient_norm, run, truncated_family, Field, RunRecord, SolverConfig, StopReason};

/// Levels in the default truncation schedule.
pub const DEFAULT_LEVELS: usize = 5;

/// Largest tolerated decrease between consecutive truncation levels.
pub const MONOTONICITY_TOL: f64 = 1e-6;

/// Default share of `‖u0‖∞` a global solution must decay below.
pub const DEFAULT_DECAY_FRAC: f64 = 0.5;

/// Largest accepted gap between the two largest truncation levels before the
/// blow-up time.
pub const CAUCHY_GAP_TOL: f64 = 1e-3;

/// Approximate viscosity continuation.
#[derive(Debug, Clone)]
pub struct ExtendedRun {
    pub k_schedule: Vec<f64>,
    pub runs: Vec<RunRecord>,
    /// Nodewise maximum over the levels at every snapshot time.
    pub limit_snapshots: Vec<Field>,
    /// `(t, max u)` over the nodes one spacing from the wall.
    pub boundary_trace: Vec<(f64, f64)>,
    /// `(t, sup |u_last - u_previous|)` between the two largest levels.
    pub cauchy_gap: Vec<(f64, f64)>,
    pub tol_loss: f64,
    pub loss_time: Option<f64>,
}

impl ExtendedRun {
    pub fn max_trace(&self) -> f64 {
        self.boundary_trace.iter().map(|s| s.1).fold(0.0, f64::max)
    }

    /// Largest Cauchy gap among snapshots with `t <= t_max`.
    pub fn gap_until(&self, t_max: f64) -> f64 {
        self.cauchy_gap
            .iter()
            .filter(|s| s.0 <= t_max)
            .map(|s| s.1)
            .fold(0.0, f64::max)
    }
}

/// `10 c_p h^(1-beta)`: ten times the half-space profile value one spacing
/// from the wall.
pub fn default_tol_loss(c: &Constants, h: f64) -> f64 {
    10.0 * c.c_p * h.powf(1.0 - c.beta)
}

/// `k_i = k_0 2^i`, `k_0 = 2 max|∇u0|` (at least 1), five levels.
pub fn default_k_schedule(u0: &Field) -> Result<Vec<f64>> {
    let k0 = (2.0 * max_gradient_norm(u0)?).max(1.0);
    Ok((0..DEFAULT_LEVELS).map(|i| k0 * 2f64.powi(i as i32)).collect())
}

/// Snapshot times used when the configuration requests none: zero and a
/// geometric ladder of 16 times per decade over `[1e-5, 1] * horizon`.
pub fn default_snapshot_times(horizon: f64) -> Vec<f64> {
    let mut t = vec![0.0];
    t.extend((0..=80).map(|i| horizon * 10f64.powf(-5.0 + i as f64 / 16.0)));
    t
}

/// Runs the truncated problems of `k_schedule` up to `horizon` and forms the
/// monotone limit.
///
/// A decrease of more than [`MONOTONICITY_TOL`] from one level to the next is
/// reported as a scheme failure.
pub fn viscosity_extend(u0: &Field, horizon: f64, k_schedule: &[f64], config: &SolverConfig) -> Result<ExtendedRun> {
    if k_schedule.len() < 3 {
        return Err(invalid("k_schedule", "needs at least three levels"));
    }
    if k_schedule.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("k_schedule", "levels must be strictly increasing"));
    }
    let c = config.validate()?;
    let mut cfg = config.clone();
    cfg.t_end = horizon;
    if cfg.snapshot_times.is_empty() {
        cfg.snapshot_times = default_snapshot_times(horizon);
    }
    let runs = truncated_family(u0, k_schedule, &cfg)?;
    if let Some(r) = runs.iter().find(|r| r.stop_reason == StopReason::Instability) {
        return Err(Error::Scheme(format!(
            "truncated run at k = {:?} became non-finite",
            r.config.truncation_level
        )));
    }
    let grid = u0.grid().clone();
    let h = grid.h();
    let near_wall: Vec<usize> = grid
        .interior_nodes()
        .filter(|&k| grid.node_distance(k) <= h * (1.0 + 1e-9))
        .collect();

    let n_snap = runs[0].snapshots.len();
    let mut limit_snapshots = Vec::with_capacity(n_snap);
    let mut boundary_trace = Vec::with_capacity(n_snap);
    let mut cauchy_gap = Vec::with_capacity(n_snap);
    for s in 0..n_snap {
        let t = runs[0].snapshots[s].time();
        for w in runs.windows(2) {
            let drop = w[0].snapshots[s].max_excess_over(&w[1].snapshots[s])?;
            if drop > MONOTONICITY_TOL {
                return Err(Error::Scheme(format!(
                    "truncation levels out of order by {drop:e} at t = {t}"
                )));
            }
        }
        let mut lim = runs[0].snapshots[s].values().to_vec();
        for r in &runs[1..] {
            for (a, b) in lim.iter_mut().zip(r.snapshots[s].values()) {
                *a = a.max(*b);
            }
        }
        let trace = near_wall.iter().map(|&k| lim[k]).fold(0.0, f64::max);
        boundary_trace.push((t, trace));
        let last = &runs[runs.len() - 1].snapshots[s];
        let before = &runs[runs.len() - 2].snapshots[s];
        cauchy_gap.push((t, last.sup_distance(before)?));
        limit_snapshots.push(Field::new(grid.clone(), lim, t)?);
    }
    let tol_loss = default_tol_loss(&c, h);
    let loss_time = first_crossing(&boundary_trace, tol_loss);
    Ok(ExtendedRun {
        k_schedule: k_schedule.to_vec(),
        runs,
        limit_snapshots,
        boundary_trace,
        cauchy_gap,
        tol_loss,
        loss_time,
    })
}

fn first_crossing(trace: &[(f64, f64)], tol: f64) -> Option<f64> {
    trace.iter().find(|s| s.1 > tol).map(|s| s.0)
}

/// First snapshot time where the boundary trace exceeds `tol_loss`, and the
/// largest trace.
pub fn boundary_loss(ext: &ExtendedRun, tol_loss: f64) -> (Option<f64>, f64) {
    (first_crossing(&ext.boundary_trace, tol_loss), ext.max_trace())
}

/// Long-time behaviour of one initial datum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Global,
    #[serde(rename = "GBU-no-loss")]
    GbuNoLoss,
    #[serde(rename = "GBU-loss")]
    GbuLoss,
    /// Neither decay nor blow-up within the horizon.
    Undecided,
}

impl Verdict {
    pub fn is_global(self) -> bool {
        self == Verdict::Global
    }

    pub fn is_blow_up(self) -> bool {
        matches!(self, Verdict::GbuLoss | Verdict::GbuNoLoss)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub decay_frac: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            decay_frac: DEFAULT_DECAY_FRAC,
        }
    }
}

/// A verdict with the evidence behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub t_h: Option<f64>,
    pub loss_time: Option<f64>,
    /// `‖u(horizon)‖∞ / ‖u0‖∞` for runs that reached the horizon.
    pub decay_ratio: Option<f64>,
    pub max_trace: Option<f64>,
    pub diagnostics: String,
}

/// Classifies `u0` as global, blow-up with or without loss, or undecided.
pub fn classify(u0: &Field, horizon: f64, config: &SolverConfig, opts: ClassifyOptions) -> Result<Classification> {
    Ok(classify_full(u0, horizon, config, opts, None)?.0)
}

/// As [`classify`], also returning the classical run and the extension (if
/// one was needed). `k_schedule` overrides the default schedule.
pub fn classify_full(
    u0: &Field,
    horizon: f64,
    config: &SolverConfig,
    opts: ClassifyOptions,
    k_schedule: Option<&[f64]>,
) -> Result<(Classification, RunRecord, Option<ExtendedRun>)> {
    if !(opts.decay_frac > 0.0 && opts.decay_frac < 1.0) {
        return Err(invalid("decay_frac", "must lie in (0, 1)"));
    }
    let mut cfg = config.clone();
    cfg.t_end = horizon;
    let rec = run(u0, &cfg)?;
    let m0 = u0.max_abs();
    match rec.stop_reason {
        StopReason::Horizon => {
            let m1 = rec.final_field.max_abs();
            let ratio = if m0 > 0.0 { m1 / m0 } else { 0.0 };
            let decayed = m1 <= opts.decay_frac * m0;
            let cls = Classification {
                verdict: if decayed { Verdict::Global } else { Verdict::Undecided },
                t_h: None,
                loss_time: None,
                decay_ratio: Some(ratio),
                max_trace: None,
                diagnostics: if decayed {
                    format!("reached the horizon; sup norm fell to {ratio:.3e} of its initial value")
                } else {
                    format!(
                        "reached the horizon below the cap but the sup norm only fell to {ratio:.3} \
                         of its initial value; increase the horizon"
                    )
                },
            };
            Ok((cls, rec, None))
        }
        StopReason::Instability => {
            let cls = Classification {
                verdict: Verdict::Undecided,
                t_h: None,
                loss_time: None,
                decay_ratio: None,
                max_trace: None,
                diagnostics: format!("classical run became non-finite at t = {}", rec.final_field.time()),
            };
            Ok((cls, rec, None))
        }
        StopReason::GradientCap => {
            let ks = match k_schedule {
                Some(k) => k.to_vec(),
                None => default_k_schedule(u0)?,
            };
            let ext = viscosity_extend(u0, horizon, &ks, config)?;
            let (loss, max_trace) = boundary_loss(&ext, ext.tol_loss);
            let cls = Classification {
                verdict: if loss.is_some() {
                    Verdict::GbuLoss
                } else {
                    Verdict::GbuNoLoss
                },
                t_h: rec.t_h,
                loss_time: loss,
                decay_ratio: None,
                max_trace: Some(max_trace),
                diagnostics: format!(
                    "gradient cap {:.4e} crossed at t = {:.6e}; boundary trace peaks at {max_trace:.4e} \
                     against tolerance {:.4e}",
                    rec.gradient_cap,
                    rec.t_h.unwrap_or(f64::NAN),
                    ext.tol_loss
                ),
            };
            Ok((cls, rec, Some(ext)))
        }
    }
}

/// One probe of the threshold search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub lambda: f64,
    pub verdict: Verdict,
    pub t_h: Option<f64>,
    pub loss_time: Option<f64>,
    pub decay_ratio: Option<f64>,
}

/// Bracket for the threshold amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    /// Every probe, sorted by amplitude.
    pub classifications: Vec<Probe>,
    /// Amplitude of an undecided probe that stopped the search.
    pub paused_at: Option<f64>,
}

impl ThresholdResult {
    /// True when the verdicts, sorted by amplitude, are all global up to some
    /// amplitude and never global beyond it.
    pub fn is_monotone(&self) -> bool {
        let first_bad = self
            .classifications
            .iter()
            .position(|p| !p.verdict.is_global())
            .unwrap_or(self.classifications.len());
        self.classifications[first_bad..].iter().all(|p| !p.verdict.is_global())
    }
}

const MAX_EXPANSIONS: usize = 40;

/// Brackets `lambda* = sup{lambda : lambda phi is global}` to relative width
/// `rel_tol`, starting from `lambda = 1` and doubling or halving until the
/// verdicts differ.
pub fn threshold_bisect(
    phi: &Field,
    horizon: f64,
    rel_tol: f64,
    config: &SolverConfig,
    opts: ClassifyOptions,
) -> Result<ThresholdResult> {
    if !(rel_tol > 0.0) {
        return Err(invalid("rel_tol", "must be > 0"));
    }
    if phi.values().iter().any(|&v| v < 0.0) || phi.max_abs() == 0.0 {
        return Err(Error::Precondition("shape must be nonnegative and nontrivial".into()));
    }
    let shape = phi.scaled(1.0 / phi.max_abs());
    let mut probes: Vec<Probe> = Vec::new();
    let mut probe = |lambda: f64| -> Result<Verdict> {
        let cls = classify(&shape.scaled(lambda), horizon, config, opts)?;
        probes.push(Probe {
            lambda,
            verdict: cls.verdict,
            t_h: cls.t_h,
            loss_time: cls.loss_time,
            decay_ratio: cls.decay_ratio,
        });
        Ok(cls.verdict)
    };
    let finish = |mut probes: Vec<Probe>, lo: f64, hi: f64, paused: Option<f64>| {
        probes.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        ThresholdResult {
            lambda_lo: lo,
            lambda_hi: hi,
            classifications: probes,
            paused_at: paused,
        }
    };

    let (mut lo, mut hi);
    let v = probe(1.0)?;
    if v == Verdict::Undecided {
        return Ok(finish(probes, 0.0, f64::INFINITY, Some(1.0)));
    }
    if v.is_global() {
        lo = 1.0;
        hi = f64::INFINITY;
        for _ in 0..MAX_EXPANSIONS {
            let l = 2.0 * lo;
            match probe(l)? {
                Verdict::Global => lo = l,
                Verdict::Undecided => return Ok(finish(probes, lo, hi, Some(l))),
                _ => {
                    hi = l;
                    break;
                }
            }
        }
    } else {
        hi = 1.0;
        lo = 0.0;
        for _ in 0..MAX_EXPANSIONS {
            let l = 0.5 * hi;
            match probe(l)? {
                Verdict::Global => {
                    lo = l;
                    break;
                }
                Verdict::Undecided => return Ok(finish(probes, lo, hi, Some(l))),
                _ => hi = l,
            }
        }
    }
    if !(lo > 0.0 && hi.is_finite()) {
        return Err(Error::Scheme("threshold bracket could not be established".into()));
    }
    while (hi - lo) / lo > rel_tol {
        let mid = 0.5 * (lo + hi);
        match probe(mid)? {
            Verdict::Global => lo = mid,
            Verdict::Undecided => return Ok(finish(probes, lo, hi, Some(mid))),
            _ => hi = mid,
        }
    }
    Ok(finish(probes, lo, hi, None))
}

/// Ordering of blow-up and loss times for ordered data `u0 <= v0`.
pub fn order_check(u0: &Field, v0: &Field, horizon: f64, config: &SolverConfig) -> Result<MonitorReport> {
    check_ordered(u0, v0)?;
    let (cu, ru, eu) = classify_full(u0, horizon, config, ClassifyOptions::default(), None)?;
    let (cv, rv, ev) = classify_full(v0, horizon, config, ClassifyOptions::default(), None)?;
    if !(cu.verdict.is_blow_up() && cv.verdict.is_blow_up()) {
        return Err(Error::Precondition(format!(
            "both data must blow up, got {:?} and {:?}",
            cu.verdict, cv.verdict
        )));
    }
    order_report(
        &ru,
        eu.as_ref(),
        &rv,
        ev.as_ref().expect("blow-up verdicts carry an extension"),
    )
}

/// Rejects data that are not ordered or coincide.
pub fn check_ordered(u0: &Field, v0: &Field) -> Result<()> {
    if u0.max_excess_over(v0)? > 0.0 {
        return Err(Error::Precondition("need u0 <= v0 nodewise".into()));
    }
    if u0.sup_distance(v0)? == 0.0 {
        return Err(Error::Precondition("need v0 different from u0".into()));
    }
    Ok(())
}

/// Builds the order report from precomputed runs: passes when
/// `T_h(v) < T_h(u)` and the limit from `v0` loses the boundary condition
/// before `T_h(u)`.
pub fn order_report(
    u_run: &RunRecord,
    u_ext: Option<&ExtendedRun>,
    v_run: &RunRecord,
    v_ext: &ExtendedRun,
) -> Result<MonitorReport> {
    let (Some(tu), Some(tv)) = (u_run.t_h, v_run.t_h) else {
        return Err(Error::Precondition("both runs must reach the gradient cap".into()));
    };
    let mut rep = MonitorReport {
        name: "order".into(),
        passed: false,
        worst_node: None,
        fitted_constants: Default::default(),
        flags: Vec::new(),
    };
    rep.fitted_constants.insert("T_h_u".into(), tu);
    rep.fitted_constants.insert("T_h_v".into(), tv);
    if let Some(lu) = u_ext.and_then(|e| e.loss_time) {
        rep.fitted_constants.insert("loss_u".into(), lu);
    }
    match v_ext.loss_time {
        Some(lv) => {
            rep.fitted_constants.insert("loss_v".into(), lv);
            rep.passed = tv < tu && lv < tu;
        }
        None => rep.flags.push("v never lost the boundary condition".into()),
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DomainSpec, Grid};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn sine(h: f64, amp: f64) -> Field {
        let grid = Arc::new(Grid::new(DomainSpec::interval(1.0).unwrap(), h).unwrap());
        Field::from_fn(grid, |x| amp * (PI * x[0]).sin()).unwrap()
    }

    #[test]
    fn schedule_and_tolerance() {
        let u0 = sine(0.01, 1.0);
        let ks = default_k_schedule(&u0).unwrap();
        assert_eq!(ks.len(), 5);
        let g0 = max_gradient_norm(&u0).unwrap();
        assert!((ks[0] - 2.0 * g0).abs() < 1e-12 && (ks[4] - 32.0 * g0).abs() < 1e-9);
        let c = Constants::new(3.0).unwrap();
        assert!((default_tol_loss(&c, 0.01) - 10.0 * c.c_p * 0.1).abs() < 1e-12);
    }

    #[test]
    fn zero_data_extends_to_zero() {
        let u0 = sine(0.05, 0.0);
        let cfg = SolverConfig::new(3.0, 0.02);
        let ext = viscosity_extend(&u0, 0.02, &[1.0, 2.0, 4.0], &cfg).unwrap();
        assert!(ext.limit_snapshots.iter().all(|f| f.max_abs() == 0.0));
        assert_eq!(boundary_loss(&ext, ext.tol_loss), (None, 0.0));
        let cls = classify(&u0, 0.02, &cfg, Default::default()).unwrap();
        assert_eq!(cls.verdict, Verdict::Global);
    }

    #[test]
    fn small_data_limit_is_classical() {
        let u0 = sine(1.0 / 50.0, 0.1);
        let cfg = SolverConfig::new(3.0, 0.2);
        let ks = default_k_schedule(&u0).unwrap();
        let ext = viscosity_extend(&u0, 0.2, &ks, &cfg).unwrap();
        assert!(ext.gap_until(0.2) < 1e-12);
        let (loss, _) = boundary_loss(&ext, ext.tol_loss);
        assert!(loss.is_none());
        assert!(boundary_loss(&ext, f64::INFINITY).0.is_none());
        let cls = classify(&u0, 0.2, &cfg, Default::default()).unwrap();
        assert_eq!(cls.verdict, Verdict::Global);
    }

    #[test]
    fn schedule_validation() {
        let u0 = sine(0.05, 0.1);
        let cfg = SolverConfig::new(3.0, 0.01);
        assert!(viscosity_extend(&u0, 0.01, &[1.0, 2.0], &cfg).is_err());
        assert!(viscosity_extend(&u0, 0.01, &[1.0, 3.0, 2.0], &cfg).is_err());
    }

    #[test]
    fn large_data_loses_the_boundary_condition() {
        let u0 = sine(1.0 / 100.0, 8.0);
        let cfg = SolverConfig::new(3.0, 0.01);
        let (cls, rec, ext) = classify_full(&u0, 0.01, &cfg, Default::default(), None).unwrap();
        assert_eq!(cls.verdict, Verdict::GbuLoss, "{cls:?}");
        let ext = ext.unwrap();
        let th = rec.t_h.unwrap();
        assert!(ext.boundary_trace.iter().any(|&(t, v)| t > th && v > ext.tol_loss));
        for w in ext.runs.windows(2) {
            for (a, b) in w[0].snapshots.iter().zip(&w[1].snapshots) {
                assert!(a.max_excess_over(b).unwrap() <= 1e-8);
            }
        }
    }

    #[test]
    fn order_check_rejects_bad_input() {
        let u0 = sine(0.05, 0.1);
        let cfg = SolverConfig::new(3.0, 0.05);
        assert!(order_check(&u0, &u0, 0.05, &cfg).is_err());
        assert!(order_check(&u0, &u0.scaled(1.2), 0.05, &cfg).is_err());
        assert!(order_check(&u0.scaled(1.2), &u0, 0.05, &cfg).is_err());
    }

    #[test]
    fn monotone_table_detection() {
        let p = |lambda, verdict| Probe {
            lambda,
            verdict,
            t_h: None,
            loss_time: None,
            decay_ratio: None,
        };
        let mut r = ThresholdResult {
            lambda_lo: 1.0,
            lambda_hi: 2.0,
            classifications: vec![
                p(0.5, Verdict::Global),
                p(1.0, Verdict::Global),
                p(2.0, Verdict::GbuLoss),
            ],
            paused_at: None,
        };
        assert!(r.is_monotone());
        r.classifications.push(p(3.0, Verdict::Global));
        assert!(!r.is_monotone());
    }
}
