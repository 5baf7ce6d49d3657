//! Monitors that confront numerical fields and runs with the sharp boundary
//! estimates: interior gradient bounds, power-law fits of the normal profile,
//! dominance of the normal ODE, tangential subordination, rescaling towards
//! the half-space family and the blow-up rate.
//!
//! Monitors record fitted constants rather than asserting unknown ones. Only
//! the leading coefficients (`d_p`, `-1`, `beta`) are ever compared with
//! fixed targets.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{DomainSpec, Grid, Point, Projection};
use crate::profiles::Constants;
use crate::solver::{node_gradient, node_hessian, Field, RunRecord, StopReason};

/// Nodes closer to the wall than this many spacings are excluded from the
/// interior gradient bound and from profile windows: the three-point stencil
/// misrepresents `s^(-beta)` there.
pub const STENCIL_FLOOR: f64 = 8.0;

/// Default activity gate of [`ode_dominance`].
pub const DEFAULT_ACTIVITY: f64 = 0.5;

/// Default pass threshold for the median of `|u_νν / u_ν^p + 1|`.
pub const DEFAULT_DOMINANCE_TOL: f64 = 0.25;

/// Extra room below the initial minimum of `u_ν` allowed by [`normal_lowerbound`].
pub const NORMAL_SLACK: f64 = 0.05;

/// Least-squares power law `g ≈ A s^(-b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileFit {
    pub exponent: f64,
    pub amplitude: f64,
    /// RMS of the log residuals.
    pub residual: f64,
    pub window: [f64; 2],
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeValue {
    pub point: Point,
    pub value: f64,
}

/// Outcome of a monitor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub name: String,
    pub passed: bool,
    pub worst_node: Option<NodeValue>,
    pub fitted_constants: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl MonitorReport {
    pub fn new(name: &str) -> Self {
        MonitorReport {
            name: name.to_string(),
            passed: true,
            worst_node: None,
            fitted_constants: BTreeMap::new(),
            flags: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, v: f64) {
        self.fitted_constants.insert(key.to_string(), v);
    }

    pub fn constant(&self, key: &str) -> Option<f64> {
        self.fitted_constants.get(key).copied()
    }

    pub fn is_inactive(&self) -> bool {
        self.flags.iter().any(|f| f == "inactive")
    }
}

/// Tracks the node with the largest value seen.
struct Worst(Option<NodeValue>);

impl Worst {
    fn offer(&mut self, point: Point, value: f64) {
        if self.0.is_none_or(|w| value > w.value) {
            self.0 = Some(NodeValue { point, value });
        }
    }
}

/// Flow-coordinate derivatives at a node.
#[derive(Debug, Clone, Copy)]
struct Directional {
    u_nu: f64,
    u_nunu: f64,
    u_tau: f64,
    u_nutau: f64,
    u_tautau: f64,
}

fn directional(grid: &Grid, u: &[f64], k: usize, proj: &Projection) -> Directional {
    let g = node_gradient(grid, u, k);
    let hs = node_hessian(grid, u, k);
    let nu = proj.normal;
    let tau = [-nu[1], nu[0]];
    let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
    let quad = |a: [f64; 2], b: [f64; 2]| {
        a[0] * (hs[0][0] * b[0] + hs[0][1] * b[1]) + a[1] * (hs[1][0] * b[0] + hs[1][1] * b[1])
    };
    Directional {
        u_nu: dot(g, nu),
        u_nunu: quad(nu, nu),
        u_tau: dot(g, tau),
        u_nutau: quad(nu, tau),
        u_tautau: quad(tau, tau),
    }
}

/// Interior nodes with a unique projection and `delta >= min_delta`.
fn flow_region(grid: &Grid, min_delta: f64) -> Vec<(usize, Projection)> {
    let width = grid.domain().unique_projection_width();
    grid.interior_nodes()
        .filter_map(|k| {
            let p = grid.node_projection(k);
            (!p.ambiguous && p.distance < width && p.distance >= min_delta * (1.0 - 1e-9)).then_some((k, p))
        })
        .collect()
}

/// Interior gradient bound `|∇u| <= (1+eps) d_p delta^(-beta) + C`.
///
/// The fitted `C` is the largest positive excess over interior nodes at least
/// [`STENCIL_FLOOR`] spacings from the wall; the report passes when it does not
/// exceed `budget`. The integrated form `u <= (1+eps) c_p delta^(1-beta) + C delta`
/// is fitted on the same nodes and recorded as `C_integrated`.
pub fn bernstein_monitor(field: &Field, eps: f64, c: &Constants, budget: f64) -> Result<MonitorReport> {
    if !(eps.is_finite() && eps > -1.0) {
        return Err(invalid("eps", format!("must exceed -1, got {eps}")));
    }
    let grid = field.grid();
    let u = field.values();
    let floor = STENCIL_FLOOR * grid.h();
    let mut rep = MonitorReport::new("bernstein");
    let mut worst = Worst(None);
    let (mut c_grad, mut c_int) = (0.0f64, 0.0f64);
    for k in grid.interior_nodes() {
        let d = grid.node_distance(k);
        if d < floor * (1.0 - 1e-9) {
            continue;
        }
        let g = node_gradient(grid, u, k);
        let excess = g[0].hypot(g[1]) - (1.0 + eps) * c.d_p * d.powf(-c.beta);
        worst.offer(grid.coords(k), excess);
        c_grad = c_grad.max(excess);
        let lift = (u[k] - (1.0 + eps) * c.c_p * d.powf(1.0 - c.beta)) / d;
        c_int = c_int.max(lift);
    }
    rep.worst_node = worst.0;
    rep.set("C", c_grad);
    rep.set("C_integrated", c_int);
    rep.set("eps", eps);
    rep.set("budget", budget);
    rep.passed = c_grad <= budget;
    Ok(rep)
}

/// Log-log least squares `g ≈ A s^(-b)`.
pub fn fit_profile(samples: &[(f64, f64)]) -> Result<ProfileFit> {
    if samples.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "profile fit needs at least 5 samples, got {}",
            samples.len()
        )));
    }
    if let Some(&(s, g)) = samples
        .iter()
        .find(|&&(s, g)| !(s.is_finite() && s > 0.0 && g.is_finite() && g > 0.0))
    {
        return Err(invalid("samples", format!("need s > 0 and g > 0, got ({s}, {g})")));
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(s, g)| (s.ln(), g.ln())).collect();
    let (slope, intercept, rms) = line_fit(&pts)?;
    let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.0).fold(0.0, f64::max);
    Ok(ProfileFit {
        exponent: -slope,
        amplitude: intercept.exp(),
        residual: rms,
        window: [lo, hi],
        samples: samples.len(),
    })
}

/// Ordinary least squares `y = m x + q`; returns `(m, q, rms residual)`.
fn line_fit(pts: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 1e-300) {
        return Err(Error::InsufficientData("abscissae do not vary".into()));
    }
    let m = sxy / sxx;
    let q = my - m * mx;
    let ss: f64 = pts.iter().map(|p| (p.1 - m * p.0 - q).powi(2)).sum();
    Ok((m, q, (ss / n).sqrt()))
}

/// Boundary node where the inward normal derivative is largest.
pub fn gbu_point(field: &Field) -> Result<usize> {
    let grid = field.grid();
    let u = field.values();
    grid.boundary_nodes()
        .filter_map(|k| {
            let p = grid.node_projection(k);
            (!p.ambiguous).then(|| (k, directional(grid, u, k, &p).u_nu))
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(k, _)| k)
        .ok_or_else(|| Error::InsufficientData("no boundary node with a unique normal".into()))
}

/// Default profile window `[8h, min(0.1, delta_0 / 2)]`.
pub fn default_window(grid: &Grid) -> [f64; 2] {
    [
        STENCIL_FLOOR * grid.h(),
        0.1f64.min(grid.domain().unique_projection_width() / 2.0),
    ]
}

/// Samples `(s, u_ν)` at the nodes on the inward normal through the boundary
/// node `a`, for `s` in `window`.
pub fn normal_profile(field: &Field, a: usize, window: [f64; 2]) -> Result<Vec<(f64, f64)>> {
    let grid = field.grid();
    if !grid.is_boundary(a) {
        return Err(Error::NotOnBoundary { point: grid.coords(a) });
    }
    let base = grid.node_projection(a);
    let foot = grid.coords(a);
    let h = grid.h();
    let u = field.values();
    let mut out = Vec::new();
    let m_lo = (window[0] / h - 1e-9).ceil().max(1.0) as usize;
    let m_hi = (window[1] / h + 1e-9).floor() as usize;
    for m in m_lo..=m_hi {
        let s = m as f64 * h;
        let ray = grid.domain().normal_ray(foot, s)?;
        let k = grid.nearest_node(ray.point);
        let p = grid.node_projection(k);
        if p.ambiguous || (p.distance - s).abs() > 1e-9 * (1.0 + s) {
            break;
        }
        let d = directional(
            grid,
            u,
            k,
            &Projection {
                normal: base.normal,
                ..p
            },
        );
        out.push((s, d.u_nu));
    }
    Ok(out)
}

/// Normal-profile fit at the boundary node `a` over `window`, keeping only
/// positive slopes.
pub fn fit_normal_profile(field: &Field, a: usize, window: [f64; 2]) -> Result<ProfileFit> {
    let samples: Vec<(f64, f64)> = normal_profile(field, a, window)?
        .into_iter()
        .filter(|&(_, g)| g > 0.0)
        .collect();
    fit_profile(&samples)
}

/// Normal ODE dominance `u_νν / u_ν^p ≈ -1` in the singular region.
///
/// A node is active when `delta^beta u_ν >= theta_a d_p`; nodes within two
/// spacings of the wall are skipped. The report passes when the median of
/// `|r + 1|` is at most `tol`. `prev` (an earlier field) supplies the largest
/// `|u_t|` over the active nodes, recorded as `ut_max`.
pub fn ode_dominance(field: &Field, prev: &Field, c: &Constants, theta_a: f64, tol: f64) -> Result<MonitorReport> {
    if !field.same_grid(prev) {
        return Err(Error::GridMismatch);
    }
    let dt = field.time() - prev.time();
    if !(dt > 0.0) {
        return Err(Error::Precondition("previous field must be earlier".into()));
    }
    let grid = field.grid();
    let u = field.values();
    let mut rep = MonitorReport::new("ode_dominance");
    let mut devs = Vec::new();
    let mut worst = Worst(None);
    let mut ut_max = 0.0f64;
    for (k, p) in flow_region(grid, 2.0 * grid.h()) {
        let d = directional(grid, u, k, &p);
        if !(d.u_nu > 0.0 && p.distance.powf(c.beta) * d.u_nu >= theta_a * c.d_p) {
            continue;
        }
        let r = d.u_nunu / d.u_nu.powf(c.p);
        let dev = (r + 1.0).abs();
        devs.push(dev);
        worst.offer(grid.coords(k), dev);
        ut_max = ut_max.max((u[k] - prev.values()[k]).abs() / dt);
    }
    rep.set("theta_a", theta_a);
    rep.set("tol", tol);
    if devs.is_empty() {
        rep.flags.push("inactive".into());
        rep.passed = false;
        return Ok(rep);
    }
    devs.sort_by(f64::total_cmp);
    let median = devs[devs.len() / 2];
    rep.worst_node = worst.0;
    rep.set("median_dev", median);
    rep.set("max_dev", *devs.last().unwrap());
    rep.set("active_nodes", devs.len() as f64);
    rep.set("ut_max", ut_max);
    rep.passed = median <= tol;
    Ok(rep)
}

/// Tangential subordination `|u_ττ| + |u_ντ| + |u_τ|^p <= eps |u_ν|^p + C_eps`
/// over the unique-projection nodes of a rectangle; `C_eps` is recorded.
pub fn tangential_monitor(field: &Field, eps: f64, c: &Constants) -> Result<MonitorReport> {
    let grid = field.grid();
    if !matches!(grid.domain(), DomainSpec::Rectangle { .. }) {
        return Err(Error::NeedsTwoDimensions);
    }
    let u = field.values();
    let mut rep = MonitorReport::new("tangential");
    let mut worst = Worst(None);
    let mut c_eps = 0.0f64;
    for (k, p) in flow_region(grid, 0.0) {
        let d = directional(grid, u, k, &p);
        let lhs = d.u_tautau.abs() + d.u_nutau.abs() + d.u_tau.abs().powf(c.p);
        let excess = lhs - eps * d.u_nu.abs().powf(c.p);
        worst.offer(grid.coords(k), excess);
        c_eps = c_eps.max(excess);
    }
    rep.worst_node = worst.0;
    rep.set("C_eps", c_eps);
    rep.set("eps", eps);
    Ok(rep)
}

/// Largest recorded `|u_t|` over a time window.
///
/// Records `M`, the time where it is attained, and `M / max|∇u|^p` with the
/// largest gradient norm of the window.
pub fn ut_monitor(run: &RunRecord, window: [f64; 2]) -> Result<MonitorReport> {
    let inside = |t: f64| t >= window[0] - 1e-15 && t <= window[1] + 1e-15;
    let (t_arg, m) = run
        .ut_max_series
        .iter()
        .copied()
        .filter(|&(t, _)| inside(t))
        .fold(None, |acc: Option<(f64, f64)>, s| match acc {
            Some(a) if a.1 >= s.1 => Some(a),
            _ => Some(s),
        })
        .ok_or_else(|| invalid("window", format!("no u_t samples in {window:?}")))?;
    let g = run
        .grad_max_series
        .iter()
        .filter(|s| inside(s.0))
        .map(|s| s.1)
        .fold(0.0, f64::max);
    let mut rep = MonitorReport::new("ut_bound");
    rep.set("M", m);
    rep.set("argmax_t", t_arg);
    rep.set("grad_max", g);
    rep.set("ratio", if g > 0.0 { m / g.powf(run.constants.p) } else { 0.0 });
    rep.passed = m.is_finite();
    Ok(rep)
}

/// Lower bound of `u_ν` near the boundary over every snapshot of a run.
///
/// The admissible floor is fitted from the first snapshot:
/// `L = max(0, -min u_ν(t_0)) + NORMAL_SLACK`.
pub fn normal_lowerbound(run: &RunRecord) -> Result<MonitorReport> {
    let mut fields: Vec<&Field> = run.snapshots.iter().collect();
    if fields.is_empty() || fields.last().map(|f| f.time()) != Some(run.final_field.time()) {
        fields.push(&run.final_field);
    }
    let grid = fields[0].grid();
    let width = grid.domain().unique_projection_width();
    let nodes: Vec<(usize, Projection)> = (0..grid.len())
        .filter_map(|k| {
            let p = grid.node_projection(k);
            (!p.ambiguous && p.distance < width).then_some((k, p))
        })
        .collect();
    let min_of = |f: &Field| {
        let mut best = (f64::INFINITY, [0.0; 2]);
        for (k, p) in &nodes {
            let v = directional(grid, f.values(), *k, p).u_nu;
            if v < best.0 {
                best = (v, grid.coords(*k));
            }
        }
        best
    };
    let first = min_of(fields[0]).0;
    let l_bound = (-first).max(0.0) + NORMAL_SLACK;
    let mut overall = (f64::INFINITY, [0.0; 2]);
    for f in &fields {
        let m = min_of(f);
        if m.0 < overall.0 {
            overall = m;
        }
    }
    let mut rep = MonitorReport::new("normal_lower_bound");
    if overall.0.is_finite() {
        rep.worst_node = Some(NodeValue {
            point: overall.1,
            value: overall.0,
        });
    }
    rep.set("min_u_nu", if overall.0.is_finite() { overall.0 } else { 0.0 });
    rep.set("min_u_nu_initial", if first.is_finite() { first } else { 0.0 });
    rep.set("L_bound", l_bound);
    rep.passed = !(overall.0 < -l_bound);
    Ok(rep)
}

/// `(r, r^beta u_ν(x))` at boundary nodes `x` of the face through `a`, at
/// distance `r > 0` from `a`, sorted by `r`.
pub fn tangential_anisotropy(field: &Field, a: Point, c: &Constants) -> Result<Vec<(f64, f64)>> {
    let grid = field.grid();
    if !matches!(grid.domain(), DomainSpec::Rectangle { .. }) {
        return Err(Error::NeedsTwoDimensions);
    }
    let (face, _) = grid.domain().face_of(a)?;
    let u = field.values();
    let mut out: Vec<(f64, f64)> = grid
        .boundary_nodes()
        .filter_map(|k| {
            let p = grid.node_projection(k);
            if p.ambiguous || p.face != face {
                return None;
            }
            let x = grid.coords(k);
            let r = (x[0] - a[0]).hypot(x[1] - a[1]);
            (r > 1e-12).then(|| (r, r.powf(c.beta) * directional(grid, u, k, &p).u_nu))
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

/// Best-fitting half-space solution of a rescaled normal section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaleMatch {
    pub alpha: f64,
    pub distance: f64,
    /// The best shift sits at the upper end of the search range, i.e. the
    /// section is indistinguishable from zero.
    pub degenerate: bool,
}

/// Compares `v(y) = lambda^(beta-1) u(z + lambda y ν_z)`, `y ∈ [eta, r_max]`,
/// with the family `U_alpha` in the sup norm.
///
/// The shift is searched on a logarithmic grid of `[1e-3, 1e3]` (plus
/// `alpha = 0`) and refined by golden section.
pub fn rescale_compare(field: &Field, z: Point, lambda: f64, c: &Constants, section: [f64; 2]) -> Result<RescaleMatch> {
    let [eta, r_max] = section;
    if !(lambda > 0.0 && eta > 0.0 && r_max > eta) {
        return Err(invalid("lambda", "need lambda > 0 and 0 < eta < R"));
    }
    let dom = field.grid().domain();
    if lambda * r_max >= dom.unique_projection_width() {
        return Err(Error::Precondition(format!(
            "section of length {} leaves the unique-projection strip",
            lambda * r_max
        )));
    }
    const N: usize = 201;
    let scale = lambda.powf(c.beta - 1.0);
    let mut ys = Vec::with_capacity(N);
    let mut vs = Vec::with_capacity(N);
    for i in 0..N {
        let y = eta + (r_max - eta) * i as f64 / (N - 1) as f64;
        let x = dom.normal_ray(z, lambda * y)?.point;
        ys.push(y);
        vs.push(scale * field.interpolate(x)?);
    }
    let dist = |alpha: f64| {
        ys.iter()
            .zip(&vs)
            .map(|(&y, &v)| (v - c.u(alpha, y).unwrap_or(f64::NAN)).abs())
            .fold(0.0, f64::max)
    };
    const LO: f64 = -3.0;
    const HI: f64 = 3.0;
    const M: usize = 121;
    let grid_la: Vec<f64> = (0..M).map(|i| LO + (HI - LO) * i as f64 / (M - 1) as f64).collect();
    let vals: Vec<f64> = grid_la.iter().map(|&la| dist(10f64.powf(la))).collect();
    let ib = (0..M).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    let (a, b) = (grid_la[ib.saturating_sub(1)], grid_la[(ib + 1).min(M - 1)]);
    let la = golden_min(|la| dist(10f64.powf(la)), a, b, 1e-10);
    let (mut alpha, mut distance) = (10f64.powf(la), dist(10f64.powf(la)));
    if vals[ib] < distance {
        alpha = 10f64.powf(grid_la[ib]);
        distance = vals[ib];
    }
    let d0 = dist(0.0);
    if d0 <= distance {
        alpha = 0.0;
        distance = d0;
    }
    Ok(RescaleMatch {
        alpha,
        distance,
        degenerate: ib == M - 1,
    })
}

/// Golden-section minimiser of a unimodal function on `[a, b]`.
fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Fit of `G(t) ≈ A (T* - t)^(-b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub t_star: f64,
    /// Exponent, amplitude and residual; the window is in `T* - t`.
    pub fit: ProfileFit,
}

/// Blow-up rate of a run stopped at the gradient cap.
pub fn gbu_rate_fit(run: &RunRecord) -> Result<RateFit> {
    if run.stop_reason != StopReason::GradientCap {
        return Err(Error::Precondition("run did not reach the gradient cap".into()));
    }
    fit_blowup_rate(&run.grad_max_series)
}

/// Nested search for `(T*, b, A)` in `g(t) ≈ A (T* - t)^(-b)`.
///
/// Only samples with `g >= 3 g(t_0)` enter the fit and at least ten are
/// required. For each candidate `T*` beyond the last sample, `(b, A)` follow
/// from log-log least squares; `T*` minimises the residual.
pub fn fit_blowup_rate(series: &[(f64, f64)]) -> Result<RateFit> {
    let g0 = series
        .first()
        .map(|s| s.1)
        .ok_or_else(|| Error::InsufficientData("empty series".into()))?;
    let used: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(t, g)| t.is_finite() && g.is_finite() && g > 0.0 && g >= 3.0 * g0)
        .collect();
    if used.len() < 10 || g0 <= 0.0 {
        return Err(Error::InsufficientData(format!(
            "rate fit needs 10 samples above three times the initial value, got {}",
            used.len()
        )));
    }
    let t_last = used.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let t_first = used.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let span = (t_last - t_first).max(f64::EPSILON * t_last.abs().max(1.0));
    let rms = |ld: f64| {
        let ts = t_last + 10f64.powf(ld);
        let pts: Vec<(f64, f64)> = used.iter().map(|&(t, g)| ((ts - t).ln(), g.ln())).collect();
        line_fit(&pts).map_or(f64::INFINITY, |f| f.2)
    };
    let (lo, hi) = ((span * 1e-8).log10(), (span * 1e2).log10());
    const M: usize = 401;
    let lds: Vec<f64> = (0..M).map(|i| lo + (hi - lo) * i as f64 / (M - 1) as f64).collect();
    let vals: Vec<f64> = lds.iter().map(|&l| rms(l)).collect();
    let ib = (0..M).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    let ld = golden_min(rms, lds[ib.saturating_sub(1)], lds[(ib + 1).min(M - 1)], 1e-12);
    let ld = if rms(ld) <= vals[ib] { ld } else { lds[ib] };
    let t_star = t_last + 10f64.powf(ld);
    let samples: Vec<(f64, f64)> = used.iter().map(|&(t, g)| (t_star - t, g)).collect();
    Ok(RateFit {
        t_star,
        fit: fit_profile(&samples)?,
    })
}

/// Share of samples inside the space-time sandwich.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub samples: usize,
    pub inside: usize,
    pub fraction: f64,
    pub boundary_slope: f64,
}

/// Checks `u_ν` along the normal through the boundary node `a` against the
/// bounds built from the boundary slope at `a` itself, for `delta` in `window`.
pub fn sandwich_check(field: &Field, a: usize, c: &Constants, eps: f64, window: [f64; 2]) -> Result<SandwichReport> {
    let grid = field.grid();
    let p = grid.node_projection(a);
    let g_b = directional(grid, field.values(), a, &p).u_nu;
    let prof = normal_profile(field, a, window)?;
    let mut inside = 0;
    if g_b > 0.0 {
        for &(s, g) in &prof {
            let (lo, hi) = c.spacetime_bounds(g_b, s, eps)?;
            if g >= lo && g <= hi {
                inside += 1;
            }
        }
    }
    let n = prof.len();
    Ok(SandwichReport {
        samples: n,
        inside,
        fraction: if n > 0 { inside as f64 / n as f64 } else { 0.0 },
        boundary_slope: g_b,
    })
}
