//! Explicit finite-difference integration of `u_t = Δu + N(∇u) + g`.
//!
//! `N` is `|∇u|^p` or its truncation `F_k`. Time stepping is Heun's method
//! (two Euler stages averaged), which preserves the monotonicity of the
//! Euler stage. The step size obeys a diffusive and an advective bound:
//! `dt = min(σ_d h²/(2 n), σ_a h/(p G^(p-1)))`.

mod elliptic;
mod field;
mod stencil;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use elliptic::{solve_elliptic, EllipticOptions, EllipticSolution};
pub use field::Field;
pub use stencil::{gradient, hessian, max_gradient_norm, MIN_NODES};

pub(crate) use stencil::{grad_norm_max, node_gradient, node_hessian};

use crate::error::{invalid, Error, Result};
use crate::geometry::{DomainSpec, Face, Grid, Point};
use crate::profiles::Constants;

/// Forcing term `g(x, t)`.
pub type Source = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;

/// `F_k(g)`: `|g|^p` below the knee `k`, continued linearly with slope `p k^(p-1)`.
pub fn truncated_power(g: f64, p: f64, k: f64) -> f64 {
    let a = g.abs();
    if a <= k {
        a.powf(p)
    } else {
        k.powf(p) + p * k.powf(p - 1.0) * (a - k)
    }
}

/// Dirichlet data on boundary nodes.
#[derive(Clone, Default)]
pub enum Dirichlet {
    #[default]
    Homogeneous,
    /// Constant value per face; faces not listed are zero.
    Faces(Vec<(Face, f64)>),
    Function(Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>),
}

impl Dirichlet {
    pub fn value(&self, grid: &Grid, idx: usize, t: f64) -> f64 {
        match self {
            Dirichlet::Homogeneous => 0.0,
            Dirichlet::Faces(faces) => {
                let x = grid.coords(idx);
                // A node may sit on several faces (corners); take the listed one.
                let on = |f: &Face| {
                    let [lx, ly] = grid.domain().axis_lengths();
                    let target = if f.high { [lx, ly][f.axis as usize] } else { 0.0 };
                    (x[f.axis as usize] - target).abs() <= 1e-12 * (lx.max(ly))
                };
                faces.iter().find(|(f, _)| on(f)).map(|&(_, v)| v).unwrap_or(0.0)
            }
            Dirichlet::Function(g) => g(grid.coords(idx), t),
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        match self {
            Dirichlet::Homogeneous => true,
            Dirichlet::Faces(f) => f.iter().all(|&(_, v)| v == 0.0),
            Dirichlet::Function(_) => false,
        }
    }
}

impl fmt::Debug for Dirichlet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dirichlet::Homogeneous => write!(f, "Homogeneous"),
            Dirichlet::Faces(v) => f.debug_tuple("Faces").field(v).finish(),
            Dirichlet::Function(_) => write!(f, "Function(..)"),
        }
    }
}

/// How the gradient inside the nonlinearity is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianScheme {
    /// Central differences everywhere.
    Central,
    /// Godunov upwinding everywhere.
    Upwind,
    /// Monotone splitting at the knee `T` where the nonlinearity's slope
    /// reaches `2/h`: the nonlinearity continued linearly past `T` is applied
    /// centrally, and the convex excess over that line is applied upwind.
    /// Smooth regions with slopes below `T` are treated purely centrally.
    #[default]
    Hybrid,
}

#[derive(Clone)]
pub struct SolverConfig {
    pub p: f64,
    /// σ_d in (0, 1].
    pub cfl_diffusion: f64,
    /// σ_a in (0, 1].
    pub cfl_advection: f64,
    pub t_end: f64,
    /// Times at which the field is recorded; steps land on them exactly.
    pub snapshot_times: Vec<f64>,
    /// Boundary-gradient threshold defining the numerical blow-up time.
    /// `None` selects `max|∇u0| + 0.5 d_p h^(-beta)`.
    pub gradient_cap: Option<f64>,
    pub source: Option<Source>,
    pub truncation_level: Option<f64>,
    pub boundary: Dirichlet,
    pub scheme: HamiltonianScheme,
    /// Upper bound on the step size (used to run several levels in lockstep).
    pub dt_max: Option<f64>,
    /// Record the gradient and `u_t` series every this many steps.
    pub series_stride: usize,
}

impl fmt::Debug for SolverConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SolverConfig")
            .field("p", &self.p)
            .field("cfl_diffusion", &self.cfl_diffusion)
            .field("cfl_advection", &self.cfl_advection)
            .field("t_end", &self.t_end)
            .field("snapshot_times", &self.snapshot_times)
            .field("gradient_cap", &self.gradient_cap)
            .field("source", &self.source.as_ref().map(|_| ".."))
            .field("truncation_level", &self.truncation_level)
            .field("boundary", &self.boundary)
            .field("scheme", &self.scheme)
            .field("dt_max", &self.dt_max)
            .finish()
    }
}

impl SolverConfig {
    pub fn new(p: f64, t_end: f64) -> Self {
        SolverConfig {
            p,
            cfl_diffusion: 0.5,
            cfl_advection: 0.25,
            t_end,
            snapshot_times: Vec::new(),
            gradient_cap: None,
            source: None,
            truncation_level: None,
            boundary: Dirichlet::Homogeneous,
            scheme: HamiltonianScheme::Hybrid,
            dt_max: None,
            series_stride: 1,
        }
    }

    pub fn with_snapshots(mut self, times: impl IntoIterator<Item = f64>) -> Self {
        self.snapshot_times = times.into_iter().collect();
        self
    }

    pub fn with_gradient_cap(mut self, cap: f64) -> Self {
        self.gradient_cap = Some(cap);
        self
    }

    pub fn with_source(mut self, g: impl Fn(Point, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.source = Some(Arc::new(g));
        self
    }

    pub fn with_boundary(mut self, b: Dirichlet) -> Self {
        self.boundary = b;
        self
    }

    pub fn with_scheme(mut self, s: HamiltonianScheme) -> Self {
        self.scheme = s;
        self
    }

    pub fn validate(&self) -> Result<Constants> {
        let c = Constants::new(self.p)?;
        for (name, v) in [
            ("cfl_diffusion", self.cfl_diffusion),
            ("cfl_advection", self.cfl_advection),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(invalid(name, format!("must lie in (0, 1], got {v}")));
            }
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(invalid("t_end", format!("must be > 0, got {}", self.t_end)));
        }
        if let Some(k) = self.truncation_level {
            if !(k.is_finite() && k > 0.0) {
                return Err(invalid("truncation_level", format!("must be > 0, got {k}")));
            }
        }
        if let Some(g) = self.gradient_cap {
            if !(g > 0.0) {
                return Err(invalid("gradient_cap", format!("must be > 0, got {g}")));
            }
        }
        if let Some(d) = self.dt_max {
            if !(d > 0.0) {
                return Err(invalid("dt_max", format!("must be > 0, got {d}")));
            }
        }
        if self.snapshot_times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(invalid("snapshot_times", "must be finite and >= 0"));
        }
        if self.series_stride == 0 {
            return Err(invalid("series_stride", "must be >= 1"));
        }
        Ok(c)
    }

    /// Effective blow-up threshold on a grid of spacing `h` for initial data
    /// with gradient norm `initial_grad`.
    pub fn cap_for(&self, c: &Constants, h: f64, initial_grad: f64) -> f64 {
        self.gradient_cap
            .unwrap_or_else(|| default_gradient_cap(c, h, initial_grad))
    }

    /// Serializable summary of the configuration.
    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            p: self.p,
            scheme_order: 2,
            cfl_diffusion: self.cfl_diffusion,
            cfl_advection: self.cfl_advection,
            t_end: self.t_end,
            snapshot_times: self.snapshot_times.clone(),
            gradient_cap: self.gradient_cap,
            has_source: self.source.is_some(),
            truncation_level: self.truncation_level,
            boundary: format!("{:?}", self.boundary),
            scheme: self.scheme,
            dt_max: self.dt_max,
        }
    }
}

/// `‖∇u0‖∞ + 0.5 d_p h^(-beta)`.
///
/// The second term is the half-space profile slope at four grid spacings from
/// the wall; the first plays the role of the additive constant in the interior
/// gradient bound, so that steep but harmless initial data is not reported as
/// blown up at `t = 0`.
pub fn default_gradient_cap(c: &Constants, h: f64, initial_grad: f64) -> f64 {
    initial_grad + 0.5 * c.d_p * h.powf(-c.beta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub p: f64,
    pub scheme_order: u32,
    pub cfl_diffusion: f64,
    pub cfl_advection: f64,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
    pub gradient_cap: Option<f64>,
    pub has_source: bool,
    pub truncation_level: Option<f64>,
    pub boundary: String,
    pub scheme: HamiltonianScheme,
    pub dt_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Horizon,
    GradientCap,
    Instability,
}

/// Everything recorded during one run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub config: SolverConfig,
    pub constants: Constants,
    pub snapshots: Vec<Field>,
    /// `(t, max |∇u|)`.
    pub grad_max_series: Vec<(f64, f64)>,
    /// `(t, max |u_t|)`, `u_t` taken as the step quotient.
    pub ut_max_series: Vec<(f64, f64)>,
    pub stop_reason: StopReason,
    /// Numerical blow-up time (first time the boundary gradient exceeds the cap).
    pub t_h: Option<f64>,
    /// Field at the time the run stopped.
    pub final_field: Field,
    /// Last field whose boundary gradient was still below the cap.
    pub pre_cap_field: Option<Field>,
    pub steps: usize,
    pub gradient_cap: f64,
}

impl RunRecord {
    pub fn initial_grad_norm(&self) -> f64 {
        self.grad_max_series.first().map_or(0.0, |&(_, g)| g)
    }

    /// Snapshots strictly before the blow-up time (all of them if none).
    pub fn pre_cap_snapshots(&self) -> impl Iterator<Item = &Field> {
        let th = self.t_h.unwrap_or(f64::INFINITY);
        self.snapshots.iter().filter(move |f| f.time() < th)
    }

    /// Last snapshot strictly earlier than the pre-cap field (or the final
    /// field when the cap was never reached).
    pub fn snapshot_before_pre_cap(&self) -> Option<&Field> {
        let t = self.pre_cap_field.as_ref().unwrap_or(&self.final_field).time();
        self.snapshots.iter().rfind(|f| f.time() < t)
    }

    pub fn snapshot_at(&self, t: f64) -> Option<&Field> {
        self.snapshots
            .iter()
            .find(|f| (f.time() - t).abs() <= 1e-12 * t.abs().max(1.0))
    }
}

/// Spatial operator `L(u) = Δu + N(∇u) + g` on interior nodes.
pub(crate) struct Operator<'a> {
    grid: &'a Grid,
    p: f64,
    p_int: Option<i32>,
    k: Option<f64>,
    k_pow: (f64, f64),
    scheme: HamiltonianScheme,
    source: Option<&'a Source>,
    /// Hybrid knee `(T, N(T), N'(T))`, one entry or one per radial node.
    knees: Vec<(f64, f64, f64)>,
}

impl<'a> Operator<'a> {
    pub(crate) fn new(grid: &'a Grid, cfg: &'a SolverConfig) -> Self {
        let p = cfg.p;
        let p_int = (p.fract() == 0.0 && p <= 16.0).then_some(p as i32);
        let k = cfg.truncation_level;
        let k_pow = k.map_or((0.0, 0.0), |k| (k.powf(p), p * k.powf(p - 1.0)));
        let h = grid.h();
        let q_of = |thr: f64| (2.0 * thr / (p * h)).max(0.0).powf(1.0 / (p - 1.0));
        let slope_at = |s: f64| match k {
            Some(k) if s > k => k_pow.1,
            _ => p * s.powf(p - 1.0),
        };
        let value_at = |s: f64| match k {
            Some(k) if s > k => k_pow.0 + k_pow.1 * (s - k),
            _ => s.powf(p),
        };
        let knee = |t: f64| (t, value_at(t), slope_at(t));
        let q_switch: Vec<f64> = match grid.domain() {
            DomainSpec::RadialDisk { .. } => (0..grid.len())
                .map(|i| {
                    if i == 0 {
                        f64::INFINITY
                    } else {
                        q_of(1.0 - h / (2.0 * i as f64 * h))
                    }
                })
                .collect(),
            _ => vec![q_of(1.0)],
        };
        let knees = q_switch
            .into_iter()
            .map(|t| if t.is_finite() { knee(t) } else { (t, 0.0, 0.0) })
            .collect();
        Operator {
            grid,
            p,
            p_int,
            k,
            k_pow,
            scheme: cfg.scheme,
            source: cfg.source.as_ref(),
            knees,
        }
    }

    #[inline]
    fn pow_p(&self, s: f64) -> f64 {
        match self.p_int {
            Some(n) => s.powi(n),
            None => s.powf(self.p),
        }
    }

    #[inline]
    fn nonlinearity(&self, s: f64) -> f64 {
        match self.k {
            Some(k) if s > k => self.k_pow.0 + self.k_pow.1 * (s - k),
            _ => self.pow_p(s),
        }
    }

    /// Discrete nonlinearity from the central slope `qc` and the upwind
    /// slope `su`, together with the largest slope it depends on.
    #[inline]
    fn flux(&self, qc: f64, su: f64, idx: usize) -> (f64, f64) {
        match self.scheme {
            HamiltonianScheme::Central => (self.nonlinearity(qc), qc),
            HamiltonianScheme::Upwind => (self.nonlinearity(su), su),
            HamiltonianScheme::Hybrid => {
                let (t, nt, dnt) = if self.knees.len() == 1 {
                    self.knees[0]
                } else {
                    self.knees[idx]
                };
                let central = if qc <= t {
                    self.nonlinearity(qc)
                } else {
                    nt + dnt * (qc - t)
                };
                let excess = if su <= t {
                    0.0
                } else {
                    self.nonlinearity(su) - nt - dnt * (su - t)
                };
                (central + excess, qc.max(su))
            }
        }
    }

    /// Writes `L(u)` into `out` (zero on boundary nodes) and returns the
    /// largest slope fed to the nonlinearity.
    pub(crate) fn apply(&self, u: &[f64], t: f64, out: &mut [f64]) -> f64 {
        let g = self.grid;
        let h = g.h();
        let inv_h = 1.0 / h;
        let [nx, ny] = g.intervals();
        let mut smax = 0.0f64;
        out.iter_mut().for_each(|v| *v = 0.0);
        match *g.domain() {
            DomainSpec::Interval { .. } | DomainSpec::RadialDisk { .. } => {
                let radial = matches!(g.domain(), DomainSpec::RadialDisk { .. });
                let start = if radial { 0 } else { 1 };
                for i in start..nx {
                    let (lap, nl, s) = if radial && i == 0 {
                        (4.0 * (u[1] - u[0]) * inv_h * inv_h, 0.0, 0.0)
                    } else {
                        let a = (u[i] - u[i - 1]) * inv_h;
                        let b = (u[i + 1] - u[i]) * inv_h;
                        let mut lap = (b - a) * inv_h;
                        if radial {
                            lap += 0.5 * (a + b) / (i as f64 * h);
                        }
                        let qc = 0.5 * (a + b).abs();
                        let (nl, s) = self.flux(qc, b.max(0.0).max(-a), i);
                        (lap, nl, s)
                    };
                    smax = smax.max(s);
                    let mut v = lap + nl;
                    if let Some(src) = self.source {
                        v += src(g.coords(i), t);
                    }
                    out[i] = v;
                }
            }
            DomainSpec::Rectangle { .. } => {
                let row = nx + 1;
                for j in 1..ny {
                    for i in 1..nx {
                        let k = i + j * row;
                        let ax = (u[k] - u[k - 1]) * inv_h;
                        let bx = (u[k + 1] - u[k]) * inv_h;
                        let ay = (u[k] - u[k - row]) * inv_h;
                        let by = (u[k + row] - u[k]) * inv_h;
                        let lap = (bx - ax + by - ay) * inv_h;
                        let qc = (0.5 * (ax + bx)).hypot(0.5 * (ay + by));
                        let su = bx.max(0.0).max(-ax).hypot(by.max(0.0).max(-ay));
                        let (nl, s) = self.flux(qc, su, k);
                        smax = smax.max(s);
                        let mut v = lap + nl;
                        if let Some(src) = self.source {
                            v += src(g.coords(k), t);
                        }
                        out[k] = v;
                    }
                }
            }
        }
        smax
    }
}

/// Stability-limited step for the current largest slope `smax`.
pub(crate) fn cfl_step(grid: &Grid, cfg: &SolverConfig, smax: f64) -> f64 {
    let h = grid.h();
    let n = grid.domain().space_dims() as f64;
    let slope = match cfg.truncation_level {
        Some(k) => smax.min(k),
        None => smax,
    }
    .max(1.0);
    let diff = cfg.cfl_diffusion * h * h / (2.0 * n);
    let adv = cfg.cfl_advection * h / (cfg.p * slope.powf(cfg.p - 1.0));
    let mut dt = diff.min(adv);
    if let Some(m) = cfg.dt_max {
        dt = dt.min(m);
    }
    dt
}

fn apply_dirichlet(grid: &Grid, bc: &Dirichlet, u: &mut [f64], t: f64) {
    if let Dirichlet::Homogeneous = bc {
        for k in grid.boundary_nodes() {
            u[k] = 0.0;
        }
        return;
    }
    for k in grid.boundary_nodes() {
        u[k] = bc.value(grid, k, t);
    }
}

/// Reusable stepping state.
pub(crate) struct Stepper<'a> {
    grid: &'a Grid,
    cfg: &'a SolverConfig,
    op: Operator<'a>,
    k1: Vec<f64>,
    k2: Vec<f64>,
    stage: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub(crate) fn new(grid: &'a Grid, cfg: &'a SolverConfig) -> Self {
        let n = grid.len();
        Stepper {
            grid,
            cfg,
            op: Operator::new(grid, cfg),
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            stage: vec![0.0; n],
        }
    }

    /// Evaluates the first stage and returns the stable step.
    pub(crate) fn prepare(&mut self, u: &[f64], t: f64) -> f64 {
        let smax = self.op.apply(u, t, &mut self.k1);
        cfl_step(self.grid, self.cfg, smax)
    }

    /// Completes a Heun step of size `dt` (after [`Stepper::prepare`] at `t`).
    /// Returns false if a non-finite value appeared.
    pub(crate) fn advance(&mut self, u: &mut [f64], t: f64, dt: f64) -> bool {
        for ((s, &x), &k) in self.stage.iter_mut().zip(u.iter()).zip(&self.k1) {
            *s = x + dt * k;
        }
        apply_dirichlet(self.grid, &self.cfg.boundary, &mut self.stage, t + dt);
        self.op.apply(&self.stage, t + dt, &mut self.k2);
        let mut finite = true;
        for ((x, &k1), &k2) in u.iter_mut().zip(&self.k1).zip(&self.k2) {
            *x += 0.5 * dt * (k1 + k2);
            finite &= x.is_finite();
        }
        apply_dirichlet(self.grid, &self.cfg.boundary, u, t + dt);
        finite
    }
}

/// One forward-Euler stage `u + dt L(u)` with boundary reset.
pub fn euler_stage(field: &Field, config: &SolverConfig, dt: f64) -> Result<Field> {
    config.validate()?;
    let grid = field.grid();
    let op = Operator::new(grid, config);
    let mut out = vec![0.0; grid.len()];
    op.apply(field.values(), field.time(), &mut out);
    let mut u: Vec<f64> = field.values().iter().zip(&out).map(|(x, k)| x + dt * k).collect();
    apply_dirichlet(grid, &config.boundary, &mut u, field.time() + dt);
    finite_field(grid.clone(), u, field.time() + dt)
}

/// One Heun step with the CFL-limited step size.
pub fn step(field: &Field, config: &SolverConfig) -> Result<Field> {
    config.validate()?;
    let grid = field.grid();
    let mut st = Stepper::new(grid, config);
    let dt = st.prepare(field.values(), field.time());
    let mut u = field.values().to_vec();
    st.advance(&mut u, field.time(), dt);
    finite_field(grid.clone(), u, field.time() + dt)
}

/// One Heun step of prescribed size.
pub fn step_with_dt(field: &Field, config: &SolverConfig, dt: f64) -> Result<Field> {
    config.validate()?;
    if !(dt > 0.0) {
        return Err(invalid("dt", format!("must be > 0, got {dt}")));
    }
    let grid = field.grid();
    let mut st = Stepper::new(grid, config);
    st.prepare(field.values(), field.time());
    let mut u = field.values().to_vec();
    st.advance(&mut u, field.time(), dt);
    finite_field(grid.clone(), u, field.time() + dt)
}

fn finite_field(grid: Arc<Grid>, u: Vec<f64>, t: f64) -> Result<Field> {
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::Scheme(format!("non-finite value at t = {t}")));
    }
    Ok(Field::from_parts_unchecked(grid, u, t))
}

/// Integrates until `t_end`, the gradient cap, or instability.
pub fn run(u0: &Field, config: &SolverConfig) -> Result<RunRecord> {
    integrate(u0, config, true)
}

/// Integrates with the truncated nonlinearity `F_k`; never stops at the cap.
pub fn truncated_run(u0: &Field, k: f64, config: &SolverConfig) -> Result<RunRecord> {
    if !(k.is_finite() && k > 0.0) {
        return Err(invalid("k", format!("truncation level must be > 0, got {k}")));
    }
    let mut cfg = config.clone();
    cfg.truncation_level = Some(k);
    integrate(u0, &cfg, false)
}

fn integrate(u0: &Field, config: &SolverConfig, stop_at_cap: bool) -> Result<RunRecord> {
    let c = config.validate()?;
    let grid = u0.grid().clone();
    if grid.shape()[0] < MIN_NODES || (grid.dims() == 2 && grid.shape()[1] < MIN_NODES) {
        return Err(Error::GridTooCoarse {
            axis: 0,
            nodes: grid.shape()[0].min(grid.shape()[1].max(grid.shape()[0])),
            min: MIN_NODES,
        });
    }
    let t0 = u0.time();
    let t_end = config.t_end;
    if t_end <= t0 {
        return Err(invalid("t_end", "must exceed the initial time"));
    }
    let tol_bc = 1e-12 * (1.0 + u0.max_abs());
    for k in grid.boundary_nodes() {
        let want = config.boundary.value(&grid, k, t0);
        if (u0.values()[k] - want).abs() > tol_bc {
            return Err(Error::Precondition(format!(
                "initial data violates the Dirichlet condition at node {k}"
            )));
        }
    }

    let mut snaps_pending: Vec<f64> = config
        .snapshot_times
        .iter()
        .copied()
        .filter(|&t| t >= t0 && t <= t_end)
        .collect();
    snaps_pending.sort_by(f64::total_cmp);
    snaps_pending.dedup();
    snaps_pending.reverse();

    let cap = config.cap_for(&c, grid.h(), grad_norm_max(&grid, u0.values(), 0..grid.len()));
    let adjacent: Vec<usize> = (0..grid.len()).filter(|&k| grid.is_boundary_adjacent(k)).collect();

    let mut u = u0.values().to_vec();
    let mut t = t0;
    let mut snapshots = Vec::new();
    let mut grad_series = Vec::new();
    let mut ut_series = Vec::new();
    let mut t_h = None;
    let mut stop = StopReason::Horizon;
    let mut steps = 0usize;

    let all = 0..grid.len();
    grad_series.push((t, grad_norm_max(&grid, &u, all.clone())));
    while snaps_pending.last().is_some_and(|&s| s <= t) {
        snaps_pending.pop();
        snapshots.push(Field::from_parts_unchecked(grid.clone(), u.clone(), t));
    }

    let mut st = Stepper::new(&grid, config);
    let mut prev = vec![0.0; grid.len()];
    let mut prev_t = t0;
    let mut first_ut = true;
    loop {
        if stop_at_cap && grad_norm_max(&grid, &u, adjacent.iter().copied()) > cap {
            t_h = Some(t);
            stop = StopReason::GradientCap;
            break;
        }
        if t >= t_end {
            break;
        }
        let mut dt = st.prepare(&u, t);
        let mut target = t_end;
        if let Some(&s) = snaps_pending.last() {
            target = target.min(s);
        }
        let land = t + dt >= target - 1e-12 * target.abs().max(1.0);
        if land {
            dt = target - t;
            if dt <= 0.0 {
                dt = f64::EPSILON * t.abs().max(1.0);
            }
        }
        prev.copy_from_slice(&u);
        prev_t = t;
        let ok = st.advance(&mut u, t, dt);
        t = if land { target } else { t + dt };
        steps += 1;
        if !ok {
            u.copy_from_slice(&prev);
            t -= dt;
            stop = StopReason::Instability;
            break;
        }
        let record = steps.is_multiple_of(config.series_stride) || first_ut;
        if record {
            first_ut = false;
            let utmax = u.iter().zip(&prev).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / dt;
            // The quotient is attributed to the start of the step.
            ut_series.push((t - dt, utmax));
            grad_series.push((t, grad_norm_max(&grid, &u, all.clone())));
        }
        while snaps_pending.last().is_some_and(|&s| s <= t + 1e-14) {
            snaps_pending.pop();
            snapshots.push(Field::from_parts_unchecked(grid.clone(), u.clone(), t));
        }
    }

    if grad_series.last().map(|&(tt, _)| tt) != Some(t) {
        grad_series.push((t, grad_norm_max(&grid, &u, all)));
    }
    let final_field = Field::from_parts_unchecked(grid.clone(), u, t);
    let pre_cap_field = match stop {
        StopReason::GradientCap if steps > 0 => Some(Field::from_parts_unchecked(grid.clone(), prev, prev_t)),
        _ => None,
    };
    Ok(RunRecord {
        config: config.clone(),
        constants: c,
        snapshots,
        grad_max_series: grad_series,
        ut_max_series: ut_series,
        stop_reason: stop,
        t_h,
        final_field,
        pre_cap_field,
        steps,
        gradient_cap: cap,
    })
}

/// Integrates the truncated problems for every level of `ks` in lockstep.
///
/// All levels share one step sequence (the smallest stable step among them),
/// so the discrete comparison between levels holds exactly: with a common
/// `dt` each Heun step is monotone in the data and nondecreasing in `k`.
pub fn truncated_family(u0: &Field, ks: &[f64], config: &SolverConfig) -> Result<Vec<RunRecord>> {
    let c = config.validate()?;
    if ks.is_empty() {
        return Err(invalid("k_schedule", "must not be empty"));
    }
    if let Some(&k) = ks.iter().find(|k| !(k.is_finite() && **k > 0.0)) {
        return Err(invalid("k_schedule", format!("levels must be > 0, got {k}")));
    }
    let grid = u0.grid().clone();
    let cfgs: Vec<SolverConfig> = ks
        .iter()
        .map(|&k| {
            let mut cfg = config.clone();
            cfg.truncation_level = Some(k);
            cfg
        })
        .collect();
    let t0 = u0.time();
    let t_end = config.t_end;
    if t_end <= t0 {
        return Err(invalid("t_end", "must exceed the initial time"));
    }
    let mut pending: Vec<f64> = config
        .snapshot_times
        .iter()
        .copied()
        .filter(|&t| t >= t0 && t <= t_end)
        .collect();
    pending.sort_by(f64::total_cmp);
    pending.dedup();
    pending.reverse();

    let n = ks.len();
    let mut states: Vec<Vec<f64>> = vec![u0.values().to_vec(); n];
    let mut steppers: Vec<Stepper> = cfgs.iter().map(|cfg| Stepper::new(&grid, cfg)).collect();
    let mut snaps: Vec<Vec<Field>> = vec![Vec::new(); n];
    let mut grads: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
    let mut uts: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
    let all = 0..grid.len();
    let mut t = t0;
    for l in 0..n {
        grads[l].push((t, grad_norm_max(&grid, &states[l], all.clone())));
    }
    let take_snaps = |pending: &mut Vec<f64>, t: f64, states: &[Vec<f64>], snaps: &mut [Vec<Field>]| {
        while pending.last().is_some_and(|&s| s <= t + 1e-14) {
            pending.pop();
            for (l, u) in states.iter().enumerate() {
                snaps[l].push(Field::from_parts_unchecked(grid.clone(), u.clone(), t));
            }
        }
    };
    take_snaps(&mut pending, t, &states, &mut snaps);

    let mut prev = vec![0.0; grid.len()];
    let mut steps = 0usize;
    let mut stop = StopReason::Horizon;
    while t < t_end {
        let mut dt = f64::INFINITY;
        for (st, u) in steppers.iter_mut().zip(&states) {
            dt = dt.min(st.prepare(u, t));
        }
        let mut target = t_end;
        if let Some(&s) = pending.last() {
            target = target.min(s);
        }
        let land = t + dt >= target - 1e-12 * target.abs().max(1.0);
        if land {
            dt = (target - t).max(f64::EPSILON * t.abs().max(1.0));
        }
        steps += 1;
        let record = steps.is_multiple_of(config.series_stride) || steps == 1;
        let mut ok = true;
        for l in 0..n {
            prev.copy_from_slice(&states[l]);
            ok &= steppers[l].advance(&mut states[l], t, dt);
            if record {
                let utmax = states[l]
                    .iter()
                    .zip(&prev)
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
                    / dt;
                uts[l].push((t, utmax));
            }
        }
        t = if land { target } else { t + dt };
        if !ok {
            stop = StopReason::Instability;
            break;
        }
        if record {
            for l in 0..n {
                grads[l].push((t, grad_norm_max(&grid, &states[l], all.clone())));
            }
        }
        take_snaps(&mut pending, t, &states, &mut snaps);
    }
    let mut out = Vec::with_capacity(n);
    for (l, u) in states.into_iter().enumerate() {
        if grads[l].last().map(|&(tt, _)| tt) != Some(t) {
            let g = grad_norm_max(&grid, &u, all.clone());
            grads[l].push((t, g));
        }
        out.push(RunRecord {
            config: cfgs[l].clone(),
            constants: c,
            snapshots: std::mem::take(&mut snaps[l]),
            grad_max_series: std::mem::take(&mut grads[l]),
            ut_max_series: std::mem::take(&mut uts[l]),
            stop_reason: stop,
            t_h: None,
            final_field: Field::from_parts_unchecked(grid.clone(), u, t),
            pre_cap_field: None,
            steps,
            gradient_cap: f64::INFINITY,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn interval(h: f64) -> Arc<Grid> {
        Arc::new(Grid::new(DomainSpec::interval(1.0).unwrap(), h).unwrap())
    }

    fn sine(grid: &Arc<Grid>, amp: f64) -> Field {
        Field::from_fn(grid.clone(), |x| amp * (PI * x[0]).sin()).unwrap()
    }

    #[test]
    fn truncation_examples() {
        assert_eq!(truncated_power(0.0, 3.0, 0.7), 0.0);
        assert_eq!(truncated_power(2.0, 3.0, 1.0), 4.0);
        assert_eq!(truncated_power(1.0, 3.0, 2.0), 1.0);
        assert_eq!(truncated_power(-2.0, 3.0, 1.0), 4.0);
        for g in [0.1, 0.5, 1.0, 1.5, 3.0, 10.0] {
            let f = truncated_power(g, 3.5, 1.0);
            assert!(f <= g.powf(3.5) + 1e-12);
            assert_eq!(f == g.powf(3.5), g <= 1.0);
        }
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let grid = interval(0.05);
        let cfg = SolverConfig::new(3.0, 0.01);
        let mut f = Field::zeros(grid);
        for _ in 0..20 {
            f = step(&f, &cfg).unwrap();
        }
        assert_eq!(f.max_abs(), 0.0);
    }

    #[test]
    fn euler_stage_by_hand() {
        // Three nodes {0, 1/2, 1}: the Laplacian at the middle is -0.8 and the
        // centred slope vanishes.
        let grid = interval(0.5);
        let f = Field::new(grid, vec![0.0, 0.1, 0.0], 0.0).unwrap();
        let cfg = SolverConfig::new(3.0, 1.0);
        for dt in [1e-3, 0.01, 0.05] {
            let e = euler_stage(&f, &cfg, dt).unwrap();
            assert!((e.values()[1] - (0.1 - 0.8 * dt)).abs() < 1e-15);
            assert_eq!(e.values()[0], 0.0);
            assert_eq!(e.values()[2], 0.0);
        }
    }

    #[test]
    fn heun_local_error_is_third_order() {
        let grid = interval(0.05);
        let f = Field::from_fn(grid.clone(), |x| {
            0.3 * (PI * x[0]).sin() + 0.1 * (2.0 * PI * x[0]).sin()
        })
        .unwrap();
        let cfg = SolverConfig::new(3.0, 1.0);
        let gap = |dt: f64| {
            let one = step_with_dt(&f, &cfg, dt).unwrap();
            let half = step_with_dt(&f, &cfg, dt / 2.0).unwrap();
            let two = step_with_dt(&half, &cfg, dt / 2.0).unwrap();
            one.sup_distance(&two).unwrap()
        };
        let dt = 2e-4;
        let ratio = gap(dt) / gap(dt / 2.0);
        assert!((6.0..10.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn run_of_zero_data() {
        let grid = interval(0.02);
        let r = run(&Field::zeros(grid), &SolverConfig::new(3.0, 0.01)).unwrap();
        assert_eq!(r.stop_reason, StopReason::Horizon);
        assert!(r.t_h.is_none());
        assert!(r.grad_max_series.iter().all(|&(_, g)| g == 0.0));
        assert!(r.ut_max_series.iter().all(|&(_, v)| v == 0.0));
    }

    #[test]
    fn small_data_decays() {
        let grid = interval(1.0 / 200.0);
        let u0 = sine(&grid, 0.1);
        let r = run(&u0, &SolverConfig::new(3.0, 0.05)).unwrap();
        assert_eq!(r.stop_reason, StopReason::Horizon);
        assert!(r.final_field.max_abs() < u0.max_abs());
        let times: Vec<f64> = r.grad_max_series.iter().map(|s| s.0).collect();
        assert!(times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn large_data_reaches_the_cap() {
        let grid = interval(1.0 / 200.0);
        let r = run(&sine(&grid, 8.0), &SolverConfig::new(3.0, 0.05)).unwrap();
        assert_eq!(r.stop_reason, StopReason::GradientCap);
        let th = r.t_h.unwrap();
        assert!(th > 0.0 && th < 0.05);
        assert!(r.pre_cap_field.as_ref().unwrap().time() < th);
    }

    #[test]
    fn snapshots_land_on_requested_times() {
        let grid = interval(0.02);
        let cfg = SolverConfig::new(3.0, 0.01).with_snapshots([0.0, 0.0025, 0.005, 0.01]);
        let r = run(&sine(&grid, 0.5), &cfg).unwrap();
        let t: Vec<f64> = r.snapshots.iter().map(Field::time).collect();
        assert_eq!(t, vec![0.0, 0.0025, 0.005, 0.01]);
    }

    #[test]
    fn inconsistent_boundary_data_rejected() {
        let grid = interval(0.1);
        let u0 = Field::from_fn(grid, |x| 1.0 + x[0]).unwrap();
        assert!(run(&u0, &SolverConfig::new(3.0, 0.01)).is_err());
    }

    #[test]
    fn exact_profile_is_stationary() {
        // U_1 restricted to [0, 1] with its own value imposed at x = 1.
        let c = Constants::new(3.0).unwrap();
        let grid = interval(0.02);
        let top = c.u(1.0, 1.0).unwrap();
        let u0 = Field::from_fn(grid.clone(), |x| c.u(1.0, x[0]).unwrap()).unwrap();
        let cfg = SolverConfig::new(3.0, 0.2).with_boundary(Dirichlet::Faces(vec![
            (Face { axis: 0, high: false }, 0.0),
            (Face { axis: 0, high: true }, top),
        ]));
        let r = run(&u0, &cfg).unwrap();
        assert!(r.final_field.sup_distance(&u0).unwrap() < 1e-3);
    }

    #[test]
    fn elliptic_zero_forcing() {
        let grid = interval(0.05);
        let sol = solve_elliptic(&Field::zeros(grid), &SolverConfig::new(3.0, 1.0), Default::default()).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.residual, 0.0);
        assert_eq!(sol.field.max_abs(), 0.0);
    }

    fn mms_error(h: f64) -> f64 {
        let grid = interval(h);
        let f = Field::from_fn(grid.clone(), |x| {
            let s = 0.1 * (PI * x[0]).sin();
            PI * PI * s - (0.1 * PI * (PI * x[0]).cos()).abs().powi(3)
        })
        .unwrap();
        let sol = solve_elliptic(&f, &SolverConfig::new(3.0, 1.0), Default::default()).unwrap();
        assert!(sol.converged);
        sol.field
            .values()
            .iter()
            .enumerate()
            .map(|(k, v)| (v - 0.1 * (PI * grid.coords(k)[0]).sin()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn elliptic_manufactured_second_order() {
        let (e1, e2) = (mms_error(1.0 / 20.0), mms_error(1.0 / 40.0));
        assert!(e1 < 1e-3);
        let ratio = e1 / e2;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn config_validation() {
        let mut cfg = SolverConfig::new(3.0, 1.0);
        assert!(cfg.validate().is_ok());
        cfg.cfl_diffusion = 1.5;
        assert!(cfg.validate().is_err());
        assert!(SolverConfig::new(2.0, 1.0).validate().is_err());
        assert!(SolverConfig::new(3.0, 0.0).validate().is_err());
    }
}
