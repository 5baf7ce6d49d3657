//! Strict TOML experiment configuration. The schema is documented in
//! `docs/config-schema.md` at the repository root.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::continuation::default_snapshot_times;
use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, Grid};
use crate::solver::{Field, HamiltonianScheme, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Run name; prefixes the run directory.
    #[serde(default = "default_name")]
    pub name: String,
    /// Optional guard: when present it must match the experiment requested
    /// on the command line.
    #[serde(default)]
    pub experiment: Option<String>,
    #[serde(default)]
    pub domain: Option<DomainConfig>,
    #[serde(default)]
    pub solver: Option<SolverSection>,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub profile: Option<ProfileSection>,
    #[serde(default)]
    pub continuation: Option<ContinuationSection>,
    #[serde(default)]
    pub threshold: Option<ThresholdSection>,
    #[serde(default)]
    pub elliptic: Option<EllipticSection>,
    #[serde(default)]
    pub barrier: Option<BarrierSection>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
}

fn default_name() -> String {
    "run".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainConfig {
    Interval { length: f64, h: f64 },
    Rectangle { lx: f64, ly: f64, h: f64 },
    Disk { radius: f64, h: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub p: f64,
    pub t_end: f64,
    #[serde(default)]
    pub cfl_diffusion: Option<f64>,
    #[serde(default)]
    pub cfl_advection: Option<f64>,
    #[serde(default)]
    pub gradient_cap: Option<f64>,
    #[serde(default)]
    pub scheme: Option<HamiltonianScheme>,
    #[serde(default)]
    pub dt_max: Option<f64>,
    /// Explicit snapshot times; the default is a geometric ladder.
    #[serde(default)]
    pub snapshots: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialShape {
    Zero,
    /// Product of `sin(π x_i / L_i)`; `cos(π r / 2R)` on the disk.
    #[default]
    Sine,
    /// The sine envelope times a Gaussian `exp(-|x - center|² / width²)`.
    Bump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default)]
    pub shape: InitialShape,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default)]
    pub center: Option<[f64; 2]>,
    #[serde(default)]
    pub width: Option<f64>,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            shape: InitialShape::Sine,
            amplitude: 1.0,
            center: None,
            width: None,
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    /// A completed `solve` run directory to analyse instead of solving.
    #[serde(default)]
    pub run_dir: Option<String>,
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    #[serde(default = "quarter")]
    pub eps: f64,
    #[serde(default = "exponent_tol")]
    pub exponent_tol: f64,
    #[serde(default = "amplitude_tol")]
    pub amplitude_tol: f64,
    #[serde(default = "half")]
    pub theta_a: f64,
    #[serde(default = "quarter")]
    pub dominance_tol: f64,
    /// Bernstein constant budget as a multiple of `max|∇u0|`.
    #[serde(default = "five")]
    pub budget_factor: f64,
}

impl Default for ProfileSection {
    fn default() -> Self {
        ProfileSection {
            run_dir: None,
            window: None,
            eps: 0.25,
            exponent_tol: 0.08,
            amplitude_tol: 0.15,
            theta_a: 0.5,
            dominance_tol: 0.25,
            budget_factor: 5.0,
        }
    }
}

fn quarter() -> f64 {
    0.25
}
fn half() -> f64 {
    0.5
}
fn five() -> f64 {
    5.0
}
fn exponent_tol() -> f64 {
    0.08
}
fn amplitude_tol() -> f64 {
    0.15
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuationSection {
    /// Defaults to `solver.t_end`.
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub k_schedule: Option<Vec<f64>>,
    #[serde(default)]
    pub tol_loss: Option<f64>,
    /// When set, also runs the order check against `order_factor · u0`.
    #[serde(default)]
    pub order_factor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSection {
    #[serde(default = "rel_tol")]
    pub rel_tol: f64,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default = "half")]
    pub decay_frac: f64,
}

impl Default for ThresholdSection {
    fn default() -> Self {
        ThresholdSection {
            rel_tol: 0.01,
            horizon: None,
            decay_frac: 0.5,
        }
    }
}

fn rel_tol() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipticSection {
    /// The forcing is `forcing` times the initial-data shape.
    pub forcing: f64,
    #[serde(default = "elliptic_tol")]
    pub tol: f64,
    #[serde(default = "elliptic_steps")]
    pub max_steps: usize,
}

fn elliptic_tol() -> f64 {
    1e-10
}
fn elliptic_steps() -> usize {
    5_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierSection {
    #[serde(default = "barrier_ps")]
    pub p_values: Vec<f64>,
    /// `k` as a fraction of `d_p`.
    #[serde(default = "half")]
    pub k_fraction: f64,
    #[serde(default = "tenth")]
    pub rho: f64,
    #[serde(default = "one")]
    pub tau: f64,
    #[serde(default, rename = "L")]
    pub l: f64,
    #[serde(default = "half")]
    pub c1_start: f64,
    #[serde(default = "halvings")]
    pub max_halvings: usize,
    #[serde(default = "sweep_n")]
    pub nx: usize,
    #[serde(default = "sweep_n")]
    pub nt: usize,
    #[serde(default = "cutoff_points")]
    pub cutoff_points: usize,
    /// Grid spacing of the bracket cross-check runs; 0 skips them.
    #[serde(default = "cross_h")]
    pub cross_check_h: f64,
}

impl Default for BarrierSection {
    fn default() -> Self {
        BarrierSection {
            p_values: barrier_ps(),
            k_fraction: 0.5,
            rho: 0.1,
            tau: 1.0,
            l: 0.0,
            c1_start: 0.5,
            max_halvings: halvings(),
            nx: 200,
            nt: 200,
            cutoff_points: cutoff_points(),
            cross_check_h: cross_h(),
        }
    }
}

fn barrier_ps() -> Vec<f64> {
    vec![2.5, 3.0, 4.0]
}
fn tenth() -> f64 {
    0.1
}
fn halvings() -> usize {
    40
}
fn sweep_n() -> usize {
    200
}
fn cutoff_points() -> usize {
    10_000
}
fn cross_h() -> f64 {
    0.005
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Amplitudes applied to the initial-data shape (with its own amplitude
    /// ignored).
    pub amplitudes: Vec<f64>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default = "half")]
    pub decay_frac: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("`{name}` must be a positive number, got {v}")))
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::Config("`name` must be a nonempty plain file name".into()));
        }
        if let Some(d) = &self.domain {
            d.spec()?;
        }
        if let Some(s) = &self.solver {
            if !(s.p > 2.0 && s.p.is_finite()) {
                return Err(Error::Config(format!(
                    "`solver.p` must satisfy p > 2 (superquadratic regime), got {}",
                    s.p
                )));
            }
            positive("solver.t_end", s.t_end)?;
            for (name, v) in [
                ("solver.cfl_diffusion", s.cfl_diffusion),
                ("solver.cfl_advection", s.cfl_advection),
            ] {
                if let Some(v) = v {
                    if !(v > 0.0 && v <= 1.0) {
                        return Err(Error::Config(format!("`{name}` must lie in (0, 1]")));
                    }
                }
            }
            if let Some(c) = s.gradient_cap {
                positive("solver.gradient_cap", c)?;
            }
            if let Some(c) = s.dt_max {
                positive("solver.dt_max", c)?;
            }
            self.solver_config()?
                .validate()
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        if !self.initial.amplitude.is_finite() {
            return Err(Error::Config("`initial.amplitude` must be finite".into()));
        }
        if let Some(w) = self.initial.width {
            positive("initial.width", w)?;
        }
        if let Some(p) = &self.profile {
            positive("profile.exponent_tol", p.exponent_tol)?;
            positive("profile.amplitude_tol", p.amplitude_tol)?;
            positive("profile.budget_factor", p.budget_factor)?;
            if let Some([a, b]) = p.window {
                if !(a > 0.0 && b > a) {
                    return Err(Error::Config(
                        "`profile.window` must be [lo, hi] with 0 < lo < hi".into(),
                    ));
                }
            }
        }
        if let Some(c) = &self.continuation {
            if let Some(h) = c.horizon {
                positive("continuation.horizon", h)?;
            }
            if let Some(t) = c.tol_loss {
                positive("continuation.tol_loss", t)?;
            }
            if let Some(f) = c.order_factor {
                if !(f > 1.0 && f.is_finite()) {
                    return Err(Error::Config("`continuation.order_factor` must exceed 1".into()));
                }
            }
        }
        if let Some(t) = &self.threshold {
            positive("threshold.rel_tol", t.rel_tol)?;
            if let Some(h) = t.horizon {
                positive("threshold.horizon", h)?;
            }
        }
        if let Some(b) = &self.barrier {
            for &p in &b.p_values {
                if !(p > 2.0) {
                    return Err(Error::Config(format!(
                        "`barrier.p_values` entries must exceed 2, got {p}"
                    )));
                }
            }
            if !(b.k_fraction > 0.0 && b.k_fraction < 1.0) {
                return Err(Error::Config("`barrier.k_fraction` must lie in (0, 1)".into()));
            }
            positive("barrier.rho", b.rho)?;
            positive("barrier.tau", b.tau)?;
            positive("barrier.c1_start", b.c1_start)?;
        }
        if let Some(s) = &self.sweep {
            if s.amplitudes.is_empty() {
                return Err(Error::Config("`sweep.amplitudes` must not be empty".into()));
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> Result<&DomainConfig> {
        self.domain
            .as_ref()
            .ok_or_else(|| Error::Config("missing section [domain]".into()))
    }

    pub fn solver(&self) -> Result<&SolverSection> {
        self.solver
            .as_ref()
            .ok_or_else(|| Error::Config("missing section [solver]".into()))
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        let d = self.domain()?;
        Ok(Arc::new(Grid::new(d.spec()?, d.h())?))
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let s = self.solver()?;
        let mut cfg = SolverConfig::new(s.p, s.t_end);
        if let Some(v) = s.cfl_diffusion {
            cfg.cfl_diffusion = v;
        }
        if let Some(v) = s.cfl_advection {
            cfg.cfl_advection = v;
        }
        cfg.gradient_cap = s.gradient_cap;
        if let Some(v) = s.scheme {
            cfg.scheme = v;
        }
        cfg.dt_max = s.dt_max;
        cfg.snapshot_times = match &s.snapshots {
            Some(t) => t.clone(),
            None => default_snapshot_times(s.t_end),
        };
        Ok(cfg)
    }

    /// The initial datum on `grid`, with the configured amplitude.
    pub fn initial_field(&self, grid: &Arc<Grid>) -> Result<Field> {
        self.shape_field(grid, self.initial.amplitude)
    }

    /// The initial-data shape scaled to `amplitude`.
    pub fn shape_field(&self, grid: &Arc<Grid>, amplitude: f64) -> Result<Field> {
        let init = &self.initial;
        let domain = *grid.domain();
        let envelope = move |x: [f64; 2]| match domain {
            DomainSpec::Interval { length } => (PI * x[0] / length).sin(),
            DomainSpec::Rectangle { lx, ly } => (PI * x[0] / lx).sin() * (PI * x[1] / ly).sin(),
            DomainSpec::RadialDisk { radius } => (0.5 * PI * x[0] / radius).cos(),
        };
        match init.shape {
            InitialShape::Zero => Ok(Field::zeros(grid.clone())),
            InitialShape::Sine => Field::from_fn(grid.clone(), |x| amplitude * envelope(x).max(0.0)),
            InitialShape::Bump => {
                let c = init
                    .center
                    .ok_or_else(|| Error::Config("`initial.center` is required for shape = \"bump\"".into()))?;
                let w = init
                    .width
                    .ok_or_else(|| Error::Config("`initial.width` is required for shape = \"bump\"".into()))?;
                Field::from_fn(grid.clone(), |x| {
                    let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
                    amplitude * envelope(x).max(0.0) * (-r2 / (w * w)).exp()
                })
            }
        }
    }
}

impl DomainConfig {
    pub fn spec(&self) -> Result<DomainSpec> {
        let spec = match *self {
            DomainConfig::Interval { length, .. } => DomainSpec::interval(length),
            DomainConfig::Rectangle { lx, ly, .. } => DomainSpec::rectangle(lx, ly),
            DomainConfig::Disk { radius, .. } => DomainSpec::disk(radius),
        }
        .map_err(|e| Error::Config(e.to_string()))?;
        positive("domain.h", self.h())?;
        Ok(spec)
    }

    pub fn h(&self) -> f64 {
        match *self {
            DomainConfig::Interval { h, .. } | DomainConfig::Rectangle { h, .. } | DomainConfig::Disk { h, .. } => h,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "gbu"
[domain]
shape = "interval"
length = 1.0
h = 0.01
[solver]
p = 3.0
t_end = 0.05
[initial]
shape = "sine"
amplitude = 8.0
"#;

    #[test]
    fn minimal_config_is_valid() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.name, "gbu");
        let grid = cfg.grid().unwrap();
        assert_eq!(grid.len(), 101);
        let u0 = cfg.initial_field(&grid).unwrap();
        assert!((u0.max_abs() - 8.0).abs() < 1e-12);
        assert_eq!(cfg.solver_config().unwrap().p, 3.0);
    }

    #[test]
    fn subquadratic_p_rejected() {
        let text = MINIMAL.replace("p = 3.0", "p = 1.5");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("p > 2"), "{err}");
    }

    #[test]
    fn unknown_keys_are_named() {
        let text = MINIMAL.replace("t_end = 0.05", "t_end = 0.05\nfoo = 1");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("foo"), "{err}");
        let text = MINIMAL.replace("length = 1.0", "length = 1.0\nwidth = 2.0");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("width"), "{err}");
        let text = format!("{MINIMAL}\n[extra]\nx = 1\n");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("extra"), "{err}");
    }

    #[test]
    fn missing_keys_are_named() {
        let text = MINIMAL.replace("h = 0.01", "");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("h"), "{err}");
        let text = MINIMAL.replace("t_end = 0.05", "");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("t_end"), "{err}");
    }

    #[test]
    fn bump_requires_center_and_width() {
        let text = MINIMAL.replace("shape = \"sine\"", "shape = \"bump\"");
        let cfg = parse_config(&text).unwrap();
        assert!(cfg.initial_field(&cfg.grid().unwrap()).is_err());
    }

    #[test]
    fn round_trip_through_toml() {
        let cfg = parse_config(MINIMAL).unwrap();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(parse_config(&text).unwrap(), cfg);
    }
}
