//! Numeric certification of the comparison functions used near the boundary:
//! the ODE supersolution `k s^{-β}`, the space-time barrier built from a
//! cutoff on a slab, and the local gradient bracket of the Bernstein argument.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geometry::{DomainSpec, Grid};
use crate::profiles::constants;
use crate::solver::{grad_norm_max, run, Field, SolverConfig};

/// Step of the finite difference used for second derivatives, relative to ρ.
pub const FD_STEP: f64 = 1e-5;
/// Acceptance floor for the barrier residual sweep.
pub const RESIDUAL_FLOOR: f64 = -1e-6;
/// Number of radial samples in the dense cutoff fit.
const CUTOFF_FIT_SAMPLES: usize = 100_000;
/// Headroom on the fitted cutoff constant, covering points between samples.
const CUTOFF_HEADROOM: f64 = 1.02;

/// Parameters shared by the three constructions.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BarrierParams {
    pub p: f64,
    /// Sub-critical amplitude, `0 < k < d_p`.
    pub k: f64,
    /// Smallness parameter in `(0, 1)`.
    pub eta: f64,
    pub rho: f64,
    /// Time span `t_1 - t_0`; the barrier lives on `(0, tau)`.
    pub tau: f64,
    /// Bound on the Laplacian of the distance function.
    #[serde(rename = "L")]
    pub l: f64,
    pub c1: f64,
    pub kappa: f64,
    /// Cutoff exponent in `(0, 1)`.
    pub m: f64,
}

impl BarrierParams {
    /// Builds a validated parameter set with `κ = k/(1-β)` and the cutoff
    /// exponent `m = (p+1)/(2p)`.
    pub fn new(p: f64, k: f64, eta: f64, rho: f64, tau: f64, l: f64, c1: f64) -> Result<Self> {
        let c = constants(p)?;
        let params = BarrierParams {
            p,
            k,
            eta,
            rho,
            tau,
            l,
            c1,
            kappa: k / (1.0 - c.beta),
            m: (p + 1.0) / (2.0 * p),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_m(mut self, m: f64) -> Result<Self> {
        self.m = m;
        self.validate()?;
        Ok(self)
    }

    /// Sets `η = c_1 (ρ²/τ + 1)^{-1/(1-β)}`, the recipe that makes the wall
    /// derivative independent of the time span.
    pub fn with_recipe_eta(mut self) -> Result<Self> {
        self.eta = recipe_eta(self.p, self.c1, self.rho, self.tau);
        self.validate()?;
        Ok(self)
    }

    pub fn beta(&self) -> f64 {
        1.0 / (self.p - 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let c = constants(self.p)?;
        if !(self.k > 0.0 && self.k < c.d_p) {
            return Err(invalid("k", format!("must lie in (0, d_p = {})", c.d_p)));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(invalid("eta", "must lie in (0, 1)"));
        }
        if !(self.m > 0.0 && self.m < 1.0) {
            return Err(invalid("m", "must lie in (0, 1)"));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(invalid("rho", "must be positive"));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(invalid("tau", "must be positive"));
        }
        if !(self.l >= 0.0 && self.l.is_finite()) {
            return Err(invalid("L", "must be nonnegative"));
        }
        if !(self.c1 > 0.0 && self.c1.is_finite()) {
            return Err(invalid("c1", "must be positive"));
        }
        if (self.kappa * (1.0 - c.beta) - self.k).abs() > 1e-12 * self.k.max(1.0) {
            return Err(invalid("kappa", "must equal k/(1-β)"));
        }
        Ok(())
    }
}

pub fn recipe_eta(p: f64, c1: f64, rho: f64, tau: f64) -> f64 {
    let beta = 1.0 / (p - 1.0);
    c1 * (rho * rho / tau + 1.0).powf(-1.0 / (1.0 - beta))
}

/// Coefficient of `s^{-βp}` in `ψ' + (1+η)ψ^p + c_1 η s^{-βp}` for
/// `ψ(s) = k s^{-β}`; negative means `ψ` is a strict supersolution.
pub fn lemma71_coefficient(params: &BarrierParams) -> f64 {
    comparison_coefficient(params.p, params.k, params.eta, params.c1)
}

/// Same coefficient without the parameter invariants, so that the critical
/// case `k = d_p`, `η = 0` can be evaluated.
pub fn comparison_coefficient(p: f64, k: f64, eta: f64, c1: f64) -> f64 {
    let beta = 1.0 / (p - 1.0);
    -beta * k + (1.0 + eta) * k.powf(p) + c1 * eta
}

/// Smooth monotone ramp from 0 on `s ≤ 0` to 1 on `s ≥ 1`, returned with its
/// first two derivatives.
fn ramp(s: f64) -> (f64, f64, f64) {
    if s <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if s >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let r = 1.0 - s;
    // q = 1/(1 + e^g); both q and 1-q are formed without overflow.
    let g = 1.0 / s - 1.0 / r;
    let (q, one_minus_q) = if g > 0.0 {
        let e = (-g).exp();
        (e / (1.0 + e), 1.0 / (1.0 + e))
    } else {
        let e = g.exp();
        (1.0 / (1.0 + e), e / (1.0 + e))
    };
    let dg = -1.0 / (s * s) - 1.0 / (r * r);
    let ddg = 2.0 / (s * s * s) - 2.0 / (r * r * r);
    let w = q * one_minus_q;
    let dq = -w * dg;
    let ddq = -(dq * (one_minus_q - q) * dg + w * ddg);
    (q, dq, ddq)
}

/// Radial profile of the bump: `Θ`, `Θ'` and `Θ''` in `r = |x|` for `R = 1`.
fn bump(r: f64) -> (f64, f64, f64) {
    let (q, dq, ddq) = ramp(2.0 - 2.0 * r);
    (q, -2.0 * dq, 4.0 * ddq)
}

/// Scale-free ratios of the two cutoff bounds at radius `r ∈ (1/2, 1)` in
/// dimension `n`.
fn cutoff_ratios(r: f64, n: usize, m: f64) -> (f64, f64) {
    let (th, d1, d2) = bump(r);
    if th <= 0.0 {
        return (0.0, 0.0);
    }
    let lap = d2 + (n as f64 - 1.0) * d1 / r;
    let thm = th.powf(m);
    (d1.abs() / thm, (lap.abs() + 4.0 * d1 * d1 / th) / thm)
}

/// The bump `Θ(x) = q(2 - 2|x|/R)` with the constant `C_m` fitted for its two
/// bounds in a given dimension.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CutoffFit {
    pub dims: usize,
    pub m: f64,
    /// Fitted supremum of both bound ratios, with a small headroom.
    pub c_m: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CutoffSample {
    pub theta: f64,
    pub grad: Vec<f64>,
    pub laplacian: f64,
    pub c_m: f64,
    pub bound_check: bool,
}

impl CutoffFit {
    pub fn new(dims: usize, m: f64) -> Result<Self> {
        if dims == 0 {
            return Err(invalid("dims", "must be at least 1"));
        }
        if !(m > 0.0 && m < 1.0) {
            return Err(invalid("m", "must lie in (0, 1)"));
        }
        let mut sup = 0.0f64;
        for i in 0..CUTOFF_FIT_SAMPLES {
            let r = 0.5 + 0.5 * (i as f64 + 0.5) / CUTOFF_FIT_SAMPLES as f64;
            let (a, b) = cutoff_ratios(r, dims, m);
            sup = sup.max(a).max(b);
        }
        Ok(CutoffFit {
            dims,
            m,
            c_m: sup * CUTOFF_HEADROOM,
        })
    }

    pub fn sample(&self, x: &[f64], radius: f64) -> Result<CutoffSample> {
        if x.len() != self.dims {
            return Err(invalid("x", format!("expected {} coordinates", self.dims)));
        }
        if !(radius > 0.0) {
            return Err(invalid("R", "must be positive"));
        }
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let (th, d1, d2) = bump(r / radius);
        let (grad, laplacian) = if d1 == 0.0 && d2 == 0.0 {
            (vec![0.0; self.dims], 0.0)
        } else {
            let g = d1 / radius;
            let grad = x.iter().map(|v| g * v / r).collect();
            let lap = d2 / (radius * radius) + (self.dims as f64 - 1.0) * g / r;
            (grad, lap)
        };
        let gnorm = grad.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
        let bound_check = if th <= 0.0 {
            true
        } else {
            let thm = th.powf(self.m);
            let first = gnorm <= self.c_m * thm / radius;
            let second = laplacian.abs() + 4.0 * gnorm * gnorm / th <= self.c_m * thm / (radius * radius);
            first && second
        };
        Ok(CutoffSample {
            theta: th,
            grad,
            laplacian,
            c_m: self.c_m,
            bound_check,
        })
    }
}

/// Evaluates the cutoff at `x` for radius `R`, fitting `C_m` on the fly.
pub fn cutoff(x: &[f64], radius: f64, m: f64) -> Result<CutoffSample> {
    CutoffFit::new(x.len(), m)?.sample(x, radius)
}

/// The slab barrier `V = κ[(x+φ)^{1-β} - φ^{1-β}]` and its derivatives.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BarrierPoint {
    pub v: f64,
    pub v_t: f64,
    pub v_x: f64,
    pub v_xx: f64,
    pub phi: f64,
}

/// `(ψ, ψ')` at slab coordinate `x`, with `ψ = Θ²(x/ρ)`.
fn psi(x: f64, rho: f64) -> (f64, f64) {
    let (th, d1, _) = bump(x / rho);
    (th * th, 2.0 * th * d1 / rho)
}

/// Value and exact first derivatives of `V` at `(x, t)`.
fn barrier_first(params: &BarrierParams, x: f64, t: f64) -> (f64, f64, f64, f64) {
    let beta = params.beta();
    let a = 1.0 - beta;
    let h = t / params.tau;
    let (ps, dps) = psi(x, params.rho);
    let er = params.eta * params.rho;
    let hp = h * ps;
    // φ = ηρ (hψ)^{1/(1-β)}, and φ^{1-β} = (ηρ)^{1-β} hψ exactly.
    let phi = er * hp.powf(1.0 / a);
    let phi_pow = er.powf(a) * hp;
    let lift = if hp > 0.0 { er / a * hp.powf(beta / a) } else { 0.0 };
    let phi_t = lift * ps / params.tau;
    let phi_x = lift * h * dps;
    let z = x + phi;
    let zb = z.powf(-beta);
    let v = params.kappa * (z.powf(a) - phi_pow);
    let v_t = params.kappa * (a * zb * phi_t - er.powf(a) * ps / params.tau);
    let v_x = params.kappa * (a * zb * (1.0 + phi_x) - er.powf(a) * h * dps);
    (v, v_t, v_x, phi)
}

fn check_slab(params: &BarrierParams, x: f64, t: f64) -> Result<()> {
    if !(x > 0.0 && x < 2.0 * params.rho) {
        return Err(invalid("x", "must lie in (0, 2ρ)"));
    }
    if !(t > 0.0 && t < params.tau) {
        return Err(invalid("t", "must lie in (t_0, t_1)"));
    }
    Ok(())
}

/// Evaluates the barrier at slab coordinate `x ∈ (0, 2ρ)` and time
/// `t ∈ (0, τ)`, measured from `t_0`.
pub fn lemma72_barrier(params: &BarrierParams, x: f64, t: f64) -> Result<BarrierPoint> {
    check_slab(params, x, t)?;
    let (v, v_t, v_x, phi) = barrier_first(params, x, t);
    // Five-point derivative of the exact V_x; differencing V twice would
    // amplify rounding by 1/step².
    let e = (FD_STEP * params.rho).min(0.25 * x);
    let vx = |y: f64| barrier_first(params, y, t).2;
    let v_xx = (vx(x - 2.0 * e) - 8.0 * vx(x - e) + 8.0 * vx(x + e) - vx(x + 2.0 * e)) / (12.0 * e);
    Ok(BarrierPoint { v, v_t, v_x, v_xx, phi })
}

/// `V_t - V_xx - |V_x|^p`, minus `κ(1-β) L (x+φ)^{-β}` when `L > 0`, which
/// accounts for the curvature term `(1-β)(δ+φ)^{-β} Δδ` of a curved boundary.
pub fn lemma72_residual(params: &BarrierParams, x: f64, t: f64) -> Result<f64> {
    let b = lemma72_barrier(params, x, t)?;
    let mut r = b.v_t - b.v_xx - b.v_x.abs().powf(params.p);
    if params.l > 0.0 {
        r -= params.kappa * (1.0 - params.beta()) * params.l * (x + b.phi).powf(-params.beta());
    }
    Ok(r)
}

/// Limit of the residual as `t → t_0⁺`: the pure power barrier term minus
/// the contribution `κ(ηρ)^{1-β}ψ/τ` of the growing cutoff.
pub fn lemma72_initial_residual(params: &BarrierParams, x: f64) -> f64 {
    let beta = params.beta();
    let power = params.k * x.powf(-beta * params.p) * (beta - params.k.powf(params.p - 1.0));
    let (ps, _) = psi(x, params.rho);
    power - params.kappa * (params.eta * params.rho).powf(1.0 - beta) * ps / params.tau
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualSweep {
    pub params: BarrierParams,
    pub min_residual: f64,
    /// `(x, t)` of the minimum.
    pub argmin: (f64, f64),
    pub nx: usize,
    pub nt: usize,
    pub passed: bool,
}

/// Minimum of the residual over a cell-centred `nx × nt` grid of the slab.
pub fn lemma72_sweep(params: &BarrierParams, nx: usize, nt: usize) -> Result<ResidualSweep> {
    if nx == 0 || nt == 0 {
        return Err(invalid("nx/nt", "must be positive"));
    }
    let mut best = (f64::INFINITY, (0.0, 0.0));
    for j in 0..nt {
        let t = params.tau * (j as f64 + 0.5) / nt as f64;
        for i in 0..nx {
            let x = 2.0 * params.rho * (i as f64 + 0.5) / nx as f64;
            let r = lemma72_residual(params, x, t)?;
            if !r.is_finite() {
                return Err(Error::Scheme(format!("nonfinite residual at x = {x}, t = {t}")));
            }
            if r < best.0 {
                best = (r, (x, t));
            }
        }
    }
    Ok(ResidualSweep {
        params: *params,
        min_residual: best.0,
        argmin: best.1,
        nx,
        nt,
        passed: best.0 >= RESIDUAL_FLOOR,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EtaSearch {
    /// Every tried `c_1` with its sweep minimum, in search order.
    pub tried: Vec<(f64, f64)>,
    /// The first sweep that passed, if any.
    pub accepted: Option<ResidualSweep>,
}

/// Halves `c_1` from `c1_start` until the sweep with the recipe `η` passes,
/// trying at most `max_halvings + 1` values.
pub fn lemma72_eta_search(
    base: &BarrierParams,
    c1_start: f64,
    max_halvings: usize,
    nx: usize,
    nt: usize,
) -> Result<EtaSearch> {
    let mut tried = Vec::new();
    let mut c1 = c1_start;
    for _ in 0..=max_halvings {
        let eta = recipe_eta(base.p, c1, base.rho, base.tau);
        if eta < 1.0 {
            let params = BarrierParams { c1, eta, ..*base };
            params.validate()?;
            let sweep = lemma72_sweep(&params, nx, nt)?;
            tried.push((c1, sweep.min_residual));
            if sweep.passed {
                return Ok(EtaSearch {
                    tried,
                    accepted: Some(sweep),
                });
            }
        }
        c1 *= 0.5;
    }
    Ok(EtaSearch { tried, accepted: None })
}

/// Wall derivative of the barrier, `k c_1^{-β} ρ^{-β} ((τ+ρ²)/(t-t_0))^{β/(1-β)}`,
/// with `t` measured from `t_0`.
pub fn lemma72_flux(params: &BarrierParams, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(invalid("t", "must exceed t_0; the bound degenerates there"));
    }
    if t >= params.tau {
        return Err(invalid("t", "must lie before t_1"));
    }
    let beta = params.beta();
    Ok(params.k
        * params.c1.powf(-beta)
        * params.rho.powf(-beta)
        * ((params.tau + params.rho * params.rho) / t).powf(beta / (1.0 - beta)))
}

/// `(β/(1-β), 1/(p-2), β, 1/(p-1))`: the time exponent of the flux bound in
/// two forms and its space exponent in two forms.
pub fn flux_exponents(p: f64) -> (f64, f64, f64, f64) {
    let beta = 1.0 / (p - 1.0);
    (beta / (1.0 - beta), 1.0 / (p - 2.0), beta, 1.0 / (p - 1.0))
}

/// `N + M^{1/p} + R^{-1/(p-1)} + dt^{-1/(2(p-1))}`.
pub fn lemma73_bracket(n: f64, m: f64, radius: f64, dt: f64, p: f64) -> Result<f64> {
    for (name, v) in [("N", n), ("M", m), ("R", radius), ("dt", dt)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid(name, "must be positive"));
        }
    }
    if !(p > 2.0) {
        return Err(invalid("p", "must exceed 2"));
    }
    Ok(n + m.powf(1.0 / p) + radius.powf(-1.0 / (p - 1.0)) + dt.powf(-0.5 / (p - 1.0)))
}

#[derive(Clone, Debug, Serialize)]
pub struct BracketSample {
    pub amplitude: f64,
    #[serde(rename = "N")]
    pub n: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub dt: f64,
    /// Largest gradient norm over the half patch at `t_0 + dt`.
    pub grad: f64,
    pub bracket: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BracketCrossCheck {
    pub samples: Vec<BracketSample>,
    /// Single constant fitted over all samples.
    pub c_fit: f64,
    /// Largest relative excess of any sample over `c_fit · bracket`.
    pub max_violation: f64,
}

/// Runs the solver on `Interval(1)` from `A sin(πx)` for each amplitude and
/// compares the gradient on the half patch `(0, R/2]` around the wall `x = 0`
/// with the bracket at each elapsed time.  `N` is the largest wall gradient
/// and `M` the largest `|u_t|` seen over the run.
pub fn lemma73_cross_check(p: f64, amplitudes: &[f64], dts: &[f64], radius: f64, h: f64) -> Result<BracketCrossCheck> {
    if amplitudes.is_empty() || dts.is_empty() {
        return Err(Error::InsufficientData("need amplitudes and times".into()));
    }
    if !(radius > 0.0 && radius <= 1.0) {
        return Err(invalid("R", "must lie in (0, 1]"));
    }
    let grid = Arc::new(Grid::new(DomainSpec::interval(1.0)?, h)?);
    let t_end = dts.iter().cloned().fold(0.0, f64::max);
    let mut times: Vec<f64> = dts.to_vec();
    times.sort_by(f64::total_cmp);
    let cfg = SolverConfig::new(p, t_end).with_snapshots(times.clone());
    let patch: Vec<usize> = (0..grid.len())
        .filter(|&i| {
            let x = grid.coords(i)[0];
            x > 0.0 && x <= 0.5 * radius
        })
        .collect();
    let mut samples = Vec::new();
    for &a in amplitudes {
        let u0 = Field::from_fn(grid.clone(), |x| a * (std::f64::consts::PI * x[0]).sin())?;
        let rec = run(&u0, &cfg)?;
        if rec.t_h.is_some() {
            return Err(Error::Precondition(format!(
                "amplitude {a} blows up; the bracket needs bounded data"
            )));
        }
        let wall = |f: &Field| grad_norm_max(&grid, f.values(), 0..1);
        let mut n = wall(&u0);
        for s in &rec.snapshots {
            n = n.max(wall(s));
        }
        let m = rec.ut_max_series.iter().map(|&(_, v)| v).fold(0.0, f64::max);
        for &dt in dts {
            let snap = rec
                .snapshot_at(dt)
                .ok_or_else(|| Error::Scheme(format!("missing snapshot at {dt}")))?;
            let grad = grad_norm_max(&grid, snap.values(), patch.iter().copied());
            let bracket = lemma73_bracket(n, m, radius, dt, p)?;
            samples.push(BracketSample {
                amplitude: a,
                n,
                m,
                radius,
                dt,
                grad,
                bracket,
                ratio: grad / bracket,
            });
        }
    }
    let c_fit = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
    let max_violation = samples
        .iter()
        .map(|s| (s.grad / (c_fit * s.bracket) - 1.0).max(0.0))
        .fold(0.0, f64::max);
    Ok(BracketCrossCheck {
        samples,
        c_fit,
        max_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn slab(p: f64, k: f64) -> BarrierParams {
        BarrierParams::new(p, k, 0.01, 0.1, 1.0, 0.0, 0.05).unwrap()
    }

    #[test]
    fn comparison_coefficient_examples() {
        let params = BarrierParams::new(3.0, 0.3, 0.01, 0.1, 1.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(lemma71_coefficient(&params), -0.11273, epsilon = 1e-12);
        for p in [2.5, 3.0, 4.0, 5.0] {
            let d = constants(p).unwrap().d_p;
            assert!(comparison_coefficient(p, d, 0.0, 1.0).abs() < 1e-12);
            assert!(comparison_coefficient(p, 0.9 * d, 0.0, 1.0) < 0.0);
        }
    }

    #[test]
    fn params_are_validated() {
        assert!(BarrierParams::new(3.0, 0.8, 0.1, 0.1, 1.0, 0.0, 1.0).is_err());
        assert!(BarrierParams::new(3.0, 0.3, 1.0, 0.1, 1.0, 0.0, 1.0).is_err());
        assert!(BarrierParams::new(3.0, 0.3, 0.1, 0.0, 1.0, 0.0, 1.0).is_err());
        let ok = BarrierParams::new(3.0, 0.3, 0.1, 0.1, 1.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(ok.kappa * (1.0 - ok.beta()), ok.k, epsilon = 1e-12);
        assert_relative_eq!(ok.m, 2.0 / 3.0);
        assert!(ok.with_m(1.0).is_err());
    }

    #[test]
    fn ramp_derivatives_match_differences() {
        for s in [0.1, 0.2, 0.5, 0.7, 0.9] {
            let e = 1e-6;
            let (_, d1, d2) = ramp(s);
            let fd1 = (ramp(s + e).0 - ramp(s - e).0) / (2.0 * e);
            let fd2 = (ramp(s + e).1 - ramp(s - e).1) / (2.0 * e);
            assert_relative_eq!(d1, fd1, max_relative = 1e-6);
            assert_relative_eq!(d2, fd2, max_relative = 1e-5, epsilon = 1e-6);
        }
        assert_relative_eq!(ramp(0.5).0, 0.5);
    }

    #[test]
    fn cutoff_core_and_exterior() {
        let c = cutoff(&[0.1, 0.2], 1.0, 2.0 / 3.0).unwrap();
        assert_eq!(c.theta, 1.0);
        assert_eq!(c.grad, vec![0.0, 0.0]);
        let c = cutoff(&[0.8, 0.8], 1.0, 2.0 / 3.0).unwrap();
        assert_eq!(c.theta, 0.0);
        assert!(c.bound_check);
    }

    #[test]
    fn cutoff_bounds_hold_on_a_sweep() {
        let m = 2.0 / 3.0;
        for dims in [1, 2, 3] {
            let fit = CutoffFit::new(dims, m).unwrap();
            assert!(fit.c_m.is_finite() && fit.c_m > 0.0);
            for i in 0..2000 {
                let r = 0.5 + 0.5 * (i as f64 + 0.37) / 2000.0;
                let mut x = vec![0.0; dims];
                x[0] = 2.0 * r;
                assert!(fit.sample(&x, 2.0).unwrap().bound_check, "r = {r}");
            }
        }
    }

    #[test]
    fn barrier_first_derivatives_match_differences() {
        let params = slab(3.0, 0.35);
        for (x, t) in [(0.03, 0.4), (0.07, 0.9), (0.12, 0.5)] {
            let b = lemma72_barrier(&params, x, t).unwrap();
            let e = 1e-6;
            let vt = (barrier_first(&params, x, t + e).0 - barrier_first(&params, x, t - e).0) / (2.0 * e);
            let vx = (barrier_first(&params, x + e, t).0 - barrier_first(&params, x - e, t).0) / (2.0 * e);
            assert_relative_eq!(b.v_t, vt, max_relative = 1e-6, epsilon = 1e-9);
            assert_relative_eq!(b.v_x, vx, max_relative = 1e-6);
        }
    }

    #[test]
    fn residual_outside_the_cutoff_is_the_power_barrier() {
        let params = slab(3.0, 0.35);
        let beta = params.beta();
        for x in [0.11, 0.15, 0.19] {
            let r = lemma72_residual(&params, x, 0.5).unwrap();
            let want = params.kappa * (1.0 - beta) * x.powf(-beta * 3.0) * (beta - 0.35f64.powi(2));
            assert_relative_eq!(r, want, max_relative = 1e-7);
        }
    }

    #[test]
    fn residual_near_the_initial_time() {
        let params = slab(3.0, 0.35);
        for x in [0.01, 0.03, 0.04] {
            let r = lemma72_residual(&params, x, 1e-9).unwrap();
            let want = lemma72_initial_residual(&params, x);
            assert!(want > 0.0);
            assert_relative_eq!(r, want, max_relative = 1e-5);
        }
    }

    #[test]
    fn residual_rejects_points_off_the_slab() {
        let params = slab(3.0, 0.35);
        assert!(lemma72_residual(&params, 0.0, 0.5).is_err());
        assert!(lemma72_residual(&params, 0.2, 0.5).is_err());
        assert!(lemma72_residual(&params, 0.1, 1.0).is_err());
    }

    #[test]
    fn curvature_penalty_lowers_the_residual() {
        let flat = slab(3.0, 0.35);
        let curved = BarrierParams { l: 1.0, ..flat };
        let a = lemma72_residual(&flat, 0.05, 0.5).unwrap();
        let b = lemma72_residual(&curved, 0.05, 0.5).unwrap();
        assert!(b < a);
    }

    #[test]
    fn eta_search_finds_a_barrier() {
        for p in [2.5, 3.0, 4.0] {
            let d = constants(p).unwrap().d_p;
            let base = BarrierParams::new(p, 0.5 * d, 0.5, 0.1, 1.0, 0.0, 0.5).unwrap();
            let s = lemma72_eta_search(&base, 0.5, 40, 60, 60).unwrap();
            let acc = s.accepted.expect("no η passed");
            assert!(acc.min_residual >= RESIDUAL_FLOOR);
        }
    }

    #[test]
    fn flux_matches_closed_form_and_wall_derivative() {
        let params = BarrierParams::new(3.0, 0.35, 0.5, 0.1, 1.0, 0.0, 0.05)
            .unwrap()
            .with_recipe_eta()
            .unwrap();
        let f = lemma72_flux(&params, 0.5).unwrap();
        assert_relative_eq!(
            f,
            0.35 * 0.05f64.powf(-0.5) * 0.1f64.powf(-0.5) * 2.02,
            max_relative = 1e-12
        );
        assert!((f - 10.0).abs() < 0.01);
        // The barrier's slope at the wall is the bound itself.
        let wall = barrier_first(&params, 0.0, 0.5).2;
        assert_relative_eq!(wall, f, max_relative = 1e-12);
        let g = lemma72_flux(&params, 0.25).unwrap();
        assert_relative_eq!(g / f, 2.0, max_relative = 1e-12);
        assert!(lemma72_flux(&params, 0.0).is_err());
    }

    #[test]
    fn flux_exponent_identities() {
        for p in [2.5, 3.0, 4.0, 5.0] {
            let (a, b, c, d) = flux_exponents(p);
            assert!((a - b).abs() < 1e-14);
            assert!((c - d).abs() < 1e-14);
        }
        let (a, b, _, _) = flux_exponents(3.0);
        assert_eq!((a, b), (1.0, 1.0));
    }

    #[test]
    fn bracket_examples() {
        assert_relative_eq!(lemma73_bracket(2.0, 8.0, 1.0, 1.0, 3.0).unwrap(), 6.0, epsilon = 1e-12);
        let a = lemma73_bracket(1e-300, 1e-300, 0.5, 1.0, 3.0).unwrap();
        assert_relative_eq!(a, 2f64.sqrt() + 1.0, max_relative = 1e-12);
        let full = lemma73_bracket(1.0, 1.0, 1.0, 1.0, 3.0).unwrap();
        let half = lemma73_bracket(1.0, 1.0, 0.5, 1.0, 3.0).unwrap();
        assert_relative_eq!(half - full, 2f64.sqrt() - 1.0, epsilon = 1e-12);
        assert!(lemma73_bracket(0.0, 1.0, 1.0, 1.0, 3.0).is_err());
        assert!(lemma73_bracket(1.0, 1.0, 1.0, 1.0, 2.0).is_err());
    }
}
