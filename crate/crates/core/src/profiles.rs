//! Exact half-space solutions and the closed-form profiles built from them.
//!
//! Every numerical result in the crate is measured against these formulas.
//! With `beta = 1/(p-1)` the one-dimensional solutions of `-u'' = |u'|^p`
//! vanishing at `s = 0` are `U_alpha(s) = c_p (alpha+s)^(1-beta) - c_p alpha^(1-beta)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default finite-difference step of [`ode_residual`].
pub const ODE_RESIDUAL_STEP: f64 = 1e-4;

/// Exponent `p > 2` and the amplitudes derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub p: f64,
    pub beta: f64,
    /// Amplitude of `U_0(s) = c_p s^(1-beta)`.
    pub c_p: f64,
    /// Amplitude of `U_0'(s) = d_p s^(-beta)`.
    pub d_p: f64,
}

impl Constants {
    pub fn new(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 2.0) {
            return Err(invalid("p", format!("exponent must satisfy p > 2, got {p}")));
        }
        let beta = 1.0 / (p - 1.0);
        let d_p = beta.powf(beta);
        let c_p = d_p / (1.0 - beta);
        Ok(Constants { p, beta, c_p, d_p })
    }

    /// `U_alpha(s)`.
    pub fn u(&self, alpha: f64, s: f64) -> Result<f64> {
        check_nonneg("alpha", alpha)?;
        check_nonneg("s", s)?;
        let e = 1.0 - self.beta;
        Ok(self.c_p * ((alpha + s).powf(e) - alpha.powf(e)))
    }

    /// `U_alpha'(s) = d_p (alpha+s)^(-beta)`.
    pub fn du(&self, alpha: f64, s: f64) -> Result<f64> {
        check_nonneg("alpha", alpha)?;
        check_nonneg("s", s)?;
        if alpha + s == 0.0 {
            return Err(Error::SingularProfile);
        }
        Ok(self.d_p * (alpha + s).powf(-self.beta))
    }

    /// Slope of the solution of `-w'' = |w'|^p` with `w'(1) = g1`, at `y`:
    /// `[g1^(1-p) + (p-1)(y-1)]^(-beta)`.
    pub fn ode_profile(&self, g1: f64, y: f64) -> Result<f64> {
        if !(g1.is_finite() && g1 > 0.0) {
            return Err(invalid("g1", format!("must be > 0, got {g1}")));
        }
        if !(y.is_finite() && y > 0.0) {
            return Err(invalid("y", format!("must be > 0, got {y}")));
        }
        let p = self.p;
        let bracket = g1.powf(1.0 - p) + (p - 1.0) * (y - 1.0);
        if bracket <= 0.0 {
            return Err(Error::OdeBreakdown { bracket });
        }
        Ok(bracket.powf(-self.beta))
    }

    /// Lower and upper normal-derivative bounds at distance `delta` from a
    /// boundary point with slope `g_b`, widened by `eps`.
    pub fn spacetime_bounds(&self, g_b: f64, delta: f64, eps: f64) -> Result<(f64, f64)> {
        if !(g_b.is_finite() && g_b > 0.0) {
            return Err(invalid("g_b", format!("must be > 0, got {g_b}")));
        }
        check_nonneg("delta", delta)?;
        if !(0.0..1.0).contains(&eps) {
            return Err(invalid("eps", format!("must lie in [0, 1), got {eps}")));
        }
        let p = self.p;
        let base = g_b.powf(1.0 - p);
        let lower = (base + (1.0 + eps) * (p - 1.0) * delta).powf(-self.beta);
        let upper = (base + (1.0 - eps) * (p - 1.0) * delta).powf(-self.beta);
        Ok((lower, upper))
    }
}

/// Convenience wrapper for [`Constants::new`].
pub fn constants(p: f64) -> Result<Constants> {
    Constants::new(p)
}

fn check_nonneg(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and >= 0, got {v}")))
    }
}

/// `f''(s) + |f'(s)|^p` with five-point central differences of step `h_fd`.
///
/// The profile must be finite over `[s - 2 h_fd, s + 2 h_fd]`; closures should
/// return NaN where they are undefined.
pub fn ode_residual<F>(f: F, s: f64, c: &Constants, h_fd: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(h_fd.is_finite() && h_fd > 0.0) {
        return Err(invalid("h_fd", format!("must be > 0, got {h_fd}")));
    }
    let v: [f64; 5] = std::array::from_fn(|k| f(s + (k as f64 - 2.0) * h_fd));
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Precondition(format!(
            "profile not finite on the stencil around s = {s}"
        )));
    }
    let d1 = (v[0] - 8.0 * v[1] + 8.0 * v[3] - v[4]) / (12.0 * h_fd);
    let d2 = (-v[0] + 16.0 * v[1] - 30.0 * v[2] + 16.0 * v[3] - v[4]) / (12.0 * h_fd * h_fd);
    Ok(d2 + d1.abs().powf(c.p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    // Reference values evaluated once with 30-digit arithmetic (mpmath).
    const C3: f64 = std::f64::consts::SQRT_2;
    const D3: f64 = 0.707_106_781_186_547_5;
    const C4: f64 = 1.040_041_911_525_952;
    const D4: f64 = 0.693_361_274_350_634_7;

    #[test]
    fn constants_match_reference() {
        let c = Constants::new(3.0).unwrap();
        assert_abs_diff_eq!(c.beta, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(c.c_p, C3, epsilon = 1e-14);
        assert_abs_diff_eq!(c.d_p, D3, epsilon = 1e-14);
        let c = Constants::new(4.0).unwrap();
        assert_abs_diff_eq!(c.beta, 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.c_p, C4, epsilon = 1e-14);
        assert_abs_diff_eq!(c.d_p, D4, epsilon = 1e-14);
        assert!(Constants::new(2.0).is_err());
        assert!(Constants::new(f64::NAN).is_err());
    }

    #[test]
    fn closed_form_c_p_agrees() {
        for p in [2.5, 3.0, 4.0, 5.0, 7.5] {
            let c = Constants::new(p).unwrap();
            let alt = (p - 1.0) / (p - 2.0) * (p - 1.0f64).powf(-1.0 / (p - 1.0));
            assert_abs_diff_eq!(c.c_p, alt, epsilon = 1e-13);
        }
    }

    #[test]
    fn profile_examples() {
        let c = Constants::new(3.0).unwrap();
        assert_abs_diff_eq!(c.u(0.0, 1.0).unwrap(), C3, epsilon = 1e-14);
        assert_eq!(c.u(2.5, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(c.u(1.0, 3.0).unwrap(), C3, epsilon = 1e-14);
        assert_abs_diff_eq!(c.du(0.0, 4.0).unwrap(), D3 / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.du(3.0, 1.0).unwrap(), D3 / 2.0, epsilon = 1e-15);
        assert!(matches!(c.du(0.0, 0.0), Err(Error::SingularProfile)));
        assert!(c.u(-1.0, 1.0).is_err());
    }

    #[test]
    fn ode_profile_examples() {
        let c = Constants::new(3.0).unwrap();
        assert_abs_diff_eq!(c.ode_profile(D3 / 2.0, 2.0).unwrap(), 10f64.powf(-0.5), epsilon = 1e-14);
        assert_abs_diff_eq!(c.ode_profile(0.3, 1.0).unwrap(), 0.3, epsilon = 1e-15);
        for y in [0.1, 0.5, 1.0, 3.0, 10.0] {
            assert_abs_diff_eq!(c.ode_profile(c.d_p, y).unwrap(), c.du(0.0, y).unwrap(), epsilon = 1e-14);
        }
        // bracket 1/4 + 2 (0.5 - 1) < 0: the slope blew up backwards before y = 0.5.
        assert!(matches!(c.ode_profile(2.0, 0.5), Err(Error::OdeBreakdown { .. })));
    }

    #[test]
    fn spacetime_bound_examples() {
        let c = Constants::new(3.0).unwrap();
        let (lo, hi) = c.spacetime_bounds(1.0, 0.5, 0.0).unwrap();
        assert_abs_diff_eq!(lo, 0.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(hi, 0.5f64.sqrt(), epsilon = 1e-15);
        let (lo, hi) = c.spacetime_bounds(3.7, 0.0, 0.4).unwrap();
        assert_abs_diff_eq!(lo, 3.7, epsilon = 1e-14);
        assert_abs_diff_eq!(hi, 3.7, epsilon = 1e-14);
        let (lo, hi) = c.spacetime_bounds(1.0, 0.5, 0.5).unwrap();
        assert_abs_diff_eq!(lo, 2.5f64.powf(-0.5), epsilon = 1e-15);
        assert_abs_diff_eq!(hi, 1.5f64.powf(-0.5), epsilon = 1e-15);
    }

    #[test]
    fn ode_residual_examples() {
        let c = Constants::new(3.0).unwrap();
        let r = ode_residual(|s| c.u(1.0, s).unwrap_or(f64::NAN), 0.5, &c, 1e-4).unwrap();
        assert!(r.abs() <= 1e-6, "{r}");
        // Rounding in the second difference is about 1e-16 / h_fd^2.
        let r = ode_residual(|s| s, 0.3, &c, ODE_RESIDUAL_STEP).unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-7);
        assert_eq!(ode_residual(|_| 0.0, 0.3, &c, ODE_RESIDUAL_STEP).unwrap(), 0.0);
        assert!(ode_residual(|s| c.u(0.0, s).unwrap_or(f64::NAN), 1e-4, &c, 1e-4).is_err());
    }

    proptest! {
        #[test]
        fn scale_invariance(lambda in 1e-3f64..1e3, s in 1e-3f64..1e2, alpha in 0.0f64..10.0) {
            let c = Constants::new(3.5).unwrap();
            let k = lambda.powf(c.beta - 1.0);
            let lhs = k * c.u(0.0, lambda * s).unwrap();
            prop_assert!((lhs - c.u(0.0, s).unwrap()).abs() <= 1e-12 * (1.0 + lhs.abs()));
            let lhs = k * c.u(alpha, lambda * s).unwrap();
            let rhs = c.u(alpha / lambda, s).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }

        #[test]
        fn du_is_derivative(alpha in 0.0f64..5.0, s in 0.1f64..5.0) {
            let c = Constants::new(3.0).unwrap();
            let h = 1e-5;
            let fd = (c.u(alpha, s + h).unwrap() - c.u(alpha, s - h).unwrap()) / (2.0 * h);
            prop_assert!((fd - c.du(alpha, s).unwrap()).abs() <= 1e-6);
        }

        #[test]
        fn sandwich_is_ordered(g in 1e-2f64..1e3, delta in 0.0f64..2.0, eps in 0.0f64..0.99) {
            let c = Constants::new(4.0).unwrap();
            let (lo, hi) = c.spacetime_bounds(g, delta, eps).unwrap();
            prop_assert!(lo <= hi);
            prop_assert!(hi <= g * (1.0 + 1e-12));
        }
    }
}
