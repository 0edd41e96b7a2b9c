//! The secular function of the chain,
//!
//! `F(θ, s) = sin((N+1)θ) + s · sin((N-2k+1)θ) sin²(kθ) / sin²θ`,  `s = (η/t)²`,
//!
//! whose non-trivial zeros are the pseudo-momenta, together with its analytic
//! derivatives in `θ` and `s`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::ChainConfig;

/// Below this `|sin θ|` the point is treated as a trivial root `θ = mπ`.
pub const TRIVIAL_SIN_TOL: f64 = 1e-14;

/// Value and derivatives of `F` at one point.
#[derive(Debug, Clone, Copy)]
pub struct SecularEval {
    pub value: Complex64,
    pub d_theta: Complex64,
    pub d2_theta: Complex64,
    /// `∂F/∂s` with `s = (η/t)²`.
    pub d_s: Complex64,
    pub d_theta_s: Complex64,
    /// Magnitude bound on the individual terms of `F`, used to turn `|F|`
    /// into a relative residual. Never smaller than 1.
    pub scale: f64,
}

impl SecularEval {
    pub fn scaled_residual(&self) -> f64 {
        self.value.norm() / self.scale
    }
}

pub(crate) fn check_nontrivial(theta: Complex64) -> Result<()> {
    if !theta.re.is_finite() || !theta.im.is_finite() {
        return Err(Error::Domain(format!("non-finite pseudo-momentum {theta}")));
    }
    if theta.sin().norm() <= TRIVIAL_SIN_TOL {
        return Err(Error::Domain(format!(
            "theta = {theta} is a trivial root (multiple of pi)"
        )));
    }
    Ok(())
}

/// Evaluates `F` and its derivatives for a chain of `n` sites, gain at `k`,
/// and squared reduced coupling `s`. `s` may be complex so that Newton
/// iterations in `(θ, s)` stay holomorphic.
pub fn evaluate(theta: Complex64, n: usize, k: usize, s: Complex64) -> SecularEval {
    let l = (n + 1) as f64;
    let m = (n + 1 - 2 * k) as f64;
    let kf = k as f64;

    let sl = (theta * l).sin();
    let cl = (theta * l).cos();

    let a = (theta * m).sin();
    let a1 = (theta * m).cos() * m;
    let a2 = -a * (m * m);
    let b = (theta * kf).sin();
    let b1 = (theta * kf).cos() * kf;
    let b2 = -b * (kf * kf);
    let c = theta.sin();
    let c1 = theta.cos();
    let c2 = -c;

    let p = a * b * b;
    let p1 = a1 * b * b + a * b * b1 * 2.0;
    let p2 = a2 * b * b + a1 * b * b1 * 4.0 + a * b1 * b1 * 2.0 + a * b * b2 * 2.0;

    let inv_c = c.inv();
    let q = inv_c * inv_c;
    let q1 = -c1 * q * inv_c * 2.0;
    let q2 = c1 * c1 * q * q * 6.0 - c2 * q * inv_c * 2.0;

    let g = p * q;
    let g1 = p1 * q + p * q1;
    let g2 = p2 * q + p1 * q1 * 2.0 + p * q2;

    let y = theta.im.abs();
    let scale = (l * y).cosh()
        + s.norm() * (m * y).cosh() * (kf * y).cosh().powi(2) / c.norm_sqr();

    SecularEval {
        value: sl + s * g,
        d_theta: cl * l + s * g1,
        d2_theta: -sl * (l * l) + s * g2,
        d_s: g,
        d_theta_s: g1,
        scale: scale.max(1.0),
    }
}

pub(crate) fn reduced_coupling_sq(cfg: &ChainConfig) -> Complex64 {
    let r = cfg.reduced_eta();
    Complex64::new(r * r, 0.0)
}

/// `F(θ)` for the chain `cfg`.
pub fn secular_residual(theta: Complex64, cfg: &ChainConfig) -> Result<Complex64> {
    check_nontrivial(theta)?;
    Ok(evaluate(theta, cfg.n(), cfg.k(), reduced_coupling_sq(cfg)).value)
}

/// `∂F/∂θ` for the chain `cfg`.
pub fn secular_dtheta(theta: Complex64, cfg: &ChainConfig) -> Result<Complex64> {
    check_nontrivial(theta)?;
    Ok(evaluate(theta, cfg.n(), cfg.k(), reduced_coupling_sq(cfg)).d_theta)
}

/// `|F(θ)|` divided by the magnitude of its terms.
pub fn scaled_secular_residual(theta: Complex64, cfg: &ChainConfig) -> Result<f64> {
    check_nontrivial(theta)?;
    Ok(evaluate(theta, cfg.n(), cfg.k(), reduced_coupling_sq(cfg)).scaled_residual())
}
