//! Closed-form eigenvectors of the PT chain.
//!
//! The closed form is a forward recursion from site 1 in disguise, so it
//! loses relative accuracy wherever the true amplitude decays away from
//! site 1 (broken-phase states pinned to the gain, large `|Im θ|`). The
//! mirror image of the chain is the same chain with `η → -η`, so the same
//! formula also gives the vector read from site `N` backwards. Both
//! readings are computed and joined where each is accurate.

use num_complex::Complex64;

use super::secular::{check_nontrivial, evaluate, reduced_coupling_sq};
use crate::error::{Error, Result};
use crate::model::ChainConfig;

/// Largest scaled secular residual accepted by the eigenvector formulas.
pub const EIGENVECTOR_SECULAR_TOL: f64 = 1e-8;

fn step(x: isize) -> bool {
    x >= 0
}

/// Components `u_j`, `j = 1..=N`, of the closed form in the gauge
/// `u_1 = sin θ`, with per-component magnitude of the summed terms.
/// `eta_r` is `η/t` and may be negative (mirror reading).
fn closed_form(theta: Complex64, n: usize, k: usize, eta_r: f64) -> (Vec<Complex64>, Vec<f64>) {
    let i = Complex64::i();
    let s = theta.sin();
    let sin_k = (theta * k as f64).sin();
    let sin_kp = (theta * (n - k + 1) as f64).sin();
    let sin_m = (theta * (n + 1 - 2 * k) as f64).sin();
    let gain_coef = -i * eta_r * sin_k / s;
    let loss_coef = i * eta_r * sin_kp + eta_r * eta_r * sin_m * sin_k / s;

    let (ni, ki) = (n as isize, k as isize);
    let mut values = Vec::with_capacity(n);
    let mut mags = Vec::with_capacity(n);
    for j in 1..=ni {
        let base = (theta * j as f64).sin();
        let mut u = base;
        let mut mag = base.norm();
        if step(j - ki - 1) {
            let term = gain_coef * (theta * (j - ki) as f64).sin();
            u += term;
            mag += term.norm();
        }
        if step(j - ni + ki - 2) {
            let term = (theta * (j - ni + ki - 1) as f64).sin() / s * loss_coef;
            u += term;
            mag += term.norm();
        }
        values.push(u);
        mags.push(mag);
    }
    (values, mags)
}

/// Joins a forward and a backward reading of the same eigenvector. `back`
/// is already in forward site order. Each component is taken from the
/// reading whose terms cancel least there.
pub(crate) fn join_readings(
    fwd: &[Complex64],
    fwd_mag: &[f64],
    back: &[Complex64],
    back_mag: &[f64],
) -> Vec<Complex64> {
    let rel = |v: Complex64, m: f64| {
        let a = v.norm();
        if a > 0.0 {
            m / a
        } else {
            f64::INFINITY
        }
    };
    let n = fwd.len();
    // The anchor must be a sizeable component in both readings: tiny
    // components can be pure evaluation noise (e.g. `sin(jπ)`) without any
    // cancellation showing in the term magnitudes.
    let fwd_max = fwd.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let back_max = back.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let sizeable = |j: usize| fwd[j].norm() >= 1e-3 * fwd_max && back[j].norm() >= 1e-3 * back_max;
    let candidates: Vec<usize> = if (0..n).any(sizeable) {
        (0..n).filter(|&j| sizeable(j)).collect()
    } else {
        (0..n).collect()
    };
    let mut anchor = 0;
    let mut best = f64::INFINITY;
    for j in candidates {
        let worst = rel(fwd[j], fwd_mag[j]).max(rel(back[j], back_mag[j]));
        if worst < best {
            best = worst;
            anchor = j;
        }
    }
    if !best.is_finite() {
        return fwd.to_vec();
    }
    let ratio = fwd[anchor] / back[anchor];
    (0..n)
        .map(|j| {
            if rel(fwd[j], fwd_mag[j]) <= rel(back[j], back_mag[j]) {
                fwd[j]
            } else {
                back[j] * ratio
            }
        })
        .collect()
}

/// Unit Euclidean norm, with the largest component made real and positive.
pub fn normalize_gauge(v: &mut [Complex64]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return;
    }
    let big = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let pivot = v
        .iter()
        .position(|z| z.norm() >= big * (1.0 - 1e-9))
        .unwrap_or(0);
    let phase = v[pivot].conj() / v[pivot].norm();
    for z in v.iter_mut() {
        *z = *z * phase / norm;
    }
}

/// Eigenvector for the pseudo-momentum `theta` of chain `cfg`, unit-normed,
/// with the largest component real positive.
pub fn eigenvector_analytic(theta: Complex64, cfg: &ChainConfig) -> Result<Vec<Complex64>> {
    check_nontrivial(theta)?;
    let eval = evaluate(theta, cfg.n(), cfg.k(), reduced_coupling_sq(cfg));
    if eval.scaled_residual() > EIGENVECTOR_SECULAR_TOL {
        return Err(Error::Domain(format!(
            "theta = {theta} is not a root of the secular equation (scaled residual {:e})",
            eval.scaled_residual()
        )));
    }
    let mut v = eigenvector_unchecked(theta, cfg);
    normalize_gauge(&mut v);
    Ok(v)
}

/// Joined closed-form vector without the root check or normalization.
pub(crate) fn eigenvector_unchecked(theta: Complex64, cfg: &ChainConfig) -> Vec<Complex64> {
    let (n, k, eta_r) = (cfg.n(), cfg.k(), cfg.reduced_eta());
    let (fwd, fwd_mag) = closed_form(theta, n, k, eta_r);
    let (mut back, mut back_mag) = closed_form(theta, n, k, -eta_r);
    back.reverse();
    back_mag.reverse();
    join_readings(&fwd, &fwd_mag, &back, &back_mag)
}

/// Forward reading only, in the gauge `u_1 = sin θ`, unnormalized.
pub fn eigenvector_forward(theta: Complex64, cfg: &ChainConfig) -> Vec<Complex64> {
    closed_form(theta, cfg.n(), cfg.k(), cfg.reduced_eta()).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_hamiltonian;
    use crate::spectral::dense::eigen_residual;
    use std::f64::consts::PI;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn free_chain_standing_wave() {
        let cfg = ChainConfig::unit(12, 3, 0.0).unwrap();
        for r in 1..=12 {
            let theta = r as f64 * PI / 13.0;
            let u = eigenvector_forward(re(theta), &cfg);
            for (j, uj) in u.iter().enumerate() {
                let want = ((j + 1) as f64 * theta).sin();
                assert!((uj - re(want)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn opaque_nodes_at_contacts() {
        let cfg = ChainConfig::unit(23, 6, 1.5).unwrap();
        let u = eigenvector_analytic(re(PI / 6.0), &cfg).unwrap();
        assert!(u[5].norm() < 1e-12, "{}", u[5]);
        assert!(u[17].norm() < 1e-12, "{}", u[17]);
    }

    #[test]
    fn gauge_is_unit_and_real_peak() {
        let cfg = ChainConfig::unit(23, 2, 1.3).unwrap();
        let u = eigenvector_analytic(re(PI / 2.0), &cfg).unwrap();
        let norm: f64 = u.iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-14);
        let big = u.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let peak = u.iter().find(|z| z.norm() >= big * (1.0 - 1e-9)).unwrap();
        assert!(peak.im.abs() < 1e-15 && peak.re > 0.0);
    }

    #[test]
    fn rejects_non_roots() {
        let cfg = ChainConfig::unit(10, 1, 0.5).unwrap();
        assert!(matches!(eigenvector_analytic(re(0.3), &cfg), Err(Error::Domain(_))));
        assert!(matches!(eigenvector_analytic(re(PI), &cfg), Err(Error::Domain(_))));
    }

    #[test]
    fn matches_matrix_on_half_pi_states() {
        // θ = π/2 is an η-independent root for odd N.
        for k in 1..=11 {
            let cfg = ChainConfig::unit(23, k, 0.9).unwrap();
            let u = eigenvector_analytic(re(PI / 2.0), &cfg).unwrap();
            let h = build_hamiltonian(&cfg);
            assert!(eigen_residual(&h, re(0.0), &u) < 1e-13, "k = {k}");
        }
    }

    #[test]
    fn join_prefers_less_cancellation() {
        let fwd = vec![re(1.0), re(0.5), re(1e-12)];
        let fwd_mag = vec![1.0, 0.5, 1.0];
        let back = vec![re(2.0), re(1.0), re(2e-12)];
        let back_mag = vec![2.0, 1.0, 2e-12];
        let joined = join_readings(&fwd, &fwd_mag, &back, &back_mag);
        assert_eq!(joined[0], re(1.0));
        assert!((joined[2] - re(1e-12)).norm() < 1e-27);
    }
}
