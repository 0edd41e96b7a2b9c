//! General complex tridiagonal matrix with two impurities:
//!
//! `a u_{j-1} + (b - α δ_{jk} - β δ_{j,N-k+1}) u_j + c u_{j+1} = λ u_j`.
//!
//! The PT chain is the special case `a = c = t`, `b = 0`, `α = -iη`,
//! `β = +iη`.

use num_complex::Complex64;

use super::vector::{join_readings, normalize_gauge, EIGENVECTOR_SECULAR_TOL};
use crate::error::{Error, Result};
use crate::model::ComplexMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralTridiag {
    /// Sub-diagonal entry.
    pub a: Complex64,
    /// Diagonal entry.
    pub b: Complex64,
    /// Super-diagonal entry.
    pub c: Complex64,
    pub alpha: Complex64,
    pub beta: Complex64,
    pub n: usize,
    pub k: usize,
}

impl GeneralTridiag {
    pub fn new(
        a: Complex64,
        b: Complex64,
        c: Complex64,
        alpha: Complex64,
        beta: Complex64,
        n: usize,
        k: usize,
    ) -> Result<Self> {
        if n < 2 || k < 1 || k > n / 2 {
            return Err(Error::InvalidConfig(format!(
                "need N >= 2 and 1 <= k <= N/2, got N = {n}, k = {k}"
            )));
        }
        if (a * c).norm() == 0.0 {
            return Err(Error::Domain("a·c must be non-zero".into()));
        }
        Ok(Self { a, b, c, alpha, beta, n, k })
    }

    /// The PT chain with hopping `t` and gain/loss `η`.
    pub fn pt_chain(n: usize, k: usize, t: f64, eta: f64) -> Result<Self> {
        Self::new(
            Complex64::new(t, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(t, 0.0),
            Complex64::new(0.0, -eta),
            Complex64::new(0.0, eta),
            n,
            k,
        )
    }

    /// Principal square root of `a·c`.
    pub fn sqrt_ac(&self) -> Complex64 {
        (self.a * self.c).sqrt()
    }

    /// `ρ = √(ac)/c`, the square root of `a/c` on the branch matching
    /// [`Self::sqrt_ac`].
    pub fn rho(&self) -> Complex64 {
        self.sqrt_ac() / self.c
    }

    pub fn loss_site(&self) -> usize {
        self.n - self.k + 1
    }

    pub fn matrix(&self) -> ComplexMatrix {
        let n = self.n;
        let mut m = ComplexMatrix::zeros(n, n);
        for j in 0..n {
            m[(j, j)] = self.b;
            if j + 1 < n {
                m[(j, j + 1)] = self.c;
                m[(j + 1, j)] = self.a;
            }
        }
        m[(self.k - 1, self.k - 1)] -= self.alpha;
        m[(self.loss_site() - 1, self.loss_site() - 1)] -= self.beta;
        m
    }

    /// The reflected matrix `R A R` (`R` the exchange matrix): sub- and
    /// super-diagonal swap, and so do the impurities.
    pub fn mirrored(&self) -> Self {
        Self {
            a: self.c,
            c: self.a,
            alpha: self.beta,
            beta: self.alpha,
            ..*self
        }
    }

    /// Pseudo-momentum with `λ = b + 2√(ac) cos θ`, principal `arccos`.
    pub fn theta_for(&self, lambda: Complex64) -> Complex64 {
        ((lambda - self.b) / (self.sqrt_ac() * 2.0)).acos()
    }

    fn terms(&self, theta: Complex64) -> (Complex64, f64) {
        let (n, k) = (self.n as f64, self.k as f64);
        let r = self.sqrt_ac();
        let s = theta.sin();
        let y = theta.im.abs();
        let t1 = ((n + 1.0) * theta).sin();
        let c2 = (self.alpha + self.beta) / (r * s);
        let t2 = c2 * ((n - k + 1.0) * theta).sin() * (k * theta).sin();
        let c3 = self.alpha * self.beta / (self.a * self.c * s * s);
        let t3 = c3 * ((n - 2.0 * k + 1.0) * theta).sin() * (k * theta).sin().powi(2);
        let scale = ((n + 1.0) * y).cosh()
            + c2.norm() * ((n - k + 1.0) * y).cosh() * (k * y).cosh()
            + c3.norm() * ((n - 2.0 * k + 1.0) * y).cosh() * (k * y).cosh().powi(2);
        (t1 + t2 + t3, scale.max(1.0))
    }
}

fn check(theta: Complex64) -> Result<()> {
    super::secular::check_nontrivial(theta)
}

/// Left-hand side of the general secular equation.
pub fn general_secular_residual(theta: Complex64, m: &GeneralTridiag) -> Result<Complex64> {
    check(theta)?;
    Ok(m.terms(theta).0)
}

/// `|F(θ)|` relative to the magnitude of its terms.
pub fn general_scaled_residual(theta: Complex64, m: &GeneralTridiag) -> Result<f64> {
    check(theta)?;
    let (f, scale) = m.terms(theta);
    Ok(f.norm() / scale)
}

/// `λ = b + 2√(ac) cos θ`.
pub fn general_eigenvalue(theta: Complex64, m: &GeneralTridiag) -> Complex64 {
    m.b + m.sqrt_ac() * theta.cos() * 2.0
}

/// Components `ρ^j [ ... ]` in the gauge where the prefactor is one, plus
/// per-component term magnitudes.
fn closed_form(theta: Complex64, m: &GeneralTridiag) -> (Vec<Complex64>, Vec<f64>) {
    let (n, k) = (m.n as isize, m.k as isize);
    let r = m.sqrt_ac();
    let rho = m.rho();
    let s = theta.sin();
    let sin_k = (theta * k as f64).sin();
    let gain_coef = m.alpha * sin_k / (r * s);
    let loss_coef = m.beta / (r * s)
        * ((theta * (n - k + 1) as f64).sin()
            + m.alpha / (r * s) * (theta * (n - 2 * k + 1) as f64).sin() * sin_k);

    let mut values = Vec::with_capacity(m.n);
    let mut mags = Vec::with_capacity(m.n);
    let mut rho_j = Complex64::new(1.0, 0.0);
    for j in 1..=n {
        rho_j *= rho;
        let base = (theta * j as f64).sin();
        let mut bracket = base;
        let mut mag = base.norm();
        if j - k - 1 >= 0 {
            let term = gain_coef * (theta * (j - k) as f64).sin();
            bracket += term;
            mag += term.norm();
        }
        if j - n + k - 2 >= 0 {
            let term = loss_coef * (theta * (j - n + k - 1) as f64).sin();
            bracket += term;
            mag += term.norm();
        }
        values.push(rho_j * bracket);
        mags.push(rho_j.norm() * mag);
    }
    (values, mags)
}

/// Eigenvector of the general matrix for a root `theta`, unit-normed with
/// the largest component real positive.
pub fn general_eigenvector(theta: Complex64, m: &GeneralTridiag) -> Result<Vec<Complex64>> {
    let res = general_scaled_residual(theta, m)?;
    if res > EIGENVECTOR_SECULAR_TOL {
        return Err(Error::Domain(format!(
            "theta = {theta} is not a root of the general secular equation (scaled residual {res:e})"
        )));
    }
    let (fwd, fwd_mag) = closed_form(theta, m);
    // The mirrored matrix has the same λ; its √(ac) is the same number, so
    // the same θ applies.
    let (mut back, mut back_mag) = closed_form(theta, &m.mirrored());
    back.reverse();
    back_mag.reverse();
    let mut v = join_readings(&fwd, &fwd_mag, &back, &back_mag);
    normalize_gauge(&mut v);
    Ok(v)
}

/// Forward reading only (prefactor-one gauge), unnormalized.
pub fn general_eigenvector_forward(theta: Complex64, m: &GeneralTridiag) -> Vec<Complex64> {
    closed_form(theta, m).0
}
