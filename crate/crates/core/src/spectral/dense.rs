//! Dense non-Hermitian eigensolver: complex Schur form, then eigenvectors of
//! the triangular factor by back-substitution.

use nalgebra::{DVector, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::ComplexMatrix;

/// One eigenpair from the dense solver. `vector` has unit Euclidean norm.
#[derive(Debug, Clone)]
pub struct DenseEigenpair {
    pub value: Complex64,
    pub vector: Vec<Complex64>,
    /// `‖H v - λ v‖ / ‖v‖`.
    pub residual: f64,
}

pub fn matvec(h: &ComplexMatrix, v: &[Complex64]) -> Vec<Complex64> {
    let n = h.nrows();
    (0..n)
        .map(|i| (0..n).map(|j| h[(i, j)] * v[j]).sum())
        .collect()
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖H v - λ v‖ / ‖v‖`.
pub fn eigen_residual(h: &ComplexMatrix, value: Complex64, v: &[Complex64]) -> f64 {
    let hv = matvec(h, v);
    let r: f64 = hv
        .iter()
        .zip(v)
        .map(|(a, b)| (a - value * b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    r / norm(v)
}

/// Eigenvalues only.
pub fn dense_eigenvalues(h: &ComplexMatrix) -> Result<Vec<Complex64>> {
    let (_, t) = schur(h)?;
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

fn schur(h: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    if h.nrows() != h.ncols() {
        return Err(Error::Usage(format!(
            "eigensolver needs a square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Convergence("matrix has non-finite entries".into()));
    }
    let n = h.nrows();
    let max_iter = 200 * n.max(4) * n.max(4);
    Schur::try_new(h.clone(), f64::EPSILON, max_iter)
        .map(|s| s.unpack())
        .ok_or_else(|| {
            Error::Convergence(format!(
                "complex Schur iteration did not converge within {max_iter} sweeps (N = {n}, max |H_ij| = {:e})",
                h.iter().map(|z| z.norm()).fold(0.0, f64::max)
            ))
        })
}

/// Full eigendecomposition. The vectors are not orthogonal in general; the
/// matrix is non-normal once `η > 0`.
pub fn dense_eigensolve(h: &ComplexMatrix) -> Result<Vec<DenseEigenpair>> {
    let (q, t) = schur(h)?;
    let n = t.nrows();
    let tnorm = t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * tnorm;

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let lambda = t[(i, i)];
        // Solve (T - λ I) y = 0 with y_i = 1 and y_j = 0 below i.
        let mut y = DVector::<Complex64>::zeros(n);
        y[i] = Complex64::new(1.0, 0.0);
        for j in (0..i).rev() {
            let mut acc = Complex64::new(0.0, 0.0);
            for l in j + 1..=i {
                acc += t[(j, l)] * y[l];
            }
            let mut denom = t[(j, j)] - lambda;
            if denom.norm() < small {
                denom = Complex64::new(small, 0.0);
            }
            y[j] = -acc / denom;
            let big = y.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if big > 1e100 {
                y /= Complex64::new(big, 0.0);
            }
        }
        let v = &q * y;
        let vnorm = v.norm();
        let vector: Vec<Complex64> = v.iter().map(|z| z / vnorm).collect();
        let residual = eigen_residual(h, lambda, &vector);
        if !residual.is_finite() {
            return Err(Error::Convergence(format!(
                "eigenvector {i} (λ = {lambda}) is not finite"
            )));
        }
        out.push(DenseEigenpair {
            value: lambda,
            vector,
            residual,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_hamiltonian, ChainConfig};

    fn sorted_by_im(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
        v
    }

    #[test]
    fn two_site_free() {
        let h = build_hamiltonian(&ChainConfig::unit(2, 1, 0.0).unwrap());
        let mut vals: Vec<f64> = dense_eigenvalues(&h).unwrap().iter().map(|z| z.re).collect();
        vals.sort_by(f64::total_cmp);
        assert!((vals[0] + 1.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn two_site_broken() {
        // det(λ - H) = λ² - 1 + η² for H = [[iη, 1], [1, -iη]]; η = 2 gives λ = ±i√3.
        let h = build_hamiltonian(&ChainConfig::unit(2, 1, 2.0).unwrap());
        let vals = sorted_by_im(dense_eigenvalues(&h).unwrap());
        let r3 = 3f64.sqrt();
        assert!((vals[0] - Complex64::new(0.0, -r3)).norm() < 1e-13);
        assert!((vals[1] - Complex64::new(0.0, r3)).norm() < 1e-13);
    }

    #[test]
    fn residuals_small() {
        for (n, k, eta) in [(10, 1, 0.5), (10, 2, 2.0), (23, 6, 0.7), (30, 15, 5.0), (17, 4, 1.3)] {
            let h = build_hamiltonian(&ChainConfig::unit(n, k, eta).unwrap());
            let pairs = dense_eigensolve(&h).unwrap();
            assert_eq!(pairs.len(), n);
            for p in &pairs {
                assert!(p.residual <= 1e-10, "N={n} k={k} η={eta}: {}", p.residual);
            }
        }
    }

    #[test]
    fn rejects_non_square() {
        let h = ComplexMatrix::zeros(2, 3);
        assert!(matches!(dense_eigensolve(&h), Err(Error::Usage(_))));
    }

    #[test]
    fn rejects_non_finite() {
        let mut h = ComplexMatrix::zeros(2, 2);
        h[(0, 0)] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(dense_eigensolve(&h), Err(Error::Convergence(_))));
    }
}
