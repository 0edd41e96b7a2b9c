//! Chain configuration, Hamiltonian assembly and the parity/time-reversal
//! operators.
//!
//! Sites are labelled `1..=N` everywhere in the public API. The gain sits at
//! site `k` and the loss at its mirror image `k' = N - k + 1`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense complex square matrix used for `H` and `J`.
pub type ComplexMatrix = DMatrix<Complex64>;

/// A PT-symmetric chain: `N` sites, gain `+iη` at site `k`, loss `-iη` at
/// site `N - k + 1`, nearest-neighbour hopping `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    #[serde(rename = "N")]
    n: usize,
    k: usize,
    t: f64,
    eta: f64,
}

impl ChainConfig {
    pub fn new(n: usize, k: usize, t: f64, eta: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidConfig(format!(
                "chain needs at least two sites, got N = {n}"
            )));
        }
        if k < 1 || k > n / 2 {
            return Err(Error::InvalidConfig(format!(
                "gain site k = {k} must lie in [1, {}] for N = {n}",
                n / 2
            )));
        }
        if !t.is_finite() || t == 0.0 {
            return Err(Error::InvalidConfig(format!("hopping t = {t} must be finite and non-zero")));
        }
        if !eta.is_finite() || eta < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "gain/loss strength eta = {eta} must be finite and non-negative"
            )));
        }
        Ok(Self { n, k, t, eta })
    }

    /// Chain with the default hopping `t = 1`.
    pub fn unit(n: usize, k: usize, eta: f64) -> Result<Self> {
        Self::new(n, k, 1.0, eta)
    }

    /// Accepts a gain site on either half of the chain. A request with
    /// `k > N/2` is replaced by its mirror configuration (gain at
    /// `N - k + 1`), which has the same spectrum; the returned flag reports
    /// whether that happened.
    pub fn normalized(n: usize, k: usize, t: f64, eta: f64) -> Result<(Self, bool)> {
        if n >= 2 && k > n / 2 && k <= n {
            let mirrored = n - k + 1;
            Self::new(n, mirrored, t, eta).map(|cfg| (cfg, true))
        } else {
            Self::new(n, k, t, eta).map(|cfg| (cfg, false))
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Gain site (1-based).
    pub fn k(&self) -> usize {
        self.k
    }

    /// Loss site `N - k + 1` (1-based).
    pub fn loss_site(&self) -> usize {
        self.n - self.k + 1
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Gain/loss strength in units of the hopping, `η / t`.
    pub fn reduced_eta(&self) -> f64 {
        self.eta / self.t
    }

    /// Same chain at a different gain/loss strength.
    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        Self::new(self.n, self.k, self.t, eta)
    }
}

/// Dense Hamiltonian of the chain.
pub fn build_hamiltonian(cfg: &ChainConfig) -> ComplexMatrix {
    let n = cfg.n();
    let hop = Complex64::new(cfg.t(), 0.0);
    let mut h = ComplexMatrix::zeros(n, n);
    for j in 0..n - 1 {
        h[(j, j + 1)] = hop;
        h[(j + 1, j)] = hop;
    }
    h[(cfg.k() - 1, cfg.k() - 1)] = Complex64::new(0.0, cfg.eta());
    h[(cfg.loss_site() - 1, cfg.loss_site() - 1)] = Complex64::new(0.0, -cfg.eta());
    h
}

/// Exchange (anti-identity) matrix `J_ij = δ_{i, N-j+1}`, the parity operator.
pub fn pt_exchange(n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |i, j| {
        if i + j + 1 == n {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// `J · conj(H) · J`, computed as an index reversal rather than two products.
pub fn pt_transform(h: &ComplexMatrix) -> ComplexMatrix {
    let n = h.nrows();
    ComplexMatrix::from_fn(n, n, |i, j| h[(n - 1 - i, n - 1 - j)].conj())
}

/// True when `max |(J conj(H) J - H)_ij| < tol`.
pub fn is_pt_symmetric(h: &ComplexMatrix, tol: f64) -> bool {
    if h.nrows() != h.ncols() {
        return false;
    }
    let n = h.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((h[(n - 1 - i, n - 1 - j)].conj() - h[(i, j)]).norm());
        }
    }
    worst < tol
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn two_site_hopping_matrix() {
        let h = build_hamiltonian(&ChainConfig::unit(2, 1, 0.0).unwrap());
        assert_eq!(h, ComplexMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]));
    }

    #[test]
    fn three_site_diagonal() {
        let h = build_hamiltonian(&ChainConfig::unit(3, 1, 0.5).unwrap());
        assert_eq!(h[(0, 0)], c(0.0, 0.5));
        assert_eq!(h[(1, 1)], c(0.0, 0.0));
        assert_eq!(h[(2, 2)], c(0.0, -0.5));
        assert_eq!(h[(0, 1)], c(1.0, 0.0));
        assert_eq!(h[(2, 1)], c(1.0, 0.0));
        assert_eq!(h[(0, 2)], c(0.0, 0.0));
    }

    #[test]
    fn exchange_matrix() {
        let j2 = pt_exchange(2);
        assert_eq!(j2, ComplexMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]));
        let j3 = pt_exchange(3);
        for i in 0..3 {
            for k in 0..3 {
                let want = if i + k == 2 { 1.0 } else { 0.0 };
                assert_eq!(j3[(i, k)], c(want, 0.0));
            }
        }
        let j10 = pt_exchange(10);
        assert_eq!(&j10 * &j10, ComplexMatrix::identity(10, 10));
    }

    #[test]
    fn transform_matches_explicit_products() {
        let cfg = ChainConfig::new(7, 2, 0.8, 1.3).unwrap();
        let h = build_hamiltonian(&cfg);
        let j = pt_exchange(7);
        let explicit = &j * h.map(|z| z.conj()) * &j;
        assert_eq!(pt_transform(&h), explicit);
        assert!(is_pt_symmetric(&h, 1e-12));
    }

    #[test]
    fn same_sign_gain_breaks_pt() {
        let cfg = ChainConfig::unit(6, 2, 0.7).unwrap();
        let mut h = build_hamiltonian(&cfg);
        h[(cfg.loss_site() - 1, cfg.loss_site() - 1)] = c(0.0, 0.7);
        assert!(!is_pt_symmetric(&h, 1e-12));
    }

    #[test]
    fn hermitian_but_not_centrosymmetric() {
        // Real symmetric, so Hermitian, but H[0][0] != H[2][2].
        let h = ComplexMatrix::from_row_slice(
            3,
            3,
            &[c(0.3, 0.), c(1.1, 0.), c(-0.4, 0.), c(1.1, 0.), c(0.9, 0.), c(0.2, 0.), c(-0.4, 0.), c(0.2, 0.), c(-1.7, 0.)],
        );
        assert_eq!(h, h.adjoint());
        let deviation = (pt_transform(&h) - &h).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!((deviation - 2.0).abs() < 1e-15);
        assert!(!is_pt_symmetric(&h, 1e-12));
    }

    #[test]
    fn zero_eta_is_centrosymmetric() {
        let cfg = ChainConfig::unit(9, 3, 0.0).unwrap();
        let h = build_hamiltonian(&cfg);
        let j = pt_exchange(9);
        assert_eq!(&j * &h * &j, h);
    }

    #[test]
    fn invalid_configs() {
        assert!(ChainConfig::unit(10, 0, 1.0).is_err());
        assert!(ChainConfig::unit(10, 6, 1.0).is_err());
        assert!(ChainConfig::unit(1, 1, 1.0).is_err());
        assert!(ChainConfig::new(10, 2, 0.0, 1.0).is_err());
        assert!(ChainConfig::unit(10, 2, -0.1).is_err());
        assert!(ChainConfig::unit(10, 2, f64::NAN).is_err());
    }

    #[test]
    fn mirror_normalization() {
        let (cfg, mirrored) = ChainConfig::normalized(10, 8, 1.0, 0.4).unwrap();
        assert!(mirrored);
        assert_eq!(cfg.k(), 3);
        let (cfg, mirrored) = ChainConfig::normalized(10, 3, 1.0, 0.4).unwrap();
        assert!(!mirrored);
        assert_eq!(cfg.k(), 3);
        // Odd N: the centre site would coincide with its own mirror.
        assert!(ChainConfig::normalized(9, 5, 1.0, 0.4).is_err());
    }

    #[test]
    fn mirrored_request_has_same_spectrum_up_to_reflection() {
        // Gain at site 8 of 10 reflected is gain at site 3: R H(8) R = H(3).
        let (cfg, _) = ChainConfig::normalized(10, 8, 1.0, 0.4).unwrap();
        let h3 = build_hamiltonian(&cfg);
        let mut h8 = ComplexMatrix::zeros(10, 10);
        for j in 0..9 {
            h8[(j, j + 1)] = c(1.0, 0.0);
            h8[(j + 1, j)] = c(1.0, 0.0);
        }
        h8[(7, 7)] = c(0.0, 0.4);
        h8[(2, 2)] = c(0.0, -0.4);
        let j = pt_exchange(10);
        assert_eq!(&j * &h8 * &j, h3);
    }

    #[test]
    fn trace_vanishes() {
        for (n, k) in [(4, 1), (7, 3), (12, 6)] {
            let h = build_hamiltonian(&ChainConfig::unit(n, k, 2.3).unwrap());
            assert_eq!(h.trace(), c(0.0, 0.0));
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn every_chain_is_pt_symmetric(n in 2usize..40, kf in 0.0f64..1.0, t in 0.1f64..3.0, eta in 0.0f64..20.0) {
                let k = 1 + ((n / 2 - 1) as f64 * kf).round() as usize;
                let cfg = ChainConfig::new(n, k, t, eta).unwrap();
                let h = build_hamiltonian(&cfg);
                prop_assert!(is_pt_symmetric(&h, 1e-12));
                prop_assert!(h.trace().norm() < 1e-12);
            }
        }
    }
}
