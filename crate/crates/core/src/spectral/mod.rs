//! Spectrum and eigenvectors of the chain.
//!
//! [`solve_spectrum`] seeds every root from the dense eigensolver, converts
//! the energies to pseudo-momenta, polishes them on the secular equation and
//! evaluates the eigenvectors from the closed form.

pub mod dense;
pub mod general;
pub mod secular;
pub mod vector;

use num_complex::Complex64;
use serde::Serialize;

use crate::classify::{classify_spectrum, ClassifyTolerance, SpecialStateCensus};
use crate::error::{Error, Result};
use crate::matching::match_multisets;
use crate::model::{build_hamiltonian, ChainConfig, ComplexMatrix};

pub use dense::{dense_eigensolve, dense_eigenvalues, eigen_residual, DenseEigenpair};
pub use general::{
    general_eigenvalue, general_eigenvector, general_scaled_residual, general_secular_residual,
    GeneralTridiag,
};
pub use secular::{scaled_secular_residual, secular_dtheta, secular_residual};
pub use vector::{eigenvector_analytic, normalize_gauge};

use secular::evaluate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum StateTag {
    Generic,
    Opaque,
    Transparent,
}

impl StateTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            StateTag::Generic => "generic",
            StateTag::Opaque => "opaque",
            StateTag::Transparent => "transparent",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Residuals {
    /// `|F(θ)|` relative to the magnitude of its terms.
    pub secular: f64,
    /// `‖H u - E u‖ / ‖u‖`.
    pub eigen: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct PairFlags {
    /// Newton polishing failed; `θ` and `E` are the dense values.
    pub unpolished: bool,
    /// The closed-form vector was rejected; `vector` is the dense one.
    pub dense_vector: bool,
    /// Root lies within the coalescence guard radius of another root; the
    /// matrix is (nearly) defective there and the vector is not unique.
    pub near_coalescence: bool,
    /// Member of a cluster of roots whose spread is at roundoff level for
    /// its size: the matrix is numerically defective there and every member
    /// carries the cluster's common root and single eigenvector.
    pub defective: bool,
    pub classification_mismatch: bool,
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub theta: Complex64,
    pub energy: Complex64,
    /// Site amplitudes `u_1..u_N`, unit norm.
    pub vector: Vec<Complex64>,
    pub tag: StateTag,
    pub residuals: Residuals,
    pub flags: PairFlags,
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    pub config: ChainConfig,
    /// Sorted by `(Re E, Im E)`.
    pub pairs: Vec<EigenPair>,
    /// `(i, j)` with `E_i ≈ conj(E_j)`, `i <= j`; real energies pair with
    /// themselves.
    pub conjugate_pairing: Vec<(usize, usize)>,
}

impl Spectrum {
    pub fn energies(&self) -> Vec<Complex64> {
        self.pairs.iter().map(|p| p.energy).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub secular_tol: f64,
    pub eigen_tol: f64,
    pub max_newton_iters: usize,
    /// Roots closer than this (in `θ`) are polished jointly.
    pub ep_guard_radius: f64,
    pub classify: ClassifyTolerance,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            secular_tol: 1e-11,
            eigen_tol: 1e-9,
            max_newton_iters: 50,
            ep_guard_radius: 1e-6,
            classify: ClassifyTolerance::default(),
        }
    }
}

/// Pseudo-momentum for energy `e`: principal `arccos(E / 2t)`, which puts
/// `Re θ` in `[0, π]`.
pub fn theta_from_energy(e: Complex64, t: f64) -> Complex64 {
    (e / (2.0 * t)).acos()
}

/// `‖H u - E u‖ / ‖u‖` exploiting the tridiagonal structure.
pub fn chain_residual(cfg: &ChainConfig, energy: Complex64, u: &[Complex64]) -> f64 {
    let hu = apply_hamiltonian(cfg, u);
    let num: f64 = hu
        .iter()
        .zip(u)
        .map(|(a, b)| (a - energy * b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    num / dense::norm(u)
}

/// `H · c` in O(N).
pub fn apply_hamiltonian(cfg: &ChainConfig, c: &[Complex64]) -> Vec<Complex64> {
    let n = cfg.n();
    let t = cfg.t();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        if j > 0 {
            acc += c[j - 1] * t;
        }
        if j + 1 < n {
            acc += c[j + 1] * t;
        }
        out[j] = acc;
    }
    let (g, l) = (cfg.k() - 1, cfg.loss_site() - 1);
    out[g] += Complex64::new(0.0, cfg.eta()) * c[g];
    out[l] += Complex64::new(0.0, -cfg.eta()) * c[l];
    out
}

enum Polish {
    Converged(Complex64, f64),
    Failed,
}

fn newton(seed: Complex64, cfg: &ChainConfig, s: Complex64, opts: &SolverOptions) -> Polish {
    let mut theta = seed;
    for _ in 0..=opts.max_newton_iters {
        if theta.sin().norm() <= secular::TRIVIAL_SIN_TOL {
            return Polish::Failed;
        }
        let e = evaluate(theta, cfg.n(), cfg.k(), s);
        let res = e.scaled_residual();
        if res <= opts.secular_tol {
            return Polish::Converged(theta, res);
        }
        let step = e.value / e.d_theta;
        if !step.re.is_finite() || !step.im.is_finite() {
            return Polish::Failed;
        }
        theta -= step;
    }
    Polish::Failed
}

/// Simultaneous (Aberth-deflated) Newton on a cluster of nearby roots, so
/// that each member converges to its own root.
fn cluster_newton(
    seeds: &[Complex64],
    cfg: &ChainConfig,
    s: Complex64,
    opts: &SolverOptions,
) -> Option<Vec<(Complex64, f64)>> {
    let mut thetas = seeds.to_vec();
    for _ in 0..=opts.max_newton_iters {
        let evals: Vec<_> = thetas
            .iter()
            .map(|&z| evaluate(z, cfg.n(), cfg.k(), s))
            .collect();
        if evals.iter().all(|e| e.scaled_residual() <= opts.secular_tol) {
            return Some(
                thetas
                    .iter()
                    .zip(&evals)
                    .map(|(&z, e)| (z, e.scaled_residual()))
                    .collect(),
            );
        }
        let mut next = thetas.clone();
        for i in 0..thetas.len() {
            if evals[i].scaled_residual() <= opts.secular_tol {
                continue;
            }
            let w = evals[i].value / evals[i].d_theta;
            let sigma: Complex64 = (0..thetas.len())
                .filter(|&j| j != i)
                .map(|j| (thetas[i] - thetas[j]).inv())
                .sum();
            let step = w / (Complex64::new(1.0, 0.0) - w * sigma);
            if !step.re.is_finite() || !step.im.is_finite() {
                return None;
            }
            next[i] -= step;
        }
        thetas = next;
    }
    None
}

/// Groups seed indices whose pseudo-momenta lie within `radius` of each
/// other (transitively).
fn clusters(seeds: &[Complex64], radius: f64) -> Vec<Vec<usize>> {
    let n = seeds.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (seeds[i] - seeds[j]).norm() < radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut index_of = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if index_of[r] == usize::MAX {
            index_of[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[index_of[r]].push(i);
    }
    groups
}

fn dense_fallback(cfg: &ChainConfig, d: &DenseEigenpair, flags: PairFlags) -> EigenPair {
    let theta = theta_from_energy(d.value, cfg.t());
    let secular = secular::check_nontrivial(theta)
        .map(|_| evaluate(theta, cfg.n(), cfg.k(), secular::reduced_coupling_sq(cfg)).scaled_residual())
        .unwrap_or(f64::INFINITY);
    let mut vector = d.vector.clone();
    normalize_gauge(&mut vector);
    let energy = theta.cos() * (2.0 * cfg.t());
    EigenPair {
        theta,
        energy,
        residuals: Residuals {
            secular,
            eigen: chain_residual(cfg, energy, &vector),
        },
        vector,
        tag: StateTag::Generic,
        flags: PairFlags {
            unpolished: true,
            dense_vector: true,
            ..flags
        },
    }
}

fn build_pair(
    cfg: &ChainConfig,
    theta: Complex64,
    secular_res: f64,
    dense: &DenseEigenpair,
    flags: PairFlags,
    opts: &SolverOptions,
) -> EigenPair {
    let energy = theta.cos() * (2.0 * cfg.t());
    let analytic = eigenvector_analytic(theta, cfg).ok();
    let analytic_res = analytic
        .as_ref()
        .map(|u| chain_residual(cfg, energy, u))
        .unwrap_or(f64::INFINITY);
    let (vector, eigen, dense_vector) = if analytic_res <= opts.eigen_tol {
        (analytic.unwrap(), analytic_res, false)
    } else {
        let mut v = dense.vector.clone();
        normalize_gauge(&mut v);
        let r = chain_residual(cfg, energy, &v);
        if r < analytic_res {
            (v, r, true)
        } else {
            (analytic.unwrap(), analytic_res, false)
        }
    };
    EigenPair {
        theta,
        energy,
        vector,
        tag: StateTag::Generic,
        residuals: Residuals {
            secular: secular_res,
            eigen,
        },
        flags: PairFlags {
            dense_vector,
            ..flags
        },
    }
}

/// Spread of the roots of an `m`-fold root after a relative perturbation of
/// size `ε`: `h ε^{1/m}`, `h` the norm scale of the matrix.
fn roundoff_spread(h: f64, m: usize) -> f64 {
    10.0 * h * f64::EPSILON.powf(1.0 / m as f64)
}

/// Replaces clusters of eigenvalues that are indistinguishable from a
/// split multiple root by that root. The centroid of the split roots of
/// `(z - z0)^m + δ` is `z0`, so it is used as the common value.
fn collapse_defective(cfg: &ChainConfig, pairs: &mut [EigenPair], opts: &SolverOptions) {
    let h = 2.0 * cfg.t().abs() + cfg.eta();
    let energies: Vec<Complex64> = pairs.iter().map(|p| p.energy).collect();
    // Higher multiplicities spread wider; link up to the triple-root scale.
    let link = roundoff_spread(h, 3);
    for group in clusters(&energies, link) {
        let m = group.len();
        if m < 2 {
            continue;
        }
        let diameter = group
            .iter()
            .flat_map(|&i| group.iter().map(move |&j| (i, j)))
            .map(|(i, j)| (energies[i] - energies[j]).norm())
            .fold(0.0, f64::max);
        if diameter > roundoff_spread(h, m) {
            continue;
        }
        let centroid = group.iter().map(|&i| energies[i]).sum::<Complex64>() / m as f64;
        let theta = theta_from_energy(centroid, cfg.t());
        let Ok(vector) = eigenvector_analytic(theta, cfg) else {
            continue;
        };
        let energy = theta.cos() * (2.0 * cfg.t());
        let eigen = chain_residual(cfg, energy, &vector);
        if eigen > opts.eigen_tol {
            continue;
        }
        let secular = evaluate(theta, cfg.n(), cfg.k(), secular::reduced_coupling_sq(cfg)).scaled_residual();
        for &i in &group {
            let p = &mut pairs[i];
            p.theta = theta;
            p.energy = energy;
            p.vector.clone_from(&vector);
            p.residuals = Residuals { secular, eigen };
            p.flags.defective = true;
            p.flags.near_coalescence = true;
            p.flags.unpolished = false;
            p.flags.dense_vector = false;
        }
    }
}

/// Full spectrum of the chain: `N` eigenpairs with polished pseudo-momenta,
/// closed-form eigenvectors, conjugate pairing and opaque/transparent tags.
pub fn solve_spectrum(cfg: &ChainConfig, opts: &SolverOptions) -> Result<Spectrum> {
    let h: ComplexMatrix = build_hamiltonian(cfg);
    let dense = dense_eigensolve(&h)?;
    let s = secular::reduced_coupling_sq(cfg);
    let seeds: Vec<Complex64> = dense
        .iter()
        .map(|d| theta_from_energy(d.value, cfg.t()))
        .collect();

    // A polished root must stay this close (in energy) to its dense seed.
    let drift_tol = |e: Complex64| 1e-6 * (1.0 + e.norm());

    let mut pairs: Vec<Option<EigenPair>> = vec![None; dense.len()];
    for group in clusters(&seeds, opts.ep_guard_radius) {
        let near = group.len() > 1;
        let flags = PairFlags {
            near_coalescence: near,
            ..Default::default()
        };
        let usable = group
            .iter()
            .all(|&i| seeds[i].sin().norm() > secular::TRIVIAL_SIN_TOL);
        let polished: Option<Vec<(Complex64, f64)>> = if !usable {
            None
        } else if near {
            let cluster_seeds: Vec<_> = group.iter().map(|&i| seeds[i]).collect();
            cluster_newton(&cluster_seeds, cfg, s, opts)
        } else {
            match newton(seeds[group[0]], cfg, s, opts) {
                Polish::Converged(z, r) => Some(vec![(z, r)]),
                Polish::Failed => None,
            }
        };
        for (slot, &i) in group.iter().enumerate() {
            let ok = polished.as_ref().and_then(|p| {
                let (theta, res) = p[slot];
                let e = theta.cos() * (2.0 * cfg.t());
                ((e - dense[i].value).norm() <= drift_tol(dense[i].value)).then_some((theta, res))
            });
            pairs[i] = Some(match ok {
                Some((theta, res)) => build_pair(cfg, theta, res, &dense[i], flags, opts),
                None => dense_fallback(cfg, &dense[i], flags),
            });
        }
    }
    let mut pairs: Vec<EigenPair> = pairs.into_iter().map(|p| p.expect("every seed handled")).collect();

    // Two independently polished seeds collapsing onto one root means one
    // of them went astray; keep the dense value for the farther one.
    for i in 0..pairs.len() {
        for j in i + 1..pairs.len() {
            if pairs[i].flags.unpolished || pairs[j].flags.unpolished {
                continue;
            }
            let close = (pairs[i].theta - pairs[j].theta).norm() <= 1e-12 * (1.0 + pairs[i].theta.norm());
            let seeds_apart = (seeds[i] - seeds[j]).norm() >= opts.ep_guard_radius;
            if close && seeds_apart {
                let di = (pairs[i].energy - dense[i].value).norm();
                let dj = (pairs[j].energy - dense[j].value).norm();
                let worse = if di > dj { i } else { j };
                let flags = pairs[worse].flags;
                pairs[worse] = dense_fallback(cfg, &dense[worse], flags);
            }
        }
    }

    collapse_defective(cfg, &mut pairs, opts);

    pairs.sort_by(|a, b| {
        a.energy
            .re
            .total_cmp(&b.energy.re)
            .then(a.energy.im.total_cmp(&b.energy.im))
    });

    let energies: Vec<Complex64> = pairs.iter().map(|p| p.energy).collect();
    let conj: Vec<Complex64> = energies.iter().map(|z| z.conj()).collect();
    let (assign, _) = match_multisets(&energies, &conj);
    let conjugate_pairing = assign
        .iter()
        .enumerate()
        .filter(|&(i, &j)| i <= j)
        .map(|(i, &j)| (i, j))
        .collect();

    let mut spectrum = Spectrum {
        config: *cfg,
        pairs,
        conjugate_pairing,
    };
    let census = SpecialStateCensus::new(cfg.n(), cfg.k())?;
    classify_spectrum(&mut spectrum, &census, opts.classify)?;
    Ok(spectrum)
}

/// Checks a spectrum against its own invariants; returns the first
/// violation found.
pub fn check_spectrum(spectrum: &Spectrum, opts: &SolverOptions) -> Result<()> {
    let n = spectrum.config.n();
    if spectrum.pairs.len() != n {
        return Err(Error::Convergence(format!(
            "expected {n} eigenpairs, found {}",
            spectrum.pairs.len()
        )));
    }
    for (i, p) in spectrum.pairs.iter().enumerate() {
        if p.residuals.eigen > opts.eigen_tol {
            return Err(Error::Convergence(format!(
                "pair {i} (E = {}) has eigen residual {:e}",
                p.energy, p.residuals.eigen
            )));
        }
    }
    Ok(())
}
