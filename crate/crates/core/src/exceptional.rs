//! Exceptional points along the coupling `η`, their coalescence order, and
//! the perturbative and asymptotic spectra around them.
//!
//! An exceptional point is a simultaneous zero of `F` and `∂F/∂θ`. The
//! search sweeps `η`, seeds from near-collisions of dense eigenvalues and
//! refines each seed with damped Newton in the complex unknowns `(θ, s)`,
//! `s = (η/t)²`. A refined point is kept only if `s` comes out real and
//! non-negative.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::classify::PiFraction;
use crate::error::{Error, Result};
use crate::model::{build_hamiltonian, ChainConfig};
use crate::spectral::dense::dense_eigenvalues;
use crate::spectral::secular::{evaluate, SecularEval, TRIVIAL_SIN_TOL};
use crate::spectral::theta_from_energy;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EpResiduals {
    /// `|F(θ_c, η_c)|`.
    #[serde(rename = "F")]
    pub f: f64,
    /// `|∂F/∂θ(θ_c, η_c)|`.
    #[serde(rename = "dF")]
    pub df: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct EpFlags {
    /// Newton did not converge from a strong seed; `eta_c`/`theta_c` are the
    /// grid values.
    pub unresolved: bool,
    /// The coalescence happens between eigenvalues that are already complex.
    pub complex_sector: bool,
    /// Counting and log-slope order estimates disagree.
    pub ambiguous_order: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpRecord {
    pub eta_c: f64,
    pub theta_c: Complex64,
    pub energy_c: Complex64,
    /// Number of eigenvalues coalescing.
    pub order: usize,
    /// Fitted exponent of `|E(η_c + δ) - E_c| ∝ δ^{1/p}`.
    pub log_slope: Option<f64>,
    pub residuals: EpResiduals,
    pub flags: EpFlags,
}

/// A near-collision of eigenvalues that is not an exceptional point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Crossing {
    pub eta: f64,
    pub energy: Complex64,
    pub distance: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct EpSearch {
    /// Sorted by `(η_c, Re θ_c)`.
    pub points: Vec<EpRecord>,
    pub crossings: Vec<Crossing>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpOptions {
    /// Seeds are grid points where two eigenvalues come closer than this
    /// fraction of the spectral diameter (and closer than at neighboring
    /// grid points).
    pub seed_threshold: f64,
    /// Seeds closer than this fraction of the diameter are never discarded:
    /// if Newton fails they are kept as unresolved points.
    pub strict_threshold: f64,
    /// Largest scaled residual accepted for both conditions.
    pub tol: f64,
    pub max_newton_iters: usize,
    /// Radius (units of `t`) within which dense eigenvalues at `η_c` count as
    /// coalesced.
    pub collapse_radius: f64,
}

impl Default for EpOptions {
    fn default() -> Self {
        Self {
            seed_threshold: 0.05,
            strict_threshold: 1e-3,
            tol: 1e-10,
            max_newton_iters: 200,
            collapse_radius: 1e-3,
        }
    }
}

/// Default sweep: 2000 points on `[0, 5]`.
pub const DEFAULT_ETA_RANGE: (f64, f64) = (0.0, 5.0);
pub const DEFAULT_GRID: usize = 2000;

pub fn find_exceptional_points(cfg: &ChainConfig, eta_range: (f64, f64), grid: usize) -> Result<EpSearch> {
    find_exceptional_points_with(cfg, eta_range, grid, &EpOptions::default())
}

struct Seed {
    eta: f64,
    mid: Complex64,
    distance: f64,
}

pub fn find_exceptional_points_with(
    cfg: &ChainConfig,
    eta_range: (f64, f64),
    grid: usize,
    opts: &EpOptions,
) -> Result<EpSearch> {
    let (lo, hi) = eta_range;
    if !(lo >= 0.0) || !(hi > lo) || !hi.is_finite() {
        return Err(Error::Usage(format!("invalid eta range [{lo}, {hi}]")));
    }
    if grid < 100 {
        return Err(Error::Usage(format!("grid must have at least 100 points, got {grid}")));
    }
    let etas: Vec<f64> = (0..grid)
        .map(|i| lo + (hi - lo) * i as f64 / (grid - 1) as f64)
        .collect();
    let spectra: Vec<Vec<Complex64>> = etas
        .par_iter()
        .map(|&eta| dense_eigenvalues(&build_hamiltonian(&cfg.with_eta(eta)?)))
        .collect::<Result<_>>()?;

    let seeds = collect_seeds(&etas, &spectra, opts);
    let t = cfg.t();

    let outcomes: Vec<(Seed, Option<Refined>)> = seeds
        .into_par_iter()
        .map(|seed| {
            let rec = refine(cfg, &seed, (lo, hi), opts);
            (seed, rec)
        })
        .collect();

    let diameter = spectra
        .iter()
        .map(|s| diameter(s))
        .fold(0.0, f64::max)
        .max(t.abs());

    let mut points: Vec<EpRecord> = Vec::new();
    let mut crossings = Vec::new();
    for (seed, rec) in outcomes {
        match rec {
            Some(Refined::Point(r)) => points.push(r),
            Some(Refined::Crossing(c)) => crossings.push(c),
            None if seed.distance < opts.strict_threshold * diameter => {
                // A strong seed that does not refine to a double root of F is
                // either a plain crossing or an unresolved coalescence.
                if is_plain_crossing(cfg, &seed) {
                    crossings.push(Crossing {
                        eta: seed.eta,
                        energy: seed.mid,
                        distance: seed.distance,
                    });
                } else {
                    points.push(unresolved(cfg, &seed));
                }
            }
            None => {}
        }
    }

    points.sort_by(|a, b| {
        a.eta_c
            .total_cmp(&b.eta_c)
            .then(a.theta_c.re.total_cmp(&b.theta_c.re))
            .then(a.theta_c.im.total_cmp(&b.theta_c.im))
    });
    let mut deduped: Vec<EpRecord> = Vec::new();
    for p in points {
        let dup = deduped.iter().any(|q| {
            (q.eta_c - p.eta_c).abs() <= 1e-7 * (1.0 + p.eta_c)
                && (q.energy_c - p.energy_c).norm() <= 1e-6 * (1.0 + p.energy_c.norm())
        });
        if !dup {
            deduped.push(p);
        }
    }
    crossings.sort_by(|a, b| a.eta.total_cmp(&b.eta).then(a.energy.re.total_cmp(&b.energy.re)));
    crossings.dedup_by(|a, b| {
        (a.eta - b.eta).abs() <= 1e-7 * (1.0 + a.eta) && (a.energy - b.energy).norm() <= 1e-6 * (1.0 + a.energy.norm())
    });
    Ok(EpSearch {
        points: deduped,
        crossings,
    })
}

fn diameter(spec: &[Complex64]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in spec.iter().enumerate() {
        for b in &spec[i + 1..] {
            d = d.max((a - b).norm());
        }
    }
    d
}

/// Distance between the two eigenvalues of `spec` closest to `z`.
fn local_gap(spec: &[Complex64], z: Complex64) -> f64 {
    let mut best = [(f64::INFINITY, Complex64::new(0.0, 0.0)); 2];
    for &e in spec {
        let d = (e - z).norm();
        if d < best[0].0 {
            best[1] = best[0];
            best[0] = (d, e);
        } else if d < best[1].0 {
            best[1] = (d, e);
        }
    }
    (best[0].1 - best[1].1).norm()
}

fn collect_seeds(etas: &[f64], spectra: &[Vec<Complex64>], opts: &EpOptions) -> Vec<Seed> {
    let mut seeds = Vec::new();
    for (i, spec) in spectra.iter().enumerate() {
        let diam = diameter(spec).max(1e-300);
        let n = spec.len();
        let nearest: Vec<usize> = (0..n)
            .map(|a| {
                (0..n)
                    .filter(|&b| b != a)
                    .min_by(|&x, &y| (spec[a] - spec[x]).norm().total_cmp(&(spec[a] - spec[y]).norm()))
                    .unwrap_or(a)
            })
            .collect();
        for a in 0..n {
            let b = nearest[a];
            if b <= a || nearest[b] != a {
                continue;
            }
            let d = (spec[a] - spec[b]).norm();
            if d >= opts.seed_threshold * diam {
                continue;
            }
            let mid = (spec[a] + spec[b]) * 0.5;
            let left = (i > 0).then(|| local_gap(&spectra[i - 1], mid));
            let right = (i + 1 < spectra.len()).then(|| local_gap(&spectra[i + 1], mid));
            let is_min = left.map_or(true, |l| d < l) && right.map_or(true, |r| d <= r);
            if is_min {
                seeds.push(Seed {
                    eta: etas[i],
                    mid,
                    distance: d,
                });
            }
        }
    }
    seeds
}

fn eval_at(cfg: &ChainConfig, theta: Complex64, s: Complex64) -> SecularEval {
    evaluate(theta, cfg.n(), cfg.k(), s)
}

/// Scaled residuals of the two conditions at `(θ, s)`.
fn scaled_conditions(cfg: &ChainConfig, e: &SecularEval) -> (f64, f64) {
    let l = (cfg.n() + 1) as f64;
    (e.value.norm() / e.scale, e.d_theta.norm() / (l * e.scale))
}

/// Damped Newton on `{F = 0, ∂F/∂θ = 0}` in `(θ, s)`.
///
/// At an exceptional point of order three or more the Jacobian is singular
/// and Newton converges only linearly, with non-monotone residuals; small
/// steps are therefore taken undamped (damping only guards large steps) and
/// iteration stops when the step stops shrinking rather than when the (very
/// flat) residuals are small.
fn newton_ep(cfg: &ChainConfig, theta0: Complex64, s0: Complex64, opts: &EpOptions) -> Option<(Complex64, Complex64)> {
    let merit = |th: Complex64, s: Complex64| -> f64 {
        let e = eval_at(cfg, th, s);
        let (a, b) = scaled_conditions(cfg, &e);
        a * a + b * b
    };
    let (mut th, mut s) = (theta0, s0);
    let mut m = merit(th, s);
    let mut last_step = f64::INFINITY;
    let mut stalls = 0;
    for _ in 0..opts.max_newton_iters {
        if !m.is_finite() || th.sin().norm() <= TRIVIAL_SIN_TOL {
            return None;
        }
        let e = eval_at(cfg, th, s);
        // [F_θ  F_s ] [dθ]   [F  ]
        // [F_θθ F_θs] [ds] = [F_θ]
        let (a, b, c, d) = (e.d_theta, e.d_s, e.d2_theta, e.d_theta_s);
        let det = a * d - b * c;
        if det.norm() == 0.0 || !det.norm().is_finite() {
            break;
        }
        let dth = (e.value * d - b * e.d_theta) / det;
        let ds = (a * e.d_theta - c * e.value) / det;
        let step = dth.norm() + ds.norm() / (1.0 + s.norm());
        if !step.is_finite() {
            return None;
        }
        if step <= 1e-2 {
            th -= dth;
            s -= ds;
            m = merit(th, s);
        } else {
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let (nt, ns) = (th - dth * lambda, s - ds * lambda);
                let nm = merit(nt, ns);
                if nm.is_finite() && nm < m {
                    th = nt;
                    s = ns;
                    m = nm;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if step <= 1e-15 * (1.0 + th.norm()) {
            break;
        }
        if step >= last_step {
            stalls += 1;
            if stalls >= 3 {
                break;
            }
        } else {
            stalls = 0;
        }
        last_step = step;
    }
    let e = eval_at(cfg, th, s);
    let (r1, r2) = scaled_conditions(cfg, &e);
    (r1 <= opts.tol && r2 <= opts.tol).then_some((th, s))
}

enum Refined {
    Point(EpRecord),
    /// A double root of `F` where the eigenvalues separate linearly: two
    /// levels crossing (typically one of them an η-independent state), not
    /// a coalescence.
    Crossing(Crossing),
}

/// Spread of an `p`-fold eigenvalue under roundoff, `h` the norm scale.
fn roundoff_spread(h: f64, p: usize) -> f64 {
    10.0 * h * f64::EPSILON.powf(1.0 / p as f64)
}

fn refine(cfg: &ChainConfig, seed: &Seed, range: (f64, f64), opts: &EpOptions) -> Option<Refined> {
    let t = cfg.t();
    let theta0 = theta_from_energy(seed.mid, t);
    let s0 = Complex64::new((seed.eta / t).powi(2), 0.0);
    let (th, s) = newton_ep(cfg, theta0, s0, opts)?;
    if s.im.abs() > 1e-8 * s.norm().max(1.0) || s.re < -1e-12 {
        return None;
    }
    let eta_c = s.re.max(0.0).sqrt() * t.abs();
    let slack = 1e-9 * (1.0 + range.1);
    if eta_c < range.0 - slack || eta_c > range.1 + slack {
        return None;
    }
    let energy_c = th.cos() * (2.0 * t);
    // The refined point must belong to the collision that seeded it.
    let spacing = (range.1 - range.0).max(1e-12);
    if (energy_c - seed.mid).norm() > 2.0 * seed.distance + 0.1 * spacing.sqrt() + 1e-6 {
        return None;
    }
    if (eta_c - seed.eta).abs() > 0.05 * spacing + 1e-6 {
        return None;
    }
    let theta_c = theta_from_energy(energy_c, t);
    let at = cfg.with_eta(eta_c).ok()?;
    let s_real = Complex64::new(at.reduced_eta().powi(2), 0.0);
    let e = eval_at(&at, theta_c, s_real);
    let mut rec = EpRecord {
        eta_c,
        theta_c,
        energy_c,
        order: 2,
        log_slope: None,
        residuals: EpResiduals {
            f: e.value.norm(),
            df: e.d_theta.norm(),
        },
        flags: EpFlags::default(),
    };
    let est = estimate_ep_order_with(cfg, &rec, opts).ok()?;
    if est.count < 2 {
        // A double root of F without a matching collision in the matrix.
        return None;
    }
    if est.log_slope.is_some_and(|sl| (sl - 1.0).abs() <= 0.25) {
        return Some(Refined::Crossing(Crossing {
            eta: eta_c,
            energy: energy_c,
            distance: 0.0,
        }));
    }
    rec.order = est.count;
    rec.log_slope = est.log_slope;
    rec.flags.ambiguous_order = est.ambiguous;
    // E_c of a p-fold point is only determined to about h ε^{1/p}.
    let h = 2.0 * t.abs() + eta_c;
    rec.flags.complex_sector = energy_c.im.abs() > roundoff_spread(h, rec.order).max(1e-8 * energy_c.norm().max(1.0));
    Some(Refined::Point(rec))
}

/// Two eigenvalues that pass through each other linearly (rather than as a
/// square-root branch) are a crossing.
fn is_plain_crossing(cfg: &ChainConfig, seed: &Seed) -> bool {
    let Ok(c) = cfg.with_eta(seed.eta) else { return false };
    let Ok(spec) = dense_eigenvalues(&build_hamiltonian(&c)) else { return false };
    let gap0 = local_gap(&spec, seed.mid);
    let h = 1e-4 * (1.0 + seed.eta);
    let mut gaps = Vec::new();
    for eta in [seed.eta - h, seed.eta + h] {
        let Ok(c) = cfg.with_eta(eta.max(0.0)) else { return false };
        let Ok(spec) = dense_eigenvalues(&build_hamiltonian(&c)) else { return false };
        gaps.push(local_gap(&spec, seed.mid));
    }
    // Linear separation changes by O(h); a square-root branch by O(√h).
    gaps.iter().all(|g| (g - gap0).abs() < 100.0 * h)
}

fn unresolved(cfg: &ChainConfig, seed: &Seed) -> EpRecord {
    let theta_c = theta_from_energy(seed.mid, cfg.t());
    let s = Complex64::new((seed.eta / cfg.t()).powi(2), 0.0);
    let e = eval_at(cfg, theta_c, s);
    EpRecord {
        eta_c: seed.eta,
        theta_c,
        energy_c: seed.mid,
        order: 2,
        log_slope: None,
        residuals: EpResiduals {
            f: e.value.norm(),
            df: e.d_theta.norm(),
        },
        flags: EpFlags {
            unresolved: true,
            complex_sector: seed.mid.im.abs() > 1e-8 * seed.mid.norm().max(1.0),
            ambiguous_order: false,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderEstimate {
    /// Dense eigenvalues within the collapse radius of `E_c` at `η_c`.
    pub count: usize,
    /// Fitted exponent of `|E(η_c + δ) - E_c|` against `δ`.
    pub log_slope: Option<f64>,
    pub ambiguous: bool,
}

/// Coalescence order of `ep`, from the number of eigenvalues collapsed at
/// `η_c` and, independently, from the `δ^{1/p}` scaling just above `η_c`.
pub fn estimate_ep_order(cfg: &ChainConfig, ep: &EpRecord) -> Result<OrderEstimate> {
    estimate_ep_order_with(cfg, ep, &EpOptions::default())
}

pub fn estimate_ep_order_with(cfg: &ChainConfig, ep: &EpRecord, opts: &EpOptions) -> Result<OrderEstimate> {
    let radius = opts.collapse_radius * cfg.t().abs();
    let at = dense_eigenvalues(&build_hamiltonian(&cfg.with_eta(ep.eta_c)?))?;
    let count = at.iter().filter(|e| (*e - ep.energy_c).norm() <= radius).count();

    let p = count.max(2);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for delta in [1e-6, 1e-5, 1e-4] {
        let d = delta * ep.eta_c.max(1.0);
        let spec = dense_eigenvalues(&build_hamiltonian(&cfg.with_eta(ep.eta_c + d)?))?;
        let mut dist: Vec<f64> = spec.iter().map(|e| (e - ep.energy_c).norm()).collect();
        dist.sort_by(f64::total_cmp);
        let mean = dist[..p.min(dist.len())].iter().sum::<f64>() / p as f64;
        if mean > 0.0 {
            xs.push(d.ln());
            ys.push(mean.ln());
        }
    }
    let log_slope = (xs.len() >= 2).then(|| {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        sxy / sxx
    });
    let ambiguous = match log_slope {
        Some(sl) => count < 2 || (sl - 1.0 / p as f64).abs() > 0.25,
        None => true,
    };
    Ok(OrderEstimate {
        count,
        log_slope,
        ambiguous,
    })
}

fn check_near_threshold(n: usize, eta: f64) -> Result<()> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::Domain(format!("requires even N >= 2, got {n}")));
    }
    if !eta.is_finite() || (eta - 1.0).abs() > 0.5 {
        return Err(Error::Domain(format!("requires |eta - 1| <= 0.5, got {eta}")));
    }
    Ok(())
}

/// Leading-order branches `θ± = π/2 ± i√((η² - 1)/(2N))` of the end-to-end
/// chain (`k = 1`, even `N`) near its exceptional point at `η = 1`. Below
/// the threshold both are real.
pub fn ep_perturbation_theta(n: usize, eta: f64) -> Result<(Complex64, Complex64)> {
    check_near_threshold(n, eta)?;
    let y = Complex64::new((eta * eta - 1.0) / (2.0 * n as f64), 0.0).sqrt();
    let i = Complex64::i();
    let half_pi = Complex64::new(std::f64::consts::FRAC_PI_2, 0.0);
    Ok((half_pi + i * y, half_pi - i * y))
}

/// `E± = 2 cos θ±` of [`ep_perturbation_theta`] (units of `t`), i.e.
/// `∓2i sinh√((η² - 1)/(2N))` above the threshold.
pub fn ep_perturbation_energy(n: usize, eta: f64) -> Result<(Complex64, Complex64)> {
    let (p, m) = ep_perturbation_theta(n, eta)?;
    Ok((p.cos() * 2.0, m.cos() * 2.0))
}

/// `±i(η - 1/η)` (units of `t`): the two imaginary eigenvalues at strong
/// coupling, for any gain position.
pub fn asymptotic_imaginary_energies(eta: f64) -> Result<(Complex64, Complex64)> {
    if !(eta >= 5.0) || !eta.is_finite() {
        return Err(Error::Domain(format!("requires eta >= 5, got {eta}")));
    }
    let g = eta - 1.0 / eta;
    Ok((Complex64::new(0.0, g), Complex64::new(0.0, -g)))
}

/// Strong-coupling limits of the real pseudo-momenta: the inner chain
/// between the contacts, `rπ/(N - 2k + 1)` for `r = 1..N-2k`, and the two
/// outer segments, `rπ/k` for `r = 1..k-1`, each of which appears twice.
pub fn asymptotic_real_thetas(n: usize, k: usize) -> Result<(Vec<PiFraction>, Vec<PiFraction>)> {
    ChainConfig::unit(n, k, 0.0)?;
    let inner_den = (n + 1 - 2 * k) as u64;
    let inner = (1..(n + 1 - 2 * k) as u64)
        .map(|r| PiFraction::new(r, inner_den))
        .collect::<Result<Vec<_>>>()?;
    let double = (1..k as u64)
        .map(|r| PiFraction::new(r, k as u64))
        .collect::<Result<Vec<_>>>()?;
    Ok((inner, double))
}
