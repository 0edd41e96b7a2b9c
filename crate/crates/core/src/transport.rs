//! Probability fluxes, the continuity equation with source and sink, the
//! transport coefficient and a fixed-step Schrödinger integrator.
//!
//! Time evolution follows `i ċ = H c` (ħ = 1). An eigenstate therefore
//! evolves as `c(t) = e^{-iEt} u` and its norm squared as `e^{2 Im E t}`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ChainConfig;
use crate::spectral::dense::dense_eigenvalues;
use crate::spectral::{apply_hamiltonian, EigenPair, Spectrum, StateTag};
use crate::model::build_hamiltonian;

/// Default amplitude below which a contact is treated as a node, relative
/// to the vector norm.
pub const DEFAULT_AMPLITUDE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveState {
    pub c: Vec<Complex64>,
    pub time: f64,
}

impl WaveState {
    pub fn new(c: Vec<Complex64>, time: f64) -> Self {
        Self { c, time }
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    /// `ρ_nn = |c_n|²`.
    pub fn densities(&self) -> Vec<f64> {
        self.c.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c.iter().map(|z| z.norm_sqr()).sum()
    }

    fn check_len(&self, cfg: &ChainConfig) -> Result<()> {
        if self.c.len() != cfg.n() {
            return Err(Error::Usage(format!(
                "state has {} sites, configuration has N = {}",
                self.c.len(),
                cfg.n()
            )));
        }
        Ok(())
    }
}

/// Fluxes `J_1..J_{N+1}` (stored at indices `0..=N`) together with the
/// source and sink strengths `2η|c_k|²` and `2η|c_{k'}|²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluxProfile {
    #[serde(rename = "J")]
    pub j: Vec<f64>,
    pub source: f64,
    pub sink: f64,
}

impl FluxProfile {
    /// `J_n` for 1-based `n` in `1..=N+1`.
    pub fn at(&self, n: usize) -> f64 {
        self.j[n - 1]
    }
}

/// `J_n = -2 Im(c_n conj(c_{n-1}))`, the current from site `n-1` to site
/// `n` in units of the hopping. `J_1 = J_{N+1} = 0`.
pub fn local_flux(state: &WaveState, n: usize) -> Result<f64> {
    let len = state.len();
    if n == 0 || n > len + 1 {
        return Err(Error::Usage(format!("flux index {n} outside 1..={}", len + 1)));
    }
    if n == 1 || n == len + 1 {
        return Ok(0.0);
    }
    Ok(-2.0 * (state.c[n - 1] * state.c[n - 2].conj()).im)
}

pub fn flux_profile(state: &WaveState, cfg: &ChainConfig) -> Result<FluxProfile> {
    state.check_len(cfg)?;
    let n = cfg.n();
    let j = (1..=n + 1)
        .map(|i| local_flux(state, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(FluxProfile {
        j,
        source: 2.0 * cfg.eta() * state.c[cfg.k() - 1].norm_sqr(),
        sink: 2.0 * cfg.eta() * state.c[cfg.loss_site() - 1].norm_sqr(),
    })
}

/// `∂ρ_nn/∂t` from the right-hand side of the Schrödinger equation:
/// `2 Re(conj(c_n) ċ_n)` with `ċ = -iHc`.
pub fn density_rate(state: &WaveState, cfg: &ChainConfig) -> Result<Vec<f64>> {
    state.check_len(cfg)?;
    let hc = apply_hamiltonian(cfg, &state.c);
    Ok(state
        .c
        .iter()
        .zip(&hc)
        .map(|(c, h)| 2.0 * (c.conj() * h).im)
        .collect())
}

/// Per-site residual of
/// `∂ρ_nn/∂t + t(J_{n+1} - J_n) - 2η|c_k|²δ_{nk} + 2η|c_{k'}|²δ_{nk'}`,
/// zero up to rounding for every state.
pub fn continuity_residual(state: &WaveState, cfg: &ChainConfig) -> Result<Vec<f64>> {
    let rate = density_rate(state, cfg)?;
    let flux = flux_profile(state, cfg)?;
    let (k, kp) = (cfg.k(), cfg.loss_site());
    Ok((1..=cfg.n())
        .map(|n| {
            let mut r = rate[n - 1] + cfg.t() * (flux.at(n + 1) - flux.at(n));
            if n == k {
                r -= flux.source;
            }
            if n == kp {
                r += flux.sink;
            }
            r
        })
        .collect())
}

pub fn max_continuity_residual(state: &WaveState, cfg: &ChainConfig) -> Result<f64> {
    Ok(continuity_residual(state, cfg)?
        .into_iter()
        .fold(0.0, |m, r| m.max(r.abs())))
}

/// Transport coefficient `ξ = |u_{k'}|² / |u_k|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Xi {
    Value(f64),
    /// Both contacts are nodes (opaque state).
    Undefined,
    /// Exactly one contact amplitude is below tolerance. The ratio is still
    /// reported (it may be `0` or `inf`); strongly localized broken-phase
    /// states legitimately land here at large coupling.
    OneSided(f64),
}

impl Xi {
    pub fn value(&self) -> Option<f64> {
        match *self {
            Xi::Value(v) | Xi::OneSided(v) => Some(v),
            Xi::Undefined => None,
        }
    }

    pub fn is_one_sided(&self) -> bool {
        matches!(self, Xi::OneSided(_))
    }
}

impl Serialize for Xi {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.value() {
            Some(v) => s.serialize_f64(v),
            None => s.serialize_none(),
        }
    }
}

pub fn transport_coefficient(vector: &[Complex64], cfg: &ChainConfig) -> Result<Xi> {
    transport_coefficient_with_tol(vector, cfg, DEFAULT_AMPLITUDE_TOL)
}

pub fn transport_coefficient_with_tol(
    vector: &[Complex64],
    cfg: &ChainConfig,
    amplitude_tol: f64,
) -> Result<Xi> {
    if vector.len() != cfg.n() {
        return Err(Error::Usage(format!(
            "vector has {} components, configuration has N = {}",
            vector.len(),
            cfg.n()
        )));
    }
    let norm = vector.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Domain("vector has zero or non-finite norm".into()));
    }
    let gain = vector[cfg.k() - 1].norm() / norm;
    let loss = vector[cfg.loss_site() - 1].norm() / norm;
    let (gain_zero, loss_zero) = (gain < amplitude_tol, loss < amplitude_tol);
    let ratio = (loss / gain).powi(2);
    Ok(match (gain_zero, loss_zero) {
        (true, true) => Xi::Undefined,
        (false, false) => Xi::Value(ratio),
        _ => Xi::OneSided(ratio),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TransportRecord {
    pub theta: Complex64,
    pub energy: Complex64,
    pub xi: Xi,
    pub tag: StateTag,
    /// `|u_k|` of the unit-normed vector.
    pub gain_amplitude: f64,
    /// `|u_{k'}|` of the unit-normed vector.
    pub loss_amplitude: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransportReport {
    pub config: ChainConfig,
    pub records: Vec<TransportRecord>,
}

/// `ξ` for every eigenpair of a solved spectrum, undefined exactly for the
/// opaque states.
pub fn transport_report(spectrum: &Spectrum, amplitude_tol: f64) -> Result<TransportReport> {
    let cfg = &spectrum.config;
    let records = spectrum
        .pairs
        .iter()
        .map(|p| {
            let xi = if p.tag == StateTag::Opaque {
                Xi::Undefined
            } else {
                match transport_coefficient_with_tol(&p.vector, cfg, amplitude_tol)? {
                    // Not in the census, so not a decoupled state: keep the ratio.
                    Xi::Undefined => {
                        let g = p.vector[cfg.k() - 1].norm();
                        let l = p.vector[cfg.loss_site() - 1].norm();
                        Xi::OneSided((l / g).powi(2))
                    }
                    xi => xi,
                }
            };
            Ok(TransportRecord {
                theta: p.theta,
                energy: p.energy,
                xi,
                tag: p.tag,
                gain_amplitude: p.vector[cfg.k() - 1].norm(),
                loss_amplitude: p.vector[cfg.loss_site() - 1].norm(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TransportReport {
        config: *cfg,
        records,
    })
}

/// `(e^{s}, e^{-s})` with `s = √(N(η²-1)/2)`: the transport coefficients of
/// the pair emerging from the end-to-end exceptional point, to leading
/// order in `η - 1`. The linear form `1 ± s` is the same expansion.
pub fn xi_perturbative(n: usize, eta: f64) -> Result<(f64, f64)> {
    if !(eta > 1.0) {
        return Err(Error::Domain(format!("requires eta > 1, got {eta}")));
    }
    if n < 2 || n % 2 != 0 {
        return Err(Error::Domain(format!("requires even N >= 2, got {n}")));
    }
    let s = (n as f64 * (eta * eta - 1.0) / 2.0).sqrt();
    Ok((s.exp(), (-s).exp()))
}

/// `(4η^{2(N-1)}, 1/(4η^{2(N-1)}))`: transport coefficients of the two
/// imaginary-energy states at strong coupling.
pub fn xi_asymptotic(n: usize, eta: f64) -> Result<(f64, f64)> {
    if !(eta >= 10.0) {
        return Err(Error::Domain(format!("requires eta >= 10, got {eta}")));
    }
    if n < 2 {
        return Err(Error::Domain(format!("requires N >= 2, got {n}")));
    }
    let big = 4.0 * eta.powi(2 * (n as i32 - 1));
    Ok((big, big.recip()))
}

/// Default integration step, `1e-3 / max(1, η)`.
pub fn default_dt(cfg: &ChainConfig) -> f64 {
    1e-3 / cfg.eta().max(1.0)
}

/// Classical fixed-step RK4 for `ċ = -iHc`, returning the state at
/// `t = 0, dt, 2dt, …, t_final` (the last step is shortened if `t_final` is
/// not a multiple of `dt`). Norm is not renormalized.
pub fn evolve(initial: &WaveState, cfg: &ChainConfig, t_final: f64, dt: f64) -> Result<Vec<WaveState>> {
    evolve_sampled(initial, cfg, t_final, dt, 1)
}

/// [`evolve`] keeping every `stride`-th step (and always the final state).
pub fn evolve_sampled(
    initial: &WaveState,
    cfg: &ChainConfig,
    t_final: f64,
    dt: f64,
    stride: usize,
) -> Result<Vec<WaveState>> {
    let mut out = Vec::new();
    evolve_with(initial, cfg, t_final, dt, |i, last, s| {
        if i % stride.max(1) == 0 || last {
            out.push(s.clone());
        }
    })?;
    Ok(out)
}

/// Runs the integrator, handing `(step index, is_last, state)` to `visit`
/// for the initial state and after every step.
pub fn evolve_with<F: FnMut(usize, bool, &WaveState)>(
    initial: &WaveState,
    cfg: &ChainConfig,
    t_final: f64,
    dt: f64,
    mut visit: F,
) -> Result<()> {
    initial.check_len(cfg)?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Usage(format!("dt must be positive, got {dt}")));
    }
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(Error::Usage(format!("t_final must be non-negative, got {t_final}")));
    }
    let gamma = dense_eigenvalues(&build_hamiltonian(cfg))?
        .iter()
        .map(|e| e.im)
        .fold(0.0, f64::max);
    let norm0 = initial.norm_sqr().sqrt();
    if norm0 == 0.0 || !norm0.is_finite() {
        return Err(Error::Domain("initial state has zero or non-finite norm".into()));
    }

    let steps = (t_final / dt - 1e-9).ceil().max(0.0) as usize;
    let mut state = WaveState::new(initial.c.clone(), initial.time);
    visit(0, steps == 0, &state);
    let mut c = state.c.clone();
    for i in 1..=steps {
        let t_i = if i == steps { t_final } else { i as f64 * dt };
        let h = t_i - (i - 1) as f64 * dt;
        rk4_step(cfg, &mut c, h);
        let ratio = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() / norm0;
        let bound = 10.0 * (gamma * t_i).exp();
        if !ratio.is_finite() || ratio > bound {
            return Err(Error::StepSize {
                time: t_i,
                ratio,
                bound,
            });
        }
        state.c.clone_from(&c);
        state.time = initial.time + t_i;
        visit(i, i == steps, &state);
    }
    Ok(())
}

fn rk4_step(cfg: &ChainConfig, c: &mut [Complex64], h: f64) {
    let mi = Complex64::new(0.0, -1.0);
    let deriv = |x: &[Complex64]| -> Vec<Complex64> {
        apply_hamiltonian(cfg, x).into_iter().map(|z| mi * z).collect()
    };
    let axpy = |x: &[Complex64], k: &[Complex64], a: f64| -> Vec<Complex64> {
        x.iter().zip(k).map(|(x, k)| x + k * a).collect()
    };
    let k1 = deriv(c);
    let k2 = deriv(&axpy(c, &k1, h / 2.0));
    let k3 = deriv(&axpy(c, &k2, h / 2.0));
    let k4 = deriv(&axpy(c, &k3, h));
    for (i, z) in c.iter_mut().enumerate() {
        *z += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
    }
}

/// `|c_{k'}(t)|² / |c_k(t)|²` for each state; `None` where `c_k = 0`.
pub fn xi_series(trajectory: &[WaveState], cfg: &ChainConfig) -> Vec<Option<f64>> {
    trajectory
        .iter()
        .map(|s| {
            let g = s.c[cfg.k() - 1].norm_sqr();
            (g > 0.0).then(|| s.c[cfg.loss_site() - 1].norm_sqr() / g)
        })
        .collect()
}

/// Evolves the eigenstate of `pair` to `t_final` with the default step and
/// returns `max_t |ξ(t) - ξ(0)|`.
pub fn xi_time_independence_check(pair: &EigenPair, cfg: &ChainConfig, t_final: f64) -> Result<f64> {
    if pair.tag == StateTag::Opaque {
        return Err(Error::Domain("ξ is undefined for an opaque state".into()));
    }
    let xi0 = transport_coefficient_with_tol(&pair.vector, cfg, 0.0)?
        .value()
        .ok_or_else(|| Error::Domain("ξ is undefined for this state".into()))?;
    let (k, kp) = (cfg.k() - 1, cfg.loss_site() - 1);
    let mut drift: f64 = 0.0;
    let initial = WaveState::new(pair.vector.clone(), 0.0);
    evolve_with(&initial, cfg, t_final, default_dt(cfg), |_, _, s| {
        let xi = s.c[kp].norm_sqr() / s.c[k].norm_sqr();
        drift = drift.max((xi - xi0).abs());
    })?;
    Ok(drift)
}
