//! Opaque and transparent states.
//!
//! Both families have real pseudo-momenta `θ = rπ/M` that solve the secular
//! equation for every `η`. Opaque states (`M` divides `N+1` and `k`) have
//! nodes at both contacts; transparent states (`M` divides `N+1` and `2k`
//! but not `k`) couple to both contacts with equal weight.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{EigenPair, Spectrum, StateTag};

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// A pseudo-momentum `θ = π · num / den` kept as a reduced fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "[u64; 2]", try_from = "[u64; 2]")]
pub struct PiFraction {
    num: u64,
    den: u64,
}

impl PiFraction {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::Usage("fraction with zero denominator".into()));
        }
        let g = gcd(num, den).max(1);
        Ok(Self { num: num / g, den: den / g })
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    /// `θ` in radians.
    pub fn theta(&self) -> f64 {
        PI * self.num as f64 / self.den as f64
    }
}

impl Ord for PiFraction {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl PartialOrd for PiFraction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<PiFraction> for [u64; 2] {
    fn from(f: PiFraction) -> Self {
        [f.num, f.den]
    }
}

impl TryFrom<[u64; 2]> for PiFraction {
    type Error = Error;
    fn try_from(v: [u64; 2]) -> Result<Self> {
        PiFraction::new(v[0], v[1])
    }
}

fn check_nk(n: usize, k: usize) -> Result<()> {
    if n < 2 || k < 1 || k > n / 2 {
        return Err(Error::InvalidConfig(format!(
            "need N >= 2 and 1 <= k <= N/2, got N = {n}, k = {k}"
        )));
    }
    Ok(())
}

/// `{ rπ/g : r = 1..g-1 }`, reduced and sorted.
fn grid(g: u64) -> BTreeSet<PiFraction> {
    (1..g)
        .map(|r| PiFraction::new(r, g).expect("g > 0"))
        .collect()
}

fn divisors(x: u64) -> impl Iterator<Item = u64> {
    (1..=x).filter(move |d| x % d == 0)
}

/// Opaque pseudo-momenta, `{ rπ/g }` with `g = gcd(N+1, k)`.
pub fn opaque_thetas(n: usize, k: usize) -> Vec<PiFraction> {
    let g = gcd((n + 1) as u64, k as u64);
    grid(g).into_iter().collect()
}

/// Transparent pseudo-momenta, `{ rπ/h }` with `h = gcd(N+1, 2k)`, minus the
/// opaque ones.
pub fn transparent_thetas(n: usize, k: usize) -> Vec<PiFraction> {
    let h = gcd((n + 1) as u64, 2 * k as u64);
    let opaque = grid(gcd((n + 1) as u64, k as u64));
    grid(h).difference(&opaque).copied().collect()
}

/// Reference definition: union over every `M > 1` dividing both `N+1` and
/// `k` of `{ rπ/M }`.
pub fn opaque_thetas_by_divisors(n: usize, k: usize) -> Vec<PiFraction> {
    let (np1, k) = ((n + 1) as u64, k as u64);
    let mut out = BTreeSet::new();
    for m in divisors(np1).filter(|&m| m > 1 && k % m == 0) {
        out.extend(grid(m));
    }
    out.into_iter().collect()
}

/// Reference definition: union over every `A > 1` dividing `N+1` and
/// `N-2k+1` but not `k` of `{ rπ/A }`, minus the opaque set.
pub fn transparent_thetas_by_divisors(n: usize, k: usize) -> Vec<PiFraction> {
    let (np1, inner, kk) = ((n + 1) as u64, (n + 1 - 2 * k) as u64, k as u64);
    let mut out = BTreeSet::new();
    for a in divisors(np1).filter(|&a| a > 1 && inner % a == 0 && kk % a != 0) {
        out.extend(grid(a));
    }
    let opaque: BTreeSet<_> = opaque_thetas_by_divisors(n, k).into_iter().collect();
    out.difference(&opaque).copied().collect()
}

/// `(n_opaque, n_transparent)`.
pub fn count_special_states(n: usize, k: usize) -> (usize, usize) {
    let g = gcd((n + 1) as u64, k as u64) as usize;
    let h = gcd((n + 1) as u64, 2 * k as u64) as usize;
    (g - 1, h - g)
}

/// The opaque and transparent pseudo-momenta of one `(N, k)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecialStateCensus {
    #[serde(rename = "N")]
    pub n: usize,
    pub k: usize,
    #[serde(rename = "opaque")]
    pub opaque_thetas: Vec<PiFraction>,
    #[serde(rename = "transparent")]
    pub transparent_thetas: Vec<PiFraction>,
}

impl SpecialStateCensus {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        check_nk(n, k)?;
        Ok(Self {
            n,
            k,
            opaque_thetas: opaque_thetas(n, k),
            transparent_thetas: transparent_thetas(n, k),
        })
    }

    pub fn n_opaque(&self) -> usize {
        self.opaque_thetas.len()
    }

    pub fn n_transparent(&self) -> usize {
        self.transparent_thetas.len()
    }

    /// Census fraction within `tol` of `theta`, with its family.
    pub fn lookup(&self, theta: Complex64, tol: f64) -> Option<(PiFraction, StateTag)> {
        let near = |f: &&PiFraction| (theta - f.theta()).norm() <= tol;
        if let Some(f) = self.opaque_thetas.iter().find(near) {
            return Some((*f, StateTag::Opaque));
        }
        self.transparent_thetas
            .iter()
            .find(near)
            .map(|f| (*f, StateTag::Transparent))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyTolerance {
    /// Absolute distance between a solved `θ` and a census fraction.
    pub theta: f64,
    /// Contact amplitude `|u_k|`, `|u_k'|` (unit-normed vector) below which
    /// the contact counts as a node.
    pub amplitude: f64,
}

impl Default for ClassifyTolerance {
    fn default() -> Self {
        Self {
            theta: 1e-8,
            amplitude: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub tag: StateTag,
    /// The `θ` match and the contact amplitudes disagree.
    pub mismatch: bool,
}

fn contact_amplitudes(pair: &EigenPair, census: &SpecialStateCensus) -> (f64, f64) {
    let norm = pair.vector.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let gain = pair.vector[census.k - 1].norm() / norm;
    let loss = pair.vector[census.n - census.k].norm() / norm;
    (gain, loss)
}

fn decide(matched: Option<StateTag>, gain: f64, loss: f64, amp_tol: f64) -> Classification {
    let nodes = gain < amp_tol && loss < amp_tol;
    let coupled = gain > amp_tol && loss > amp_tol;
    match matched {
        Some(StateTag::Opaque) if nodes => Classification { tag: StateTag::Opaque, mismatch: false },
        Some(StateTag::Transparent) if coupled => Classification { tag: StateTag::Transparent, mismatch: false },
        Some(_) => Classification { tag: StateTag::Generic, mismatch: true },
        None => Classification { tag: StateTag::Generic, mismatch: nodes },
    }
}

/// Tags one eigenpair against the census of its chain.
pub fn classify_eigenpair(
    pair: &EigenPair,
    census: &SpecialStateCensus,
    tol: ClassifyTolerance,
) -> Result<Classification> {
    if pair.vector.len() != census.n {
        return Err(Error::Usage(format!(
            "eigenvector has {} components but the census is for N = {}",
            pair.vector.len(),
            census.n
        )));
    }
    let (gain, loss) = contact_amplitudes(pair, census);
    let matched = census.lookup(pair.theta, tol.theta).map(|(_, tag)| tag);
    Ok(decide(matched, gain, loss, tol.amplitude))
}

/// Tags every pair of a spectrum in place. Each census fraction is claimed
/// by the single closest pair only, so a nearby `η`-dependent root does not
/// get mistaken for the special state.
pub fn classify_spectrum(
    spectrum: &mut Spectrum,
    census: &SpecialStateCensus,
    tol: ClassifyTolerance,
) -> Result<()> {
    if spectrum.config.n() != census.n || spectrum.config.k() != census.k {
        return Err(Error::Usage(format!(
            "census for (N, k) = ({}, {}) applied to chain ({}, {})",
            census.n,
            census.k,
            spectrum.config.n(),
            spectrum.config.k()
        )));
    }
    let mut claim: Vec<Option<StateTag>> = vec![None; spectrum.pairs.len()];
    let families = census
        .opaque_thetas
        .iter()
        .map(|f| (f, StateTag::Opaque))
        .chain(census.transparent_thetas.iter().map(|f| (f, StateTag::Transparent)));
    for (frac, tag) in families {
        let best = spectrum
            .pairs
            .iter()
            .enumerate()
            .map(|(i, p)| (i, (p.theta - frac.theta()).norm()))
            .filter(|&(_, d)| d <= tol.theta)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((i, _)) = best {
            claim[i] = Some(tag);
        }
    }
    for (pair, matched) in spectrum.pairs.iter_mut().zip(claim) {
        let (gain, loss) = contact_amplitudes(pair, census);
        let c = decide(matched, gain, loss, tol.amplitude);
        pair.tag = c.tag;
        pair.flags.classification_mismatch = c.mismatch;
    }
    Ok(())
}
