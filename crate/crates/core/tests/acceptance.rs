//! Acceptance checks. Runs without the libtest harness so that every check
//! prints exactly one PASS/FAIL line; the process fails if any check fails.

use std::f64::consts::FRAC_PI_2;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};

use ptchain::classify::{count_special_states, SpecialStateCensus};
use ptchain::exceptional::{
    asymptotic_imaginary_energies, ep_perturbation_energy, find_exceptional_points, DEFAULT_ETA_RANGE,
    DEFAULT_GRID,
};
use ptchain::matching::match_multisets;
use ptchain::spectral::{
    dense_eigenvalues, eigen_residual, general_eigenvalue, general_eigenvector, general_scaled_residual,
    secular_residual, solve_spectrum, GeneralTridiag, SolverOptions, Spectrum, StateTag,
};
use ptchain::transport::{
    default_dt, evolve, max_continuity_residual, transport_coefficient, xi_time_independence_check, WaveState,
};
use ptchain::{build_hamiltonian, ChainConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn spectrum(n: usize, k: usize, eta: f64) -> Spectrum {
    solve_spectrum(&ChainConfig::unit(n, k, eta).unwrap(), &SolverOptions::default()).unwrap()
}

fn grid() -> Vec<(usize, usize)> {
    (4..=30).flat_map(|n| (1..=n / 2).map(move |k| (n, k))).collect()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ep_end_to_end() -> Outcome {
    let cfg = ChainConfig::unit(10, 1, 0.0).unwrap();
    let r = find_exceptional_points(&cfg, DEFAULT_ETA_RANGE, DEFAULT_GRID).unwrap();
    let ok = r.points.len() == 1
        && (r.points[0].eta_c - 1.0).abs() <= 1e-6
        && (r.points[0].theta_c - c(FRAC_PI_2, 0.0)).norm() <= 1e-6;
    let found: Vec<String> = r
        .points
        .iter()
        .map(|p| format!("eta_c={:.9} theta_c={:.9}", p.eta_c, p.theta_c))
        .collect();
    outcome(ok, format!("{} EP(s): {}", r.points.len(), found.join("; ")))
}

fn ep_quintuple() -> Outcome {
    let cfg = ChainConfig::unit(10, 5, 0.0).unwrap();
    let r = find_exceptional_points(&cfg, DEFAULT_ETA_RANGE, DEFAULT_GRID).unwrap();
    let worst = r.points.iter().map(|p| (p.eta_c - 1.0).abs()).fold(0.0, f64::max);
    outcome(
        r.points.len() == 5 && worst <= 1e-4,
        format!("{} EPs, max |eta_c - 1| = {worst:.2e}", r.points.len()),
    )
}

fn census_counts() -> Outcome {
    let cases = [
        ((23, 8), (7, 0)),
        ((23, 6), (5, 6)),
        ((23, 2), (1, 2)),
        ((23, 1), (0, 1)),
        ((839, 280), (279, 0)),
        ((839, 210), (209, 210)),
    ];
    let mut bad = Vec::new();
    for ((n, k), want) in cases {
        let got = count_special_states(n, k);
        if got != want {
            bad.push(format!("N={n} k={k}: {got:?} != {want:?}"));
        }
    }
    for k in 1..=419 {
        let got = count_special_states(838, k);
        if got != (0, 0) {
            bad.push(format!("N=838 k={k}: {got:?}"));
        }
    }
    outcome(bad.is_empty(), if bad.is_empty() { "all counts exact".to_string() } else { bad.join("; ") })
}

fn special_states_eta_independent() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for k in 1..=11 {
        let census = SpecialStateCensus::new(23, k).unwrap();
        for f in census.opaque_thetas.iter().chain(&census.transparent_thetas) {
            for eta in [0.0, 0.7, 1.0, 3.1, 10.0] {
                let cfg = ChainConfig::unit(23, k, eta).unwrap();
                worst = worst.max(secular_residual(c(f.theta(), 0.0), &cfg).unwrap().norm());
                checked += 1;
            }
        }
    }
    outcome(worst < 1e-10, format!("{checked} evaluations, max |F| = {worst:.2e}"))
}

fn unbroken_transport() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut states = 0;
    for (n, k) in grid() {
        for eta in [0.1, 0.5, 0.9] {
            let s = spectrum(n, k, eta);
            for p in &s.pairs {
                if p.energy.im.abs() > 1e-9 || p.tag == StateTag::Opaque {
                    continue;
                }
                let xi = transport_coefficient(&p.vector, &s.config).unwrap();
                let dev = xi.value().map_or(f64::INFINITY, |x| (x - 1.0).abs());
                worst = worst.max(dev);
                states += 1;
            }
        }
    }
    outcome(worst <= 1e-9, format!("{states} states, max |xi - 1| = {worst:.2e}"))
}

fn conjugate_reciprocity() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for (n, k) in grid() {
        for eta in [0.1, 0.5, 0.9, 1.5, 2.0, 5.0] {
            let s = spectrum(n, k, eta);
            for &(i, j) in &s.conjugate_pairing {
                if i == j || s.pairs[i].tag == StateTag::Opaque {
                    continue;
                }
                let a = transport_coefficient(&s.pairs[i].vector, &s.config).unwrap();
                let b = transport_coefficient(&s.pairs[j].vector, &s.config).unwrap();
                let dev = match (a.value(), b.value()) {
                    (Some(a), Some(b)) => (a * b - 1.0).abs(),
                    _ => f64::INFINITY,
                };
                worst = worst.max(dev);
                pairs += 1;
            }
        }
    }
    outcome(worst <= 1e-8, format!("{pairs} pairs, max |xi_E xi_E* - 1| = {worst:.2e}"))
}

fn perturbative_ep() -> Outcome {
    let mut errs = Vec::new();
    for eta in [1.01, 1.02, 1.05, 1.1] {
        let s = spectrum(10, 1, eta);
        let (e_plus, e_minus) = ep_perturbation_energy(10, eta).unwrap();
        let solver: Vec<Complex64> = {
            let mut v: Vec<Complex64> = s.pairs.iter().map(|p| p.energy).filter(|e| e.im.abs() > 1e-9).collect();
            v.sort_by(|a, b| a.im.total_cmp(&b.im));
            v
        };
        let (_, worst) = match_multisets(&solver, &[e_plus, e_minus]);
        errs.push((eta, worst / solver[0].norm()));
    }
    let monotone = errs.windows(2).all(|w| w[0].1 < w[1].1);
    let at_105 = errs.iter().find(|e| e.0 == 1.05).unwrap().1;
    let listing: Vec<String> = errs.iter().map(|(e, r)| format!("{e}: {:.2}%", 100.0 * r)).collect();
    outcome(
        monotone && at_105 <= 0.02,
        format!("relative error {}; monotone = {monotone}", listing.join(", ")),
    )
}

fn large_eta_asymptotics() -> Outcome {
    let (want, _) = asymptotic_imaginary_energies(100.0).unwrap();
    let mut worst: f64 = 0.0;
    for k in 1..=5 {
        let s = spectrum(10, k, 100.0);
        let mut es: Vec<Complex64> = s.pairs.iter().map(|p| p.energy).collect();
        es.sort_by(|a, b| b.im.abs().total_cmp(&a.im.abs()));
        let (_, d) = match_multisets(&es[..2], &[want, want.conj()]);
        worst = worst.max(d / want.norm());
    }
    outcome(worst <= 1e-3, format!("max relative deviation {worst:.2e} over k = 1..5"))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = rand::rngs::StdRng::seed_from_u64(2024);
    let (mut worst_e, mut worst_r): (f64, f64) = (0.0, 0.0);
    let mut fallbacks = 0;
    for _ in 0..200 {
        let n = rng.gen_range(2..=30);
        let k = rng.gen_range(1..=n / 2);
        let eta = rng.gen_range(0.0..5.0);
        let cfg = ChainConfig::unit(n, k, eta).unwrap();
        let s = solve_spectrum(&cfg, &SolverOptions::default()).unwrap();
        let dense = dense_eigenvalues(&build_hamiltonian(&cfg)).unwrap();
        let (_, d) = match_multisets(&s.energies(), &dense);
        worst_e = worst_e.max(d);
        for p in &s.pairs {
            if p.flags.unpolished || p.flags.dense_vector {
                fallbacks += 1;
            }
            worst_r = worst_r.max(p.residuals.eigen);
        }
    }
    outcome(
        worst_e <= 1e-9 && worst_r <= 1e-9 && fallbacks == 0,
        format!("max energy mismatch {worst_e:.2e}, max eigen residual {worst_r:.2e}, dense fallbacks {fallbacks}"),
    )
}

fn general_tridiagonal() -> Outcome {
    let mut rng = rand::rngs::StdRng::seed_from_u64(77);
    let mut cplx = |lo: f64, hi: f64| Complex64::from_polar(rng.gen_range(lo..hi), rng.gen_range(0.0..std::f64::consts::TAU));
    let (mut worst_f, mut worst_v): (f64, f64) = (0.0, 0.0);
    let mut count = 0;
    let mut rng2 = rand::rngs::StdRng::seed_from_u64(78);
    for _ in 0..50 {
        let n = rng2.gen_range(2..=10);
        let k = rng2.gen_range(1..=n / 2);
        let m = GeneralTridiag::new(cplx(0.5, 2.0), cplx(0.0, 2.0), cplx(0.5, 2.0), cplx(0.0, 2.0), cplx(0.0, 2.0), n, k)
            .unwrap();
        let mat = m.matrix();
        for lambda in dense_eigenvalues(&mat).unwrap() {
            let theta = m.theta_for(lambda);
            worst_f = worst_f.max(general_scaled_residual(theta, &m).unwrap());
            worst_f = worst_f.max((general_eigenvalue(theta, &m) - lambda).norm());
            let u = general_eigenvector(theta, &m).unwrap();
            worst_v = worst_v.max(eigen_residual(&mat, lambda, &u));
            count += 1;
        }
    }
    outcome(
        worst_f <= 1e-9 && worst_v <= 1e-9,
        format!("{count} eigenvalues, max secular residual {worst_f:.2e}, max vector residual {worst_v:.2e}"),
    )
}

fn continuity_and_growth() -> Outcome {
    let mut rng = rand::rngs::StdRng::seed_from_u64(5);
    let mut worst_c: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.gen_range(2..=30);
        let k = rng.gen_range(1..=n / 2);
        let cfg = ChainConfig::new(n, k, rng.gen_range(0.2..3.0), rng.gen_range(0.0..5.0)).unwrap();
        let st = WaveState::new((0..n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect(), 0.0);
        worst_c = worst_c.max(max_continuity_residual(&st, &cfg).unwrap());
    }
    // ‖c(t)‖² = e^{2 Im E t} ‖c(0)‖² for c(t) = e^{-iEt} u.
    let mut worst_g: f64 = 0.0;
    for (n, k, eta) in [(10, 1, 1.5), (12, 3, 2.0), (8, 2, 1.2)] {
        let s = spectrum(n, k, eta);
        let mut ims: Vec<&ptchain::spectral::EigenPair> = s.pairs.iter().filter(|p| p.energy.im.abs() > 1e-6).collect();
        ims.sort_by(|a, b| a.energy.im.total_cmp(&b.energy.im));
        for p in [ims[0], ims[ims.len() - 1]] {
            let traj = evolve(&WaveState::new(p.vector.clone(), 0.0), &s.config, 5.0, default_dt(&s.config)).unwrap();
            let ratio = traj.last().unwrap().norm_sqr() / traj[0].norm_sqr();
            let want = (2.0 * p.energy.im * 5.0).exp();
            worst_g = worst_g.max((ratio / want - 1.0).abs());
        }
    }
    outcome(
        worst_c <= 1e-12 && worst_g <= 1e-5,
        format!("max continuity residual {worst_c:.2e}; norm^2 growth vs e^(2 Im E t): max rel error {worst_g:.2e}"),
    )
}

fn xi_time_independence() -> Outcome {
    const T: f64 = 20.0;
    // A state whose growth rate trails the fastest mode by Δ is amplified
    // out of roundoff as e^{ΔT}; only states with ΔT ≤ 15 are sampled.
    const MAX_DELTA_T: f64 = 15.0;
    let mut picked: Vec<(String, ptchain::spectral::EigenPair, ChainConfig)> = Vec::new();
    let mut real = 0;
    for (n, k, eta) in [(10, 2, 0.5), (9, 3, 0.8), (14, 4, 0.3), (23, 6, 0.6), (7, 1, 0.95)] {
        let s = spectrum(n, k, eta);
        for p in s.pairs.iter().filter(|p| p.tag != StateTag::Opaque).take(2) {
            picked.push((format!("N={n} k={k} eta={eta} E={:.4}", p.energy), p.clone(), s.config));
            real += 1;
        }
    }
    let mut skipped = 0;
    let mut broken = 0;
    for (n, k, eta) in [(10, 1, 1.05), (10, 1, 1.2), (10, 2, 1.0), (10, 1, 1.5), (12, 3, 2.0), (8, 3, 1.4)] {
        let s = spectrum(n, k, eta);
        let gmax = s.pairs.iter().map(|p| p.energy.im).fold(0.0, f64::max);
        for p in s.pairs.iter().filter(|p| p.energy.im.abs() > 1e-6) {
            if broken == 10 {
                break;
            }
            if (gmax - p.energy.im) * T > MAX_DELTA_T {
                skipped += 1;
                continue;
            }
            picked.push((format!("N={n} k={k} eta={eta} E={:.4}", p.energy), p.clone(), s.config));
            broken += 1;
        }
    }
    let mut worst = (0.0f64, String::new());
    for (label, p, cfg) in &picked {
        let d = xi_time_independence_check(p, cfg, T).unwrap();
        if d > worst.0 {
            worst = (d, label.clone());
        }
    }
    outcome(
        picked.len() == 20 && broken == 10 && worst.0 <= 1e-6,
        format!(
            "{} states ({real} real-E, {broken} broken-phase; {skipped} skipped as roundoff-amplified), max drift {:.2e} at {}",
            picked.len(),
            worst.0,
            worst.1
        ),
    )
}

fn k8_threshold_note() -> Outcome {
    let s = spectrum(23, 8, 2.0);
    let mut off = 0;
    let mut total = 0;
    for p in s.pairs.iter().filter(|p| p.tag != StateTag::Opaque) {
        total += 1;
        let xi = transport_coefficient(&p.vector, &s.config).unwrap().value().unwrap();
        if (xi - 1.0).abs() > 1e-6 {
            off += 1;
        }
    }
    outcome(off == total, format!("{off} of {total} non-opaque states have xi != 1 at eta = 2"))
}

fn main() {
    let checks: Vec<(&str, Duration, fn() -> Outcome)> = vec![
        ("1 EP location N=10 k=1", Duration::from_secs(5), ep_end_to_end),
        ("2 quintuple coalescence N=10 k=5", Duration::from_secs(10), ep_quintuple),
        ("3 special-state census", Duration::from_secs(1), census_counts),
        ("4 special states are eta-independent", Duration::from_secs(5), special_states_eta_independent),
        ("5 unbroken-phase transport xi = 1", Duration::from_secs(60), unbroken_transport),
        ("6 conjugate-pair reciprocity", Duration::from_secs(60), conjugate_reciprocity),
        ("7 perturbative EP expansion", Duration::from_secs(5), perturbative_ep),
        ("8 large-eta asymptotics", Duration::from_secs(5), large_eta_asymptotics),
        ("9 analytic vs dense oracle", Duration::from_secs(120), oracle_equivalence),
        ("10 general tridiagonal model", Duration::from_secs(30), general_tridiagonal),
        ("11 continuity identity and norm growth", Duration::from_secs(30), continuity_and_growth),
        ("12 xi time independence", Duration::from_secs(60), xi_time_independence),
        ("note N=23 k=8 all xi != 1 at eta=2", Duration::from_secs(5), k8_threshold_note),
    ];
    let mut failed = 0;
    for (name, limit, check) in checks {
        let start = Instant::now();
        let out = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= limit;
        let pass = out.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {name}: {} ({}; {:.2}s of {}s)",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
}
