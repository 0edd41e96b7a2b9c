use ptchain::matching::match_multisets;
use ptchain::spectral::{dense_eigenvalues, solve_spectrum, SolverOptions};
use ptchain::{build_hamiltonian, ChainConfig};

#[test]
fn grid_matches_dense_solver() {
    let opts = SolverOptions::default();
    let mut worst_eigen: f64 = 0.0;
    let mut flagged = Vec::new();
    for n in 4..=30 {
        for k in 1..=n / 2 {
            for &eta in &[0.0, 0.3, 0.7, 1.0, 1.3, 2.0, 5.0, 20.0, 100.0] {
                let cfg = ChainConfig::unit(n, k, eta).unwrap();
                let spec = solve_spectrum(&cfg, &opts).unwrap();
                assert_eq!(spec.pairs.len(), n);
                let dense = dense_eigenvalues(&build_hamiltonian(&cfg)).unwrap();
                let (_, worst) = match_multisets(&spec.energies(), &dense);
                // Dense eigenvalues of an m-fold defective root scatter by ~eps^(1/m).
                let order = spec
                    .pairs
                    .iter()
                    .filter(|p| p.flags.defective)
                    .map(|p| spec.pairs.iter().filter(|q| q.energy == p.energy).count())
                    .max();
                let tol = match order {
                    Some(m) => 10.0 * (2.0 + eta) * f64::EPSILON.powf(1.0 / m as f64),
                    None => 1e-8,
                };
                assert!(worst < tol, "N={n} k={k} eta={eta}: worst {worst}");
                for p in &spec.pairs {
                    worst_eigen = worst_eigen.max(p.residuals.eigen);
                    if p.flags.unpolished || p.flags.dense_vector || p.residuals.eigen > 1e-9 {
                        flagged.push((n, k, eta, p.energy, p.flags, p.residuals));
                    }
                }
            }
        }
    }
    assert!(flagged.is_empty(), "{:?}", &flagged[..flagged.len().min(10)]);
    assert!(worst_eigen < 1e-9);
}

#[test]
fn defective_triple_root_is_collapsed() {
    use ptchain::transport::transport_coefficient;
    let cfg = ChainConfig::unit(7, 3, 2.0).unwrap();
    let spec = solve_spectrum(&cfg, &SolverOptions::default()).unwrap();
    let members: Vec<_> = spec.pairs.iter().filter(|p| p.flags.defective).collect();
    assert_eq!(members.len(), 3);
    for p in members {
        assert!(p.energy.norm() < 1e-12, "{}", p.energy);
        let xi = transport_coefficient(&p.vector, &cfg).unwrap().value().unwrap();
        assert!((xi - 1.0).abs() < 1e-12);
    }
}
