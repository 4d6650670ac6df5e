mod common;

use common::*;
use nalgebra::DVector;
use rhlb::{solve, Algorithm, Reorth, SolverConfig, SparseMatrix, Target};

fn residual_norms(a: &SparseMatrix, value: f64, u: &[f64], v: &[f64]) -> (f64, f64) {
    let an = to_na(a);
    let u = DVector::from_column_slice(u);
    let v = DVector::from_column_slice(v);
    ((&an * &v - &u * value).norm(), (an.transpose() * &u - &v * value).norm())
}

fn check_smallest(a: &SparseMatrix, cfg: &SolverConfig) {
    let s = singular_values(&to_na(a));
    let kappa = s[s.len() - 1] / s[0];
    let res = solve(a, cfg).unwrap();
    assert!(res.converged, "{:?} did not converge", cfg.algorithm);
    assert_eq!(res.triplets.len(), cfg.k);
    for (i, t) in res.triplets.iter().enumerate() {
        let rel = (t.value - s[i]).abs() / s[i];
        assert!(rel <= 10.0 * kappa * cfg.tol, "{:?} σ{}: {rel:e}", cfg.algorithm, i + 1);
        let (r1, r2) = residual_norms(a, t.value, &t.left, &t.right);
        assert!(r1 <= 2.0 * cfg.tol * res.a_norm_est, "{:?}: {r1:e}", cfg.algorithm);
        assert!(r2 <= 2.0 * cfg.tol * res.a_norm_est, "{:?}: {r2:e}", cfg.algorithm);
    }
    assert!(res.triplets.windows(2).all(|w| w[0].value <= w[1].value));
}

#[test]
fn all_algorithms_match_dense_svd() {
    let cases = [
        graded_sparse(200, 150, 1e3, 1),
        random_sparse(200, 150, 0.03, 2),
        graded_sparse(260, 120, 1e4, 3),
        random_sparse(120, 170, 0.04, 4),
    ];
    for a in &cases {
        for algorithm in [Algorithm::Irrhlb, Algorithm::Irhlb, Algorithm::Irlb] {
            let cfg = SolverConfig { k: 3, m: 30, tol: 1e-8, maxit: 2000, algorithm, ..SolverConfig::default() };
            check_smallest(a, &cfg);
        }
    }
}

#[test]
fn q_only_reorthogonalization_on_tall_matrix() {
    let a = graded_sparse(300, 80, 100.0, 9);
    let cfg = SolverConfig { k: 2, m: 25, tol: 1e-8, maxit: 1000, reorth: Reorth::QOnly, ..SolverConfig::default() };
    check_smallest(&a, &cfg);
}

#[test]
fn largest_triplets_with_ritz_extraction() {
    let a = random_sparse(180, 140, 0.03, 11);
    let s = singular_values(&to_na(&a));
    let cfg = SolverConfig {
        k: 3,
        m: 20,
        tol: 1e-10,
        sigma: Target::Largest,
        algorithm: Algorithm::Irlb,
        ..SolverConfig::default()
    };
    let res = solve(&a, &cfg).unwrap();
    assert!(res.converged);
    let n = s.len();
    for (i, t) in res.triplets.iter().enumerate() {
        assert!((t.value - s[n - 1 - i]).abs() <= 1e-8 * s[n - 1]);
    }
}

#[test]
fn default_configuration_finds_six_smallest() {
    let a = graded_sparse(250, 200, 500.0, 21);
    let s = singular_values(&to_na(&a));
    let res = solve(&a, &SolverConfig::default()).unwrap();
    assert!(res.converged);
    for (i, t) in res.triplets.iter().enumerate() {
        assert!((t.value - s[i]).abs() <= 10.0 * 500.0 * 1e-6 * s[i]);
    }
}
