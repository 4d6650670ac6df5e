mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rhlb::dense::dense_svd;
use rhlb::extract::{harmonic_extract, refined_extract};
use rhlb::restart::{harmonic_shifts, implicit_qr_sweep, refined_shift_bases, truncate_and_restart};
use rhlb::{DenseMatrix, ShiftKind, ShiftSet};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn restart_applies_the_polynomial_filter(m in 4usize..=12, seed in any::<u64>(), frac in 0.3f64..0.8) {
        let k_eff = ((m as f64 * frac) as usize).clamp(1, m - 1);
        let (a, f) = random_factorization(40, 30, m, seed);
        let h = harmonic_extract(&f.b_matrix(), f.beta_last()).unwrap();
        let shifts = harmonic_shifts(&h, k_eff);
        let sweep = implicit_qr_sweep(&f.b_matrix(), &shifts).unwrap();
        let g = truncate_and_restart(&f, &sweep, k_eff).unwrap();
        let expected = filtered(&to_na(&a), &f.q()[0], &shifts.values);
        prop_assert!(angle(&g.q()[0], &expected) <= 1e-8, "angle {:e}", angle(&g.q()[0], &expected));
    }

    #[test]
    fn restarted_factorization_identities(m in 4usize..=15, seed in any::<u64>(), frac in 0.2f64..0.9) {
        let k_eff = ((m as f64 * frac) as usize).clamp(1, m - 1);
        let (a, f) = random_factorization(50, 40, m, seed);
        let h = harmonic_extract(&f.b_matrix(), f.beta_last()).unwrap();
        let sweep = implicit_qr_sweep(&f.b_matrix(), &harmonic_shifts(&h, k_eff)).unwrap();
        let mut g = truncate_and_restart(&f, &sweep, k_eff).unwrap();
        let anorm = to_na(&a).norm();
        let (e1, e2) = factorization_errors(&a, &g);
        prop_assert!(e1 <= 1e-11 * anorm && e2 <= 1e-11 * anorm, "{:e} {:e}", e1, e2);
        g.extend(&a, m).unwrap();
        let (e1, e2) = factorization_errors(&a, &g);
        prop_assert!(e1 <= 1e-11 * anorm && e2 <= 1e-11 * anorm, "{:e} {:e}", e1, e2);
        let q = columns_to_na(g.q());
        let p = columns_to_na(g.p());
        prop_assert!((q.transpose() * &q - DMatrix::identity(m, m)).norm() <= 1e-12 * m as f64);
        prop_assert!((p.transpose() * &p - DMatrix::identity(m, m)).norm() <= 1e-12 * m as f64);
    }

    #[test]
    fn sweeps_preserve_singular_values(m in 2usize..=20, seed in any::<u64>(), l in 1usize..6) {
        let (_, f) = random_factorization(60, 45, m, seed);
        let b = f.b_matrix();
        let mut r = rng(seed ^ 77);
        let top = dense_svd(&b).unwrap().singular_values[m - 1];
        let shifts: Vec<f64> = (0..l).map(|_| top * rand::Rng::random::<f64>(&mut r)).collect();
        let sweep = implicit_qr_sweep(&b, &ShiftSet::new(shifts, ShiftKind::Harmonic)).unwrap();
        let before = dense_svd(&b).unwrap().singular_values;
        let after = dense_svd(&sweep.b_plus).unwrap().singular_values;
        for (x, y) in before.iter().zip(&after) {
            prop_assert!((x - y).abs() <= 1e-12 * x.max(1e-3 * top), "{} {}", x, y);
        }
        let pt = dense_to_na(&sweep.p_tilde);
        let qt = dense_to_na(&sweep.q_tilde);
        prop_assert!((pt.transpose() * &pt - DMatrix::identity(m, m)).norm() <= 1e-12 * m as f64);
        prop_assert!((qt.transpose() * &qt - DMatrix::identity(m, m)).norm() <= 1e-12 * m as f64);
        let recon = pt.transpose() * dense_to_na(&b) * &qt;
        prop_assert!((recon - dense_to_na(&sweep.b_plus)).norm() <= 1e-12 * dense_to_na(&b).norm());
    }
}

#[test]
fn first_rotation_column_is_the_filtered_unit_vector() {
    for seed in 0..20u64 {
        let (_, f) = random_factorization(30, 25, 6, seed);
        let b = f.b_matrix();
        let bn = dense_to_na(&b);
        let btb = bn.transpose() * &bn;
        let mut r = rng(seed);
        let mus: Vec<f64> = (0..2).map(|_| 2.0 * rand::Rng::random::<f64>(&mut r)).collect();
        let sweep = implicit_qr_sweep(&b, &ShiftSet::new(mus.clone(), ShiftKind::Harmonic)).unwrap();
        let mut v = DVector::zeros(6);
        v[0] = 1.0;
        for mu in &mus {
            v = &btb * &v - &v * (mu * mu);
        }
        let v: Vec<f64> = v.iter().cloned().collect();
        assert!(angle(&sweep.q_tilde.column(0), &v) <= 1e-10);
    }
}

#[test]
fn exact_shifts_deflate_to_the_wanted_values() {
    for seed in 0..20u64 {
        let m = 8;
        let k_eff = 5;
        let (a, f) = random_factorization(40, 30, m, seed);
        let sv = dense_svd(&f.b_matrix()).unwrap().singular_values;
        let shifts = ShiftSet::new(sv[k_eff..].to_vec(), ShiftKind::Exact);
        let sweep = implicit_qr_sweep(&f.b_matrix(), &shifts).unwrap();
        let g = truncate_and_restart(&f, &sweep, k_eff).unwrap();
        let kept = dense_svd(&g.b_matrix()).unwrap().singular_values;
        for (x, y) in kept.iter().zip(&sv[..k_eff]) {
            assert!((x - y).abs() <= 1e-10 * y, "seed {seed}: {x} vs {y}");
        }
        let (e1, _) = factorization_errors(&a, &g);
        assert!(e1 <= 1e-11 * to_na(&a).norm());
    }
}

#[test]
fn refined_shifts_match_long_space_projection() {
    let mut checked = 0;
    for seed in 0..80u64 {
        let m = 4 + (seed % 7) as usize;
        let k_eff = 1 + (seed % 4) as usize;
        if k_eff >= m {
            continue;
        }
        if let Some(c) = check_refined_shifts(45, 35, m, k_eff, seed) {
            assert!(c.cholesky_ok, "seed {seed}");
            assert!(c.rel_err <= 1e-10, "seed {seed}: {:e}", c.rel_err);
            assert!(c.lower_bound_ok, "seed {seed}");
            checked += 1;
        }
    }
    assert!(checked >= 50, "only {checked} instances");
}

#[test]
fn refined_shift_bases_are_orthogonal_complements() {
    for seed in 0..20u64 {
        let (_, f) = random_factorization(40, 30, 9, seed);
        let b = f.b_matrix();
        let h = harmonic_extract(&b, f.beta_last()).unwrap();
        let refined = refined_extract(&b, f.beta_last(), &h.rhos[..3]).unwrap();
        let (qx2, qy2) = refined_shift_bases(&b, &refined).unwrap();
        let bn = dense_to_na(&b);
        let btx = bn.transpose() * dense_to_na(&refined.x);
        let by = &bn * dense_to_na(&refined.y);
        assert!((dense_to_na(&qx2).transpose() * btx).norm() <= 1e-12 * bn.norm());
        assert!((dense_to_na(&qy2).transpose() * by).norm() <= 1e-12 * bn.norm());
        let qx = dense_to_na(&qx2);
        assert!((qx.transpose() * &qx - DMatrix::identity(6, 6)).norm() <= 1e-13);
    }
}

#[test]
fn zero_shifts_are_valid_sweeps() {
    let b = DenseMatrix::upper_bidiagonal(&[2.0, 1.5, 1.0, 0.7], &[0.3, 0.4, 0.2]);
    let sweep = implicit_qr_sweep(&b, &ShiftSet::new(vec![0.0, 0.0], ShiftKind::ReplacedByZero)).unwrap();
    let before = dense_svd(&b).unwrap().singular_values;
    let after = dense_svd(&sweep.b_plus).unwrap().singular_values;
    for (x, y) in before.iter().zip(&after) {
        assert!((x - y).abs() <= 1e-13 * x);
    }
}
