#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rhlb::extract::{harmonic_extract, refined_extract};
use rhlb::restart::{refined_harmonic_shifts, refined_shift_bases};
use rhlb::{BidiagFactorization, DenseMatrix, Reorth, SparseMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Sparse matrix with roughly `density · rows · cols` standard-normal entries
/// plus a unit diagonal, so it has full column rank with high probability.
pub fn random_sparse(rows: usize, cols: usize, density: f64, seed: u64) -> SparseMatrix {
    let mut r = rng(seed);
    let mut trips = Vec::new();
    for j in 0..cols.min(rows) {
        trips.push((j, j, 1.0 + r.random::<f64>()));
    }
    let count = (density * (rows * cols) as f64).ceil() as usize;
    for _ in 0..count {
        let i = r.random_range(0..rows);
        let j = r.random_range(0..cols);
        trips.push((i, j, r.sample::<f64, _>(StandardNormal)));
    }
    SparseMatrix::from_triplets(rows, cols, trips).unwrap()
}

/// Rectangular diagonal with entries evenly spread over `1 … kappa` plus small
/// sparse noise.
pub fn graded_sparse(rows: usize, cols: usize, kappa: f64, seed: u64) -> SparseMatrix {
    let mut r = rng(seed);
    let n = rows.min(cols);
    let mut trips = Vec::new();
    for j in 0..n {
        let t = j as f64 / (n - 1) as f64;
        trips.push((j, j, (1.0 + t * (kappa - 1.0)) * (1.0 + 0.01 * r.random::<f64>())));
    }
    for _ in 0..3 * n {
        let i = r.random_range(0..rows);
        let j = r.random_range(0..cols);
        trips.push((i, j, 0.02 * r.sample::<f64, _>(StandardNormal)));
    }
    SparseMatrix::from_triplets(rows, cols, trips).unwrap()
}

pub fn to_na(a: &SparseMatrix) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols());
    for (i, j, v) in a.triplets() {
        out[(i, j)] += v;
    }
    out
}

pub fn dense_to_na(a: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

pub fn columns_to_na(cols: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(cols[0].len(), cols.len(), |i, j| cols[j][i])
}

/// Singular values, ascending.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().cloned().collect();
    s.sort_by(f64::total_cmp);
    s
}

/// Eigenvalues of the symmetric-definite pencil `F g = λ G g`, ascending.
pub fn pencil_eigenvalues(f: &DMatrix<f64>, g: &DMatrix<f64>) -> Vec<f64> {
    let l = g.clone().cholesky().expect("G must be positive definite").l();
    let linv = l.clone().try_inverse().unwrap();
    let c = &linv * f * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let mut ev: Vec<f64> = c.symmetric_eigen().eigenvalues.iter().cloned().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `Ã = [[0, A], [Aᵀ, 0]]`
pub fn augmented(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, n) = a.shape();
    let mut out = DMatrix::zeros(m + n, m + n);
    out.view_mut((0, m), (m, n)).copy_from(a);
    out.view_mut((m, 0), (n, m)).copy_from(&a.transpose());
    out
}

/// An `m`-step factorization of a random sparse matrix from a random start.
pub fn random_factorization(
    rows: usize,
    cols: usize,
    m: usize,
    seed: u64,
) -> (SparseMatrix, BidiagFactorization) {
    let a = random_sparse(rows, cols, 0.08, seed);
    let q1 = gaussian_vec(&mut rng(seed ^ 0xABCD), cols);
    let mut f = BidiagFactorization::start(&a, &q1, Reorth::Both, seed).unwrap();
    f.extend(&a, m).unwrap();
    (a, f)
}

/// `(‖A Q − P B‖, ‖Aᵀ P − Q Bᵀ − β q_{m+1} e_mᵀ‖)` in the Frobenius norm.
pub fn factorization_errors(a: &SparseMatrix, f: &BidiagFactorization) -> (f64, f64) {
    let an = to_na(a);
    let p = columns_to_na(f.p());
    let q = columns_to_na(f.q());
    let b = dense_to_na(&f.b_matrix());
    let m = f.steps();
    let r = DVector::from_column_slice(f.residual_direction());
    let mut em = DVector::zeros(m);
    em[m - 1] = 1.0;
    let e1 = (&an * &q - &p * &b).norm();
    let e2 = (an.transpose() * &p - &q * b.transpose() - r * em.transpose() * f.beta_last()).norm();
    (e1, e2)
}

/// Angle between the lines spanned by `x` and `y`, accurate for tiny angles.
pub fn angle(x: &[f64], y: &[f64]) -> f64 {
    let x = DVector::from_column_slice(x).normalize();
    let y = DVector::from_column_slice(y).normalize();
    let c = x.dot(&y);
    let s = (&x - &y * c).norm();
    s.atan2(c.abs())
}

/// `∏ (AᵀA − μ²I) q`, normalized.
pub fn filtered(a: &DMatrix<f64>, q: &[f64], shifts: &[f64]) -> Vec<f64> {
    let ata = a.transpose() * a;
    let mut v = DVector::from_column_slice(q);
    for mu in shifts {
        v = &ata * &v - &v * (mu * mu);
        v /= v.norm();
    }
    v.iter().cloned().collect()
}

pub struct ShiftCheck {
    pub cholesky_ok: bool,
    pub rel_err: f64,
    pub lower_bound_ok: bool,
}

/// Compare refined harmonic shifts against the harmonic projection of `Ã` onto
/// `span{(P Q_Y2; Q Q_X2)}` formed in the long space.
pub fn check_refined_shifts(rows: usize, cols: usize, m: usize, k_eff: usize, seed: u64) -> Option<ShiftCheck> {
    let (a, f) = random_factorization(rows, cols, m, seed);
    let b = f.b_matrix();
    let beta = f.beta_last();
    let an = to_na(&a);
    let sigma = singular_values(&an);
    let anorm = sigma[sigma.len() - 1];
    if sigma[k_eff] < 1e-4 * anorm {
        return None;
    }
    let h = harmonic_extract(&b, beta).unwrap();
    let refined = refined_extract(&b, beta, &h.rhos[..k_eff]).unwrap();
    let Ok(shifts) = refined_harmonic_shifts(&b, beta, &refined) else {
        return Some(ShiftCheck { cholesky_ok: false, rel_err: f64::INFINITY, lower_bound_ok: false });
    };
    let (qx2, qy2) = refined_shift_bases(&b, &refined).unwrap();

    let u_perp = columns_to_na(f.p()) * dense_to_na(&qy2);
    let v_perp = columns_to_na(f.q()) * dense_to_na(&qx2);
    let l = m - k_eff;
    let mut z = DMatrix::zeros(rows + cols, l);
    z.view_mut((0, 0), (rows, l)).copy_from(&u_perp);
    z.view_mut((rows, 0), (cols, l)).copy_from(&v_perp);
    let az = augmented(&an) * &z;
    let lhs = z.transpose() * &az;
    let rhs = az.transpose() * &az;
    let mut oracle: Vec<f64> = pencil_eigenvalues(&lhs, &rhs).iter().map(|v| 1.0 / v.abs()).collect();
    oracle.sort_by(f64::total_cmp);

    let rel_err = shifts
        .values
        .iter()
        .zip(&oracle)
        .map(|(x, y)| (x - y).abs() / y)
        .fold(0.0, f64::max);
    let lower_bound_ok = shifts.values.iter().all(|&x| x >= sigma[k_eff] - 1e-8 * anorm);
    Some(ShiftCheck { cholesky_ok: true, rel_err, lower_bound_ok })
}

