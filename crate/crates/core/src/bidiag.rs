//! Upper Lanczos (Golub–Kahan) bidiagonalization
//!
//! ```text
//! A Q_j  = P_j B_j
//! Aᵀ P_j = Q_j B_jᵀ + β_j q_{j+1} e_jᵀ
//! ```
//!
//! with `B_j` upper bidiagonal (diagonal `α`, superdiagonal `β₁…β_{j−1}`).
//! Every new `q` is reorthogonalized against all retained `q`'s by two passes of
//! classical Gram–Schmidt; the same is done for `p` unless [`Reorth::QOnly`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::matrix_io::SparseMatrix;
use crate::vecops::{axpy, norm, reorthogonalize, scale};

/// Which bases are reorthogonalized at every step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reorth {
    #[default]
    Both,
    QOnly,
}

/// Relative threshold for an invariant-subspace breakdown, `ε^(2/3)`.
pub fn breakdown_factor() -> f64 {
    f64::EPSILON.powf(2.0 / 3.0)
}

#[derive(Debug, Clone)]
pub struct BidiagFactorization {
    /// `p₁ … p_j`
    pub(crate) p: Vec<Vec<f64>>,
    /// `q₁ … q_{j+1}`; the last one is the residual direction
    pub(crate) q: Vec<Vec<f64>>,
    pub(crate) alphas: Vec<f64>,
    /// `β₁ … β_j`; `β_j` multiplies the residual direction
    pub(crate) betas: Vec<f64>,
    pub(crate) a_norm_est: f64,
    pub(crate) reorth: Reorth,
    pub(crate) rng: ChaCha8Rng,
    pub(crate) breakdowns: usize,
    pub(crate) matvecs: usize,
    pub(crate) matvecs_transpose: usize,
}

impl BidiagFactorization {
    /// One-step factorization from the starting vector `q1` (normalized here).
    ///
    /// `seed` drives the random directions used to repair breakdowns.
    pub fn start(a: &SparseMatrix, q1: &[f64], reorth: Reorth, seed: u64) -> Result<Self> {
        if q1.len() != a.ncols() {
            return Err(Error::DimensionMismatch { expected: a.ncols(), got: q1.len() });
        }
        let nq = norm(q1);
        if nq == 0.0 || !nq.is_finite() {
            return Err(Error::Breakdown("starting vector has zero or non-finite norm".into()));
        }
        let mut q1 = q1.to_vec();
        scale(1.0 / nq, &mut q1);
        let mut fact = Self {
            p: Vec::new(),
            q: vec![q1],
            alphas: Vec::new(),
            betas: Vec::new(),
            a_norm_est: 0.0,
            reorth,
            rng: ChaCha8Rng::seed_from_u64(seed),
            breakdowns: 0,
            matvecs: 0,
            matvecs_transpose: 0,
        };
        let aq = a.matvec(&fact.q[0])?;
        fact.matvecs += 1;
        if norm(&aq) == 0.0 {
            return Err(Error::Breakdown("A q₁ = 0: starting vector lies in the null space".into()));
        }
        fact.step_with(a, aq)?;
        Ok(fact)
    }

    /// Extend to `target_m` steps.
    pub fn extend(&mut self, a: &SparseMatrix, target_m: usize) -> Result<()> {
        let limit = a.nrows().min(a.ncols());
        if target_m > limit {
            return Err(Error::InvalidConfig(format!(
                "cannot extend to {target_m} steps, at most min(M, N) = {limit}"
            )));
        }
        while self.steps() < target_m {
            let aq = a.matvec(self.q.last().unwrap())?;
            self.matvecs += 1;
            self.step_with(a, aq)?;
        }
        Ok(())
    }

    /// One Lanczos step given `A q_{j+1}`.
    fn step_with(&mut self, a: &SparseMatrix, mut pvec: Vec<f64>) -> Result<()> {
        let j = self.steps();
        let raw = norm(&pvec);
        self.a_norm_est = self.a_norm_est.max(raw);
        if j > 0 {
            axpy(-self.betas[j - 1], &self.p[j - 1], &mut pvec);
        }
        if self.reorth == Reorth::Both {
            reorthogonalize(&self.p, &mut pvec);
        }
        let alpha = norm(&pvec);
        if !alpha.is_finite() {
            return Err(Error::NonFinite("Lanczos vector p"));
        }
        if alpha <= breakdown_factor() * self.a_norm_est {
            self.breakdowns += 1;
            pvec = random_orthogonal(&mut self.rng, &self.p, a.nrows()).ok_or_else(|| {
                Error::Breakdown(format!("left basis exhausted at step {}", j + 1))
            })?;
        } else {
            scale(1.0 / alpha, &mut pvec);
        }
        self.alphas.push(alpha);

        let mut r = a.matvec_transpose(&pvec)?;
        self.matvecs_transpose += 1;
        self.p.push(pvec);
        self.a_norm_est = self.a_norm_est.max(norm(&r));
        axpy(-alpha, &self.q[j], &mut r);
        reorthogonalize(&self.q, &mut r);
        let beta = norm(&r);
        if !beta.is_finite() {
            return Err(Error::NonFinite("Lanczos vector q"));
        }
        if beta <= breakdown_factor() * self.a_norm_est {
            self.breakdowns += 1;
            r = random_orthogonal(&mut self.rng, &self.q, a.ncols()).unwrap_or_else(|| vec![0.0; a.ncols()]);
        } else {
            scale(1.0 / beta, &mut r);
        }
        self.betas.push(beta);
        self.q.push(r);
        Ok(())
    }

    /// Current step count `j`.
    pub fn steps(&self) -> usize {
        self.alphas.len()
    }

    pub fn p(&self) -> &[Vec<f64>] {
        &self.p
    }

    /// `q₁ … q_j` (without the residual direction).
    pub fn q(&self) -> &[Vec<f64>] {
        &self.q[..self.steps()]
    }

    /// `q_{j+1}`
    pub fn residual_direction(&self) -> &[f64] {
        &self.q[self.steps()]
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Superdiagonal of `B_j` (`β₁ … β_{j−1}`).
    pub fn superdiagonal(&self) -> &[f64] {
        &self.betas[..self.steps().saturating_sub(1)]
    }

    /// `β_j`, the coefficient of the residual term.
    pub fn beta_last(&self) -> f64 {
        self.betas.last().copied().unwrap_or(0.0)
    }

    pub fn b_matrix(&self) -> DenseMatrix {
        DenseMatrix::upper_bidiagonal(&self.alphas, self.superdiagonal())
    }

    pub fn reorth(&self) -> Reorth {
        self.reorth
    }

    /// Running lower bound on `‖A‖`.
    pub fn a_norm_est(&self) -> f64 {
        self.a_norm_est
    }

    pub fn raise_norm_estimate(&mut self, value: f64) {
        if value.is_finite() {
            self.a_norm_est = self.a_norm_est.max(value);
        }
    }

    /// Products with `A` and with `Aᵀ` performed so far.
    pub fn matvec_counts(&self) -> (usize, usize) {
        (self.matvecs, self.matvecs_transpose)
    }

    /// Breakdown repairs since the last call.
    pub fn take_breakdowns(&mut self) -> usize {
        std::mem::take(&mut self.breakdowns)
    }
}

/// Unit standard-normal vector orthogonalized against `basis`; `None` when the
/// basis already spans the space.
pub(crate) fn random_orthogonal(rng: &mut ChaCha8Rng, basis: &[Vec<f64>], len: usize) -> Option<Vec<f64>> {
    if basis.len() >= len {
        return None;
    }
    for _ in 0..3 {
        let mut v: Vec<f64> = (0..len).map(|_| StandardNormal.sample(rng)).collect();
        let before = norm(&v);
        reorthogonalize(basis, &mut v);
        let after = norm(&v);
        if after > 1e-3 * before {
            scale(1.0 / after, &mut v);
            return Some(v);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::dense_svd;
    use crate::vecops::dot;

    fn random_sparse(m: usize, n: usize, density: f64, seed: u64) -> SparseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trip = Vec::new();
        for i in 0..m {
            for j in 0..n {
                let u: f64 = rand::Rng::random(&mut rng);
                if u < density || i == j {
                    trip.push((i, j, StandardNormal.sample(&mut rng)));
                }
            }
        }
        SparseMatrix::from_triplets(m, n, trip).unwrap()
    }

    fn orthogonality_error(basis: &[Vec<f64>]) -> f64 {
        let mut err = 0.0f64;
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((dot(a, b) - target).abs());
            }
        }
        err
    }

    pub(crate) fn factorization_residuals(a: &SparseMatrix, f: &BidiagFactorization) -> (f64, f64) {
        let j = f.steps();
        let b = f.b_matrix();
        let mut r1 = 0.0f64;
        let mut r2 = 0.0f64;
        for c in 0..j {
            let aq = a.matvec(&f.q[c]).unwrap();
            let mut pb = vec![0.0; a.nrows()];
            for r in 0..j {
                axpy(b[(r, c)], &f.p[r], &mut pb);
            }
            r1 = r1.max(norm(&aq.iter().zip(&pb).map(|(x, y)| x - y).collect::<Vec<_>>()));

            let atp = a.matvec_transpose(&f.p[c]).unwrap();
            let mut qbt = vec![0.0; a.ncols()];
            for r in 0..j {
                axpy(b[(c, r)], &f.q[r], &mut qbt);
            }
            if c == j - 1 {
                axpy(f.beta_last(), &f.q[j], &mut qbt);
            }
            r2 = r2.max(norm(&atp.iter().zip(&qbt).map(|(x, y)| x - y).collect::<Vec<_>>()));
        }
        (r1, r2)
    }

    #[test]
    fn start_on_eigen_direction() {
        let a = SparseMatrix::from_diagonal(&[2.0, 3.0]).unwrap();
        let f = BidiagFactorization::start(&a, &[1.0, 0.0], Reorth::Both, 0).unwrap();
        assert_eq!(f.alphas(), &[2.0]);
        assert_eq!(f.beta_last(), 0.0);
        assert_eq!(f.p()[0], vec![1.0, 0.0]);
        assert_eq!(f.breakdowns, 1);
    }

    #[test]
    fn start_hand_computed_alpha() {
        let a = SparseMatrix::from_diagonal(&[2.0, 3.0]).unwrap();
        let s = 0.5f64.sqrt();
        let f = BidiagFactorization::start(&a, &[s, s], Reorth::Both, 0).unwrap();
        assert!((f.alphas()[0] - 6.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn start_rejects_bad_vectors() {
        let a = SparseMatrix::from_diagonal(&[2.0, 3.0]).unwrap();
        assert!(BidiagFactorization::start(&a, &[0.0, 0.0], Reorth::Both, 0).is_err());
        assert!(BidiagFactorization::start(&a, &[1.0], Reorth::Both, 0).is_err());
        let singular = SparseMatrix::from_diagonal(&[0.0, 3.0]).unwrap();
        assert!(matches!(
            BidiagFactorization::start(&singular, &[1.0, 0.0], Reorth::Both, 0),
            Err(Error::Breakdown(_))
        ));
    }

    #[test]
    fn random_start_satisfies_identities() {
        let a = random_sparse(30, 20, 0.2, 3);
        let q1: Vec<f64> = (0..20).map(|i| ((i * 7 % 11) as f64) - 5.0).collect();
        let f = BidiagFactorization::start(&a, &q1, Reorth::Both, 0).unwrap();
        let (r1, r2) = factorization_residuals(&a, &f);
        let an = a.frobenius_norm();
        assert!(r1 <= 1e-12 * an && r2 <= 1e-12 * an);
    }

    #[test]
    fn invariant_subspace_triggers_breakdown_repair() {
        let a = SparseMatrix::from_diagonal(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let mut f = BidiagFactorization::start(&a, &[0.0, 0.0, 1.0, 0.0, 0.0], Reorth::Both, 7).unwrap();
        f.extend(&a, 1).unwrap();
        assert_eq!(f.take_breakdowns(), 1);
        assert!(f.beta_last() < 1e-12);
        // the repaired residual direction is a unit vector orthogonal to q₁
        assert!((norm(f.residual_direction()) - 1.0).abs() < 1e-14);
        assert!(dot(f.residual_direction(), &f.q()[0]).abs() < 1e-14);
        f.extend(&a, 4).unwrap();
        assert!(orthogonality_error(&f.q) < 1e-12);
        assert!(orthogonality_error(&f.p) < 1e-12);
    }

    #[test]
    fn orthogonality_on_clustered_generator() {
        let a = crate::matrix_io::make_clustered_diag(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let q1: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut f = BidiagFactorization::start(&a, &q1, Reorth::Both, 0).unwrap();
        f.extend(&a, 20).unwrap();
        assert!(orthogonality_error(&f.q) <= 1e-10);
        assert!(orthogonality_error(&f.p) <= 1e-10);
        let (r1, r2) = factorization_residuals(&a, &f);
        assert!(r1 <= 1e-12 * 991.0 && r2 <= 1e-12 * 991.0);
        assert_eq!(f.matvec_counts(), (20, 20));
    }

    #[test]
    fn q_only_keeps_q_orthogonal() {
        let a = random_sparse(120, 40, 0.1, 5);
        let q1 = vec![1.0; 40];
        let mut f = BidiagFactorization::start(&a, &q1, Reorth::QOnly, 0).unwrap();
        f.extend(&a, 25).unwrap();
        assert!(orthogonality_error(&f.q) <= 1e-10);
    }

    #[test]
    fn extend_rejects_too_many_steps() {
        let a = random_sparse(6, 4, 0.5, 1);
        let mut f = BidiagFactorization::start(&a, &[1.0; 4], Reorth::Both, 0).unwrap();
        assert!(f.extend(&a, 5).is_err());
        f.extend(&a, 4).unwrap();
        assert_eq!(f.steps(), 4);
    }

    #[test]
    fn full_dimension_run_exhausts_right_space() {
        let a = random_sparse(8, 5, 0.5, 2);
        let mut f = BidiagFactorization::start(&a, &[1.0, 2.0, 3.0, 4.0, 5.0], Reorth::Both, 0).unwrap();
        f.extend(&a, 5).unwrap();
        assert!(f.beta_last() < 1e-10 * a.frobenius_norm());
        // B_5 has exactly the singular values of A
        let sb = dense_svd(&f.b_matrix()).unwrap().singular_values;
        let sa = dense_svd(&DenseMatrix::from_rows(&a.to_dense()).unwrap()).unwrap().singular_values;
        for (x, y) in sb.iter().zip(&sa) {
            assert!((x - y).abs() <= 1e-12 * sa[4]);
        }
    }
}
