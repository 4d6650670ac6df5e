//! Implicit restarting: shifted Golub–Kahan sweeps on `B_m`, truncation of the
//! factorization to `k` steps, and the shift-selection schemes.

use serde::{Deserialize, Serialize};

use crate::bidiag::{breakdown_factor, random_orthogonal, BidiagFactorization};
use crate::dense::{golub_kahan_step, householder_qr_full, rotate_rows, spd_generalized_eig, DenseMatrix};
use crate::error::{Error, Result};
use crate::extract::{Bidiagonal, HarmonicSet, RefinedSet, RitzSet};
use crate::solver::Target;
use crate::vecops::{axpy, combine, dot, norm, reorthogonalize, scale};

/// Where a shift came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftKind {
    Harmonic,
    RefinedHarmonic,
    Exact,
    ReplacedByMax,
    ReplacedByZero,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ShiftSet {
    pub values: Vec<f64>,
    pub kinds: Vec<ShiftKind>,
}

impl ShiftSet {
    pub fn new(values: Vec<f64>, kind: ShiftKind) -> Self {
        let kinds = vec![kind; values.len()];
        Self { values, kinds }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of shifts replaced by the adaptive rule.
    pub fn replaced(&self) -> usize {
        self.kinds
            .iter()
            .filter(|k| matches!(k, ShiftKind::ReplacedByMax | ShiftKind::ReplacedByZero))
            .count()
    }
}

/// Result of `l` shifted sweeps: `B⁺ = P̃ᵀ B Q̃`.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub b_plus: DenseMatrix,
    pub p_tilde: DenseMatrix,
    pub q_tilde: DenseMatrix,
    pub(crate) d: Vec<f64>,
    pub(crate) e: Vec<f64>,
}

impl SweepResult {
    /// Entry `(m, k)` of `P̃` (1-based), the weight of `q_{m+1}` in the
    /// truncated residual.
    pub fn p_mk(&self, k: usize) -> f64 {
        let m = self.p_tilde.nrows();
        self.p_tilde[(m - 1, k - 1)]
    }
}

/// Apply one implicit Golub–Kahan QR step per shift (shift `μ²` on `BᵀB`) by
/// bulge chasing directly on `B`. Shifts are applied in descending magnitude.
/// On return `B⁺` has a nonnegative diagonal and superdiagonal.
pub fn implicit_qr_sweep(b: &DenseMatrix, shifts: &ShiftSet) -> Result<SweepResult> {
    let bd = Bidiagonal::from_dense(b)?;
    sweep_parts(&bd, shifts)
}

pub(crate) fn sweep_parts(b: &Bidiagonal, shifts: &ShiftSet) -> Result<SweepResult> {
    if shifts.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("shift"));
    }
    let m = b.dim();
    let mut d = b.d.clone();
    let mut e = b.e.clone();
    // rows hold the columns of P̃ and Q̃
    let mut pt = DenseMatrix::identity(m).as_slice().to_vec();
    let mut qt = pt.clone();

    let mut order = shifts.values.clone();
    order.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    if m > 1 {
        for mu in order {
            golub_kahan_step(
                &mut d,
                &mut e,
                0,
                m - 1,
                mu * mu,
                |k, c, s| rotate_rows(&mut qt, m, k, k + 1, c, s),
                |k, c, s| rotate_rows(&mut pt, m, k, k + 1, c, s),
            );
        }
    }

    for i in 0..m {
        if d[i] < 0.0 {
            d[i] = -d[i];
            if i + 1 < m {
                e[i] = -e[i];
            }
            pt[i * m..(i + 1) * m].iter_mut().for_each(|v| *v = -*v);
        }
        if i + 1 < m && e[i] < 0.0 {
            e[i] = -e[i];
            d[i + 1] = -d[i + 1];
            qt[(i + 1) * m..(i + 2) * m].iter_mut().for_each(|v| *v = -*v);
        }
    }

    let p_tilde = DenseMatrix::from_fn(m, m, |i, j| pt[j * m + i]);
    let q_tilde = DenseMatrix::from_fn(m, m, |i, j| qt[j * m + i]);
    Ok(SweepResult { b_plus: DenseMatrix::upper_bidiagonal(&d, &e), p_tilde, q_tilde, d, e })
}

/// Keep the leading `k` steps of the swept factorization:
///
/// ```text
/// P ← P P̃[:, :k],  Q ← Q Q̃[:, :k],  B ← B⁺[:k, :k]
/// r = β_m p̃_{m,k} q_{m+1} + β⁺_k q⁺_{k+1}
/// ```
pub fn truncate_and_restart(
    fact: &BidiagFactorization,
    sweep: &SweepResult,
    k: usize,
) -> Result<BidiagFactorization> {
    let m = fact.steps();
    if k == 0 || k >= m {
        return Err(Error::InvalidConfig(format!("truncation size {k} must be in 1..{m}")));
    }
    if sweep.d.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: sweep.d.len() });
    }
    let mlen = fact.p[0].len();
    let nlen = fact.q[0].len();
    let qm = &fact.q[..m];

    let new_p: Vec<Vec<f64>> = (0..k).map(|j| combine(&fact.p, &sweep.p_tilde.column(j), mlen)).collect();
    let new_q: Vec<Vec<f64>> = (0..k).map(|j| combine(qm, &sweep.q_tilde.column(j), nlen)).collect();
    let q_next = combine(qm, &sweep.q_tilde.column(k), nlen);

    let mut r = vec![0.0; nlen];
    axpy(fact.beta_last() * sweep.p_mk(k), &fact.q[m], &mut r);
    axpy(sweep.e[k - 1], &q_next, &mut r);
    reorthogonalize(&new_q, &mut r);
    let beta = norm(&r);

    let mut out = BidiagFactorization {
        p: new_p,
        q: new_q,
        alphas: sweep.d[..k].to_vec(),
        betas: sweep.e[..k - 1].to_vec(),
        a_norm_est: fact.a_norm_est,
        reorth: fact.reorth,
        rng: fact.rng.clone(),
        breakdowns: fact.breakdowns,
        matvecs: fact.matvecs,
        matvecs_transpose: fact.matvecs_transpose,
    };
    if beta <= breakdown_factor() * out.a_norm_est {
        out.breakdowns += 1;
        r = random_orthogonal(&mut out.rng, &out.q, nlen).unwrap_or_else(|| vec![0.0; nlen]);
    } else {
        scale(1.0 / beta, &mut r);
    }
    out.betas.push(beta);
    out.q.push(r);
    Ok(out)
}

/// The `m − k` unwanted harmonic Ritz values `θ_{k+1} … θ_m`.
pub fn harmonic_shifts(hset: &HarmonicSet, k: usize) -> ShiftSet {
    ShiftSet::new(hset.thetas[k.min(hset.thetas.len())..].to_vec(), ShiftKind::Harmonic)
}

/// The unwanted Ritz values: the largest `m − k` when the smallest triplets are
/// wanted, the smallest `m − k` otherwise.
pub fn exact_shifts(rset: &RitzSet, k: usize, which: Target) -> ShiftSet {
    let m = rset.values.len();
    let k = k.min(m);
    let values = match which {
        Target::Smallest => rset.values[k..].to_vec(),
        Target::Largest => rset.values[..m - k].to_vec(),
    };
    ShiftSet::new(values, ShiftKind::Exact)
}

/// Refined harmonic shifts `|ξᵢ|`, where `1/ξᵢ` are the eigenvalues of the
/// `l × l` symmetric-definite pencil `(F, G)`
///
/// ```text
/// F = Q_Y2ᵀ B Q_X2 + (Q_Y2ᵀ B Q_X2)ᵀ
/// G = (Bᵀ Q_Y2)ᵀ(Bᵀ Q_Y2) + β_m² (e_mᵀ Q_Y2)ᵀ(e_mᵀ Q_Y2) + (B Q_X2)ᵀ(B Q_X2)
/// ```
///
/// with `Q_X2`, `Q_Y2` the trailing `l` columns of the full QR factors of
/// `Bᵀ X̂` and `B Ŷ`. Fails if `G` is not numerically positive definite.
pub fn refined_harmonic_shifts(b: &DenseMatrix, beta_m: f64, refined: &RefinedSet) -> Result<ShiftSet> {
    let bd = Bidiagonal::from_dense(b)?;
    refined_harmonic_shifts_parts(&bd, beta_m, refined)
}

fn map_cols(src: &DenseMatrix, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<DenseMatrix> {
    let cols: Vec<Vec<f64>> = (0..src.ncols()).map(|j| f(&src.column(j))).collect();
    DenseMatrix::from_columns(&cols)
}

/// The trailing `l` columns `(Q_X2, Q_Y2)` of the full QR factors of `Bᵀ X̂` and `B Ŷ`.
pub fn refined_shift_bases(b: &DenseMatrix, refined: &RefinedSet) -> Result<(DenseMatrix, DenseMatrix)> {
    shift_bases_parts(&Bidiagonal::from_dense(b)?, refined)
}

fn shift_bases_parts(b: &Bidiagonal, refined: &RefinedSet) -> Result<(DenseMatrix, DenseMatrix)> {
    let m = b.dim();
    let k = refined.x.ncols();
    if k >= m || refined.x.nrows() != m || refined.y.nrows() != m || refined.y.ncols() != k {
        return Err(Error::DimensionMismatch { expected: m, got: refined.x.nrows() });
    }
    let (qx, _) = householder_qr_full(&map_cols(&refined.x, |c| b.mul_t(c))?)?;
    let (qy, _) = householder_qr_full(&map_cols(&refined.y, |c| b.mul(c))?)?;
    Ok((qx.columns(k..m), qy.columns(k..m)))
}

pub(crate) fn refined_harmonic_shifts_parts(
    b: &Bidiagonal,
    beta_m: f64,
    refined: &RefinedSet,
) -> Result<ShiftSet> {
    let m = b.dim();
    let (qx2, qy2) = shift_bases_parts(b, refined)?;
    let l = qx2.ncols();

    let b_qx2 = map_cols(&qx2, |c| b.mul(c))?;
    let bt_qy2 = map_cols(&qy2, |c| b.mul_t(c))?;
    let h = qy2.transpose().matmul(&b_qx2)?;

    let mut f = DenseMatrix::zeros(l, l);
    let mut g = DenseMatrix::zeros(l, l);
    let bt_cols: Vec<Vec<f64>> = (0..l).map(|j| bt_qy2.column(j)).collect();
    let bx_cols: Vec<Vec<f64>> = (0..l).map(|j| b_qx2.column(j)).collect();
    for i in 0..l {
        for j in i..l {
            let fij = h[(i, j)] + h[(j, i)];
            let gij = dot(&bt_cols[i], &bt_cols[j])
                + beta_m * beta_m * qy2[(m - 1, i)] * qy2[(m - 1, j)]
                + dot(&bx_cols[i], &bx_cols[j]);
            f[(i, j)] = fij;
            f[(j, i)] = fij;
            g[(i, j)] = gij;
            g[(j, i)] = gij;
        }
    }

    let eig = spd_generalized_eig(&f, &g)?;
    let mut values = Vec::with_capacity(l);
    for &lam in &eig.eigenvalues {
        let xi = (1.0 / lam).abs();
        if !xi.is_finite() {
            return Err(Error::NonFinite("refined harmonic shift"));
        }
        values.push(xi);
    }
    values.sort_by(f64::total_cmp);
    Ok(ShiftSet::new(values, ShiftKind::RefinedHarmonic))
}

/// What a bad shift is replaced with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Replacement {
    /// The largest shift in the set (smallest-triplet mode).
    Largest,
    /// A zero shift (largest-triplet mode).
    Zero,
}

/// Replace every shift with `|((ρ_k − ε_k) − μᵢ)/ρ_k| ≤ 10⁻³` by the largest shift.
///
/// A zero `rho_k` leaves the set unchanged.
pub fn adaptive_filter(shifts: &ShiftSet, rho_k: f64, eps_k: f64) -> ShiftSet {
    adaptive_filter_with(shifts, rho_k, eps_k, Replacement::Largest)
}

pub const BAD_SHIFT_RELGAP: f64 = 1e-3;

pub fn relgap(rho_k: f64, eps_k: f64, mu: f64) -> f64 {
    (((rho_k - eps_k) - mu) / rho_k).abs()
}

pub fn adaptive_filter_with(shifts: &ShiftSet, rho_k: f64, eps_k: f64, replacement: Replacement) -> ShiftSet {
    if rho_k == 0.0 || shifts.is_empty() {
        return shifts.clone();
    }
    let max = shifts.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = shifts.clone();
    for (v, kind) in out.values.iter_mut().zip(out.kinds.iter_mut()) {
        if relgap(rho_k, eps_k, *v) <= BAD_SHIFT_RELGAP {
            match replacement {
                Replacement::Largest => {
                    *v = max;
                    *kind = ShiftKind::ReplacedByMax;
                }
                Replacement::Zero => {
                    *v = 0.0;
                    *kind = ShiftKind::ReplacedByZero;
                }
            }
        }
    }
    out
}
