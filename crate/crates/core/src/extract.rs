//! Ritz, harmonic Ritz and refined harmonic Ritz approximations computed from
//! the small bidiagonal `B_m` and the residual coefficient `β_m`.
//!
//! All residuals are evaluated in the short space:
//!
//! ```text
//! res² = ‖B y − ρ x‖² + ‖Bᵀ x − ρ y‖² + β_m² |e_mᵀ x|²
//! ```
//!
//! which equals `‖A v − ρ u‖² + ‖Aᵀ u − ρ v‖²` for `u = P_m x`, `v = Q_m y`.

use crate::dense::{dense_svd, smallest_singular_pair, solve_bidiag_parts, DenseMatrix};
use crate::error::{Error, Result};
use crate::vecops::{axpy, dot, norm};

/// Diagonal/superdiagonal view of an upper bidiagonal matrix.
#[derive(Debug, Clone)]
pub(crate) struct Bidiagonal {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
}

impl Bidiagonal {
    pub fn from_dense(b: &DenseMatrix) -> Result<Self> {
        let m = b.nrows();
        if b.ncols() != m || m == 0 {
            return Err(Error::DimensionMismatch { expected: m.max(1), got: b.ncols() });
        }
        if !b.is_finite() {
            return Err(Error::NonFinite("bidiagonal matrix"));
        }
        Ok(Self {
            d: (0..m).map(|i| b[(i, i)]).collect(),
            e: (0..m - 1).map(|i| b[(i, i + 1)]).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    /// `B y`
    pub fn mul(&self, y: &[f64]) -> Vec<f64> {
        let m = self.dim();
        (0..m)
            .map(|i| self.d[i] * y[i] + if i + 1 < m { self.e[i] * y[i + 1] } else { 0.0 })
            .collect()
    }

    /// `Bᵀ x`
    pub fn mul_t(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.d[i] * x[i] + if i > 0 { self.e[i - 1] * x[i - 1] } else { 0.0 })
            .collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::upper_bidiagonal(&self.d, &self.e)
    }
}

/// Short-space residual norm of the approximate triplet `(value, P x, Q y)`.
pub(crate) fn short_residual(b: &Bidiagonal, beta_m: f64, x: &[f64], y: &[f64], value: f64) -> f64 {
    let mut r1 = b.mul(y);
    axpy(-value, x, &mut r1);
    let mut r2 = b.mul_t(x);
    axpy(-value, y, &mut r2);
    let tail = beta_m * x[b.dim() - 1];
    let a = norm(&r1);
    let c = norm(&r2);
    (a * a + c * c + tail * tail).sqrt()
}

/// Harmonic Ritz approximations with their Rayleigh quotients.
#[derive(Debug, Clone)]
pub struct HarmonicSet {
    /// Harmonic Ritz values `θᵢ`, ascending.
    pub thetas: Vec<f64>,
    /// Unit left coefficient vectors `s̃ᵢ` as columns.
    pub s: DenseMatrix,
    /// Unit right coefficient vectors `w̃ᵢ` as columns.
    pub w: DenseMatrix,
    /// `ρᵢ = s̃ᵢᵀ B w̃ᵢ`
    pub rhos: Vec<f64>,
    /// Residual norms with `ρᵢ` in place of `θᵢ`.
    pub residuals: Vec<f64>,
}

/// Refined harmonic coefficient vectors for a set of Rayleigh quotients.
#[derive(Debug, Clone)]
pub struct RefinedSet {
    /// Unit `x̂ᵢ` as columns (`m × k'`).
    pub x: DenseMatrix,
    /// Unit `ŷᵢ` as columns.
    pub y: DenseMatrix,
    /// Smallest singular value of the shifted `(2m+1) × 2m` matrix per `ρᵢ`.
    pub min_residuals: Vec<f64>,
    /// Residual norms of `(ρᵢ, P x̂ᵢ, Q ŷᵢ)`.
    pub residuals: Vec<f64>,
}

/// Ritz approximations: the SVD of `B_m`.
#[derive(Debug, Clone)]
pub struct RitzSet {
    /// Singular values of `B_m`, ascending.
    pub values: Vec<f64>,
    /// Left singular vectors of `B_m` as columns.
    pub left: DenseMatrix,
    /// Right singular vectors of `B_m` as columns.
    pub right: DenseMatrix,
    pub residuals: Vec<f64>,
}

/// Harmonic extraction through the SVD of the `(m+1) × m` matrix `[Bᵀ; β_m e_mᵀ]`.
///
/// The `θᵢ` and `sᵢ` are its singular values and right singular vectors; the
/// `wᵢ = θᵢ B⁻¹ sᵢ` follow from one bidiagonal back substitution each.
pub fn harmonic_extract(b: &DenseMatrix, beta_m: f64) -> Result<HarmonicSet> {
    let bd = Bidiagonal::from_dense(b)?;
    harmonic_extract_parts(&bd, beta_m)
}

pub(crate) fn harmonic_extract_parts(b: &Bidiagonal, beta_m: f64) -> Result<HarmonicSet> {
    let m = b.dim();
    if let Some(i) = b.d.iter().position(|&v| v == 0.0) {
        return Err(Error::SingularBidiagonal(i));
    }
    let stacked = DenseMatrix::from_fn(m + 1, m, |i, j| {
        if i < m {
            // Bᵀ[i][j] = B[j][i]
            if i == j {
                b.d[i]
            } else if j + 1 == i {
                b.e[j]
            } else {
                0.0
            }
        } else if j == m - 1 {
            beta_m
        } else {
            0.0
        }
    });
    let svd = dense_svd(&stacked)?;
    let thetas = svd.singular_values;
    let s = svd.right_vectors;
    let mut w = DenseMatrix::zeros(m, m);
    let mut rhos = Vec::with_capacity(m);
    let mut residuals = Vec::with_capacity(m);
    for i in 0..m {
        let si = s.column(i);
        let rhs: Vec<f64> = si.iter().map(|v| thetas[i] * v).collect();
        let mut wi = solve_bidiag_parts(&b.d, &b.e, &rhs)?;
        let nw = norm(&wi);
        if nw == 0.0 || !nw.is_finite() {
            return Err(Error::NonFinite("harmonic right vector"));
        }
        wi.iter_mut().for_each(|v| *v /= nw);
        let rho = dot(&si, &b.mul(&wi));
        residuals.push(short_residual(b, beta_m, &si, &wi, rho));
        rhos.push(rho);
        w.set_column(i, &wi);
    }
    Ok(HarmonicSet { thetas, s, w, rhos, residuals })
}

/// Refined vectors: for each `ρᵢ`, the right singular vector `z = (x, y)` of the
/// smallest singular value of
///
/// ```text
/// [ -ρI    B  ]
/// [  Bᵀ   -ρI ]
/// [ β e_mᵀ  0 ]
/// ```
///
/// split and normalized into `x̂ᵢ`, `ŷᵢ`.
pub fn refined_extract(b: &DenseMatrix, beta_m: f64, rhos: &[f64]) -> Result<RefinedSet> {
    let bd = Bidiagonal::from_dense(b)?;
    refined_extract_parts(&bd, beta_m, rhos)
}

pub(crate) fn refined_extract_parts(b: &Bidiagonal, beta_m: f64, rhos: &[f64]) -> Result<RefinedSet> {
    let m = b.dim();
    let k = rhos.len();
    let mut base = DenseMatrix::zeros(2 * m + 1, 2 * m);
    for i in 0..m {
        base[(i, m + i)] = b.d[i];
        base[(m + i, i)] = b.d[i];
        if i + 1 < m {
            base[(i, m + i + 1)] = b.e[i];
            base[(m + i + 1, i)] = b.e[i];
        }
    }
    base[(2 * m, m - 1)] = beta_m;

    let split_tol = f64::EPSILON.sqrt();
    let mut x = DenseMatrix::zeros(m, k);
    let mut y = DenseMatrix::zeros(m, k);
    let mut min_residuals = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for (idx, &rho) in rhos.iter().enumerate() {
        if !rho.is_finite() {
            return Err(Error::NonFinite("Rayleigh quotient"));
        }
        let mut c = base.clone();
        for i in 0..2 * m {
            c[(i, i)] = -rho;
        }
        let (sigma_min, z) = smallest_singular_pair(&c)?;
        let (mut xi, mut yi) = (z[..m].to_vec(), z[m..].to_vec());
        let (nx, ny) = (norm(&xi), norm(&yi));
        if nx < split_tol || ny < split_tol {
            return Err(Error::DegenerateSplit { index: idx, x_norm: nx, y_norm: ny });
        }
        xi.iter_mut().for_each(|v| *v /= nx);
        yi.iter_mut().for_each(|v| *v /= ny);
        residuals.push(short_residual(b, beta_m, &xi, &yi, rho));
        min_residuals.push(sigma_min);
        x.set_column(idx, &xi);
        y.set_column(idx, &yi);
    }
    Ok(RefinedSet { x, y, min_residuals, residuals })
}

/// Ritz extraction: the SVD of `B_m` itself.
pub fn ritz_extract(b: &DenseMatrix, beta_m: f64) -> Result<RitzSet> {
    let bd = Bidiagonal::from_dense(b)?;
    ritz_extract_parts(&bd, beta_m)
}

pub(crate) fn ritz_extract_parts(b: &Bidiagonal, beta_m: f64) -> Result<RitzSet> {
    let svd = dense_svd(&b.to_dense())?;
    let residuals = (0..b.dim())
        .map(|i| {
            short_residual(
                b,
                beta_m,
                &svd.left_vectors.column(i),
                &svd.right_vectors.column(i),
                svd.singular_values[i],
            )
        })
        .collect();
    Ok(RitzSet {
        values: svd.singular_values,
        left: svd.left_vectors,
        right: svd.right_vectors,
        residuals,
    })
}

/// Long vectors `u = P c_left`, `v = Q c_right`.
pub fn assemble_long_vectors(
    p: &[Vec<f64>],
    q: &[Vec<f64>],
    coeffs_left: &[f64],
    coeffs_right: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if coeffs_left.len() != p.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), got: coeffs_left.len() });
    }
    if coeffs_right.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: q.len(), got: coeffs_right.len() });
    }
    let mlen = p.first().map_or(0, Vec::len);
    let nlen = q.first().map_or(0, Vec::len);
    Ok((
        crate::vecops::combine(p, coeffs_left, mlen),
        crate::vecops::combine(q, coeffs_right, nlen),
    ))
}
