//! Small dense kernels for the projected problems: Golub–Kahan SVD, full
//! Householder QR, bidiagonal back substitution and a Cholesky-reduced
//! symmetric-definite generalized eigensolver.
//!
//! Everything here works on matrices whose dimensions are a small multiple of the
//! Krylov dimension `m`, so the code favours clarity over blocking.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.nrows, self.ncols)?;
        for i in 0..self.nrows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, data: vec![0.0; nrows * ncols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            out[(i, i)] = 1.0;
        }
        out
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(nrows * ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                data.push(f(i, j));
            }
        }
        Self { nrows, ncols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nrows * ncols);
        for row in rows {
            if row.len() != ncols {
                return Err(Error::DimensionMismatch { expected: ncols, got: row.len() });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { nrows, ncols, data })
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self> {
        let ncols = cols.len();
        let nrows = cols.first().map_or(0, Vec::len);
        if let Some(bad) = cols.iter().find(|c| c.len() != nrows) {
            return Err(Error::DimensionMismatch { expected: nrows, got: bad.len() });
        }
        Ok(Self::from_fn(nrows, ncols, |i, j| cols[j][i]))
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { values[i] } else { 0.0 })
    }

    /// Square upper bidiagonal matrix with diagonal `d` and superdiagonal `e`.
    pub fn upper_bidiagonal(d: &[f64], e: &[f64]) -> Self {
        let n = d.len();
        debug_assert!(e.len() + 1 >= n);
        Self::from_fn(n, n, |i, j| {
            if i == j {
                d[i]
            } else if j == i + 1 {
                e[i]
            } else {
                0.0
            }
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.nrows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[f64]) {
        for (i, &v) in values.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    /// Columns `range` as a new matrix.
    pub fn columns(&self, range: std::ops::Range<usize>) -> Self {
        Self::from_fn(self.nrows, range.len(), |i, j| self[(i, range.start + j)])
    }

    /// Leading `r × c` block.
    pub fn leading(&self, r: usize, c: usize) -> Self {
        Self::from_fn(r, c, |i, j| self[(i, j)])
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch { expected: self.ncols, got: other.nrows });
        }
        let mut out = Self::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for p in 0..self.ncols {
                let a = self[(i, p)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(p);
                let dst = &mut out.data[i * other.ncols..(i + 1) * other.ncols];
                for (d, o) in dst.iter_mut().zip(orow) {
                    *d += a * o;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch { expected: self.ncols, got: x.len() });
        }
        Ok((0..self.nrows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn matvec_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.nrows {
            return Err(Error::DimensionMismatch { expected: self.nrows, got: x.len() });
        }
        let mut out = vec![0.0; self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        crate::vecops::norm(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        &self.data[i * self.ncols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        &mut self.data[i * self.ncols + j]
    }
}

/// Thin SVD `C = U diag(σ) Vᵀ` with `σ` ascending.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub singular_values: Vec<f64>,
    /// `nrows × r`, `r = min(nrows, ncols)`
    pub left_vectors: DenseMatrix,
    /// `ncols × r`
    pub right_vectors: DenseMatrix,
}

/// Eigenpairs of the pencil `F g = λ G g`, `λ` ascending.
#[derive(Debug, Clone)]
pub struct GenEigResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DenseMatrix,
}

/// Givens rotation `(c, s, r)` with `[c s; -s c] [f; g] = [r; 0]`.
pub(crate) fn givens(f: f64, g: f64) -> (f64, f64, f64) {
    if g == 0.0 {
        (1.0, 0.0, f)
    } else if f == 0.0 {
        (0.0, 1.0, g)
    } else {
        let r = f.hypot(g);
        (f / r, g / r, r)
    }
}

/// Rotate rows `i` and `j` of a row-major `n`-column buffer:
/// `row_i ← c row_i + s row_j`, `row_j ← -s row_i + c row_j`.
pub(crate) fn rotate_rows(buf: &mut [f64], n: usize, i: usize, j: usize, c: f64, s: f64) {
    debug_assert_ne!(i, j);
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    let (head, tail) = buf.split_at_mut(hi * n);
    let rlo = &mut head[lo * n..(lo + 1) * n];
    let rhi = &mut tail[..n];
    let (ri, rj) = if i < j { (rlo, rhi) } else { (rhi, rlo) };
    for (a, b) in ri.iter_mut().zip(rj.iter_mut()) {
        let x = *a;
        let y = *b;
        *a = c * x + s * y;
        *b = -s * x + c * y;
    }
}

/// One implicit Golub–Kahan SVD step with shift `shift2` (a value of `μ²`) on the
/// unreduced block `lo..=hi` of the upper bidiagonal `(d, e)`.
///
/// `right(k, c, s)` and `left(k, c, s)` receive the rotations acting on columns
/// `k, k+1` of `V` and `U` respectively, so that `B ← Uᵀ B V` stays bidiagonal.
pub(crate) fn golub_kahan_step(
    d: &mut [f64],
    e: &mut [f64],
    lo: usize,
    hi: usize,
    shift2: f64,
    mut right: impl FnMut(usize, f64, f64),
    mut left: impl FnMut(usize, f64, f64),
) {
    let mut y = (d[lo] - shift2.sqrt()) * (d[lo] + shift2.sqrt());
    if shift2 < 0.0 || !y.is_finite() {
        y = d[lo] * d[lo] - shift2;
    }
    let mut z = d[lo] * e[lo];
    for k in lo..hi {
        let (c, s, r) = givens(y, z);
        if k > lo {
            e[k - 1] = r;
        }
        let f = c * d[k] + s * e[k];
        e[k] = -s * d[k] + c * e[k];
        let bulge = s * d[k + 1];
        d[k + 1] *= c;
        d[k] = f;
        right(k, c, s);

        let (c, s, r) = givens(d[k], bulge);
        d[k] = r;
        let f = c * e[k] + s * d[k + 1];
        d[k + 1] = -s * e[k] + c * d[k + 1];
        e[k] = f;
        if k + 1 < hi {
            y = e[k];
            z = s * e[k + 1];
            e[k + 1] *= c;
        }
        left(k, c, s);
    }
}

struct Reflector {
    v: Vec<f64>,
    tau: f64,
}

/// Householder reflector `H = I - τ v vᵀ` with `v[0] = 1` and `H x = β e₁`.
fn make_reflector(x: &[f64]) -> (Reflector, f64) {
    let alpha = x[0];
    let tail = crate::vecops::norm(&x[1..]);
    if tail == 0.0 {
        let mut v = vec![0.0; x.len()];
        v[0] = 1.0;
        return (Reflector { v, tau: 0.0 }, alpha);
    }
    let beta = -alpha.signum() * alpha.hypot(tail);
    let beta = if alpha == 0.0 { -alpha.hypot(tail) } else { beta };
    let tau = (beta - alpha) / beta;
    let denom = alpha - beta;
    let mut v = Vec::with_capacity(x.len());
    v.push(1.0);
    v.extend(x[1..].iter().map(|xi| xi / denom));
    (Reflector { v, tau }, beta)
}

/// Apply `H` to rows `offset..offset+len(v)` of every column in `cols` of a
/// row-major buffer with `n` columns.
fn reflect_rows(buf: &mut [f64], n: usize, h: &Reflector, offset: usize, cols: std::ops::Range<usize>) {
    if h.tau == 0.0 {
        return;
    }
    let mut w = vec![0.0; cols.len()];
    for (p, &vp) in h.v.iter().enumerate() {
        let row = &buf[(offset + p) * n..(offset + p + 1) * n];
        for (wj, &a) in w.iter_mut().zip(&row[cols.clone()]) {
            *wj += vp * a;
        }
    }
    for (p, &vp) in h.v.iter().enumerate() {
        let f = h.tau * vp;
        let row = &mut buf[(offset + p) * n..(offset + p + 1) * n];
        for (a, wj) in row[cols.clone()].iter_mut().zip(&w) {
            *a -= f * wj;
        }
    }
}

/// Apply `H` to columns `offset..offset+len(v)` of every row in `rows`.
fn reflect_cols(buf: &mut [f64], n: usize, h: &Reflector, offset: usize, rows: std::ops::Range<usize>) {
    if h.tau == 0.0 {
        return;
    }
    for i in rows {
        let row = &mut buf[i * n + offset..i * n + offset + h.v.len()];
        let s: f64 = row.iter().zip(&h.v).map(|(a, v)| a * v).sum();
        let f = h.tau * s;
        for (a, v) in row.iter_mut().zip(&h.v) {
            *a -= f * v;
        }
    }
}

/// Raw SVD of a tall matrix. Returns `σ` (unsorted, nonnegative), `Uᵀ`
/// (`n × m`, rows are left vectors) when requested, and `Vᵀ` (`n × n`).
fn svd_tall_raw(c: &DenseMatrix, want_u: bool) -> Result<(Vec<f64>, Option<Vec<f64>>, Vec<f64>)> {
    let (m, n) = (c.nrows, c.ncols);
    debug_assert!(m >= n && n >= 1);
    let mut a = c.data.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n.saturating_sub(1)];
    let mut left_h = Vec::with_capacity(n);
    let mut right_h = Vec::with_capacity(n.saturating_sub(1));

    for k in 0..n {
        let x: Vec<f64> = (k..m).map(|i| a[i * n + k]).collect();
        let (h, beta) = make_reflector(&x);
        reflect_rows(&mut a, n, &h, k, k + 1..n);
        d[k] = beta;
        left_h.push(h);
        if k + 1 < n {
            let x = a[k * n + k + 1..(k + 1) * n].to_vec();
            let (h, beta) = make_reflector(&x);
            reflect_cols(&mut a, n, &h, k + 1, k + 1..m);
            e[k] = beta;
            right_h.push(h);
        }
    }

    // Vᵀ accumulated as rows; V = G_0 G_1 … acting on coordinates k+1..n
    let mut vt = DenseMatrix::identity(n).data;
    for (k, h) in right_h.iter().enumerate().rev() {
        // V ← G_k V on the left, i.e. transform columns of Vᵀ
        reflect_cols(&mut vt, n, h, k + 1, 0..n);
    }
    let mut ut = if want_u {
        // U = H_0 … H_{n-1} [I; 0]; stored transposed (n × m)
        let mut u = vec![0.0; m * n];
        for i in 0..n {
            u[i * n + i] = 1.0;
        }
        for (k, h) in left_h.iter().enumerate().rev() {
            reflect_rows(&mut u, n, h, k, 0..n);
        }
        let mut t = vec![0.0; n * m];
        for i in 0..m {
            for j in 0..n {
                t[j * m + i] = u[i * n + j];
            }
        }
        Some(t)
    } else {
        None
    };

    bidiagonal_qr(&mut d, &mut e, ut.as_deref_mut(), m, &mut vt)?;

    for (i, di) in d.iter_mut().enumerate() {
        if *di < 0.0 {
            *di = -*di;
            for v in &mut vt[i * n..(i + 1) * n] {
                *v = -*v;
            }
        }
    }
    Ok((d, ut, vt))
}

/// Implicit-shift QR iteration on an upper bidiagonal matrix until all
/// superdiagonal entries are negligible relative to `ε‖B‖`.
fn bidiagonal_qr(
    d: &mut [f64],
    e: &mut [f64],
    mut ut: Option<&mut [f64]>,
    m: usize,
    vt: &mut [f64],
) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    let anorm = (0..n).fold(0.0f64, |acc, i| acc.max(d[i].abs() + e.get(i).map_or(0.0, |v| v.abs())));
    if anorm == 0.0 {
        return Ok(());
    }
    let thresh = f64::EPSILON * anorm;
    let max_iter = 100 * n * n;
    let mut iter = 0;
    let mut hi = n - 1;
    while hi > 0 {
        if e[hi - 1].abs() <= thresh {
            e[hi - 1] = 0.0;
            hi -= 1;
            continue;
        }
        let mut lo = hi - 1;
        while lo > 0 {
            if e[lo - 1].abs() <= thresh {
                e[lo - 1] = 0.0;
                break;
            }
            lo -= 1;
        }

        if let Some(i) = (lo..=hi).find(|&i| d[i].abs() <= thresh) {
            d[i] = 0.0;
            if i < hi {
                // chase e[i] along row i with left rotations
                let mut f = e[i];
                e[i] = 0.0;
                for j in i + 1..=hi {
                    let (c, s, r) = givens(d[j], f);
                    d[j] = r;
                    if j < hi {
                        f = -s * e[j];
                        e[j] *= c;
                    }
                    if let Some(u) = ut.as_deref_mut() {
                        rotate_rows(u, m, j, i, c, s);
                    }
                }
            } else {
                // chase e[hi-1] up column hi with right rotations
                let mut f = e[hi - 1];
                e[hi - 1] = 0.0;
                for j in (lo..hi).rev() {
                    let (c, s, r) = givens(d[j], f);
                    d[j] = r;
                    if j > lo {
                        f = -s * e[j - 1];
                        e[j - 1] *= c;
                    }
                    rotate_rows(vt, n, j, hi, c, s);
                }
            }
            continue;
        }

        iter += 1;
        if iter > max_iter {
            return Err(Error::SvdNoConvergence(iter));
        }

        // Wilkinson shift from the trailing 2×2 of BᵀB restricted to the block
        let dm = d[hi - 1];
        let em = e[hi - 1];
        let a = dm * dm + if hi - 1 > lo { e[hi - 2] * e[hi - 2] } else { 0.0 };
        let b = dm * em;
        let c = d[hi] * d[hi] + em * em;
        let delta = 0.5 * (a - c);
        let shift2 = if delta == 0.0 && b == 0.0 {
            c
        } else {
            let denom = delta + delta.signum() * delta.hypot(b);
            if denom == 0.0 {
                c - b.abs()
            } else {
                c - b * b / denom
            }
        };
        let shift2 = shift2.max(0.0);

        let ut_ref = &mut ut;
        golub_kahan_step(
            d,
            e,
            lo,
            hi,
            shift2,
            |k, c, s| rotate_rows(vt, n, k, k + 1, c, s),
            |k, c, s| {
                if let Some(u) = ut_ref.as_deref_mut() {
                    rotate_rows(u, m, k, k + 1, c, s);
                }
            },
        );
    }
    Ok(())
}

/// Index of the largest-magnitude entry (first on ties).
fn argmax_abs(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in x.iter().enumerate() {
        if v.abs() > x[best].abs() {
            best = i;
        }
    }
    best
}

/// Sort ascending and normalize signs so every right vector's largest entry is positive.
fn finish_svd(
    sigma: Vec<f64>,
    ut: Option<Vec<f64>>,
    m: usize,
    vt: Vec<f64>,
    n: usize,
) -> (Vec<f64>, Option<DenseMatrix>, DenseMatrix) {
    let r = sigma.len();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| sigma[a].total_cmp(&sigma[b]));
    let values: Vec<f64> = order.iter().map(|&i| sigma[i]).collect();
    let mut v = DenseMatrix::zeros(n, r);
    let mut u = ut.as_ref().map(|_| DenseMatrix::zeros(m, r));
    for (col, &src) in order.iter().enumerate() {
        let vrow = &vt[src * n..(src + 1) * n];
        let sign = if vrow[argmax_abs(vrow)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            v[(i, col)] = sign * vrow[i];
        }
        if let (Some(u), Some(ut)) = (u.as_mut(), ut.as_ref()) {
            let urow = &ut[src * m..(src + 1) * m];
            for i in 0..m {
                u[(i, col)] = sign * urow[i];
            }
        }
    }
    (values, u, v)
}

/// Thin SVD with singular values ascending.
pub fn dense_svd(c: &DenseMatrix) -> Result<SvdResult> {
    if c.nrows == 0 || c.ncols == 0 {
        return Err(Error::DimensionMismatch { expected: 1, got: 0 });
    }
    if !c.is_finite() {
        return Err(Error::NonFinite("dense_svd input"));
    }
    if c.nrows >= c.ncols {
        let (sigma, ut, vt) = svd_tall_raw(c, true)?;
        let (values, u, v) = finish_svd(sigma, ut, c.nrows, vt, c.ncols);
        Ok(SvdResult { singular_values: values, left_vectors: u.unwrap(), right_vectors: v })
    } else {
        // C = (Cᵀ)ᵀ: left and right roles swap
        let ct = c.transpose();
        let (sigma, ut, vt) = svd_tall_raw(&ct, true)?;
        let (m, n) = (ct.nrows, ct.ncols);
        let ut = ut.unwrap();
        // right vectors of C are the left vectors of Cᵀ (length m = c.ncols)
        let (values, left_of_c, right_of_c) = finish_svd(sigma, Some(vt), n, ut, m);
        Ok(SvdResult {
            singular_values: values,
            left_vectors: left_of_c.unwrap(),
            right_vectors: right_of_c,
        })
    }
}

/// Smallest singular value of a tall matrix and its right singular vector.
pub fn smallest_singular_pair(c: &DenseMatrix) -> Result<(f64, Vec<f64>)> {
    if c.nrows < c.ncols || c.ncols == 0 {
        return Err(Error::DimensionMismatch { expected: c.ncols.max(1), got: c.nrows });
    }
    if !c.is_finite() {
        return Err(Error::NonFinite("smallest_singular_pair input"));
    }
    let (sigma, _, vt) = svd_tall_raw(c, false)?;
    let (values, _, v) = finish_svd(sigma, None, c.nrows, vt, c.ncols);
    Ok((values[0], v.column(0)))
}

/// Back substitution with the square upper bidiagonal matrix `B`.
pub fn solve_upper_bidiag(b: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = b.nrows;
    if b.ncols != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.ncols });
    }
    if rhs.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: rhs.len() });
    }
    let d: Vec<f64> = (0..n).map(|i| b[(i, i)]).collect();
    let e: Vec<f64> = (0..n.saturating_sub(1)).map(|i| b[(i, i + 1)]).collect();
    solve_bidiag_parts(&d, &e, rhs)
}

pub(crate) fn solve_bidiag_parts(d: &[f64], e: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = d.len();
    let mut w = vec![0.0; n];
    for i in (0..n).rev() {
        if d[i] == 0.0 {
            return Err(Error::SingularBidiagonal(i));
        }
        let mut acc = rhs[i];
        if i + 1 < n {
            acc -= e[i] * w[i + 1];
        }
        w[i] = acc / d[i];
    }
    Ok(w)
}

/// Full Householder QR of an `m × k` matrix (`k ≤ m`): `C = Q R` with `Q`
/// `m × m` orthogonal and `R` `m × k` upper trapezoidal.
///
/// Columns `k..m` of `Q` span the orthogonal complement of `range(C)` when `C`
/// has full column rank.
pub fn householder_qr_full(c: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let (m, k) = (c.nrows, c.ncols);
    if k > m {
        return Err(Error::DimensionMismatch { expected: m, got: k });
    }
    let mut r = c.data.clone();
    let mut hs = Vec::with_capacity(k);
    for j in 0..k.min(m) {
        let x: Vec<f64> = (j..m).map(|i| r[i * k + j]).collect();
        let (h, beta) = make_reflector(&x);
        reflect_rows(&mut r, k, &h, j, j + 1..k);
        r[j * k + j] = beta;
        for i in j + 1..m {
            r[i * k + j] = 0.0;
        }
        hs.push(h);
    }
    let mut q = DenseMatrix::identity(m).data;
    for (j, h) in hs.iter().enumerate().rev() {
        reflect_rows(&mut q, m, h, j, 0..m);
    }
    Ok((DenseMatrix { nrows: m, ncols: m, data: q }, DenseMatrix { nrows: m, ncols: k, data: r }))
}

/// Lower Cholesky factor `G = L Lᵀ`.
pub fn cholesky(g: &DenseMatrix) -> Result<DenseMatrix> {
    let n = g.nrows;
    if g.ncols != n {
        return Err(Error::DimensionMismatch { expected: n, got: g.ncols });
    }
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = g[(j, j)];
        for p in 0..j {
            diag -= l[(j, p)] * l[(j, p)];
        }
        if !(diag > 0.0) {
            return Err(Error::NotPositiveDefinite { index: j, pivot: diag });
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = g[(i, j)];
            for p in 0..j {
                s -= l[(i, p)] * l[(j, p)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Cyclic Jacobi eigensolver for a symmetric matrix; eigenvalues ascending,
/// eigenvectors as orthonormal columns.
pub fn symmetric_eig(a: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let n = a.nrows;
    if a.ncols != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.ncols });
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("symmetric_eig input"));
    }
    let mut s = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    // rows of vt are eigenvectors
    let mut vt = DenseMatrix::identity(n).data;
    let max_sweeps = 100;
    let mut converged = n <= 1;
    for _ in 0..max_sweeps {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| s[(i, j)] * s[(i, j)])
            .sum();
        let total = off + (0..n).map(|i| s[(i, i)] * s[(i, i)]).sum::<f64>();
        if off <= (f64::EPSILON * f64::EPSILON) * total || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = s[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = s[(p, p)];
                let aqq = s[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / t.hypot(1.0);
                let sn = t * c;
                // S ← Jᵀ S J with J rotating coordinates p, q
                for k in 0..n {
                    let skp = s[(k, p)];
                    let skq = s[(k, q)];
                    s[(k, p)] = c * skp - sn * skq;
                    s[(k, q)] = sn * skp + c * skq;
                }
                for k in 0..n {
                    let spk = s[(p, k)];
                    let sqk = s[(q, k)];
                    s[(p, k)] = c * spk - sn * sqk;
                    s[(q, k)] = sn * spk + c * sqk;
                }
                s[(p, q)] = 0.0;
                s[(q, p)] = 0.0;
                rotate_rows(&mut vt, n, p, q, c, -sn);
            }
        }
    }
    if !converged {
        return Err(Error::EigNoConvergence(max_sweeps));
    }
    let diag: Vec<f64> = (0..n).map(|i| s[(i, i)]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |i, j| vt[order[j] * n + i]);
    Ok((values, vectors))
}

/// All eigenpairs of `F g = λ G g` with `F` symmetric and `G` symmetric positive
/// definite, by reduction `L⁻¹ F L⁻ᵀ` through the Cholesky factor of `G`.
pub fn spd_generalized_eig(f: &DenseMatrix, g: &DenseMatrix) -> Result<GenEigResult> {
    let n = f.nrows;
    if f.ncols != n || g.nrows != n || g.ncols != n {
        return Err(Error::DimensionMismatch { expected: n, got: g.nrows });
    }
    let l = cholesky(g)?;
    // X = L⁻¹ F, column by column
    let forward = |b: &[f64]| -> Vec<f64> {
        let mut x = vec![0.0; n];
        for i in 0..n {
            let mut acc = b[i];
            for p in 0..i {
                acc -= l[(i, p)] * x[p];
            }
            x[i] = acc / l[(i, i)];
        }
        x
    };
    let x_cols: Vec<Vec<f64>> = (0..n).map(|j| forward(&f.column(j))).collect();
    // C = L⁻¹ Xᵀ; column j of Xᵀ is row j of X
    let c_cols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let row_j: Vec<f64> = (0..n).map(|i| x_cols[i][j]).collect();
            forward(&row_j)
        })
        .collect();
    let c = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (c_cols[j][i] + c_cols[i][j]));
    let (values, y) = symmetric_eig(&c)?;
    let mut vectors = DenseMatrix::zeros(n, n);
    for j in 0..n {
        // g = L⁻ᵀ y
        let yj = y.column(j);
        let mut gj = vec![0.0; n];
        for i in (0..n).rev() {
            let mut acc = yj[i];
            for p in i + 1..n {
                acc -= l[(p, i)] * gj[p];
            }
            gj[i] = acc / l[(i, i)];
        }
        vectors.set_column(j, &gj);
    }
    Ok(GenEigResult { eigenvalues: values, eigenvectors: vectors })
}
