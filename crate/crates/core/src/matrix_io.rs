//! Compressed-row sparse storage, products with `A` and `Aᵀ`, Matrix Market I/O
//! and the two diagonal test-matrix families.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Immutable `nrows × ncols` matrix in compressed-row form.
///
/// Column indices inside a row are sorted and unique, values are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Assemble from `(row, col, value)` triplets. Duplicates are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (i, j, v) in triplets {
            if i >= nrows {
                return Err(Error::MatrixMarket(format!("row index {i} out of bounds for {nrows} rows")));
            }
            if j >= ncols {
                return Err(Error::MatrixMarket(format!("column index {j} out of bounds for {ncols} columns")));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite("sparse matrix entries"));
            }
            entries.push((i, j, v));
        }
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
            last = Some((i, j));
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self { nrows, ncols, row_ptr, col_idx, values })
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        Self::from_triplets(n, n, diag.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n]).expect("identity is well formed")
    }

    /// Build from a dense row-major array of rows, dropping exact zeros.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut trip = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(Error::DimensionMismatch { expected: ncols, got: row.len() });
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(nrows, ncols, trip)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |p| (i, self.col_idx[p], self.values[p]))
        })
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.triplets() {
            out[i][j] = v;
        }
        out
    }

    /// The diagonal entries `A[i][i]`, `i < min(nrows, ncols)`.
    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nrows.min(self.ncols)];
        for (i, j, v) in self.triplets() {
            if i == j {
                d[i] = v;
            }
        }
        d
    }

    /// Explicit transpose (used when the solver works on `Aᵀ` for wide inputs).
    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.triplets().map(|(i, j, v)| (j, i, v)))
            .expect("transpose of a valid matrix is valid")
    }

    /// `y = A x`
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y)?;
        Ok(y)
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch { expected: self.ncols, got: x.len() });
        }
        if y.len() != self.nrows {
            return Err(Error::DimensionMismatch { expected: self.nrows, got: y.len() });
        }
        for (i, yi) in y.iter_mut().enumerate() {
            let range = self.row_ptr[i]..self.row_ptr[i + 1];
            *yi = self.col_idx[range.clone()]
                .iter()
                .zip(&self.values[range])
                .map(|(&j, &v)| v * x[j])
                .sum();
        }
        Ok(())
    }

    /// `y = Aᵀ x` by a column-scatter pass over the row storage.
    pub fn matvec_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.ncols];
        self.matvec_transpose_into(x, &mut y)?;
        Ok(y)
    }

    pub fn matvec_transpose_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.nrows {
            return Err(Error::DimensionMismatch { expected: self.nrows, got: x.len() });
        }
        if y.len() != self.ncols {
            return Err(Error::DimensionMismatch { expected: self.ncols, got: y.len() });
        }
        y.iter_mut().for_each(|v| *v = 0.0);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                y[self.col_idx[p]] += self.values[p] * xi;
            }
        }
        Ok(())
    }

    /// Frobenius norm, a cheap upper bound for the spectral norm.
    pub fn frobenius_norm(&self) -> f64 {
        crate::vecops::norm(&self.values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

/// Read a `matrix coordinate real|integer general|symmetric` Matrix Market stream.
pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<SparseMatrix> {
    let mut lines = reader.lines();

    let header = lines
        .next()
        .ok_or_else(|| Error::MatrixMarket("empty input".into()))??;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(Error::MatrixMarket(format!("malformed header: {header:?}")));
    }
    if tokens[1] != "matrix" {
        return Err(Error::MatrixMarket(format!("unsupported object {:?}", tokens[1])));
    }
    if tokens[2] != "coordinate" {
        return Err(Error::MatrixMarket(format!("unsupported format {:?}", tokens[2])));
    }
    match tokens[3].as_str() {
        "real" | "integer" => {}
        other => return Err(Error::MatrixMarket(format!("unsupported field {other:?}"))),
    }
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(Error::MatrixMarket(format!("unsupported symmetry {other:?}"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut entries = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let bad = || Error::MatrixMarket(format!("malformed line {}: {trimmed:?}", lineno + 2));
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(bad());
                }
                let parse = |s: &str| s.parse::<usize>().map_err(|_| bad());
                size = Some((parse(fields[0])?, parse(fields[1])?, parse(fields[2])?));
            }
            Some((m, n, _)) => {
                if fields.len() != 3 {
                    return Err(bad());
                }
                let i: usize = fields[0].parse().map_err(|_| bad())?;
                let j: usize = fields[1].parse().map_err(|_| bad())?;
                let v: f64 = fields[2].parse().map_err(|_| bad())?;
                if i == 0 || j == 0 || i > m || j > n {
                    return Err(Error::MatrixMarket(format!(
                        "index ({i}, {j}) out of bounds for {m}x{n} matrix"
                    )));
                }
                entries.push((i - 1, j - 1, v));
                if symmetry == Symmetry::Symmetric && i != j {
                    entries.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (m, n, nnz) = size.ok_or_else(|| Error::MatrixMarket("missing size line".into()))?;
    if symmetry == Symmetry::Symmetric && m != n {
        return Err(Error::MatrixMarket(format!("symmetric matrix must be square, got {m}x{n}")));
    }
    let stored = if symmetry == Symmetry::Symmetric {
        entries.iter().filter(|(i, j, _)| i >= j).count()
    } else {
        entries.len()
    };
    if stored != nnz {
        return Err(Error::MatrixMarket(format!("expected {nnz} entries, found {stored}")));
    }
    SparseMatrix::from_triplets(m, n, entries)
}

/// Write `a` as `matrix coordinate real general` with shortest round-trip values.
pub fn write_matrix_market<W: Write>(a: &SparseMatrix, mut writer: W) -> Result<()> {
    writeln!(writer, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(writer, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for (i, j, v) in a.triplets() {
        writeln!(writer, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

const GENERATOR_ORDER: usize = 1000;

/// 1000×1000 diagonal matrix whose smallest values `1, 1+10⁻ˢ, …, 1+9·10⁻ˢ`
/// cluster more tightly as `s` grows; the rest are `2, 3, …, 991`.
///
/// The candidate list has 1009 values and is truncated to the first 1000,
/// so `σ₁ = 1` and `κ = 991` for every `s`.
pub fn make_clustered_diag(s: u32) -> Result<SparseMatrix> {
    if !(1..=4).contains(&s) {
        return Err(Error::InvalidGenerator(format!("clustered:{s} (s must be in 1..=4)")));
    }
    let h = 10f64.powi(-(s as i32));
    let diag: Vec<f64> = (0..10)
        .map(|i| 1.0 + i as f64 * h)
        .chain((2..=1000).map(|v| v as f64))
        .take(GENERATOR_ORDER)
        .collect();
    SparseMatrix::from_diagonal(&diag)
}

/// 1000×1000 diagonal matrix with diagonal `linspace(1, 10ˢ, 1000)`, so `κ = 10ˢ`.
pub fn make_illcond_diag(s: u32) -> Result<SparseMatrix> {
    if s == 0 || s > 300 {
        return Err(Error::InvalidGenerator(format!("illcond:{s} (s must be in 1..=300)")));
    }
    let hi = 10f64.powi(s as i32);
    let n = GENERATOR_ORDER;
    let step = (hi - 1.0) / (n - 1) as f64;
    let diag: Vec<f64> = (0..n)
        .map(|i| if i == n - 1 { hi } else { 1.0 + i as f64 * step })
        .collect();
    SparseMatrix::from_diagonal(&diag)
}
