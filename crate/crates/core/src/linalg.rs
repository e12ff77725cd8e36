//! Dense linear algebra on column-major matrices and blocked dictionaries.
//!
//! Block indices are 0-based in this API. Error messages report them 1-based.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, OneBased, Result};

/// Tolerance on `|‖d_i‖₂ − 1|` for dictionary atoms.
pub const ATOM_NORM_TOL: f64 = 1e-10;

/// Relative singular-value threshold below which a subdictionary is rank deficient.
pub const RANK_TOL: f64 = 1e-10;

/// A dense real matrix stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// All-zero `rows x cols` matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// `n x n` identity.
    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Wraps column-major storage.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from row-major storage.
    pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix::from_fn(rows, cols, |r, c| data[r * cols + c]))
    }

    /// Builds a matrix entry by entry.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            for r in 0..rows {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Diagonal matrix.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Matrix::from_fn(n, n, |r, c| if r == c { diag[r] } else { 0.0 })
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Whether either dimension is zero.
    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    /// Entry `(r, c)`.
    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[c * self.rows + r]
    }

    /// Sets entry `(r, c)`.
    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[c * self.rows + r] = v;
    }

    /// Column `c` as a contiguous slice.
    #[inline]
    pub fn column(&self, c: usize) -> &[f64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    /// Mutable column `c`.
    #[inline]
    pub fn column_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    /// Contiguous columns `start..end`.
    pub fn columns(&self, start: usize, end: usize) -> &[f64] {
        &self.data[start * self.rows..end * self.rows]
    }

    /// Column-major storage.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Consumes the matrix, returning its column-major storage.
    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.data.len());
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.push(self.get(r, c));
            }
        }
        out
    }

    /// Transposed copy.
    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    /// Copy of columns `start..end`.
    pub fn column_range(&self, start: usize, end: usize) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: end - start,
            data: self.columns(start, end).to_vec(),
        }
    }

    /// `self * other`.
    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::invalid(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(gemm(self, false, other, false))
    }

    /// `selfᵀ * other`.
    pub fn tr_mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(Error::invalid(format!(
                "cannot multiply ({}x{})ᵀ by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(gemm(self, true, other, false))
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "vector length must equal column count");
        let mut out = vec![0.0; self.rows];
        for (c, &vc) in v.iter().enumerate() {
            if vc == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.column(c)) {
                *o += a * vc;
            }
        }
        out
    }

    /// `selfᵀ * v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows, "vector length must equal row count");
        (0..self.cols).map(|c| dot(self.column(c), v)).collect()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }
}

/// Dense product through the `matrixmultiply` kernel, either operand optionally transposed.
fn gemm(a: &Matrix, trans_a: bool, b: &Matrix, trans_b: bool) -> Matrix {
    let (m, k) = if trans_a { (a.cols, a.rows) } else { (a.rows, a.cols) };
    let n = if trans_b { b.rows } else { b.cols };
    let mut c = Matrix::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    // Column-major A has strides (1, rows); its transpose swaps them.
    let (rsa, csa) = if trans_a { (a.rows, 1) } else { (1, a.rows) };
    let (rsb, csb) = if trans_b { (b.rows, 1) } else { (1, b.rows) };
    // SAFETY: the strides above address exactly the m*k, k*n and m*n entries of the
    // three owned buffers, and `c` does not alias `a` or `b`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            rsa as isize,
            csa as isize,
            b.data.as_ptr(),
            rsb as isize,
            csb as isize,
            0.0,
            c.data.as_mut_ptr(),
            1,
            m as isize,
        );
    }
    c
}

/// `D[:, row_start..]ᵀ D[:, col_start..col_end]` without copying the operands.
///
/// Entry `(r, c)` is the inner product of atoms `row_start + r` and `col_start + c`.
pub(crate) fn cross_gram(atoms: &Matrix, row_start: usize, col_start: usize, col_end: usize) -> Matrix {
    let l = atoms.rows;
    let m = atoms.cols - row_start;
    let n = col_end - col_start;
    let mut c = Matrix::zeros(m, n);
    if m == 0 || n == 0 || l == 0 {
        return c;
    }
    let a = atoms.columns(row_start, atoms.cols);
    let b = atoms.columns(col_start, col_end);
    // SAFETY: `a` holds m columns of length l (read transposed with strides (l, 1)),
    // `b` holds n columns of length l, and `c` is a fresh m x n buffer.
    unsafe {
        matrixmultiply::dgemm(
            m,
            l,
            n,
            1.0,
            a.as_ptr(),
            l as isize,
            1,
            b.as_ptr(),
            1,
            l as isize,
            0.0,
            c.data.as_mut_ptr(),
            1,
            m as isize,
        );
    }
    c
}

/// Inner product.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = 4 * i;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for j in 4 * chunks..a.len() {
        s += a[j] * b[j];
    }
    s
}

/// Euclidean norm, scaled to avoid overflow.
pub fn norm2(v: &[f64]) -> f64 {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let s: f64 = v.iter().map(|x| (x / scale) * (x / scale)).sum();
    scale * s.sqrt()
}

/// Householder QR of a tall matrix (`rows >= cols`), stored compactly.
#[derive(Debug, Clone)]
pub struct Qr {
    packed: Matrix,
    tau: Vec<f64>,
}

impl Qr {
    /// Factorizes `a`.
    pub fn new(a: Matrix) -> Result<Qr> {
        let (m, n) = (a.rows, a.cols);
        if m < n {
            return Err(Error::invalid(format!(
                "QR requires rows >= cols, got {m}x{n}"
            )));
        }
        let mut packed = a;
        let mut tau = vec![0.0; n];
        for j in 0..n {
            let col = &mut packed.data[j * m..(j + 1) * m];
            let x = &mut col[j..];
            let alpha = x[0];
            let tail = norm2(&x[1..]);
            if tail == 0.0 {
                // Already upper triangular in this column; H = I.
                tau[j] = 0.0;
                continue;
            }
            let beta = -alpha.signum() * hypot(alpha, tail);
            tau[j] = (beta - alpha) / beta;
            let inv = 1.0 / (alpha - beta);
            for v in x[1..].iter_mut() {
                *v *= inv;
            }
            x[0] = beta;
            // Apply H_j = I - tau v vᵀ (v[0] = 1) to the trailing columns.
            let (head, rest) = packed.data.split_at_mut((j + 1) * m);
            let v = &head[j * m + j..(j + 1) * m];
            for c in 0..(n - j - 1) {
                let target = &mut rest[c * m + j..(c + 1) * m];
                let mut s = target[0];
                s += dot(&v[1..], &target[1..]);
                s *= tau[j];
                target[0] -= s;
                for (t, &vi) in target[1..].iter_mut().zip(&v[1..]) {
                    *t -= s * vi;
                }
            }
        }
        Ok(Qr { packed, tau })
    }

    /// Number of columns of the factorized matrix.
    pub fn cols(&self) -> usize {
        self.packed.cols
    }

    /// Overwrites `y` with `Qᵀ y`.
    pub fn apply_qt(&self, y: &mut [f64]) {
        let m = self.packed.rows;
        assert_eq!(y.len(), m);
        for j in 0..self.packed.cols {
            if self.tau[j] == 0.0 {
                continue;
            }
            let v = &self.packed.data[j * m + j..(j + 1) * m];
            let mut s = y[j] + dot(&v[1..], &y[j + 1..]);
            s *= self.tau[j];
            y[j] -= s;
            for (t, &vi) in y[j + 1..].iter_mut().zip(&v[1..]) {
                *t -= s * vi;
            }
        }
    }

    /// The `cols x cols` upper-triangular factor.
    pub fn r(&self) -> Matrix {
        let n = self.packed.cols;
        Matrix::from_fn(n, n, |r, c| if r <= c { self.packed.get(r, c) } else { 0.0 })
    }

    /// Solves `R z = b` by back substitution.
    #[allow(clippy::needless_range_loop)]
    pub fn solve_r(&self, b: &[f64]) -> Vec<f64> {
        let n = self.packed.cols;
        let mut z = b[..n].to_vec();
        for i in (0..n).rev() {
            let mut s = z[i];
            for c in i + 1..n {
                s -= self.packed.get(i, c) * z[c];
            }
            z[i] = s / self.packed.get(i, i);
        }
        z
    }

    /// Least-squares coefficients `argmin ‖A z − y‖₂`.
    pub fn solve_least_squares(&self, y: &[f64]) -> Vec<f64> {
        let mut qty = y.to_vec();
        self.apply_qt(&mut qty);
        self.solve_r(&qty)
    }

    /// `Tr((AᵀA)⁻¹) = ‖R⁻¹‖_F²`.
    #[allow(clippy::needless_range_loop)]
    pub fn inverse_gram_trace(&self) -> f64 {
        let n = self.packed.cols;
        let mut total = 0.0;
        // Column c of R⁻¹ solves R z = e_c and is zero below row c.
        for c in 0..n {
            let mut z = vec![0.0; c + 1];
            z[c] = 1.0 / self.packed.get(c, c);
            for i in (0..c).rev() {
                let mut s = 0.0;
                for t in i + 1..=c {
                    s -= self.packed.get(i, t) * z[t];
                }
                z[i] = s / self.packed.get(i, i);
            }
            total += z.iter().map(|v| v * v).sum::<f64>();
        }
        total
    }

    /// Singular values of the factorized matrix, descending.
    pub fn singular_values(&self) -> Vec<f64> {
        jacobi_singular_values(self.r())
    }
}

#[inline]
fn hypot(a: f64, b: f64) -> f64 {
    libm::hypot(a, b)
}

/// Singular values of `a`, in descending order.
pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    if a.is_empty() {
        return Err(Error::invalid("singular values of an empty matrix"));
    }
    if a.rows > a.cols {
        Ok(Qr::new(a.clone())?.singular_values())
    } else if a.rows < a.cols {
        Ok(Qr::new(a.transpose())?.singular_values())
    } else {
        Ok(jacobi_singular_values(a.clone()))
    }
}

/// Largest singular value of `a`.
pub fn spectral_norm(a: &Matrix) -> Result<f64> {
    Ok(singular_values(a)?[0])
}

/// One-sided Jacobi (Hestenes) on the columns of a square matrix.
fn jacobi_singular_values(mut u: Matrix) -> Vec<f64> {
    let n = u.cols;
    let m = u.rows;
    const EPS: f64 = 1e-15;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let up = u.column(p);
                    let uq = u.column(q);
                    (dot(up, up), dot(uq, uq), dot(up, uq))
                };
                if gamma == 0.0 || gamma.abs() <= EPS * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = u.data.split_at_mut(q * m);
                let up = &mut lo[p * m..(p + 1) * m];
                let uq = &mut hi[..m];
                for (a, b) in up.iter_mut().zip(uq.iter_mut()) {
                    let (x, y) = (*a, *b);
                    *a = c * x - s * y;
                    *b = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..n).map(|c| norm2(u.column(c))).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Checks that `set` is strictly ascending and every index is below `num_blocks`.
pub fn check_block_set(set: &[usize], num_blocks: usize) -> Result<()> {
    for w in set.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::invalid(format!(
                "block set {} must be sorted without duplicates",
                OneBased(set)
            )));
        }
    }
    if let Some(&bad) = set.iter().find(|&&i| i >= num_blocks) {
        return Err(Error::invalid(format!(
            "block index {} out of range 1..={num_blocks}",
            bad + 1
        )));
    }
    Ok(())
}

/// An `L x N` dictionary with unit-norm atoms, split into `M` blocks of `d` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockedDictionary {
    atoms: Matrix,
    block_size: usize,
}

impl BlockedDictionary {
    /// Validates the block partition and atom normalization.
    pub fn new(atoms: Matrix, block_size: usize) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::invalid("block size must be positive"));
        }
        if atoms.cols == 0 || atoms.rows == 0 {
            return Err(Error::invalid("dictionary must be non-empty"));
        }
        if !atoms.cols.is_multiple_of(block_size) {
            return Err(Error::invalid(format!(
                "{} columns do not split into blocks of {block_size}",
                atoms.cols
            )));
        }
        for c in 0..atoms.cols {
            let n = norm2(atoms.column(c));
            if (n - 1.0).abs() > ATOM_NORM_TOL {
                return Err(Error::invalid(format!(
                    "atom {} has norm {n}, expected 1",
                    c + 1
                )));
            }
        }
        Ok(BlockedDictionary { atoms, block_size })
    }

    /// Rescales every column to unit norm, then validates.
    pub fn normalized(mut atoms: Matrix, block_size: usize) -> Result<Self> {
        for c in 0..atoms.cols {
            let n = norm2(atoms.column(c));
            if n == 0.0 {
                return Err(Error::invalid(format!("atom {} is zero", c + 1)));
            }
            atoms.column_mut(c).iter_mut().for_each(|v| *v /= n);
        }
        BlockedDictionary::new(atoms, block_size)
    }

    /// Same atoms, different block partition.
    pub fn with_block_size(&self, block_size: usize) -> Result<Self> {
        if block_size == 0 || !self.atoms.cols.is_multiple_of(block_size) {
            return Err(Error::invalid(format!(
                "{} columns do not split into blocks of {block_size}",
                self.atoms.cols
            )));
        }
        Ok(BlockedDictionary {
            atoms: self.atoms.clone(),
            block_size,
        })
    }

    /// The dictionary matrix.
    pub fn atoms(&self) -> &Matrix {
        &self.atoms
    }

    /// Measurement count `L`.
    pub fn measurements(&self) -> usize {
        self.atoms.rows
    }

    /// Parameter length `N = M d`.
    pub fn signal_len(&self) -> usize {
        self.atoms.cols
    }

    /// Block size `d`.
    pub fn block_size(&self) -> usize {
        self.block_size
    }

    /// Block count `M`.
    pub fn num_blocks(&self) -> usize {
        self.atoms.cols / self.block_size
    }

    fn check_block(&self, i: usize) -> Result<()> {
        if i >= self.num_blocks() {
            return Err(Error::invalid(format!(
                "block index {} out of range 1..={}",
                i + 1,
                self.num_blocks()
            )));
        }
        Ok(())
    }

    /// Column-major storage of block `i` (`L * d` values).
    pub fn block_slice(&self, i: usize) -> &[f64] {
        let d = self.block_size;
        self.atoms.columns(i * d, (i + 1) * d)
    }

    /// The `L x d` submatrix `D[i]`.
    pub fn block_columns(&self, i: usize) -> Result<Matrix> {
        self.check_block(i)?;
        let d = self.block_size;
        Ok(self.atoms.column_range(i * d, (i + 1) * d))
    }

    /// The `L x |I| d` submatrix `D_I` for an ascending block set.
    pub fn subdictionary(&self, set: &[usize]) -> Result<Matrix> {
        check_block_set(set, self.num_blocks())?;
        let mut data = Vec::with_capacity(self.atoms.rows * self.block_size * set.len());
        for &i in set {
            data.extend_from_slice(self.block_slice(i));
        }
        Matrix::from_col_major(self.atoms.rows, set.len() * self.block_size, data)
    }

    /// Block correlations `ρ_i = ‖D[i]ᵀ v‖₂` for every block.
    pub fn block_correlations(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.atoms.rows, "vector length must equal L");
        let d = self.block_size;
        let atom_corr = self.atoms.tr_mul_vec(v);
        atom_corr.chunks(d).map(norm2).collect()
    }

    /// `D x`.
    pub fn apply(&self, x: &BlockSparseVector) -> Vec<f64> {
        assert_eq!(x.len(), self.signal_len(), "signal length must equal N");
        let mut out = vec![0.0; self.atoms.rows];
        for i in x.support() {
            let blk = x.block(i);
            for (j, &xv) in blk.iter().enumerate() {
                if xv == 0.0 {
                    continue;
                }
                let col = self.atoms.column(i * self.block_size + j);
                for (o, &a) in out.iter_mut().zip(col) {
                    *o += a * xv;
                }
            }
        }
        out
    }
}

/// A length-`N` vector viewed as `M` blocks of `d` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSparseVector {
    values: Vec<f64>,
    block_size: usize,
}

impl BlockSparseVector {
    /// Wraps `values`; the length must be a multiple of `block_size`.
    pub fn new(values: Vec<f64>, block_size: usize) -> Result<Self> {
        if block_size == 0 || !values.len().is_multiple_of(block_size) {
            return Err(Error::invalid(format!(
                "length {} does not split into blocks of {block_size}",
                values.len()
            )));
        }
        Ok(BlockSparseVector { values, block_size })
    }

    /// The zero vector with `num_blocks` blocks.
    pub fn zeros(num_blocks: usize, block_size: usize) -> Self {
        BlockSparseVector {
            values: vec![0.0; num_blocks * block_size],
            block_size,
        }
    }

    /// Entries.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Consumes the vector, returning its entries.
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Total length `N`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Whether the vector has zero length.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Block size `d`.
    pub fn block_size(&self) -> usize {
        self.block_size
    }

    /// Block count `M`.
    pub fn num_blocks(&self) -> usize {
        self.values.len() / self.block_size
    }

    /// Entries of block `i`.
    pub fn block(&self, i: usize) -> &[f64] {
        &self.values[i * self.block_size..(i + 1) * self.block_size]
    }

    /// Mutable entries of block `i`.
    pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.block_size..(i + 1) * self.block_size]
    }

    /// Euclidean norm of block `i`.
    pub fn block_norm(&self, i: usize) -> f64 {
        norm2(self.block(i))
    }

    /// Ascending indices of blocks with at least one nonzero entry.
    pub fn support(&self) -> Vec<usize> {
        (0..self.num_blocks())
            .filter(|&i| self.block(i).iter().any(|&v| v != 0.0))
            .collect()
    }

    /// `(min, max)` block norm over the support, or `None` for the zero vector.
    pub fn norm_range(&self) -> Option<(f64, f64)> {
        let norms: Vec<f64> = self.support().into_iter().map(|i| self.block_norm(i)).collect();
        let lo = norms.iter().copied().reduce(f64::min)?;
        let hi = norms.iter().copied().reduce(f64::max)?;
        Some((lo, hi))
    }

    /// `‖self − other‖₂²`.
    pub fn squared_distance(&self, other: &BlockSparseVector) -> f64 {
        assert_eq!(self.len(), other.len());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

/// Least squares restricted to the blocks in `set`, zero elsewhere.
///
/// Solved through a Householder QR of `D_I`. Fails with [`Error::Singular`] when the
/// smallest singular value of `D_I` is below [`RANK_TOL`] times the largest.
pub fn restricted_least_squares(
    dict: &BlockedDictionary,
    set: &[usize],
    y: &[f64],
) -> Result<BlockSparseVector> {
    let d = dict.block_size();
    let mut out = BlockSparseVector::zeros(dict.num_blocks(), d);
    if set.is_empty() {
        check_y(dict, y)?;
        return Ok(out);
    }
    let qr = factor_restricted(dict, set)?;
    check_y(dict, y)?;
    let coef = qr.solve_least_squares(y);
    for (n, &i) in set.iter().enumerate() {
        out.block_mut(i).copy_from_slice(&coef[n * d..(n + 1) * d]);
    }
    Ok(out)
}

fn check_y(dict: &BlockedDictionary, y: &[f64]) -> Result<()> {
    if y.len() != dict.measurements() {
        return Err(Error::invalid(format!(
            "observation has length {}, dictionary has {} rows",
            y.len(),
            dict.measurements()
        )));
    }
    Ok(())
}

/// QR factorization of `D_I`, rejecting rank-deficient sets.
pub fn factor_restricted(dict: &BlockedDictionary, set: &[usize]) -> Result<Qr> {
    let sub = dict.subdictionary(set)?;
    if sub.cols() > sub.rows() {
        return Err(Error::invalid(format!(
            "|I| d = {} exceeds L = {}",
            sub.cols(),
            sub.rows()
        )));
    }
    let qr = Qr::new(sub)?;
    let sv = qr.singular_values();
    let (hi, lo) = (sv[0], sv[sv.len() - 1]);
    if !(lo >= RANK_TOL * hi) || hi == 0.0 {
        return Err(Error::Singular {
            blocks: set.to_vec(),
        });
    }
    Ok(qr)
}

#[cfg(feature = "serde")]
impl serde::Serialize for BlockSparseVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("BlockSparseVector", 2)?;
        st.serialize_field("d", &self.block_size())?;
        st.serialize_field("values", self.values())?;
        st.end()
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for BlockSparseVector {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> core::result::Result<Self, D::Error> {
        #[derive(serde::Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            d: usize,
            values: Vec<f64>,
        }
        let raw = Raw::deserialize(de)?;
        BlockSparseVector::new(raw.values, raw.d).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_dict(n: usize, d: usize) -> BlockedDictionary {
        BlockedDictionary::new(Matrix::identity(n), d).unwrap()
    }

    #[test]
    fn identity_block_columns() {
        let dict = identity_dict(4, 2);
        let b = dict.block_columns(1).unwrap();
        assert_eq!(b, Matrix::identity(4).column_range(2, 4));
        assert_eq!(dict.block_columns(0).unwrap(), Matrix::identity(4).column_range(0, 2));
    }

    #[test]
    fn block_index_out_of_range() {
        let dict = identity_dict(4, 2);
        let err = dict.block_columns(2).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(ref m) if m.contains("block index 3")));
    }

    #[test]
    fn subdictionary_whole_set_and_errors() {
        let dict = identity_dict(4, 2);
        assert_eq!(dict.subdictionary(&[0, 1]).unwrap(), Matrix::identity(4));
        assert_eq!(dict.subdictionary(&[1]).unwrap(), Matrix::identity(4).column_range(2, 4));
        assert!(dict.subdictionary(&[1, 0]).is_err());
        assert!(dict.subdictionary(&[1, 1]).is_err());
    }

    #[test]
    fn unnormalized_atoms_rejected() {
        let m = Matrix::from_diagonal(&[1.0, 2.0]);
        assert!(BlockedDictionary::new(m, 1).is_err());
        assert!(BlockedDictionary::new(Matrix::identity(3), 2).is_err());
    }

    #[test]
    fn spectral_norm_diagonal_cases() {
        assert!((spectral_norm(&Matrix::identity(6)).unwrap() - 1.0).abs() < 1e-15);
        let d = Matrix::from_diagonal(&[3.0, -5.0]);
        assert!((spectral_norm(&d).unwrap() - 5.0).abs() < 1e-14);
        assert!(spectral_norm(&Matrix::zeros(0, 3)).is_err());
    }

    #[test]
    fn least_squares_orthogonal_observation_gives_zero() {
        let dict = identity_dict(4, 2);
        let y = [0.0, 0.0, 1.5, -2.0];
        let v = restricted_least_squares(&dict, &[0], &y).unwrap();
        assert!(v.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn singular_subdictionary_named() {
        // Block 2 duplicates block 1.
        let mut m = Matrix::zeros(4, 4);
        m.set(0, 0, 1.0);
        m.set(1, 1, 1.0);
        m.set(0, 2, 1.0);
        m.set(1, 3, 1.0);
        let dict = BlockedDictionary::new(m, 2).unwrap();
        let err = restricted_least_squares(&dict, &[0, 1], &[1.0, 1.0, 0.0, 0.0]).unwrap_err();
        assert_eq!(err, Error::Singular { blocks: alloc::vec![0, 1] });
    }

    #[test]
    fn inverse_gram_trace_of_diagonal() {
        let qr = Qr::new(Matrix::from_diagonal(&[2.0, 0.5, 1.0])).unwrap();
        assert!((qr.inverse_gram_trace() - (0.25 + 4.0 + 1.0)).abs() < 1e-13);
    }

    #[test]
    fn support_and_norm_range() {
        let v = BlockSparseVector::new(alloc::vec![0.0, 0.0, 3.0, 4.0, 0.0, 1.0], 2).unwrap();
        assert_eq!(v.support(), alloc::vec![1, 2]);
        assert_eq!(v.norm_range(), Some((1.0, 5.0)));
        assert!(BlockSparseVector::new(alloc::vec![0.0; 5], 2).is_err());
    }
}
