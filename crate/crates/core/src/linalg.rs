//! Dense matrices (backed by `nalgebra`) and the block-tridiagonal operators
//! produced by LDG assembly.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    inner: DMatrix<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            inner: DMatrix::zeros(rows, cols),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: DMatrix::identity(n, n),
        }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Ok(Self {
            inner: DMatrix::from_row_slice(rows, cols, entries),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> f64) -> Self {
        Self {
            inner: DMatrix::from_fn(rows, cols, f),
        }
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.inner[(i, j)] = v;
    }

    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.inner[(i, j)] += v;
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<f64> {
        self.inner.transpose().as_slice().to_vec()
    }

    pub fn as_nalgebra(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols() != other.rows() {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            )));
        }
        Ok(DenseMatrix {
            inner: &self.inner * &other.inner,
        })
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix applied to vector of length {}",
                self.rows(),
                self.cols(),
                x.len()
            )));
        }
        let mut y = vec![0.0; self.rows()];
        for j in 0..self.cols() {
            let xj = x[j];
            if xj != 0.0 {
                for (yi, a) in y.iter_mut().zip(self.inner.column(j).iter()) {
                    *yi += a * xj;
                }
            }
        }
        Ok(y)
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &DenseMatrix) -> Result<()> {
        if self.rows() != other.rows() || self.cols() != other.cols() {
            return Err(Error::DimensionMismatch("axpy on matrices of different shape".into()));
        }
        self.inner += &other.inner * alpha;
        Ok(())
    }

    pub fn scale(&mut self, alpha: f64) {
        self.inner *= alpha;
    }

    pub fn norm_inf(&self) -> f64 {
        self.inner
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// LU factorization with partial pivoting.
    pub fn lu(&self) -> Result<LuFactors> {
        if self.rows() != self.cols() {
            return Err(Error::DimensionMismatch(format!(
                "LU needs a square matrix, got {}x{}",
                self.rows(),
                self.cols()
            )));
        }
        let n = self.rows();
        let lu = self.inner.clone().lu();
        let u = lu.u();
        let scale = self.inner.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tiny = f64::EPSILON * (n.max(1) as f64) * scale;
        for i in 0..n {
            let d = u[(i, i)];
            if !(d.abs() > tiny) {
                return Err(Error::Singular { pivot: i });
            }
        }
        Ok(LuFactors { lu })
    }

    pub fn lu_solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.lu()?.solve(b)
    }
}

/// Reusable LU factorization.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl LuFactors {
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.lu.l().nrows();
        if b.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side has length {}, matrix is {n}x{n}",
                b.len()
            )));
        }
        let rhs = nalgebra::DVector::from_column_slice(b);
        self.lu
            .solve(&rhs)
            .map(|x| x.as_slice().to_vec())
            .ok_or(Error::Singular { pivot: 0 })
    }
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `y += alpha * x`.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Square block-tridiagonal matrix with `n` block rows of size `bs x bs`.
///
/// Row block `c` couples to column blocks `c - 1` (lower), `c` (diag) and `c + 1` (upper).
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTridiag {
    n: usize,
    bs: usize,
    diag: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// Which block of a block row an entry belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    Lower,
    Diag,
    Upper,
}

impl BlockTridiag {
    pub fn zeros(n: usize, bs: usize) -> Self {
        let b2 = bs * bs;
        Self {
            n,
            bs,
            diag: vec![0.0; n * b2],
            lower: vec![0.0; n * b2],
            upper: vec![0.0; n * b2],
        }
    }

    pub fn dim(&self) -> usize {
        self.n * self.bs
    }

    pub fn block_size(&self) -> usize {
        self.bs
    }

    /// Adds `v` to entry `(k, l)` of the given block in block row `c`.
    ///
    /// Lower blocks of row 0 and upper blocks of the last row do not exist and panic in debug builds.
    pub fn add(&mut self, c: usize, band: Band, k: usize, l: usize, v: f64) {
        debug_assert!(!(band == Band::Lower && c == 0));
        debug_assert!(!(band == Band::Upper && c + 1 == self.n));
        let idx = c * self.bs * self.bs + k * self.bs + l;
        match band {
            Band::Lower => self.lower[idx] += v,
            Band::Diag => self.diag[idx] += v,
            Band::Upper => self.upper[idx] += v,
        }
    }

    /// `y = self * x`.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        let bs = self.bs;
        let b2 = bs * bs;
        for (c, yc) in y.chunks_exact_mut(bs).enumerate().take(self.n) {
            yc.fill(0.0);
            block_gemv(&self.diag[c * b2..(c + 1) * b2], &x[c * bs..(c + 1) * bs], yc);
            if c > 0 {
                block_gemv(&self.lower[c * b2..(c + 1) * b2], &x[(c - 1) * bs..c * bs], yc);
            }
            if c + 1 < self.n {
                block_gemv(&self.upper[c * b2..(c + 1) * b2], &x[(c + 1) * bs..(c + 2) * bs], yc);
            }
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let bs = self.bs;
        let b2 = bs * bs;
        let mut m = DenseMatrix::zeros(self.dim(), self.dim());
        for c in 0..self.n {
            for k in 0..bs {
                for l in 0..bs {
                    let idx = c * b2 + k * bs + l;
                    let row = c * bs + k;
                    m.add_to(row, c * bs + l, self.diag[idx]);
                    if c > 0 {
                        m.add_to(row, (c - 1) * bs + l, self.lower[idx]);
                    }
                    if c + 1 < self.n {
                        m.add_to(row, (c + 1) * bs + l, self.upper[idx]);
                    }
                }
            }
        }
        m
    }
}

/// `y += B x` for a row-major square block.
#[inline(always)]
fn block_gemv(blk: &[f64], x: &[f64], y: &mut [f64]) {
    for (yk, row) in y.iter_mut().zip(blk.chunks_exact(x.len())) {
        let mut acc = 0.0;
        for (a, b) in row.iter().zip(x) {
            acc += a * b;
        }
        *yk += acc;
    }
}
