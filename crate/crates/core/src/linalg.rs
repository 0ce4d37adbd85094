//! Dense real matrices and the rank-revealing numerics the rest of the crate
//! builds on.
//!
//! Everything here is desk-scale (at most a few hundred rows), so singular
//! values come from a cyclic Jacobi eigensolver on the smaller Gram matrix
//! rather than a full bidiagonalization.

use serde::Serialize;

use crate::error::{Error, Result};

/// Dense real matrix in row-major order. Entries are always finite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data, validating shape and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(idx) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: idx / cols,
                col: idx % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// All-zeros matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from a slice of equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("matrix needs at least one row".into()));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// Standard matrix product.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let row_out = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a_ik = self.data[i * self.cols + k];
                if a_ik == 0.0 {
                    continue;
                }
                let row_b = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in row_out.iter_mut().zip(row_b) {
                    *o += a_ik * b;
                }
            }
        }
        if let Some(idx) = out.data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: idx / out.cols,
                col: idx % out.cols,
            });
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "cannot apply {}x{} to a vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, alpha: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * alpha).collect(),
        }
    }

    /// Convex combination `(1 - lambda) * self + lambda * other`.
    pub fn lerp(&self, other: &Matrix, lambda: f64) -> Result<Matrix> {
        self.zip_with(other, |a, b| (1.0 - lambda) * a + lambda * b)
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        debug_assert_eq!(self.rows, other.rows);
        debug_assert_eq!(self.cols, other.cols);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Singular values in descending order.
    ///
    /// Computed as square roots of the eigenvalues of the smaller of the two
    /// Gram matrices, which is accurate and cheap at this scale.
    pub fn singular_values(&self) -> Vec<f64> {
        let k = self.rows.min(self.cols);
        let gram = if self.cols <= self.rows {
            gram_t(self) // AᵀA, cols x cols
        } else {
            gram(self) // AAᵀ, rows x rows
        };
        let (mut vals, _) = jacobi_symmetric_eigen(&gram);
        vals.truncate(k);
        vals.iter().map(|l| l.max(0.0).sqrt()).collect()
    }

    /// Number of singular values above `rel_tol` times the largest one.
    /// The zero matrix has rank 0.
    pub fn numerical_rank(&self, rel_tol: f64) -> usize {
        let svals = self.singular_values();
        let sigma_max = svals[0];
        if sigma_max == 0.0 {
            return 0;
        }
        svals.iter().filter(|s| **s > rel_tol * sigma_max).count()
    }

    /// Determinant by LU with partial pivoting. Only supported for square
    /// matrices of order at most 12; larger determinants are not needed and
    /// would be numerically meaningless here.
    pub fn determinant(&self) -> Result<f64> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "determinant of a non-square {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        if n > 12 {
            return Err(Error::InvalidInput(format!(
                "determinant restricted to order <= 12, got {n}"
            )));
        }
        let mut a = self.data.clone();
        let mut det = 1.0;
        for k in 0..n {
            let (pivot_row, pivot) = (k..n)
                .map(|i| (i, a[i * n + k]))
                .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
                .unwrap();
            if pivot == 0.0 {
                return Ok(0.0);
            }
            if pivot_row != k {
                for j in 0..n {
                    a.swap(k * n + j, pivot_row * n + j);
                }
                det = -det;
            }
            det *= a[k * n + k];
            for i in k + 1..n {
                let factor = a[i * n + k] / a[k * n + k];
                for j in k..n {
                    a[i * n + j] -= factor * a[k * n + j];
                }
            }
        }
        Ok(det)
    }
}

/// Default relative rank tolerance: `max(rows, cols)` times machine epsilon.
pub fn default_rank_tol(rows: usize, cols: usize) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON
}

/// The n-by-n matrix with entries `coeffs[j] * xs[k]^j` (row `j`, column `k`):
/// a Vandermonde matrix with row `j` scaled by the
/// j-th derivative value `coeffs[j]`. Nonsingular whenever the nodes are
/// distinct and every scaling coefficient is nonzero.
pub fn scaled_vandermonde(xs: &[f64], coeffs: &[f64]) -> Result<Matrix> {
    let n = xs.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty node list".into()));
    }
    if coeffs.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} nodes but {} coefficients",
            coeffs.len()
        )));
    }
    for i in 0..n {
        for j in i + 1..n {
            if xs[i] == xs[j] {
                return Err(Error::InvalidInput(format!(
                    "duplicate nodes xs[{i}] = xs[{j}] = {}",
                    xs[i]
                )));
            }
        }
    }
    let mut m = Matrix::zeros(n, n);
    let mut powers = vec![1.0; n];
    for j in 0..n {
        for k in 0..n {
            m.set(j, k, coeffs[j] * powers[k]);
            powers[k] *= xs[k];
        }
    }
    if let Some(idx) = m.data.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            row: idx / n,
            col: idx % n,
        });
    }
    Ok(m)
}

/// Result of a right-sided least-squares solve.
#[derive(Debug, Clone, Serialize)]
pub struct LeastSquares {
    /// The minimizer `W` of `|| W T - Y ||_F` (least-norm when `T` is
    /// rank-deficient).
    pub solution: Matrix,
    /// Final Frobenius residual `|| W T - Y ||_F`.
    pub residual: f64,
    /// Numerical rank of `T` at the supplied tolerance.
    pub rank: usize,
}

/// Minimizes `|| W T - Y ||_F` over `W`, i.e. computes `W = Y T^+`.
///
/// Uses the Gram-side SVD for the pseudo-inverse and polishes with iterative
/// refinement, which keeps the residual near machine level even for noticeably
/// ill-conditioned `T`. Never fails on rank deficiency; the residual field
/// reports what was attainable.
pub fn least_squares_right_solve(t: &Matrix, y: &Matrix, rel_tol: f64) -> Result<LeastSquares> {
    if t.cols() != y.cols() {
        return Err(Error::DimensionMismatch(format!(
            "T has {} columns but Y has {}",
            t.cols(),
            y.cols()
        )));
    }
    if rel_tol < 0.0 {
        return Err(Error::InvalidInput("rel_tol must be nonnegative".into()));
    }
    let pinv = GramPseudoInverse::new(t, rel_tol);
    let mut w = pinv.apply_right(y)?;
    let mut residual = residual_norm(&w, t, y)?;
    // Two refinement steps recover accuracy lost to the squared Gram
    // conditioning; stop early once the residual no longer improves.
    for _ in 0..2 {
        let r = y.sub(&w.matmul(t)?)?;
        let delta = pinv.apply_right(&r)?;
        let candidate = w.add(&delta)?;
        let cand_residual = residual_norm(&candidate, t, y)?;
        if cand_residual >= residual {
            break;
        }
        w = candidate;
        residual = cand_residual;
    }
    Ok(LeastSquares {
        solution: w,
        residual,
        rank: pinv.rank,
    })
}

fn residual_norm(w: &Matrix, t: &Matrix, y: &Matrix) -> Result<f64> {
    Ok(w.matmul(t)?.sub(y)?.frobenius_norm())
}

/// Rank-truncated pseudo-inverse of `T`, held in factored form so that
/// `Y T^+` can be applied repeatedly (refinement steps reuse it).
struct GramPseudoInverse {
    /// Per retained singular triple: (T-side vector used on the right,
    /// projection vector used on the left, inverse eigenvalue).
    factors: Vec<(Vec<f64>, Vec<f64>, f64)>,
    rank: usize,
    t_rows: usize,
}

impl GramPseudoInverse {
    fn new(t: &Matrix, rel_tol: f64) -> Self {
        let tall = t.cols() <= t.rows();
        let gram = if tall { gram_t(t) } else { gram(t) };
        let (vals, vecs) = jacobi_symmetric_eigen(&gram);
        let sigma_max = vals[0].max(0.0).sqrt();
        let mut factors = Vec::new();
        if sigma_max > 0.0 {
            for (i, lambda) in vals.iter().enumerate() {
                let sigma = lambda.max(0.0).sqrt();
                if sigma <= rel_tol * sigma_max || sigma == 0.0 {
                    break; // eigenvalues are sorted descending
                }
                let q = vecs.col(i);
                if tall {
                    // T = U S Vᵀ with V from Gram(TᵀT): T⁺ = Σ v (T v)ᵀ / λ
                    let tv = t.matvec(&q).expect("gram eigenvector length");
                    factors.push((q, tv, 1.0 / lambda));
                } else {
                    // U from Gram(TTᵀ): T⁺ = Σ (Tᵀ u) uᵀ / λ
                    let ttu = t.transpose().matvec(&q).expect("gram eigenvector length");
                    factors.push((ttu, q, 1.0 / lambda));
                }
            }
        }
        Self {
            rank: factors.len(),
            t_rows: t.rows(),
            factors,
        }
    }

    /// Computes `Y T^+` for the factored `T`.
    fn apply_right(&self, y: &Matrix) -> Result<Matrix> {
        let mut w = Matrix::zeros(y.rows(), self.t_rows);
        for (right, left, inv_lambda) in &self.factors {
            // right has length T.cols (the side Y contracts with),
            // left has length T.rows (the side W lives on).
            let y_right = y.matvec(right)?;
            for i in 0..w.rows() {
                let coeff = y_right[i] * inv_lambda;
                for (j, l) in left.iter().enumerate() {
                    w.data[i * w.cols + j] += coeff * l;
                }
            }
        }
        Ok(w)
    }
}

/// `A Aᵀ` (rows x rows).
fn gram(a: &Matrix) -> Matrix {
    let m = a.rows();
    let mut g = Matrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let dot: f64 = a.row(i).iter().zip(a.row(j)).map(|(x, y)| x * y).sum();
            g.set(i, j, dot);
            g.set(j, i, dot);
        }
    }
    g
}

/// `Aᵀ A` (cols x cols).
fn gram_t(a: &Matrix) -> Matrix {
    let n = a.cols();
    let mut g = Matrix::zeros(n, n);
    for i in 0..a.rows() {
        let row = a.row(i);
        for p in 0..n {
            let rp = row[p];
            if rp == 0.0 {
                continue;
            }
            for q in p..n {
                g.data[p * n + q] += rp * row[q];
            }
        }
    }
    for p in 0..n {
        for q in p + 1..n {
            g.data[q * n + p] = g.data[p * n + q];
        }
    }
    g
}

/// Cyclic Jacobi eigensolver for a symmetric matrix. Returns eigenvalues in
/// descending order and the matching eigenvectors as matrix columns.
fn jacobi_symmetric_eigen(g: &Matrix) -> (Vec<f64>, Matrix) {
    let n = g.rows();
    let mut a = g.as_slice().to_vec();
    let mut v = Matrix::identity(n);
    if n > 1 {
        let scale = g.frobenius_norm().max(f64::MIN_POSITIVE);
        let tol = f64::EPSILON * scale;
        for _sweep in 0..60 {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += 2.0 * a[p * n + q] * a[p * n + q];
                }
            }
            if off.sqrt() <= tol {
                break;
            }
            for p in 0..n - 1 {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq.abs() <= tol * 1e-3 {
                        continue;
                    }
                    let app = a[p * n + p];
                    let aqq = a[q * n + q];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        if k != p && k != q {
                            let akp = a[k * n + p];
                            let akq = a[k * n + q];
                            a[k * n + p] = c * akp - s * akq;
                            a[p * n + k] = a[k * n + p];
                            a[k * n + q] = s * akp + c * akq;
                            a[q * n + k] = a[k * n + q];
                        }
                    }
                    a[p * n + p] = app - t * apq;
                    a[q * n + q] = aqq + t * apq;
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    for k in 0..n {
                        let vkp = v.get(k, p);
                        let vkq = v.get(k, q);
                        v.set(k, p, c * vkp - s * vkq);
                        v.set(k, q, s * vkp + c * vkq);
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let vals: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vecs = Matrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for k in 0..n {
            vecs.set(k, new_col, v.get(k, old_col));
        }
    }
    (vals, vecs)
}
