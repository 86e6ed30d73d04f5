//! Dense matrix arithmetic for the estimation pipeline.
//!
//! Row-major storage, generic over [`Scalar`]. The factorizations here are
//! the plain textbook versions: Cholesky for SPD solves, LU with partial
//! pivoting for determinants and inverses. Sizes in this crate are small
//! (tens of nodes), so no blocking or pivot refinement is attempted.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Build from nested rows; every row must have the same length.
    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != ncols {
                return Err(Error::Schema(format!(
                    "row {i} has {} entries, expected {ncols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: nrows,
            cols: ncols,
            data,
        })
    }

    pub fn diagonal(diag: &[S]) -> Self {
        let mut m = Matrix::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [S] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Matrix<S> {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix<S>) -> Matrix<S> {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == S::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(self.cols, x.len(), "matvec shape mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn add(&self, other: &Matrix<S>) -> Matrix<S> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)] + other[(i, j)])
    }

    pub fn sub(&self, other: &Matrix<S>) -> Matrix<S> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)] - other[(i, j)])
    }

    pub fn scale(&self, c: S) -> Matrix<S> {
        Matrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)] * c)
    }

    pub fn frobenius_norm(&self) -> S {
        self.data.iter().map(|&x| x * x).sum::<S>().sqrt()
    }

    pub fn max_abs(&self) -> S {
        self.data.iter().fold(S::zero(), |acc, &x| acc.max(x.abs()))
    }

    /// Maximum absolute row sum (operator infinity norm).
    pub fn inf_norm(&self) -> S {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.abs()).sum::<S>())
            .fold(S::zero(), |a, b| a.max(b))
    }

    pub fn is_symmetric(&self, tol: S) -> bool {
        if !self.is_square() {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self[(i, j)] - self[(j, i)]).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Lower-triangular Cholesky factor of a symmetric positive definite
    /// matrix; fails with the offending pivot index when the matrix is not PD.
    pub fn cholesky(&self) -> Result<Matrix<S>> {
        assert!(self.is_square(), "cholesky requires a square matrix");
        let n = self.rows;
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d <= S::zero() {
                return Err(Error::Domain(format!(
                    "matrix not positive definite (pivot {j} = {d})"
                )));
            }
            let dj = d.sqrt();
            l[(j, j)] = dj;
            for i in (j + 1)..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / dj;
            }
        }
        Ok(l)
    }

    /// Solve `self * X = rhs` for SPD `self` via Cholesky.
    pub fn solve_spd(&self, rhs: &Matrix<S>) -> Result<Matrix<S>> {
        let l = self.cholesky()?;
        let n = self.rows;
        assert_eq!(rhs.rows, n);
        let mut x = rhs.clone();
        // forward: L y = rhs
        for col in 0..x.cols {
            for i in 0..n {
                let mut s = x[(i, col)];
                for k in 0..i {
                    s -= l[(i, k)] * x[(k, col)];
                }
                x[(i, col)] = s / l[(i, i)];
            }
            // backward: L' z = y
            for i in (0..n).rev() {
                let mut s = x[(i, col)];
                for k in (i + 1)..n {
                    s -= l[(k, i)] * x[(k, col)];
                }
                x[(i, col)] = s / l[(i, i)];
            }
        }
        Ok(x)
    }

    /// LU factorization with partial pivoting.
    pub fn lu(&self) -> LuFactors<S> {
        assert!(self.is_square(), "lu requires a square matrix");
        let n = self.rows;
        let mut lu = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign_flips = 0usize;
        let mut singular = false;
        for k in 0..n {
            let mut pivot = k;
            let mut best = lu[(k, k)].abs();
            for i in (k + 1)..n {
                let v = lu[(i, k)].abs();
                if v > best {
                    best = v;
                    pivot = i;
                }
            }
            if best == S::zero() {
                singular = true;
                continue;
            }
            if pivot != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(pivot, j)];
                    lu[(pivot, j)] = tmp;
                }
                perm.swap(k, pivot);
                sign_flips += 1;
            }
            let pk = lu[(k, k)];
            for i in (k + 1)..n {
                let m = lu[(i, k)] / pk;
                lu[(i, k)] = m;
                for j in (k + 1)..n {
                    let adj = m * lu[(k, j)];
                    lu[(i, j)] -= adj;
                }
            }
        }
        LuFactors {
            lu,
            perm,
            sign_negative: sign_flips % 2 == 1,
            singular,
        }
    }

    /// Inverse via LU; errors when numerically singular.
    pub fn inverse(&self) -> Result<Matrix<S>> {
        let f = self.lu();
        if f.singular {
            return Err(Error::Singularity("matrix is singular".into()));
        }
        f.solve_mat(&Matrix::identity(self.rows))
    }
}

/// LU factorization with partial pivoting (`P A = L U`).
pub struct LuFactors<S> {
    lu: Matrix<S>,
    perm: Vec<usize>,
    sign_negative: bool,
    singular: bool,
}

impl<S: Scalar> LuFactors<S> {
    pub fn is_singular(&self) -> bool {
        self.singular
    }

    /// `ln |det A|`; `-inf` when singular. Accumulated in log space so large
    /// systems neither overflow nor underflow.
    pub fn ln_abs_det(&self) -> S {
        if self.singular {
            return S::neg_infinity();
        }
        (0..self.lu.rows())
            .map(|i| self.lu[(i, i)].abs().ln())
            .sum()
    }

    pub fn det_sign_negative(&self) -> bool {
        let mut neg = self.sign_negative;
        for i in 0..self.lu.rows() {
            if self.lu[(i, i)] < S::zero() {
                neg = !neg;
            }
        }
        neg
    }

    pub fn solve_vec(&self, b: &[S]) -> Result<Vec<S>> {
        if self.singular {
            return Err(Error::Singularity("matrix is singular".into()));
        }
        let n = self.lu.rows();
        assert_eq!(b.len(), n);
        let mut x: Vec<S> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            for k in 0..i {
                let adj = self.lu[(i, k)] * x[k];
                x[i] -= adj;
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let adj = self.lu[(i, k)] * x[k];
                x[i] -= adj;
            }
            x[i] /= self.lu[(i, i)];
        }
        Ok(x)
    }

    pub fn solve_mat(&self, b: &Matrix<S>) -> Result<Matrix<S>> {
        let n = self.lu.rows();
        assert_eq!(b.rows(), n);
        let mut out = Matrix::zeros(n, b.cols());
        for col in 0..b.cols() {
            let rhs: Vec<S> = (0..n).map(|i| b[(i, col)]).collect();
            let x = self.solve_vec(&rhs)?;
            for i in 0..n {
                out[(i, col)] = x[i];
            }
        }
        Ok(out)
    }
}

/// Spectral radius bound via Gelfand's formula: `||A^m||^(1/m)` with
/// `m = 2^squarings`, computed by repeated squaring with norm scaling.
/// Converges to the spectral radius from above; at the default depth the
/// overshoot is negligible for the tolerances used in this crate.
pub fn spectral_radius<S: Scalar>(a: &Matrix<S>) -> S {
    assert!(a.is_square());
    if a.rows() == 0 {
        return S::zero();
    }
    let squarings = 20u32;
    let mut b = a.clone();
    let mut log_scale = S::zero(); // ln of accumulated scale so A^(2^k) = B * exp(log_scale)
    for _ in 0..squarings {
        let norm = b.inf_norm();
        if norm == S::zero() {
            return S::zero();
        }
        let inv = S::one() / norm;
        b = b.scale(inv);
        b = b.matmul(&b);
        log_scale = (log_scale + norm.ln()) * S::from_f64_lossy(2.0);
    }
    let m = S::from_f64_lossy(2f64.powi(squarings as i32));
    ((b.inf_norm().ln() + log_scale) / m).exp()
}

impl<S> std::ops::Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<S: Scalar> std::fmt::Debug for Matrix<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  [")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self[(i, j)])?;
            }
            writeln!(f, "]")?;
        }
        write!(f, "]")
    }
}

// JSON form is nested rows, e.g. [[1,2],[3,4]], for readability of exports.
impl<S: Scalar + Serialize> Serialize for Matrix<S> {
    fn serialize<Ser: Serializer>(
        &self,
        serializer: Ser,
    ) -> std::result::Result<Ser::Ok, Ser::Error> {
        let rows: Vec<&[S]> = (0..self.rows).map(|i| self.row(i)).collect();
        rows.serialize(serializer)
    }
}

impl<'de, S: Scalar + Deserialize<'de>> Deserialize<'de> for Matrix<S> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<S>>::deserialize(deserializer)?;
        Matrix::from_rows(rows).map_err(|e| D::Error::custom(e.to_string()))
    }
}
