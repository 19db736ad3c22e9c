//! Dense complex linear algebra for the small matrices that appear in the
//! sensing pipeline: covariance estimates, subspace bases and 2x2 blocks.

use std::ops::{Deref, DerefMut, Index, IndexMut};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

/// Dense complex column vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CVector<T>(pub Vec<Complex<T>>);

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::one();
        }
        m
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Complex<T>,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[CVector<T>]) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::InvalidInput("columns have different lengths".into()));
        }
        Ok(Self::from_fn(rows, columns.len(), |i, j| columns[j][i]))
    }

    /// Rank-one outer product `a * b^H`.
    pub fn outer(a: &CVector<T>, b: &CVector<T>) -> Self {
        Self::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> CVector<T> {
        CVector((0..self.rows).map(|i| self[(i, j)]).collect())
    }

    /// Columns `range` as a new matrix.
    pub fn columns(&self, range: std::ops::Range<usize>) -> Self {
        let start = range.start;
        Self::from_fn(self.rows, range.len(), |i, j| self[(i, start + j)])
    }

    /// Sub-block with the given row and column ranges.
    pub fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        let (r0, c0) = (rows.start, cols.start);
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &CVector<T>) -> CVector<T> {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        CVector(
            (0..self.rows)
                .map(|i| self.row(i).iter().zip(v.iter()).map(|(a, b)| a * b).sum())
                .collect(),
        )
    }

    /// Horizontal concatenation `[self, rhs]`.
    pub fn hstack(&self, rhs: &Self) -> Self {
        assert_eq!(self.rows, rhs.rows, "hstack row mismatch");
        Self::from_fn(self.rows, self.cols + rhs.cols, |i, j| {
            if j < self.cols {
                self[(i, j)]
            } else {
                rhs[(i, j - self.cols)]
            }
        })
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "add dimension mismatch"
        );
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.scale(-Complex::one()))
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `max |A - A^H|` relative to `max |A|`.
    pub fn hermitian_defect(&self) -> T {
        if !self.is_square() {
            return T::infinity();
        }
        let mut defect = T::zero();
        for i in 0..self.rows {
            for j in i..self.cols {
                defect = defect.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        let scale = self.max_abs();
        if scale > T::zero() {
            defect / scale
        } else {
            defect
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> CVector<T> {
    pub fn zeros(n: usize) -> Self {
        Self(vec![Complex::zero(); n])
    }

    /// Hermitian inner product `self^H * rhs`.
    pub fn dot(&self, rhs: &Self) -> Complex<T> {
        assert_eq!(self.len(), rhs.len(), "dot length mismatch");
        self.iter().zip(rhs.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn norm(&self) -> T {
        self.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn hadamard(&self, rhs: &Self) -> Self {
        assert_eq!(self.len(), rhs.len(), "hadamard length mismatch");
        Self(self.iter().zip(rhs.iter()).map(|(a, b)| a * b).collect())
    }

    pub fn conj(&self) -> Self {
        Self(self.iter().map(|z| z.conj()).collect())
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self(self.iter().map(|z| z * s).collect())
    }

    pub fn scale_real(&self, s: T) -> Self {
        Self(self.iter().map(|z| z * s).collect())
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.len(), rhs.len(), "add length mismatch");
        Self(self.iter().zip(rhs.iter()).map(|(a, b)| a + b).collect())
    }

    /// Concatenation of several vectors.
    pub fn concat(parts: &[&Self]) -> Self {
        Self(parts.iter().flat_map(|p| p.iter().copied()).collect())
    }

    /// Largest deviation of any entry's modulus from one.
    pub fn unit_modulus_defect(&self) -> T {
        self.iter()
            .map(|z| (z.norm() - T::one()).abs())
            .fold(T::zero(), T::max)
    }
}

impl<T> Deref for CVector<T> {
    type Target = Vec<Complex<T>>;
    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

impl<T> DerefMut for CVector<T> {
    fn deref_mut(&mut self) -> &mut Self::Target {
        &mut self.0
    }
}

impl<T> From<Vec<Complex<T>>> for CVector<T> {
    fn from(v: Vec<Complex<T>>) -> Self {
        Self(v)
    }
}

impl<T> FromIterator<Complex<T>> for CVector<T> {
    fn from_iter<I: IntoIterator<Item = Complex<T>>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// Eigenvalues in descending order with matching orthonormal eigenvectors
/// stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair<T> {
    pub values: Vec<T>,
    pub vectors: CMatrix<T>,
}

/// Stopping rule for the cyclic Jacobi eigensolver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiOptions<T> {
    /// Stop once the off-diagonal Frobenius norm falls below `tol * ||A||_F`.
    pub tol: T,
    pub max_sweeps: usize,
}

impl<T: Real> Default for JacobiOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::JACOBI_TOL,
            max_sweeps: 100,
        }
    }
}

/// Eigendecomposition of a Hermitian matrix with default options.
pub fn hermitian_eig<T: Real>(a: &CMatrix<T>) -> Result<EigenPair<T>> {
    hermitian_eig_with(a, JacobiOptions::default())
}

/// Cyclic complex Jacobi eigendecomposition.
///
/// Each rotation first removes the phase of the pivot `a_pq` and then applies
/// the classic real symmetric Jacobi rotation, so the update is the unitary
/// `G = diag(1, e^{-j arg a_pq}) * [[c, s], [-s, c]]` on rows/columns `p, q`.
pub fn hermitian_eig_with<T: Real>(a: &CMatrix<T>, opts: JacobiOptions<T>) -> Result<EigenPair<T>> {
    if !a.is_square() {
        return Err(Error::InvalidInput(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    if a.hermitian_defect() > T::HERMITIAN_TOL {
        return Err(Error::InvalidInput("matrix is not Hermitian".into()));
    }
    let n = a.rows();
    // Symmetrize so that rounding in the input does not leak into the rotations.
    let mut m = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex::new(a[(i, i)].re, T::zero())
        } else {
            (a[(i, j)] + a[(j, i)].conj()) * T::lit(0.5)
        }
    });
    let mut v = CMatrix::<T>::identity(n);
    let total = m.frobenius();
    let threshold = opts.tol * total;

    let off_norm = |m: &CMatrix<T>| -> T {
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    for _ in 0..opts.max_sweeps {
        if off_norm(&m) <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let mag = apq.norm();
                if mag <= T::min_positive_value() {
                    continue;
                }
                let phase = apq / mag;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let theta = (aqq - app) / (T::lit(2.0) * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                // G entries for the (p, q) plane.
                let gpp = Complex::new(c, T::zero());
                let gpq = Complex::new(s, T::zero());
                let gqp = phase.conj() * (-s);
                let gqq = phase.conj() * c;

                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = mkp * gpp + mkq * gqp;
                    m[(k, q)] = mkp * gpq + mkq * gqq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = gpp.conj() * mpk + gqp.conj() * mqk;
                    m[(q, k)] = gpq.conj() * mpk + gqq.conj() * mqk;
                }
                m[(p, q)] = Complex::zero();
                m[(q, p)] = Complex::zero();
                m[(p, p)] = Complex::new(m[(p, p)].re, T::zero());
                m[(q, q)] = Complex::new(m[(q, q)].re, T::zero());

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * gpp + vkq * gqp;
                    v[(k, q)] = vkp * gpq + vkq * gqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps the Jacobi order for ties.
    order.sort_by(|&i, &j| {
        m[(j, j)]
            .re
            .partial_cmp(&m[(i, i)].re)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(EigenPair { values, vectors })
}

/// Both eigenvalues of a 2x2 matrix, larger magnitude first.
///
/// Uses the cancellation-free form of the quadratic formula: the dominant
/// root comes from `(tr + s*sqrt(tr^2 - 4 det)) / 2` with the sign `s` that
/// avoids cancellation, the other from `det / lambda_1`.
pub fn eig2x2<T: Real>(a: &CMatrix<T>) -> Result<[Complex<T>; 2]> {
    if a.rows() != 2 || a.cols() != 2 {
        return Err(Error::InvalidInput("eig2x2 needs a 2x2 matrix".into()));
    }
    let tr = a[(0, 0)] + a[(1, 1)];
    let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
    let disc = (tr * tr - det * T::lit(4.0)).sqrt();
    let plus = tr + disc;
    let minus = tr - disc;
    let big = if plus.norm() >= minus.norm() {
        plus
    } else {
        minus
    };
    let l1 = big * T::lit(0.5);
    let l2 = if l1.is_zero() {
        Complex::zero()
    } else {
        det / l1
    };
    Ok([l1, l2])
}

/// Exchange (counter-identity) matrix of size `n`.
pub fn exchange_matrix<T: Real>(n: usize) -> CMatrix<T> {
    CMatrix::from_fn(n, n, |i, j| {
        if i + j + 1 == n {
            Complex::one()
        } else {
            Complex::zero()
        }
    })
}

/// Spectral condition number of a 2x2 matrix.
pub fn condition2x2<T: Real>(a: &CMatrix<T>) -> T {
    let fro2 = a
        .as_slice()
        .iter()
        .fold(T::zero(), |acc, z| acc + z.norm_sqr());
    let det = (a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)]).norm();
    let det2 = det * det;
    let disc = (fro2 * fro2 - T::lit(4.0) * det2).max(T::zero()).sqrt();
    let smax2 = (fro2 + disc) * T::lit(0.5);
    let smin2 = if smax2 > T::zero() {
        det2 / smax2
    } else {
        T::zero()
    };
    if smin2 <= T::zero() {
        T::infinity()
    } else {
        (smax2 / smin2).sqrt()
    }
}

/// Inverse of a 2x2 matrix, rejecting blocks whose condition number exceeds
/// `max_condition`.
pub fn inverse2x2<T: Real>(a: &CMatrix<T>, max_condition: T) -> Result<CMatrix<T>> {
    if a.rows() != 2 || a.cols() != 2 {
        return Err(Error::InvalidInput("inverse2x2 needs a 2x2 matrix".into()));
    }
    let cond = condition2x2(a);
    if !(cond <= max_condition) {
        return Err(Error::SubspaceDegenerate {
            condition: cond.to_f64().unwrap_or(f64::INFINITY),
        });
    }
    let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
    let inv_det = Complex::<T>::one() / det;
    Ok(CMatrix::from_fn(2, 2, |i, j| {
        let adj = match (i, j) {
            (0, 0) => a[(1, 1)],
            (0, 1) => -a[(0, 1)],
            (1, 0) => -a[(1, 0)],
            _ => a[(0, 0)],
        };
        adj * inv_det
    }))
}
