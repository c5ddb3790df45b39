//! Small dense complex linear algebra: row-major matrices, a Hermitian
//! positive-definite Cholesky solver and a rank-revealing orthonormal basis.
//!
//! Matrix sizes in this crate are at most a few hundred (one row per array
//! element), so plain loops over contiguous rows are fast enough and keep the
//! crate free of a BLAS dependency.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::{Error, Result, C64};

/// Condition-number estimate above which a Hermitian solve is refused.
pub const MAX_CONDITION: f64 = 1e12;

/// `aᴴ b`.
#[inline]
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[inline]
pub fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

#[inline]
pub fn norm(v: &[C64]) -> f64 {
    norm_sqr(v).sqrt()
}

/// Returns `v / ‖v‖`, or [`Error::ZeroNorm`] for a zero (or non-finite) vector.
pub fn normalized(v: &[C64]) -> Result<Vec<C64>> {
    let n = norm(v);
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::ZeroNorm);
    }
    Ok(v.iter().map(|x| x / n).collect())
}

/// Dense complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    /// Builds `scale · u vᴴ`.
    pub fn outer(u: &[C64], v: &[C64], scale: f64) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj() * scale)
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<C64>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if let Some(bad) = columns.iter().find(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch {
                expected: rows,
                found: bad.len(),
            });
        }
        Ok(Self::from_fn(rows, columns.len(), |i, j| columns[j][i]))
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &CMatrix) -> C64 {
        debug_assert_eq!(self.cols, other.rows);
        debug_assert_eq!(self.rows, other.cols);
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.rows {
            for (k, a) in self.row(i).iter().enumerate() {
                acc += a * other[(k, i)];
            }
        }
        acc
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let src = other.row(k);
                for (o, b) in out.row_mut(i).iter_mut().zip(src) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok((0..self.rows).map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum()).collect())
    }

    /// `selfᴴ · v`.
    pub fn adjoint_mul_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: v.len(),
            });
        }
        let mut out = vec![C64::new(0.0, 0.0); self.cols];
        for (i, vi) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * vi;
            }
        }
        Ok(out)
    }

    /// `vᴴ · self · v`.
    pub fn quad_form(&self, v: &[C64]) -> C64 {
        debug_assert!(self.is_square() && v.len() == self.rows);
        (0..self.rows)
            .map(|i| v[i].conj() * self.row(i).iter().zip(v).map(|(a, b)| a * b).sum::<C64>())
            .sum()
    }

    pub fn scale_in_place(&mut self, s: C64) {
        self.data.iter_mut().for_each(|x| *x *= s);
    }

    /// `self += s · other`.
    pub fn add_scaled(&mut self, other: &CMatrix, s: C64) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    /// `self += s · I`.
    pub fn add_identity(&mut self, s: f64) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] += s;
        }
    }

    /// `self += s · u uᴴ`.
    pub fn add_outer(&mut self, u: &[C64], s: f64) {
        debug_assert!(self.is_square() && u.len() == self.rows);
        for i in 0..self.rows {
            let ui = u[i] * s;
            for (a, uj) in self.row_mut(i).iter_mut().zip(u) {
                *a += ui * uj.conj();
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Largest `|A_ij − conj(A_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| {
            self.row(i)
                .iter()
                .enumerate()
                .all(|(j, x)| i == j || *x == C64::new(0.0, 0.0))
        })
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Cholesky factor `A = L Lᴴ` of a Hermitian positive-definite matrix.
///
/// Factorisation fails on a nonpositive pivot, and also when the condition
/// estimate `(max Lᵢᵢ / min Lᵢᵢ)²` exceeds [`MAX_CONDITION`]. The estimate is
/// exact for diagonal matrices and a lower bound otherwise.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: CMatrix,
    diagonal: bool,
}

impl Cholesky {
    pub fn new(a: &CMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                found: a.cols(),
            });
        }
        let n = a.rows();
        let diagonal = a.is_diagonal();
        let mut l = CMatrix::zeros(n, n);
        for j in 0..n {
            let d = if diagonal {
                a[(j, j)].re
            } else {
                a[(j, j)].re - norm_sqr(&l.row(j)[..j])
            };
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite { pivot: j });
            }
            let ljj = d.sqrt();
            l[(j, j)] = C64::new(ljj, 0.0);
            if diagonal {
                continue;
            }
            for i in j + 1..n {
                // Σ_k L[i,k] conj(L[j,k]) over k < j
                let s: C64 = l.row(i)[..j]
                    .iter()
                    .zip(&l.row(j)[..j])
                    .map(|(x, y)| x * y.conj())
                    .sum();
                l[(i, j)] = (a[(i, j)] - s) / ljj;
            }
        }
        let chol = Cholesky { l, diagonal };
        let estimate = chol.condition_estimate();
        if !(estimate <= MAX_CONDITION) {
            return Err(Error::IllConditioned { estimate });
        }
        Ok(chol)
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn factor(&self) -> &CMatrix {
        &self.l
    }

    pub fn condition_estimate(&self) -> f64 {
        let (lo, hi) = (0..self.dim())
            .map(|i| self.l[(i, i)].re)
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
        if self.dim() == 0 {
            return 1.0;
        }
        let r = hi / lo;
        r * r
    }

    /// Solves `A x = b`.
    pub fn solve_vec(&self, b: &[C64]) -> Result<Vec<C64>> {
        let m = CMatrix {
            rows: b.len(),
            cols: 1,
            data: b.to_vec(),
        };
        Ok(self.solve(&m)?.data)
    }

    /// Solves `A X = B` for every column of `B`.
    pub fn solve(&self, b: &CMatrix) -> Result<CMatrix> {
        let n = self.dim();
        if b.rows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.rows(),
            });
        }
        let mut x = b.clone();
        if self.diagonal {
            for i in 0..n {
                let d = self.l[(i, i)].re;
                let inv = 1.0 / (d * d);
                x.row_mut(i).iter_mut().for_each(|v| *v *= inv);
            }
            return Ok(x);
        }
        let cols = x.cols();
        // forward: L y = b
        for i in 0..n {
            for k in 0..i {
                let lik = self.l[(i, k)];
                if lik == C64::new(0.0, 0.0) {
                    continue;
                }
                let (head, tail) = x.data.split_at_mut(i * cols);
                let src = &head[k * cols..(k + 1) * cols];
                for (t, s) in tail[..cols].iter_mut().zip(src) {
                    *t -= lik * s;
                }
            }
            let inv = 1.0 / self.l[(i, i)].re;
            x.row_mut(i).iter_mut().for_each(|v| *v *= inv);
        }
        // backward: Lᴴ x = y
        for i in (0..n).rev() {
            for k in i + 1..n {
                let lki = self.l[(k, i)].conj();
                if lki == C64::new(0.0, 0.0) {
                    continue;
                }
                let (head, tail) = x.data.split_at_mut(k * cols);
                let dst = &mut head[i * cols..(i + 1) * cols];
                for (t, s) in dst.iter_mut().zip(&tail[..cols]) {
                    *t -= lki * s;
                }
            }
            let inv = 1.0 / self.l[(i, i)].re;
            x.row_mut(i).iter_mut().for_each(|v| *v *= inv);
        }
        Ok(x)
    }
}

/// Orthonormal basis of `span{vectors}` by Gram–Schmidt with column pivoting.
///
/// At each step the remaining vector with the largest residual is taken; the
/// process stops once every residual norm is below `rel_tol` times the largest
/// input norm. Residuals are orthogonalised twice against each new basis
/// vector, which keeps the basis orthonormal to working precision.
pub fn orthonormal_basis(vectors: &[Vec<C64>], rel_tol: f64) -> Result<Vec<Vec<C64>>> {
    let dim = vectors.first().map_or(0, Vec::len);
    if let Some(bad) = vectors.iter().find(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.len(),
        });
    }
    let scale = vectors.iter().map(|v| norm(v)).fold(0.0, f64::max);
    let mut residuals: Vec<Vec<C64>> = vectors.to_vec();
    let mut basis: Vec<Vec<C64>> = Vec::new();
    if !(scale > 0.0) {
        return Ok(basis);
    }
    let cutoff = rel_tol * scale;
    while basis.len() < dim.min(vectors.len()) {
        let (best, best_norm) = residuals
            .iter()
            .enumerate()
            .map(|(i, r)| (i, norm(r)))
            .fold((usize::MAX, 0.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if best == usize::MAX || best_norm <= cutoff {
            break;
        }
        let q: Vec<C64> = residuals.swap_remove(best).iter().map(|x| x / best_norm).collect();
        for r in residuals.iter_mut() {
            for _ in 0..2 {
                let c = dot(&q, r);
                r.iter_mut().zip(&q).for_each(|(x, y)| *x -= y * c);
            }
        }
        basis.push(q);
    }
    Ok(basis)
}

/// `(I − Q Qᴴ) v` for an orthonormal `basis`, applied twice for stability.
pub fn project_out(basis: &[Vec<C64>], v: &[C64]) -> Vec<C64> {
    let mut out = v.to_vec();
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, &out);
            out.iter_mut().zip(q).for_each(|(x, y)| *x -= y * c);
        }
    }
    out
}
