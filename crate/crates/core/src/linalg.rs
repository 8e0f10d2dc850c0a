//! Small dense linear algebra kernel: row-major matrices, Cholesky, and
//! Householder QR with column pivoting for least squares.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from a row-major buffer.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch { expected: cols, found: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
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
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn mat_vec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn mat_mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a == T::zero() {
                    continue;
                }
                let src = other.row(l);
                let dst = out.row_mut(i);
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    /// Submatrix on the given row and column index sets.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    /// `xᵀ A x` for square `A`.
    pub fn quadratic_form(&self, x: &[T]) -> T {
        debug_assert_eq!(self.rows, self.cols);
        let mut acc = T::zero();
        for i in 0..self.rows {
            if x[i] != T::zero() {
                acc += x[i] * dot(self.row(i), x);
            }
        }
        acc
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in 0..i {
                let (a, b) = (self[(i, j)], self[(j, i)]);
                if (a - b).abs() > tol * (T::one() + a.abs().max(b.abs())) {
                    return false;
                }
            }
        }
        true
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    l: Matrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Factors a symmetric positive-definite matrix; only the lower triangle is read.
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: a.cols() });
        }
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { index: j, pivot: d.to_f64_lossy() });
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Self { l })
    }

    pub fn factor(&self) -> &Matrix<T> {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// Solves `L y = b`.
    pub fn solve_lower(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        let mut y = b.to_vec();
        for i in 0..n {
            let row = self.l.row(i);
            let s = dot(&row[..i], &y[..i]);
            y[i] = (y[i] - s) / row[i];
        }
        y
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        let mut x = self.solve_lower(b);
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
        x
    }

    /// `bᵀ A⁻¹ b`, computed as `‖L⁻¹ b‖²`.
    pub fn inverse_quadratic_form(&self, b: &[T]) -> T {
        let y = self.solve_lower(b);
        dot(&y, &y)
    }

    pub fn inverse(&self) -> Matrix<T> {
        let n = self.dim();
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = T::zero());
            e[j] = T::one();
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }
}

/// Householder QR factorization with column pivoting of a tall or wide
/// matrix, applied simultaneously to one right-hand side.
///
/// Numerical rank is the number of diagonal entries of `R` whose magnitude
/// exceeds [`Scalar::rank_tolerance`] times the largest column norm. On rank
/// deficiency [`PivotedQr::solve`] returns the minimum-norm least-squares
/// solution via a complete orthogonal decomposition, i.e. the Moore–Penrose
/// solution.
#[derive(Debug, Clone)]
pub struct PivotedQr<T> {
    n: usize,
    k: usize,
    /// `min(n, k) × k` upper-trapezoidal factor in pivoted column order.
    r: Matrix<T>,
    perm: Vec<usize>,
    rank: usize,
    qtb: Vec<T>,
}

impl<T: Scalar> PivotedQr<T> {
    /// Factors the columns `cols` of `x` together with right-hand side `b`.
    pub fn from_columns(x: &Matrix<T>, cols: &[usize], b: &[T]) -> Result<Self> {
        let n = x.rows();
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: b.len() });
        }
        let k = cols.len();
        // column-major working copy
        let mut a = vec![T::zero(); n * k];
        for i in 0..n {
            let row = x.row(i);
            for (j, &c) in cols.iter().enumerate() {
                a[j * n + i] = row[c];
            }
        }
        Ok(Self::factor_col_major(n, k, a, b.to_vec()))
    }

    pub fn new(a: &Matrix<T>, b: &[T]) -> Result<Self> {
        let cols: Vec<usize> = (0..a.cols()).collect();
        Self::from_columns(a, &cols, b)
    }

    fn factor_col_major(n: usize, k: usize, mut a: Vec<T>, mut qtb: Vec<T>) -> Self {
        let steps = n.min(k);
        let mut perm: Vec<usize> = (0..k).collect();
        let mut norms = vec![T::zero(); k];
        let mut max_norm = T::zero();
        let mut rank = steps;
        let tol_rel = T::rank_tolerance();

        for s in 0..steps {
            // pivot: remaining column with largest trailing norm
            let mut best = s;
            let mut best_norm = -T::one();
            for j in s..k {
                let col = &a[j * n + s..j * n + n];
                let nrm = dot(col, col);
                norms[j] = nrm;
                if nrm > best_norm {
                    best_norm = nrm;
                    best = j;
                }
            }
            if best != s {
                for i in 0..n {
                    a.swap(s * n + i, best * n + i);
                }
                perm.swap(s, best);
            }
            let col_norm = best_norm.max(T::zero()).sqrt();
            if s == 0 {
                max_norm = col_norm;
            }
            if col_norm <= tol_rel * max_norm || col_norm == T::zero() {
                rank = s;
                break;
            }

            // Householder vector for a[s.., s]
            let x0 = a[s * n + s];
            let alpha = if x0 >= T::zero() { -col_norm } else { col_norm };
            let mut v: Vec<T> = a[s * n + s..s * n + n].to_vec();
            v[0] -= alpha;
            let vtv = dot(&v, &v);
            a[s * n + s] = alpha;
            for i in (s + 1)..n {
                a[s * n + i] = T::zero();
            }
            if vtv > T::zero() {
                let two_over = (T::one() + T::one()) / vtv;
                for j in (s + 1)..k {
                    let col = &mut a[j * n + s..j * n + n];
                    let f = dot(col, &v) * two_over;
                    for (c, &vi) in col.iter_mut().zip(&v) {
                        *c -= f * vi;
                    }
                }
                let tail = &mut qtb[s..n];
                let f = dot(tail, &v) * two_over;
                for (c, &vi) in tail.iter_mut().zip(&v) {
                    *c -= f * vi;
                }
            }
        }

        let mut r = Matrix::zeros(steps, k);
        for i in 0..steps {
            for j in i..k {
                r[(i, j)] = a[j * n + i];
            }
        }
        Self { n, k, r, perm, rank, qtb }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_rank_deficient(&self) -> bool {
        self.rank < self.k
    }

    /// Residual sum of squares of the least-squares fit.
    pub fn rss(&self) -> T {
        self.qtb[self.rank..self.n].iter().map(|&v| v * v).sum()
    }

    /// Minimum-norm least-squares solution in the original column order.
    pub fn solve(&self) -> Vec<T> {
        let (k, rank) = (self.k, self.rank);
        let mut w = vec![T::zero(); k];
        if rank == 0 {
            return w;
        }
        if rank == k {
            back_substitute(&self.r, &self.qtb[..rank], &mut w);
        } else {
            // Complete orthogonal decomposition: annihilate the trailing
            // block of the leading `rank` rows from the right.
            let mut rt = Matrix::zeros(rank, k);
            for i in 0..rank {
                for j in i..k {
                    rt[(i, j)] = self.r[(i, j)];
                }
            }
            let mut reflectors: Vec<Vec<T>> = vec![Vec::new(); rank];
            for i in (0..rank).rev() {
                let mut v = Vec::with_capacity(1 + k - rank);
                v.push(rt[(i, i)]);
                v.extend((rank..k).map(|j| rt[(i, j)]));
                let norm = dot(&v, &v).sqrt();
                if norm == T::zero() {
                    reflectors[i] = v;
                    continue;
                }
                let alpha = if v[0] >= T::zero() { -norm } else { norm };
                v[0] -= alpha;
                let vtv = dot(&v, &v);
                if vtv > T::zero() {
                    let two_over = (T::one() + T::one()) / vtv;
                    for h in 0..=i {
                        let mut d = rt[(h, i)] * v[0];
                        for (t, j) in (rank..k).enumerate() {
                            d += rt[(h, j)] * v[1 + t];
                        }
                        let f = d * two_over;
                        rt[(h, i)] -= f * v[0];
                        for (t, j) in (rank..k).enumerate() {
                            rt[(h, j)] -= f * v[1 + t];
                        }
                    }
                }
                reflectors[i] = v;
            }
            let mut y = vec![T::zero(); rank];
            back_substitute(&rt, &self.qtb[..rank], &mut y);
            w[..rank].copy_from_slice(&y);
            // w = H_{rank-1} ... H_0 [y; 0]
            for (i, v) in reflectors.iter().enumerate() {
                let vtv = dot(v, v);
                if vtv == T::zero() {
                    continue;
                }
                let mut d = w[i] * v[0];
                for (t, j) in (rank..k).enumerate() {
                    d += w[j] * v[1 + t];
                }
                let f = d * (T::one() + T::one()) / vtv;
                w[i] -= f * v[0];
                for (t, j) in (rank..k).enumerate() {
                    w[j] -= f * v[1 + t];
                }
            }
        }
        let mut x = vec![T::zero(); k];
        for (j, &p) in self.perm.iter().enumerate() {
            x[p] = w[j];
        }
        x
    }

    /// `(AᵀA)⁻¹` in the original column order, for full-rank factorizations.
    pub fn inverse_gram(&self) -> Option<Matrix<T>> {
        if self.is_rank_deficient() {
            return None;
        }
        let k = self.k;
        // R⁻¹ column by column
        let mut rinv = Matrix::zeros(k, k);
        for j in 0..k {
            rinv[(j, j)] = T::one() / self.r[(j, j)];
            for i in (0..j).rev() {
                let mut s = T::zero();
                for l in (i + 1)..=j {
                    s += self.r[(i, l)] * rinv[(l, j)];
                }
                rinv[(i, j)] = -s / self.r[(i, i)];
            }
        }
        let mut out = Matrix::zeros(k, k);
        for a in 0..k {
            for b in a..k {
                let start = b;
                let mut s = T::zero();
                for l in start..k {
                    s += rinv[(a, l)] * rinv[(b, l)];
                }
                out[(self.perm[a], self.perm[b])] = s;
                out[(self.perm[b], self.perm[a])] = s;
            }
        }
        Some(out)
    }
}

fn back_substitute<T: Scalar>(r: &Matrix<T>, c: &[T], out: &mut [T]) {
    let m = c.len();
    for i in (0..m).rev() {
        let mut s = c[i];
        for j in (i + 1)..m {
            s -= r[(i, j)] * out[j];
        }
        out[i] = s / r[(i, i)];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg_matrix(rows: usize, cols: usize, seed: u64) -> Matrix<f64> {
        let mut s = seed;
        Matrix::from_fn(rows, cols, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
    }

    #[test]
    fn cholesky_roundtrip() {
        let a = lcg_matrix(6, 4, 3);
        let g = a.transpose().mat_mul(&a);
        let ch = Cholesky::new(&g).unwrap();
        let l = ch.factor();
        let back = l.mat_mul(&l.transpose());
        for i in 0..4 {
            for j in 0..4 {
                assert!((back[(i, j)] - g[(i, j)]).abs() < 1e-12);
            }
        }
        let inv = ch.inverse();
        let id = inv.mat_mul(&g);
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - e).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        match Cholesky::new(&m) {
            Err(Error::NotPositiveDefinite { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn qr_matches_normal_equations() {
        let a = lcg_matrix(30, 5, 11);
        let b: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin()).collect();
        let qr = PivotedQr::new(&a, &b).unwrap();
        assert_eq!(qr.rank(), 5);
        let x = qr.solve();
        let g = a.transpose().mat_mul(&a);
        let atb = a.transpose().mat_vec(&b);
        let xn = Cholesky::new(&g).unwrap().solve(&atb);
        for (u, v) in x.iter().zip(&xn) {
            assert!((u - v).abs() < 1e-10);
        }
        let resid: f64 = a.mat_vec(&x).iter().zip(&b).map(|(p, y)| (y - p).powi(2)).sum();
        assert!((resid - qr.rss()).abs() < 1e-10);
        let ginv = qr.inverse_gram().unwrap();
        let id = ginv.mat_mul(&g);
        for i in 0..5 {
            assert!((id[(i, i)] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rank_deficient_gives_minimum_norm_solution() {
        // duplicate column: columns 1 and 2 identical
        let base = lcg_matrix(20, 2, 5);
        let a = Matrix::from_fn(20, 3, |i, j| base[(i, if j == 2 { 1 } else { j })]);
        let b: Vec<f64> = (0..20).map(|i| i as f64 * 0.1 - 1.0).collect();
        let qr = PivotedQr::new(&a, &b).unwrap();
        assert_eq!(qr.rank(), 2);
        let x = qr.solve();
        // minimum norm splits the shared coefficient evenly
        assert!((x[1] - x[2]).abs() < 1e-10);
        let full = PivotedQr::new(&base, &b).unwrap().solve();
        assert!((x[0] - full[0]).abs() < 1e-10);
        assert!((x[1] + x[2] - full[1]).abs() < 1e-10);
    }
}
