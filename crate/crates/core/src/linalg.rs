//! Small dense linear algebra: a row-major matrix and a one-sided Jacobi SVD.
//!
//! The matrices in this crate are at most a few hundred on a side (SSA
//! trajectory matrices, CCA covariances), so a self-contained Hestenes
//! Jacobi iteration is accurate and fast enough.

use std::ops::{Index, IndexMut};

/// Off-diagonal tolerance for Jacobi convergence, relative to column norms.
pub const JACOBI_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.concat(),
        }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_cols(cols: &[Vec<f64>]) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, Vec::len);
        Self::from_fn(r, c, |i, j| cols[j][i])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in orow.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Dot product with four independent accumulators so the loop vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a4, b4) = (a[..n].chunks_exact(4), b[..n].chunks_exact(4));
    let tail: f64 = a4.remainder().iter().zip(b4.remainder()).map(|(x, y)| x * y).sum();
    let mut acc = [0.0; 4];
    for (x, y) in a4.zip(b4) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Columns below this count skip the eigen preconditioning.
const PRECONDITION_MIN_COLS: usize = 16;

/// Rotates `w` by the eigenvectors of its Gram matrix, which leaves the
/// columns nearly orthogonal so the Jacobi sweeps converge in one or two
/// passes. Returns the rotated columns and the rotation.
fn precondition(w: &[Vec<f64>]) -> Option<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let (n, m) = (w.len(), w[0].len());
    let a = nalgebra::DMatrix::from_fn(m, n, |i, j| w[j][i]);
    let eig = nalgebra::SymmetricEigen::try_new(a.tr_mul(&a), f64::EPSILON, 0)?;
    let rotated = &a * &eig.eigenvectors;
    let cols = |x: &nalgebra::DMatrix<f64>| -> Vec<Vec<f64>> {
        x.column_iter().map(|c| c.iter().copied().collect()).collect()
    };
    Some((cols(&rotated), cols(&eig.eigenvectors)))
}

/// Result of orthogonalising the columns of `A` (m x n) by plane rotations:
/// `A V = W`, with `W` having mutually orthogonal columns and `V` orthogonal.
///
/// Columns are sorted by decreasing norm, so `|w_j|` are the singular values
/// of `A` and `A = W V^T`.
#[derive(Debug, Clone)]
pub struct ColumnJacobi {
    pub w: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub norms: Vec<f64>,
    pub sweeps: usize,
}

pub fn jacobi_columns(mut w: Vec<Vec<f64>>) -> ColumnJacobi {
    let n = w.len();
    let identity = |n: usize| -> Vec<Vec<f64>> {
        (0..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                e
            })
            .collect()
    };
    let mut v = identity(n);
    if n >= PRECONDITION_MIN_COLS && w[0].len() >= n {
        if let Some((pw, pv)) = precondition(&w) {
            w = pw;
            v = pv;
        }
    }
    let mut sq: Vec<f64> = w.iter().map(|c| dot(c, c)).collect();
    // Inner products below rounding of the whole matrix are left alone, so
    // singular values are accurate to eps times the Frobenius norm.
    let floor = f64::EPSILON * sq.iter().sum::<f64>();
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta) = (sq[p], sq[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(&w[p], &w[q]);
                if gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() || gamma.abs() <= floor {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = w.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
                let (lo, hi) = v.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
                sq[p] = dot(&w[p], &w[p]);
                sq[q] = dot(&w[q], &w[q]);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sq[b].total_cmp(&sq[a]));
    let w: Vec<Vec<f64>> = order.iter().map(|&j| w[j].clone()).collect();
    let v: Vec<Vec<f64>> = order.iter().map(|&j| v[j].clone()).collect();
    let norms = w.iter().map(|c| dot(c, c).sqrt()).collect();
    ColumnJacobi { w, v, norms, sweeps }
}

fn rotate(a: &mut [f64], b: &mut [f64], c: f64, s: f64) {
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xa, yb) = (*x, *y);
        *x = c * xa - s * yb;
        *y = s * xa + c * yb;
    }
}

/// Thin singular value decomposition `A = U diag(s) V^T`.
///
/// `U` is m x k, `V` is n x k with k = min(m, n); `s` is nonincreasing.
/// Columns of `U` belonging to zero singular values are left zero.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

pub fn svd(a: &Matrix) -> Svd {
    if a.rows() < a.cols() {
        let t = svd(&a.transpose());
        return Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        };
    }
    let cols: Vec<Vec<f64>> = (0..a.cols()).map(|j| a.col(j)).collect();
    let cj = jacobi_columns(cols);
    let u_cols: Vec<Vec<f64>> = cj
        .w
        .iter()
        .zip(&cj.norms)
        .map(|(c, &s)| {
            if s > 0.0 {
                c.iter().map(|x| x / s).collect()
            } else {
                vec![0.0; c.len()]
            }
        })
        .collect();
    Svd {
        u: Matrix::from_cols(&u_cols),
        s: cj.norms,
        v: Matrix::from_cols(&cj.v),
    }
}

impl Svd {
    pub fn reconstruct(&self) -> Matrix {
        let k = self.s.len();
        let us = Matrix::from_fn(self.u.rows(), k, |i, j| self.u[(i, j)] * self.s[j]);
        us.matmul(&self.v.transpose())
    }
}

/// `S^p` for a symmetric positive semi-definite matrix, via its SVD.
///
/// Eigenvalues below `floor` are rejected with `None`.
pub fn sym_power(s: &Matrix, p: f64, floor: f64) -> Option<Matrix> {
    let d = svd(s);
    if d.s.iter().any(|&l| !(l > floor) || !l.is_finite()) {
        return None;
    }
    let n = s.rows();
    let scaled = Matrix::from_fn(n, n, |i, j| d.v[(i, j)] * d.s[j].powf(p));
    Some(scaled.matmul(&d.v.transpose()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows_data: Vec<Vec<f64>> = (0..rows)
            .map(|_| (0..cols).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        Matrix::from_rows(&rows_data)
    }

    #[test]
    fn svd_matches_nalgebra_singular_values() {
        for (seed, (r, c)) in [(5, 3), (3, 5), (20, 20), (40, 7)].into_iter().enumerate() {
            let a = random(r, c, seed as u64);
            let ours = svd(&a);
            let na = DMatrix::from_fn(r, c, |i, j| a[(i, j)]);
            let mut theirs: Vec<f64> = na.singular_values().iter().copied().collect();
            theirs.sort_by(|x, y| y.total_cmp(x));
            assert_eq!(ours.s.len(), theirs.len());
            for (x, y) in ours.s.iter().zip(&theirs) {
                assert!((x - y).abs() < 1e-10, "{x} vs {y}");
            }
            assert!(ours.reconstruct().max_abs_diff(&a) < 1e-12);
            let utu = ours.u.transpose().matmul(&ours.u);
            assert!(utu.max_abs_diff(&Matrix::identity(r.min(c))) < 1e-12);
            let vtv = ours.v.transpose().matmul(&ours.v);
            assert!(vtv.max_abs_diff(&Matrix::identity(r.min(c))) < 1e-12);
        }
    }

    #[test]
    fn rank_one_has_one_nonzero_value() {
        let a = Matrix::from_fn(6, 4, |_, _| 7.0);
        let d = svd(&a);
        assert!((d.s[0] - 7.0 * (24.0f64).sqrt()).abs() < 1e-12);
        assert!(d.s[1..].iter().all(|&s| s < 1e-12 * d.s[0]));
    }

    #[test]
    fn symmetric_inverse_sqrt() {
        let b = random(10, 4, 11);
        let s = b.transpose().matmul(&b);
        let isq = sym_power(&s, -0.5, 0.0).unwrap();
        let id = isq.matmul(&s).matmul(&isq);
        assert!(id.max_abs_diff(&Matrix::identity(4)) < 1e-10);
        assert!(sym_power(&Matrix::zeros(2, 2), -0.5, 0.0).is_none());
    }
}
