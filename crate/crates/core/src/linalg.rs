//! Dense row-major matrices and a row-pivoted LU factorization.
//!
//! The trailing update of the factorization is distributed over rows; each
//! row is updated by exactly the same arithmetic under either execution
//! policy, so factors are bit-identical.

use nalgebra::DMatrix;

use crate::exec::Exec;

/// Below this many trailing entries the update runs on the calling thread.
const PAR_MIN_ENTRIES: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        DenseMatrix { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = DenseMatrix::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m.data[i * d.len() + i] = x;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] += v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    /// Singular values in decreasing order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.to_nalgebra().singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// The factorization met an exactly zero pivot in column `column`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularPivot {
    pub column: usize,
}

/// `P A = L U` with unit lower `L`, stored packed.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    norm_1: f64,
}

impl Lu {
    pub fn factor(a: &DenseMatrix, exec: Exec) -> std::result::Result<Lu, SingularPivot> {
        assert_eq!(a.rows, a.cols, "LU needs a square matrix");
        let n = a.rows;
        let norm_1 = a.norm_1();
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax == 0.0 || !pmax.is_finite() {
                return Err(SingularPivot { column: k });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let (head, tail) = lu.split_at_mut((k + 1) * n);
            let pivot_row = &head[k * n..];
            let pivot = pivot_row[k];
            let update = |_: usize, row: &mut [f64]| {
                let l = row[k] / pivot;
                row[k] = l;
                if l != 0.0 {
                    for (x, &u) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                        *x -= l * u;
                    }
                }
            };
            let policy = if (n - k - 1) * (n - k) >= PAR_MIN_ENTRIES {
                exec
            } else {
                Exec::Sequential
            };
            policy.for_each_chunk_mut(tail, n, update);
        }
        Ok(Lu { n, lu, perm, norm_1 })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Diagonal of `U`.
    pub fn pivots(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.lu[k * self.n + k]).collect()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            x[i] -= dot(row, &x[..i]);
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n..(i + 1) * n];
            let s = dot(&row[i + 1..], &x[i + 1..]);
            x[i] = (x[i] - s) / row[i];
        }
        x
    }

    /// Solves `A^T x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut w = b.to_vec();
        for i in 0..n {
            let d = self.lu[i * n + i];
            w[i] /= d;
            let wi = w[i];
            for j in i + 1..n {
                w[j] -= self.lu[i * n + j] * wi;
            }
        }
        for i in (0..n).rev() {
            let wi = w[i];
            for j in 0..i {
                w[j] -= self.lu[i * n + j] * wi;
            }
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = w[i];
        }
        x
    }

    /// Columns of `A^{-1}`, solved independently.
    pub fn inverse(&self, exec: Exec) -> DenseMatrix {
        let n = self.n;
        let cols = exec.map_range(n, |j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            self.solve(&e)
        });
        DenseMatrix::from_fn(n, n, |i, j| cols[j][i])
    }

    /// Lower bound on `||A^{-1}||_1` by Hager's method with Higham's
    /// alternating-sign safeguard.
    pub fn inverse_norm_1_estimate(&self) -> f64 {
        let n = self.n;
        if n == 0 {
            return 0.0;
        }
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let y = self.solve(&x);
            est = y.iter().map(|v| v.abs()).sum::<f64>();
            let xi: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
            let z = self.solve_transpose(&xi);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .fold((0, -1.0), |b, (i, v)| if v.abs() > b.1 { (i, v.abs()) } else { b });
            if zmax <= dot(&z, &x) || j == last_j {
                break;
            }
            x = vec![0.0; n];
            x[j] = 1.0;
            last_j = j;
        }
        let alt: Vec<f64> = (0..n)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                sign * (1.0 + i as f64 / (n.max(2) - 1) as f64)
            })
            .collect();
        let alt_est = 2.0 * self.solve(&alt).iter().map(|v| v.abs()).sum::<f64>() / (3.0 * n as f64);
        est.max(alt_est)
    }

    /// Estimated reciprocal 1-norm condition number.
    pub fn rcond_estimate(&self) -> f64 {
        let inv = self.inverse_norm_1_estimate();
        if self.norm_1 == 0.0 || !inv.is_finite() || inv == 0.0 {
            return 0.0;
        }
        1.0 / (self.norm_1 * inv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = DenseMatrix::from_fn(n, n, |_, _| 0.0);
        for x in m.data_mut() {
            *x = rng.random_range(-1.0..1.0);
        }
        for i in 0..n {
            m.add_at(i, i, n as f64 * 0.5);
        }
        m
    }

    #[test]
    fn solve_residual_is_small() {
        let a = random_matrix(40, 3);
        let lu = Lu::factor(&a, Exec::Sequential).unwrap();
        let b: Vec<f64> = (0..40).map(|i| (i as f64).sin()).collect();
        let x = lu.solve(&b);
        let r: Vec<f64> = a.matvec(&x).iter().zip(&b).map(|(p, q)| p - q).collect();
        assert!(norm2(&r) <= 1e-12 * (norm2(&b) + a.norm_fro() * norm2(&x)));
        let xt = lu.solve_transpose(&b);
        let rt: Vec<f64> = a.transpose().matvec(&xt).iter().zip(&b).map(|(p, q)| p - q).collect();
        assert!(norm2(&rt) < 1e-12);
    }

    #[test]
    fn parallel_factor_is_bit_identical() {
        let a = random_matrix(200, 11);
        let s = Lu::factor(&a, Exec::Sequential).unwrap();
        let p = Lu::factor(&a, Exec::Parallel).unwrap();
        assert_eq!(s.lu, p.lu);
        assert_eq!(s.perm, p.perm);
    }

    #[test]
    fn zero_column_is_singular() {
        let a = DenseMatrix::from_row_major(2, 2, vec![1.0, 0.0, 2.0, 0.0]);
        assert_eq!(Lu::factor(&a, Exec::Sequential).unwrap_err(), SingularPivot { column: 1 });
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let a = DenseMatrix::from_row_major(2, 2, vec![0.0, 1.0, 1.0, 0.0]);
        let lu = Lu::factor(&a, Exec::Sequential).unwrap();
        assert_eq!(lu.solve(&[3.0, 4.0]), vec![4.0, 3.0]);
    }

    #[test]
    fn inverse_and_condition_estimate() {
        let a = random_matrix(25, 5);
        let lu = Lu::factor(&a, Exec::Sequential).unwrap();
        let inv = lu.inverse(Exec::Parallel);
        let prod = a.matmul(&inv);
        let err = DenseMatrix::from_fn(25, 25, |i, j| prod.get(i, j) - if i == j { 1.0 } else { 0.0 });
        assert!(err.max_abs() < 1e-13);
        let est = lu.inverse_norm_1_estimate();
        let exact = inv.norm_1();
        assert!(est <= exact * (1.0 + 1e-12) && est >= 0.3 * exact);
    }

    #[test]
    fn diagonal_singular_values() {
        let s = DenseMatrix::diagonal(&[-2.0, 0.5, 3.0]).singular_values();
        assert!((s[0] - 3.0).abs() < 1e-14 && (s[2] - 0.5).abs() < 1e-14);
    }
}
