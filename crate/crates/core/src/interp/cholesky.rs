//! Dense symmetric positive-definite factorization A = L Lᵀ.

use std::ops::{Index, IndexMut};

use crate::{Error, Result};

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = Matrix::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n, "row {i} has the wrong length");
            m.data[i * n..(i + 1) * n].copy_from_slice(r);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn add_diagonal(&mut self, eps: f64) {
        for i in 0..self.n {
            self.data[i * self.n + i] += eps;
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Dot product with four independent accumulators. The summation order
/// is fixed, so results do not depend on threading.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..n {
        s += a[k] * b[k];
    }
    s
}

/// Lower-triangular Cholesky factor. Fails with the index of the first
/// non-positive pivot.
pub fn factor(a: &Matrix) -> Result<Matrix> {
    let n = a.n();
    let mut l = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let s = {
                let (li, lj) = (&l.data[i * n..i * n + j], &l.data[j * n..j * n + j]);
                a[(i, j)] - dot(li, lj)
            };
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(Error::Conditioning { pivot: i, value: s });
                }
                l.data[i * n + i] = s.sqrt();
            } else {
                l.data[i * n + j] = s / l.data[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Solves L Lᵀ x = b given the factor from [`factor`].
pub fn solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.n();
    assert_eq!(b.len(), n);
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (b[i] - dot(&l.row(i)[..i], &y[..i])) / l[(i, i)];
    }
    let mut x = y;
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Lower bound on the 2-norm condition number from the factor diagonal.
pub fn condition_estimate(l: &Matrix) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..l.n() {
        lo = lo.min(l[(i, i)]);
        hi = hi.max(l[(i, i)]);
    }
    (hi / lo).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Gaussian elimination with partial pivoting on the full matrix.
    fn gauss_solve(a: &Matrix, b: &[f64]) -> Vec<f64> {
        let n = a.n();
        let mut m: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut r = a.row(i).to_vec();
                r.push(b[i]);
                r
            })
            .collect();
        for c in 0..n {
            let p = (c..n).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs())).unwrap();
            m.swap(c, p);
            for r in c + 1..n {
                let f = m[r][c] / m[c][c];
                for k in c..=n {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| m[i][k] * x[k]).sum();
            x[i] = (m[i][n] - s) / m[i][i];
        }
        x
    }

    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
        let b: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let mut a = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = (0..n).map(|k| b[i][k] * b[j][k]).sum::<f64>() + if i == j { 0.5 } else { 0.0 };
            }
        }
        a
    }

    #[test]
    fn matches_gaussian_elimination() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=20 {
            let a = random_spd(n, &mut rng);
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = solve(&factor(&a).unwrap(), &b);
            let y = gauss_solve(&a, &b);
            let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (p, q) in x.iter().zip(&y) {
                assert!((p - q).abs() <= 1e-10 * scale.max(1.0), "n={n}");
            }
        }
    }

    #[test]
    fn reconstructs_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_spd(12, &mut rng);
        let l = factor(&a).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                let v: f64 = (0..12).map(|k| l[(i, k)] * l[(j, k)]).sum();
                assert!((v - a[(i, j)]).abs() < 1e-12);
            }
            for j in i + 1..12 {
                assert_eq!(l[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn reports_failing_pivot() {
        let a = Matrix::from_rows(&[vec![4.0, 2.0, 0.0], vec![2.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        match factor(&a) {
            Err(Error::Conditioning { pivot, .. }) => assert_eq!(pivot, 1),
            other => panic!("expected breakdown, got {other:?}"),
        }
        let a = Matrix::from_rows(&[vec![-1.0]]);
        assert!(matches!(factor(&a), Err(Error::Conditioning { pivot: 0, .. })));
    }

    #[test]
    fn condition_of_diagonal() {
        let a = Matrix::from_rows(&[vec![4.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(condition_estimate(&factor(&a).unwrap()), 4.0);
    }
}
