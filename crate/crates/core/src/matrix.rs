//! Small dense matrices: determinant sign, co-norm (smallest singular
//! value) and operator norm.

mod hull;

pub use hull::{hull_conorm_inf, HullEstimate, HullSample};

/// Cosine threshold for the Jacobi orthogonalization.
pub const JACOBI_TOL: f64 = 1e-12;
/// Sweep cap for the Jacobi iteration.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Matrix {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Matrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(d: &[f64]) -> Matrix {
        let mut m = Matrix::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Matrix {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Matrix::new(rows.len(), cols, rows.concat())
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

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        self.data
            .chunks(self.cols)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix::new(self.rows, self.cols, self.data.iter().map(|x| c * x).collect())
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix::new(
            self.rows,
            self.cols,
            self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        )
    }

    /// `(1 - t) self + t other`.
    pub fn lerp(&self, other: &Matrix, t: f64) -> Matrix {
        Matrix::new(
            self.rows,
            self.cols,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (1.0 - t) * a + t * b)
                .collect(),
        )
    }

    /// `Σ wᵢ Aᵢ`.
    pub fn combination(mats: &[Matrix], weights: &[f64]) -> Matrix {
        let first = &mats[0];
        let mut data = vec![0.0; first.data.len()];
        for (m, &w) in mats.iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            for (d, x) in data.iter_mut().zip(&m.data) {
                *d += w * x;
            }
        }
        Matrix::new(first.rows, first.cols, data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// LU factorization with partial pivoting. Returns the packed factors,
    /// the permutation parity, and whether a zero pivot was hit.
    fn lu(&self) -> (Vec<f64>, Vec<usize>, f64, bool) {
        assert!(self.is_square(), "LU needs a square matrix");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut parity = 1.0;
        let mut singular = false;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))
                .expect("nonempty range");
            if a[p * n + k] == 0.0 {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                parity = -parity;
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let factor = a[i * n + k] / pivot;
                a[i * n + k] = factor;
                for j in k + 1..n {
                    a[i * n + j] -= factor * a[k * n + j];
                }
            }
        }
        (a, perm, parity, singular)
    }

    pub fn determinant(&self) -> f64 {
        let n = self.rows;
        let (lu, _, parity, singular) = self.lu();
        if singular {
            return 0.0;
        }
        (0..n).map(|i| lu[i * n + i]).product::<f64>() * parity
    }

    /// Sign of the determinant, or 0 when `|det| ≤ tol · Πᵢ maxⱼ |aᵢⱼ|`.
    pub fn sign_det(&self, tol: f64) -> i8 {
        let det = self.determinant();
        let scale: f64 = self
            .data
            .chunks(self.cols)
            .map(|row| row.iter().fold(0.0f64, |m, x| m.max(x.abs())))
            .product();
        if det == 0.0 || det.abs() <= tol * scale {
            0
        } else if det > 0.0 {
            1
        } else {
            -1
        }
    }

    /// Solves `A x = b`; `None` when a pivot vanishes.
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.rows;
        let (lu, perm, _, singular) = self.lu();
        if singular {
            return None;
        }
        let mut y: Vec<f64> = perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                y[i] -= lu[i * n + k] * y[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] -= lu[i * n + k] * y[k];
            }
            y[i] /= lu[i * n + i];
        }
        y.iter().all(|v| v.is_finite()).then_some(y)
    }

    /// Singular values in decreasing order, via one-sided (Hestenes)
    /// Jacobi: rotations that diagonalize AᵀA applied to the columns of A,
    /// so the squared column norms converge to the eigenvalues of AᵀA.
    pub fn singular_values(&self) -> Vec<f64> {
        if self.rows < self.cols {
            return self.transpose().singular_values();
        }
        let (m, n) = (self.rows, self.cols);
        // column-major working copy
        let mut u: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| self.get(i, j)).collect()).collect();
        for _ in 0..JACOBI_MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let alpha: f64 = u[p].iter().map(|x| x * x).sum();
                    let beta: f64 = u[q].iter().map(|x| x * x).sum();
                    let gamma: f64 = u[p].iter().zip(&u[q]).map(|(a, b)| a * b).sum();
                    if gamma == 0.0 || gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    let (left, right) = u.split_at_mut(q);
                    for (a, b) in left[p].iter_mut().zip(right[0].iter_mut()) {
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
        let mut sv: Vec<f64> = u.iter().map(|col| norm(col)).collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    /// Co-norm `σ(A) = min_{‖x‖=1} ‖Ax‖`, the smallest singular value.
    pub fn conorm(&self) -> f64 {
        assert!(self.is_square(), "co-norm is defined for square matrices");
        *self.singular_values().last().expect("n >= 1")
    }

    /// Operator 2-norm (largest singular value).
    pub fn op_norm(&self) -> f64 {
        self.singular_values().first().copied().unwrap_or(0.0)
    }

    pub fn frobenius(&self) -> f64 {
        norm(&self.data)
    }
}

/// Free-function form of [`Matrix::conorm`].
pub fn conorm(a: &Matrix) -> f64 {
    a.conorm()
}

/// Free-function form of [`Matrix::sign_det`].
pub fn sign_det(a: &Matrix, tol: f64) -> i8 {
    a.sign_det(tol)
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_conorm_is_one() {
        for n in 1..=6 {
            assert_eq!(Matrix::identity(n).conorm(), 1.0);
        }
    }

    #[test]
    fn singular_conorm_is_zero() {
        let a = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]);
        assert_eq!(a.conorm(), 0.0);
        assert_eq!(a.sign_det(0.0), 0);
    }

    #[test]
    fn diagonal_conorm_matches_brute_force() {
        let a = Matrix::diag(&[1.0 / 3.0, 1.0]);
        // independent route: minimize ‖Ax‖ over 10^6 unit vectors
        let n = 1_000_000;
        let brute = (0..n)
            .map(|k| {
                let th = std::f64::consts::TAU * k as f64 / n as f64;
                norm(&a.mul_vec(&[th.cos(), th.sin()]))
            })
            .fold(f64::INFINITY, f64::min);
        assert!((brute - 1.0 / 3.0).abs() < 1e-6);
        assert!((a.conorm() - brute).abs() < 1e-6);
    }

    #[test]
    fn sign_det_examples() {
        assert_eq!(Matrix::identity(3).sign_det(1e-12), 1);
        assert_eq!(Matrix::identity(3).scale(-1.0).sign_det(1e-12), -1);
        let p = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(p.sign_det(0.0), -1);
        // row scaling does not matter, near-dependence of rows does
        assert_eq!(Matrix::diag(&[1.0, 1e-14]).sign_det(1e-12), 1);
        let near = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0 + 1e-14]]);
        assert_eq!(near.sign_det(1e-12), 0);
        assert_eq!(near.sign_det(0.0), 1);
    }

    #[test]
    fn determinant_and_solve() {
        let a = Matrix::from_rows(&[
            vec![2.0, -1.0, 0.0],
            vec![-1.0, 2.0, -1.0],
            vec![0.0, -1.0, 2.0],
        ]);
        assert!((a.determinant() - 4.0).abs() < 1e-12);
        let x = a.solve(&[1.0, 0.0, 1.0]).unwrap();
        for (u, v) in a.mul_vec(&x).iter().zip([1.0, 0.0, 1.0]) {
            assert!((u - v).abs() < 1e-12);
        }
        assert!(Matrix::zeros(2, 2).solve(&[1.0, 1.0]).is_none());
    }

    #[test]
    fn rectangular_singular_values() {
        let a = Matrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 4.0], vec![0.0, 0.0]]);
        assert_eq!(a.singular_values(), vec![4.0, 3.0]);
        assert_eq!(a.transpose().op_norm(), 4.0);
    }
}
