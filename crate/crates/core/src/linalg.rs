//! Small dense complex matrices: pivoted inversion and eigenvalues.
//!
//! Sized for the 5×5 fluctuation Jacobian, but nothing here assumes n = 5.

use std::fmt;
use std::ops::{Index, IndexMut, Mul, Sub};

use num_complex::Complex64 as C64;

#[derive(Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<C64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.n, self.n)?;
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n)
                .map(|j| format!("{:+.4e}{:+.4e}i", self[(i, j)].re, self[(i, j)].im))
                .collect();
            writeln!(f, "  {}", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows<const N: usize>(rows: [[C64; N]; N]) -> Self {
        Self::from_fn(N, |i, j| rows[i][j])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `self + shift·I`.
    pub fn shifted(&self, shift: C64) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            m[(i, i)] += shift;
        }
        m
    }

    pub fn conj(&self) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Submatrix of the leading `k` rows and columns.
    pub fn leading_block(&self, k: usize) -> Self {
        Self::from_fn(k, |i, j| self[(i, j)])
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Frobenius norm (an upper bound on the spectral norm).
    pub fn norm_frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Inverse by Gauss–Jordan elimination with partial pivoting.
    ///
    /// Returns `None` for an exactly singular matrix.
    pub fn inverse(&self) -> Option<Self> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&p, &q| a[(p, col)].norm().total_cmp(&a[(q, col)].norm()))
                .unwrap();
            if a[(pivot, col)].norm() == 0.0 {
                return None;
            }
            if pivot != col {
                a.swap_rows(pivot, col);
                inv.swap_rows(pivot, col);
            }
            let d = a[(col, col)].inv();
            for j in 0..n {
                a[(col, j)] *= d;
                inv[(col, j)] *= d;
            }
            for row in 0..n {
                if row == col {
                    continue;
                }
                let factor = a[(row, col)];
                if factor == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    let (ac, ic) = (a[(col, j)], inv[(col, j)]);
                    a[(row, j)] -= factor * ac;
                    inv[(row, j)] -= factor * ic;
                }
            }
        }
        Some(inv)
    }

    /// Eigenvalues by Householder reduction to Hessenberg form followed by
    /// Wilkinson-shifted complex QR iterations.
    pub fn eigenvalues(&self) -> Vec<C64> {
        let n = self.n;
        let mut h = self.clone();
        h.reduce_to_hessenberg();
        let mut eig = vec![C64::new(0.0, 0.0); n];
        if n == 0 {
            return eig;
        }
        let mut hi = n - 1;
        let mut iter = 0usize;
        while hi > 0 {
            let mut l = hi;
            while l > 0 {
                let scale = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
                if h[(l, l - 1)].norm() <= f64::EPSILON * scale.max(f64::MIN_POSITIVE) {
                    h[(l, l - 1)] = C64::new(0.0, 0.0);
                    break;
                }
                l -= 1;
            }
            if l == hi {
                eig[hi] = h[(hi, hi)];
                hi -= 1;
                iter = 0;
                continue;
            }
            iter += 1;
            if iter > 200 {
                // Non-convergence is not expected for n <= 5; report the
                // current diagonal rather than looping forever.
                for i in 0..=hi {
                    eig[i] = h[(i, i)];
                }
                return eig;
            }
            let shift = if iter % 12 == 0 {
                h[(hi, hi)] + C64::new(h[(hi, hi - 1)].norm(), 0.0)
            } else {
                wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
            };
            h.qr_step(l, hi, shift);
        }
        eig[0] = h[(0, 0)];
        eig
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for j in 0..self.n {
            self.data.swap(a * self.n + j, b * self.n + j);
        }
    }

    fn reduce_to_hessenberg(&mut self) {
        let n = self.n;
        for k in 0..n.saturating_sub(2) {
            let norm_x: f64 = ((k + 1)..n).map(|i| self[(i, k)].norm_sqr()).sum::<f64>().sqrt();
            if norm_x == 0.0 {
                continue;
            }
            let x0 = self[(k + 1, k)];
            let phase = if x0.norm() == 0.0 {
                C64::new(1.0, 0.0)
            } else {
                x0 / x0.norm()
            };
            let mut v: Vec<C64> = ((k + 1)..n).map(|i| self[(i, k)]).collect();
            v[0] += phase * norm_x;
            let vnorm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if vnorm == 0.0 {
                continue;
            }
            for z in v.iter_mut() {
                *z /= vnorm;
            }
            // A <- (I - 2vv^H) A
            for j in 0..n {
                let dot: C64 = v
                    .iter()
                    .enumerate()
                    .map(|(t, vt)| vt.conj() * self[(k + 1 + t, j)])
                    .sum();
                for (t, vt) in v.iter().enumerate() {
                    self[(k + 1 + t, j)] -= 2.0 * vt * dot;
                }
            }
            // A <- A (I - 2vv^H)
            for i in 0..n {
                let dot: C64 = v
                    .iter()
                    .enumerate()
                    .map(|(t, vt)| self[(i, k + 1 + t)] * vt)
                    .sum();
                for (t, vt) in v.iter().enumerate() {
                    self[(i, k + 1 + t)] -= 2.0 * dot * vt.conj();
                }
            }
            for i in (k + 2)..n {
                self[(i, k)] = C64::new(0.0, 0.0);
            }
        }
    }

    /// One shifted QR sweep on the active Hessenberg block `lo..=hi`.
    fn qr_step(&mut self, lo: usize, hi: usize, shift: C64) {
        for i in lo..=hi {
            self[(i, i)] -= shift;
        }
        let mut rotations = Vec::with_capacity(hi - lo);
        for i in lo..hi {
            let (c, s) = givens(self[(i, i)], self[(i + 1, i)]);
            for j in i..=hi {
                let (a, b) = (self[(i, j)], self[(i + 1, j)]);
                self[(i, j)] = c * a + s * b;
                self[(i + 1, j)] = -s.conj() * a + c * b;
            }
            rotations.push((c, s));
        }
        for (offset, &(c, s)) in rotations.iter().enumerate() {
            let i = lo + offset;
            for r in lo..=(i + 2).min(hi) {
                let (a, b) = (self[(r, i)], self[(r, i + 1)]);
                self[(r, i)] = c * a + s.conj() * b;
                self[(r, i + 1)] = -s * a + c * b;
            }
        }
        for i in lo..=hi {
            self[(i, i)] += shift;
        }
    }
}

/// Rotation (c real, s complex) with [c s; -s̄ c]·[x; y] = [r; 0].
fn givens(x: C64, y: C64) -> (f64, C64) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    if ax == 0.0 {
        return (0.0, C64::new(1.0, 0.0));
    }
    let r = ax.hypot(ay);
    let c = ax / r;
    let s = (x / ax) * y.conj() / r;
    (c, s)
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mu1 = d - b * c / (half + disc).fdiv_guard();
    let mu2 = d - b * c / (half - disc).fdiv_guard();
    if (mu1 - d).norm() <= (mu2 - d).norm() {
        mu1
    } else {
        mu2
    }
}

trait DivGuard {
    fn fdiv_guard(self) -> Self;
}

impl DivGuard for C64 {
    fn fdiv_guard(self) -> Self {
        if self.norm() == 0.0 {
            C64::new(f64::MIN_POSITIVE, 0.0)
        } else {
            self
        }
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n);
        CMatrix::from_fn(self.n, |i, j| {
            (0..self.n).map(|k| self[(i, k)] * rhs[(k, j)]).sum()
        })
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n);
        CMatrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sample() -> CMatrix {
        CMatrix::from_rows([
            [c(1.0, 0.5), c(0.2, -1.0), c(0.0, 0.3)],
            [c(-0.7, 0.1), c(2.0, 0.0), c(0.4, 0.4)],
            [c(0.3, 0.0), c(-0.1, 0.9), c(-1.5, 0.2)],
        ])
    }

    #[test]
    fn inverse_multiplies_back_to_identity() {
        let a = sample();
        let inv = a.inverse().unwrap();
        let residual = &(&a * &inv) - &CMatrix::identity(3);
        assert!(residual.norm_frobenius() < 1e-14);
    }

    #[test]
    fn singular_matrix_has_no_inverse() {
        let a = CMatrix::from_rows([[c(1.0, 0.0), c(2.0, 0.0)], [c(2.0, 0.0), c(4.0, 0.0)]]);
        assert!(a.inverse().is_none());
    }

    #[test]
    fn triangular_eigenvalues_are_the_diagonal() {
        let a = CMatrix::from_rows([
            [c(1.0, 1.0), c(5.0, 0.0), c(2.0, -3.0)],
            [c(0.0, 0.0), c(-2.0, 0.5), c(1.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(0.25, -4.0)],
        ]);
        let mut eig = a.eigenvalues();
        eig.sort_by(|x, y| x.re.total_cmp(&y.re));
        let want = [c(-2.0, 0.5), c(0.25, -4.0), c(1.0, 1.0)];
        for (e, w) in eig.iter().zip(want) {
            assert!((e - w).norm() < 1e-13, "{e} vs {w}");
        }
    }

    #[test]
    fn eigenvalues_preserve_trace_and_determinant_of_2x2() {
        let a = CMatrix::from_rows([[c(0.3, 1.0), c(2.0, 0.1)], [c(-1.0, 0.0), c(0.5, -0.2)]]);
        let eig = a.eigenvalues();
        let trace = a[(0, 0)] + a[(1, 1)];
        let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
        assert!((eig[0] + eig[1] - trace).norm() < 1e-14);
        assert!((eig[0] * eig[1] - det).norm() < 1e-14);
    }

    #[test]
    fn rotation_matrix_has_conjugate_pair() {
        let a = CMatrix::from_rows([[c(0.0, 0.0), c(-1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]);
        let mut eig = a.eigenvalues();
        eig.sort_by(|x, y| x.im.total_cmp(&y.im));
        assert!((eig[0] - c(0.0, -1.0)).norm() < 1e-14);
        assert!((eig[1] - c(0.0, 1.0)).norm() < 1e-14);
    }
}
