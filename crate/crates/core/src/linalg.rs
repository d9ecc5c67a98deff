//! Small dense complex linear algebra: fixed 2x2 matrices, square matrices
//! and a Hermitian eigensolver for exact propagators.

use std::ops::Mul;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

fn c<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}

/// Row-major 2x2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct Mat2<T: Real> {
    pub m: [Complex<T>; 4],
}

impl<T: Real> Mat2<T> {
    pub fn new(a: Complex<T>, b: Complex<T>, c: Complex<T>, d: Complex<T>) -> Self {
        Self { m: [a, b, c, d] }
    }

    pub fn identity() -> Self {
        Self::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0))
    }

    pub fn diag(a: Complex<T>, d: Complex<T>) -> Self {
        let z = Complex::new(T::zero(), T::zero());
        Self::new(a, z, z, d)
    }

    #[inline]
    pub fn get(&self, r: usize, col: usize) -> Complex<T> {
        self.m[2 * r + col]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Self::new(m[0].conj(), m[2].conj(), m[1].conj(), m[3].conj())
    }

    pub fn det(&self) -> Complex<T> {
        self.m[0] * self.m[3] - self.m[1] * self.m[2]
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            m: self.m.map(|x| x * s),
        }
    }

    pub fn cast<U: Real>(&self) -> Mat2<U> {
        Mat2 {
            m: self
                .m
                .map(|x| Complex::new(U::lit(x.re.to_f64_lossy()), U::lit(x.im.to_f64_lossy()))),
        }
    }

    /// Largest entry-wise deviation `max |U - V|`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max)
    }

    pub fn unitarity_error(&self) -> T {
        (*self * self.adjoint()).max_abs_diff(&Self::identity())
    }

    /// Distance up to a global phase, aligned on the largest entry of `other`.
    pub fn phase_distance(&self, other: &Self) -> T {
        phase_distance_slices(&self.m, &other.m)
    }
}

impl<T: Real> Mul for Mat2<T> {
    type Output = Mat2<T>;

    fn mul(self, rhs: Self) -> Self {
        let a = &self.m;
        let b = &rhs.m;
        Mat2::new(
            a[0] * b[0] + a[1] * b[2],
            a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3],
        )
    }
}

fn phase_distance_slices<T: Real>(u: &[Complex<T>], v: &[Complex<T>]) -> T {
    debug_assert_eq!(u.len(), v.len());
    let mut k = 0;
    let mut best = T::zero();
    for (i, x) in v.iter().enumerate() {
        let n = x.norm();
        if n > best {
            best = n;
            k = i;
        }
    }
    let phase = if best == T::zero() || u[k].norm() == T::zero() {
        Complex::new(T::one(), T::zero())
    } else {
        let r = u[k] / v[k];
        r / r.norm()
    };
    u.iter()
        .zip(v.iter())
        .map(|(a, b)| (*a - *b * phase).norm())
        .fold(T::zero(), T::max)
}

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T: Real> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex::new(T::zero(), T::zero()); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex::new(T::one(), T::zero());
        }
        m
    }

    /// Builds a matrix from row-major data; `data.len()` must be a square.
    pub fn from_rows(dim: usize, data: Vec<Complex<T>>) -> Self {
        assert_eq!(data.len(), dim * dim, "matrix data has wrong length");
        Self { dim, data }
    }

    pub fn from_mat2(m: &Mat2<T>) -> Self {
        Self::from_rows(2, m.m.to_vec())
    }

    pub fn diag(entries: &[Complex<T>]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, e) in entries.iter().enumerate() {
            m.data[i * entries.len() + i] = *e;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, col: usize) -> Complex<T> {
        self.data[r * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, r: usize, col: usize, v: Complex<T>) {
        self.data[r * self.dim + col] = v;
    }

    pub fn column(&self, col: usize) -> Vec<Complex<T>> {
        (0..self.dim).map(|r| self.get(r, col)).collect()
    }

    pub fn set_column(&mut self, col: usize, v: &[Complex<T>]) {
        for (r, x) in v.iter().enumerate() {
            self.set(r, col, *x);
        }
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for col in 0..n {
                out.data[col * n + r] = self.data[r * n + col].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|x| *x * s).collect(),
        }
    }

    /// Kronecker product `self ⊗ other`; `self` occupies the high bits.
    pub fn kron(&self, other: &Self) -> Self {
        let (a, b) = (self.dim, other.dim);
        let n = a * b;
        let mut out = Self::zeros(n);
        for i in 0..a {
            for j in 0..a {
                let x = self.get(i, j);
                if x == Complex::new(T::zero(), T::zero()) {
                    continue;
                }
                for k in 0..b {
                    for l in 0..b {
                        out.data[(i * b + k) * n + j * b + l] = x * other.get(k, l);
                    }
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max)
    }

    pub fn phase_distance(&self, other: &Self) -> T {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        phase_distance_slices(&self.data, &other.data)
    }

    pub fn unitarity_error(&self) -> T {
        (self * &self.adjoint()).max_abs_diff(&Self::identity(self.dim))
    }

    pub fn mat_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.dim;
        (0..n)
            .map(|r| {
                let row = &self.data[r * n..(r + 1) * n];
                row.iter()
                    .zip(v.iter())
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| {
                        acc + *a * *b
                    })
            })
            .collect()
    }
}

impl<T: Real> Mul for &Matrix<T> {
    type Output = Matrix<T>;

    fn mul(self, rhs: Self) -> Matrix<T> {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == Complex::new(T::zero(), T::zero()) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Returns `(eigenvalues, V)` with `H = V diag(λ) V†`.
pub fn hermitian_eigen<T: Real>(h: &Matrix<T>) -> (Vec<T>, Matrix<T>) {
    let n = h.dim();
    let mut a = h.clone();
    let mut v = Matrix::identity(n);
    let scale = a.data.iter().map(|x| x.norm()).fold(T::zero(), T::max);
    if scale == T::zero() {
        return (vec![T::zero(); n], v);
    }
    let tol = scale * T::epsilon() * T::lit(0.5);
    for _sweep in 0..64 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a.get(p, q).norm());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                let mag = apq.norm();
                if mag <= tol {
                    continue;
                }
                let ph = apq / mag;
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let theta = (aqq - app) / (T::lit(2.0) * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let cs = T::one() / (t * t + T::one()).sqrt();
                let sn = t * cs;
                // G acts on the (p, q) plane: a phase on q followed by a real rotation.
                let phc = ph.conj();
                let g_pp = Complex::new(cs, T::zero());
                let g_pq = Complex::new(sn, T::zero());
                let g_qp = phc * (-sn);
                let g_qq = phc * cs;
                for r in 0..n {
                    let x = a.get(r, p);
                    let y = a.get(r, q);
                    a.set(r, p, x * g_pp + y * g_qp);
                    a.set(r, q, x * g_pq + y * g_qq);
                    let x = v.get(r, p);
                    let y = v.get(r, q);
                    v.set(r, p, x * g_pp + y * g_qp);
                    v.set(r, q, x * g_pq + y * g_qq);
                }
                for col in 0..n {
                    let x = a.get(p, col);
                    let y = a.get(q, col);
                    a.set(p, col, g_pp.conj() * x + g_qp.conj() * y);
                    a.set(q, col, g_pq.conj() * x + g_qq.conj() * y);
                }
                a.set(p, q, Complex::new(T::zero(), T::zero()));
                a.set(q, p, Complex::new(T::zero(), T::zero()));
            }
        }
    }
    let vals = (0..n).map(|i| a.get(i, i).re).collect();
    (vals, v)
}

/// `exp(-i H t)` for Hermitian `H`.
pub fn expm_hermitian<T: Real>(h: &Matrix<T>, t: T) -> Matrix<T> {
    let (vals, v) = hermitian_eigen(h);
    let phases: Vec<Complex<T>> = vals
        .iter()
        .map(|l| Complex::from_polar(T::one(), -*l * t))
        .collect();
    let d = Matrix::diag(&phases);
    &(&v * &d) * &v.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn herm3() -> Matrix<f64> {
        let d = vec![
            c(1.0, 0.0),
            c(0.3, -0.4),
            c(0.0, 0.2),
            c(0.3, 0.4),
            c(-2.0, 0.0),
            c(0.5, 0.0),
            c(0.0, -0.2),
            c(0.5, 0.0),
            c(0.7, 0.0),
        ];
        Matrix::from_rows(3, d)
    }

    #[test]
    fn eigen_reconstructs() {
        let h = herm3();
        let (vals, v) = hermitian_eigen(&h);
        let d = Matrix::diag(
            &vals
                .iter()
                .map(|x| Complex64::new(*x, 0.0))
                .collect::<Vec<_>>(),
        );
        let back = &(&v * &d) * &v.adjoint();
        assert!(back.max_abs_diff(&h) < 1e-13);
        assert!(v.unitarity_error() < 1e-13);
    }

    #[test]
    fn expm_matches_pauli_closed_form() {
        // exp(-i (a X) t) = cos(at) I - i sin(at) X
        let a = 0.8;
        let t = 1.7;
        let x = Matrix::from_rows(2, vec![c(0.0, 0.0), c(a, 0.0), c(a, 0.0), c(0.0, 0.0)]);
        let u = expm_hermitian(&x, t);
        let (co, si) = ((a * t).cos(), (a * t).sin());
        let want = Matrix::from_rows(2, vec![c(co, 0.0), c(0.0, -si), c(0.0, -si), c(co, 0.0)]);
        assert!(u.max_abs_diff(&want) < 1e-14);
    }

    #[test]
    fn phase_distance_ignores_global_phase() {
        let u = Mat2::<f64>::new(c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.8), c(0.6, 0.0));
        let v = u.scale(Complex64::from_polar(1.0, 1.234));
        assert!(u.phase_distance(&v) < 1e-15);
        assert!(u.max_abs_diff(&v) > 0.1);
    }

    #[test]
    fn kron_orders_high_bits_first() {
        let x = Matrix::from_rows(2, vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let i = Matrix::<f64>::identity(2);
        let xi = x.kron(&i);
        // X on the high bit maps |00> to |10>, i.e. index 0 -> 2.
        assert_eq!(xi.get(2, 0), c(1.0, 0.0));
    }

    #[test]
    fn f32_eigen_is_usable() {
        let h: Matrix<f32> =
            Matrix::from_rows(2, vec![c(1.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(1.0, 0.0)]);
        let (mut vals, _) = hermitian_eigen(&h);
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((vals[0] - 0.0).abs() < 1e-6 && (vals[1] - 2.0).abs() < 1e-6);
    }
}
