//! Single-qubit unitary factorizations.

use num_complex::Complex64;

use crate::linalg::Mat2;

/// `U = e^{iα} RZ(a) RY(b) RZ(c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zyz {
    pub alpha: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

fn rz(t: f64) -> Mat2<f64> {
    Mat2::diag(
        Complex64::from_polar(1.0, -t / 2.0),
        Complex64::from_polar(1.0, t / 2.0),
    )
}

fn ry(t: f64) -> Mat2<f64> {
    let (s, c) = (t / 2.0).sin_cos();
    Mat2::new(c.into(), (-s).into(), s.into(), c.into())
}

impl Zyz {
    pub fn matrix(&self) -> Mat2<f64> {
        (rz(self.a) * ry(self.b) * rz(self.c)).scale(Complex64::from_polar(1.0, self.alpha))
    }
}

/// ZYZ angles of a 2x2 unitary. When `b` is 0 or π the split between `a`
/// and `c` is fixed by putting everything into `a`.
pub fn zyz(u: &Mat2<f64>) -> Zyz {
    let mut alpha = u.det().arg() / 2.0;
    let v = u.scale(Complex64::from_polar(1.0, -alpha));
    let (v00, v10, v11) = (v.get(0, 0), v.get(1, 0), v.get(1, 1));
    let b = 2.0 * v10.norm().atan2(v00.norm());
    // det V = 1 fixes v11 = e^{i(a+c)/2} cos(b/2) and v10 = e^{i(a-c)/2} sin(b/2).
    let sum = 2.0 * v11.arg();
    let diff = 2.0 * v10.arg();
    let (a, c) = if v00.norm() <= 1e-12 {
        (diff, 0.0)
    } else if v10.norm() <= 1e-12 {
        (sum, 0.0)
    } else {
        ((sum + diff) / 2.0, (sum - diff) / 2.0)
    };
    let mut out = Zyz { alpha, a, b, c };
    // The half-angle choices above can land on -V; fold that sign into α.
    let m = out.matrix();
    let k = if m.get(0, 0).norm() > m.get(1, 0).norm() {
        (0, 0)
    } else {
        (1, 0)
    };
    if (m.get(k.0, k.1) + u.get(k.0, k.1)).norm() < (m.get(k.0, k.1) - u.get(k.0, k.1)).norm() {
        alpha += std::f64::consts::PI;
        out.alpha = alpha;
    }
    out
}

/// `V = cos φ I - i sin φ (n·σ)` for `V ∈ SU(2)`, with `φ ∈ [0, π]`.
pub fn su2_axis(v: &Mat2<f64>) -> (f64, [f64; 3]) {
    let (v00, v01, v10, v11) = (v.get(0, 0), v.get(0, 1), v.get(1, 0), v.get(1, 1));
    let cos = ((v00 + v11).re / 2.0).clamp(-1.0, 1.0);
    let sx = -(v01 + v10).im / 2.0;
    let sy = (v10 - v01).re / 2.0;
    let sz = (v11 - v00).im / 2.0;
    let s = (sx * sx + sy * sy + sz * sz).sqrt();
    let phi = s.atan2(cos);
    if s < 1e-15 {
        return (phi, [0.0, 0.0, 1.0]);
    }
    (phi, [sx / s, sy / s, sz / s])
}

/// Inverse of [`su2_axis`].
pub fn su2_from_axis(phi: f64, n: [f64; 3]) -> Mat2<f64> {
    let (s, c) = phi.sin_cos();
    let i = Complex64::i();
    Mat2::new(
        c - i * s * n[2],
        -i * s * Complex64::new(n[0], -n[1]),
        -i * s * Complex64::new(n[0], n[1]),
        c + i * s * n[2],
    )
}

/// Splits `u` as `e^{iα} W` with `det W = 1`.
pub fn split_phase(u: &Mat2<f64>) -> (f64, Mat2<f64>) {
    let alpha = u.det().arg() / 2.0;
    (alpha, u.scale(Complex64::from_polar(1.0, -alpha)))
}
