//! Closed-form two-qubit interaction models. Qubit `a` is the high bit.

use num_complex::Complex64;
use qstack_core::ir::cr_matrix;
use qstack_core::linalg::Matrix;
use serde::{Deserialize, Serialize};

/// Sampled flux excursion: conditional detuning `ζ(t)` and the
/// single-excitation energies `ω₀₁(t)`, `ω₁₀(t)`, all in rad/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxTrajectory {
    pub dt: f64,
    pub zeta: Vec<f64>,
    #[serde(default)]
    pub omega01: Vec<f64>,
    #[serde(default)]
    pub omega10: Vec<f64>,
}

impl FluxTrajectory {
    /// Constant `ζ` held long enough to integrate to `phase`.
    pub fn constant(zeta: f64, phase: f64, dt: f64) -> Self {
        let n = (phase / (zeta * dt)).round().max(1.0) as usize;
        let z = phase / (n as f64 * dt);
        FluxTrajectory {
            dt,
            zeta: vec![z; n],
            omega01: vec![],
            omega10: vec![],
        }
    }

    pub fn conditional_phase(&self) -> f64 {
        self.zeta.iter().sum::<f64>() * self.dt
    }

    pub fn theta01(&self) -> f64 {
        self.omega01.iter().sum::<f64>() * self.dt
    }

    pub fn theta10(&self) -> f64 {
        self.omega10.iter().sum::<f64>() * self.dt
    }

    pub fn is_finite(&self) -> bool {
        self.zeta
            .iter()
            .chain(&self.omega01)
            .chain(&self.omega10)
            .all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TwoQubitKind {
    /// XY exchange with coupling `g` (rad/s) for time `t`.
    Iswap {
        g: f64,
        t: f64,
    },
    SqrtIswap {
        g: f64,
    },
    /// Adiabatic phase; `cleaned` removes the single-qubit phases.
    Cphase {
        trajectory: FluxTrajectory,
        cleaned: bool,
    },
    Cr {
        theta: f64,
    },
}

/// `exp(-i g t (XX + YY)/2)`.
pub fn xy_evolution(g: f64, t: f64) -> Matrix<f64> {
    let (s, c) = (g * t).sin_cos();
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    Matrix::from_rows(
        4,
        vec![
            one,
            z,
            z,
            z,
            z,
            Complex64::new(c, 0.0),
            Complex64::new(0.0, -s),
            z,
            z,
            Complex64::new(0.0, -s),
            Complex64::new(c, 0.0),
            z,
            z,
            z,
            z,
            one,
        ],
    )
}

pub fn two_qubit_model(kind: &TwoQubitKind) -> Matrix<f64> {
    match kind {
        TwoQubitKind::Iswap { g, t } => xy_evolution(*g, *t),
        TwoQubitKind::SqrtIswap { g } => xy_evolution(*g, std::f64::consts::PI / (4.0 * g)),
        TwoQubitKind::Cphase {
            trajectory,
            cleaned,
        } => {
            let zeta = trajectory.conditional_phase();
            let (t01, t10) = if *cleaned {
                (0.0, 0.0)
            } else {
                (trajectory.theta01(), trajectory.theta10())
            };
            let e = |p: f64| Complex64::from_polar(1.0, p);
            Matrix::diag(&[e(0.0), e(t01), e(t10), e(zeta + t01 + t10)])
        }
        TwoQubitKind::Cr { theta } => cr_matrix(*theta),
    }
}

/// iSWAP interaction time `π / 2g`.
pub fn iswap_time(g: f64) -> f64 {
    std::f64::consts::FRAC_PI_2 / g
}
