//! Piecewise-constant propagation of the driven transmon.
//!
//! In the frame rotating at the drive frequency each sample holds
//! `H = Δ n + α |2⟩⟨2| + ½(γ* a + γ a†)` with `γ = I + iQ` in rad/s. On two
//! levels this is `½(Iσx + Qσy) + Δ|1⟩⟨1|`.

use num_complex::Complex;
use qstack_core::linalg::{expm_hermitian, Matrix};
use qstack_core::Real;

use crate::envelope::SampledWaveform;
use crate::PulseError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlModel {
    pub levels: usize,
    /// Qubit frequency minus drive frequency, rad/s.
    pub detuning: f64,
    /// Anharmonicity, rad/s. Ignored on two levels.
    pub anharmonicity: f64,
}

impl ControlModel {
    pub fn qubit() -> Self {
        ControlModel {
            levels: 2,
            detuning: 0.0,
            anharmonicity: 0.0,
        }
    }

    pub fn transmon(anharmonicity: f64) -> Self {
        ControlModel {
            levels: 3,
            detuning: 0.0,
            anharmonicity,
        }
    }

    fn validate(&self) -> Result<(), PulseError> {
        match self.levels {
            2 => Ok(()),
            3 if self.anharmonicity < 0.0 => Ok(()),
            3 => Err(PulseError::Model(
                "three-level model needs a negative anharmonicity".into(),
            )),
            n => Err(PulseError::Model(format!(
                "{n} levels unsupported, use 2 or 3"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ControlResult<T: Real> {
    pub unitary: Matrix<T>,
    /// Final state from `|0⟩`.
    pub state: Vec<Complex<T>>,
    pub populations: Vec<T>,
}

impl<T: Real> ControlResult<T> {
    pub fn leakage(&self) -> T {
        self.populations.get(2).copied().unwrap_or_else(T::zero)
    }
}

fn c<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

/// Exact step for two levels: a global phase times an SU(2) rotation.
fn step2<T: Real>(g: Complex<T>, detuning: T, dt: T) -> Matrix<T> {
    let half = T::lit(0.5);
    let (x, y, z) = (g.re, g.im, -detuning);
    let w = (x * x + y * y + z * z).sqrt();
    let (cs, sn) = ((w * dt * half).cos(), (w * dt * half).sin());
    let (nx, ny, nz) = if w > T::zero() {
        (x / w, y / w, z / w)
    } else {
        (T::zero(), T::zero(), T::zero())
    };
    let ph = Complex::from_polar(T::one(), -detuning * dt * half);
    let data = vec![
        ph * c(cs, -sn * nz),
        ph * c(-sn * ny, -sn * nx),
        ph * c(sn * ny, -sn * nx),
        ph * c(cs, sn * nz),
    ];
    Matrix::from_rows(2, data)
}

fn hamiltonian3<T: Real>(g: Complex<T>, detuning: T, alpha: T) -> Matrix<T> {
    let half = T::lit(0.5);
    let r2 = T::lit(std::f64::consts::SQRT_2);
    let mut h = Matrix::zeros(3);
    h.set(1, 1, c(detuning, T::zero()));
    h.set(2, 2, c(T::lit(2.0) * detuning + alpha, T::zero()));
    // ⟨k|H|k+1⟩ = ½ γ* √(k+1)
    h.set(0, 1, g.conj() * half);
    h.set(1, 0, g * half);
    h.set(1, 2, g.conj() * (half * r2));
    h.set(2, 1, g * (half * r2));
    h
}

/// Product of per-sample propagators, latest sample leftmost.
pub fn propagator<T: Real>(
    wf: &SampledWaveform,
    model: &ControlModel,
) -> Result<Matrix<T>, PulseError> {
    model.validate()?;
    if wf
        .samples
        .iter()
        .any(|s| !s.re.is_finite() || !s.im.is_finite())
    {
        return Err(PulseError::Model("waveform has non-finite samples".into()));
    }
    let dt = T::lit(wf.dt);
    let det = T::lit(model.detuning);
    let alpha = T::lit(model.anharmonicity);
    let mut u = Matrix::identity(model.levels);
    for s in &wf.samples {
        let g = c(T::lit(s.re), T::lit(s.im));
        let step = match model.levels {
            2 => step2(g, det, dt),
            _ => expm_hermitian(&hamiltonian3(g, det, alpha), dt),
        };
        u = &step * &u;
    }
    Ok(u)
}

/// Drives `|0⟩` with `wf`, whose samples are in rad/s.
pub fn simulate_control<T: Real>(
    wf: &SampledWaveform,
    model: &ControlModel,
) -> Result<ControlResult<T>, PulseError> {
    let unitary = propagator::<T>(wf, model)?;
    let state = unitary.column(0);
    let populations = state.iter().map(|a| a.norm_sqr()).collect();
    Ok(ControlResult {
        unitary,
        state,
        populations,
    })
}

/// Two-level propagator of one constant sample held for `t`.
pub fn constant_step(gamma: Complex<f64>, detuning: f64, t: f64) -> Matrix<f64> {
    step2(gamma, detuning, t)
}
