//! Pulse layer: envelopes and sampling, the driven-transmon integrator,
//! calibration fits against synthetic devices, virtual-Z frames, two-qubit
//! interaction models, dispersive readout and circuit scheduling.

pub mod ampmap;
pub mod calib;
pub mod device;
pub mod envelope;
pub mod fit;
pub mod frames;
pub mod integrate;
pub mod readout;
pub mod schedule;
pub mod twoq;

use thiserror::Error;

pub use ampmap::AmpMap;
pub use calib::{CalibrationTable, PairKind};
pub use envelope::{rotation_angle, sample_waveform, Envelope, SampledWaveform, Shape};
pub use fit::{fit_lorentzian, fit_rabi, FitError, LorentzianFit, RabiFit};
pub use frames::FrameTracker;
pub use integrate::{simulate_control, ControlModel};
pub use schedule::{replay_unitary, schedule_circuit, PulseSchedule};

pub type ControlResultf = integrate::ControlResult<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PulseError {
    #[error("invalid envelope: {0}")]
    InvalidEnvelope(String),
    #[error("{0:.3e} samples exceeds the sampling guard")]
    TooManySamples(f64),
    #[error("model: {0}")]
    Model(String),
    #[error("amplitude map: {0}")]
    AmpMap(String),
    #[error("{value} is outside the calibrated range (limit {limit})")]
    OutOfRange { value: f64, limit: f64 },
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("calibration table: {0}")]
    Table(String),
    #[error("uncalibrated: {0}")]
    Uncalibrated(String),
    #[error("qubit {qubit}: programmed amplitude {value} exceeds 1")]
    Amplitude { qubit: usize, value: f64 },
    #[error("schedule: {0}")]
    Schedule(String),
}
