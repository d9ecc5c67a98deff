//! Software phase frames: `RZ` costs no time and emits no waveform.

use std::collections::BTreeMap;

use qstack_core::scalar::wrap_angle;

use crate::envelope::SampledWaveform;

/// Accumulated frame phase per channel, kept in `(-π, π]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameTracker {
    phases: BTreeMap<usize, f64>,
}

impl FrameTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn phase(&self, channel: usize) -> f64 {
        self.phases.get(&channel).copied().unwrap_or(0.0)
    }

    /// `RZ(angle)` on `channel`.
    pub fn virtual_z(&mut self, channel: usize, angle: f64) {
        let p = wrap_angle(self.phase(channel) + angle);
        self.phases.insert(channel, p);
    }

    pub fn set(&mut self, channel: usize, phase: f64) {
        self.phases.insert(channel, wrap_angle(phase));
    }

    /// Exchanges two frames, as an iSWAP does.
    pub fn swap(&mut self, a: usize, b: usize) {
        let (pa, pb) = (self.phase(a), self.phase(b));
        self.set(a, pb);
        self.set(b, pa);
    }

    /// The waveform as emitted on `channel`: samples times `e^{-iφ}`.
    pub fn emit(&self, channel: usize, wf: &SampledWaveform) -> SampledWaveform {
        wf.phase_shifted(self.phase(channel))
    }

    pub fn channels(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.phases.iter().map(|(c, p)| (*c, *p))
    }
}

/// Functional form of [`FrameTracker::virtual_z`].
pub fn virtual_z(frames: &FrameTracker, channel: usize, angle: f64) -> FrameTracker {
    let mut f = frames.clone();
    f.virtual_z(channel, angle);
    f
}
