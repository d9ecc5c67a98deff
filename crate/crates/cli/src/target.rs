//! Target device description: connectivity, native gates and optional
//! calibration data in one document.

use qstack_core::mapper::{apply_noise_weights, CouplingGraph};
use qstack_core::native::NativeGateSet;
use qstack_pulse::CalibrationTable;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetDescriptor {
    pub coupling: CouplingGraph,
    #[serde(default)]
    pub native_gates: NativeGateSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationTable>,
}

impl TargetDescriptor {
    pub fn from_json(s: &str) -> Result<Self, CliError> {
        let t: TargetDescriptor =
            serde_json::from_str(s).map_err(|e| CliError::input(format!("target: {e}")))?;
        t.coupling
            .validate()
            .map_err(|e| CliError::input(format!("target: {e}")))?;
        if let Some(cal) = &t.calibration {
            cal.validate()
                .map_err(|e| CliError::input(format!("target calibration: {e}")))?;
            let n = t.coupling.num_nodes();
            if let Some(q) = cal.qubits.iter().find(|q| q.id >= n) {
                return Err(CliError::input(format!(
                    "calibrated qubit {} is not a node of the {n}-node graph",
                    q.id
                )));
            }
            if let Some(p) = cal.pairs.iter().find(|p| !t.coupling.has_edge(p.a, p.b)) {
                return Err(CliError::input(format!(
                    "calibrated pair ({}, {}) is not an edge",
                    p.a, p.b
                )));
            }
        }
        Ok(t)
    }

    /// The graph routing should use: error-weighted when calibration data
    /// carries error rates.
    pub fn routing_graph(&self) -> Result<CouplingGraph, CliError> {
        match &self.calibration {
            Some(cal)
                if cal.qubits.iter().any(|q| q.error.is_some())
                    || cal.pairs.iter().any(|p| p.error.is_some()) =>
            {
                apply_noise_weights(&self.coupling, &cal.noise_model())
                    .map_err(|e| CliError::input(e.to_string()))
            }
            _ => Ok(self.coupling.clone()),
        }
    }
}
