//! Machine-readable results, one JSON object per fault case.
//!
//! Records contain no timing information, so the same input always yields
//! byte-identical output.

use crate::converter::{SatState, VscMode};
use crate::network::{sequence_to_phase_voltages, BusId, FaultKind, FaultSpec};
use crate::phasor::{PowerElements, SequenceTriple};
use crate::saturation::{AlgorithmOutcome, IterationTrace, Termination};
use crate::system::{frozen_reactive_current, PowerSystem};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultRecord {
    pub bus: BusId,
    #[serde(rename = "type")]
    pub kind: FaultKind,
    pub z_ft: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusRecord {
    pub id: BusId,
    pub u: SequenceTriple,
    /// Phase voltage magnitudes a, b, c.
    pub phase_mag: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConverterRecord {
    pub name: String,
    pub bus: BusId,
    pub mode: VscMode,
    pub state: SatState,
    pub i_max: f64,
    pub i: SequenceTriple,
    pub power: PowerElements,
    /// Reactive current per unit voltage of a PQ converter; reported for
    /// pre-fault points, where it becomes the frozen `i_d0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i_d0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub case: String,
    pub fault: FaultRecord,
    pub termination: Termination,
    pub total_combinations: usize,
    pub tested: Vec<usize>,
    pub n_t: usize,
    pub f: Option<usize>,
    pub omega: Option<f64>,
    pub buses: Vec<BusRecord>,
    pub converters: Vec<ConverterRecord>,
    pub trace: Vec<IterationTrace>,
}

impl ResultRecord {
    pub fn new(case: &str, model: &PowerSystem, fault: &FaultSpec, outcome: &AlgorithmOutcome) -> Self {
        let eq = outcome.equilibrium.as_ref();
        let buses = eq
            .map(|p| {
                let phases = sequence_to_phase_voltages(&p.voltages);
                model
                    .network
                    .buses
                    .iter()
                    .zip(&p.voltages)
                    .zip(phases)
                    .map(|((b, u), ph)| BusRecord {
                        id: b.id.clone(),
                        u: *u,
                        phase_mag: ph.as_array().map(|z| z.norm()),
                    })
                    .collect()
            })
            .unwrap_or_default();
        let converters = eq
            .map(|p| {
                p.converters
                    .iter()
                    .map(|c| ConverterRecord {
                        name: c.name.clone(),
                        bus: c.bus.clone(),
                        mode: c.mode,
                        state: c.state,
                        i_max: c.i_max,
                        i: c.i,
                        power: c.power,
                        i_d0: if fault.is_active() { None } else { frozen_reactive_current(c) },
                    })
                    .collect()
            })
            .unwrap_or_default();
        ResultRecord {
            case: case.to_string(),
            fault: FaultRecord { bus: fault.bus.clone(), kind: fault.kind, z_ft: fault.z_ft },
            termination: outcome.termination,
            total_combinations: outcome.total_combinations,
            tested: outcome.tested.clone(),
            n_t: outcome.trace.len(),
            f: eq.map(|p| p.f),
            omega: eq.map(|p| p.omega),
            buses,
            converters,
            trace: outcome.trace.clone(),
        }
    }

    pub fn found(&self) -> bool {
        self.termination == Termination::FixedPoint
    }

    /// Single-line JSON.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("records always serialize")
    }

    pub fn from_line(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }
}

/// Renders records as JSON lines.
pub fn render_records(records: &[ResultRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_line());
        out.push('\n');
    }
    out
}

pub fn parse_records(text: &str) -> Result<Vec<ResultRecord>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(ResultRecord::from_line).collect()
}
