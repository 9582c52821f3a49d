//! Voltage-source converter equivalent models.
//!
//! Each converter contributes six real residuals: zero negative- and
//! zero-sequence current (four rows, three-wire connection), plus two rows
//! that depend on the control mode and the current-saturation state.

use crate::error::ModelError;
use crate::network::BusId;
use crate::phasor::{power_elements, SequenceTriple};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VscMode {
    #[serde(rename = "pq")]
    Pq,
    #[serde(rename = "pv")]
    Pv,
    #[serde(rename = "gf")]
    Gf,
}

/// Current-saturation state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SatState {
    /// Unsaturated: references met.
    #[serde(rename = "USS")]
    Uss,
    /// Partially saturated: reactive reference kept, total current capped.
    #[serde(rename = "PSS")]
    Pss,
    /// Fully saturated: full current, zero constant active power.
    #[serde(rename = "FSS")]
    Fss,
}

impl SatState {
    pub fn label(&self) -> &'static str {
        match self {
            SatState::Uss => "USS",
            SatState::Pss => "PSS",
            SatState::Fss => "FSS",
        }
    }

    pub fn parse(s: &str) -> Option<SatState> {
        match s.to_ascii_uppercase().as_str() {
            "USS" => Some(SatState::Uss),
            "PSS" => Some(SatState::Pss),
            "FSS" => Some(SatState::Fss),
            _ => None,
        }
    }
}

impl fmt::Display for SatState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VscControl {
    Pq {
        p_disp: f64,
        q_disp: f64,
        /// Voltage-droop gain of the grid-support current.
        k_isp: f64,
        u_ref_gs: f64,
        /// Reactive current held from the pre-fault operating point.
        i_d0: f64,
    },
    Pv {
        p_disp: f64,
        u_ref: f64,
    },
    Gf {
        u_ref: f64,
        k_omega: f64,
        p0: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VscSpec {
    pub name: String,
    pub bus: BusId,
    pub i_max: f64,
    pub control: VscControl,
}

impl VscSpec {
    pub fn mode(&self) -> VscMode {
        match self.control {
            VscControl::Pq { .. } => VscMode::Pq,
            VscControl::Pv { .. } => VscMode::Pv,
            VscControl::Gf { .. } => VscMode::Gf,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.i_max > 0.0 && self.i_max.is_finite()) {
            return Err(format!("i_max must be positive, got {}", self.i_max));
        }
        match self.control {
            VscControl::Pq { k_isp, .. } if k_isp < 0.0 => Err("k_isp must be non-negative".into()),
            VscControl::Gf { k_omega, .. } if k_omega < 0.0 => Err("k_omega must be non-negative".into()),
            VscControl::Pv { u_ref, .. } | VscControl::Gf { u_ref, .. } if u_ref <= 0.0 => {
                Err("voltage reference must be positive".into())
            }
            _ => Ok(()),
        }
    }
}

pub fn admissible_states(mode: VscMode) -> &'static [SatState] {
    match mode {
        VscMode::Pq | VscMode::Pv => &[SatState::Uss, SatState::Pss, SatState::Fss],
        VscMode::Gf => &[SatState::Uss, SatState::Fss],
    }
}

/// Reactive power reference: dispatch before the fault, frozen current plus
/// voltage-droop support while it is active.
pub fn q_reference(control: &VscControl, u_pos_mag: f64, fault_active: bool) -> f64 {
    match *control {
        VscControl::Pq { q_disp, k_isp, u_ref_gs, i_d0, .. } => {
            if fault_active {
                u_pos_mag * (i_d0 + k_isp * (u_ref_gs - u_pos_mag))
            } else {
                q_disp
            }
        }
        _ => 0.0,
    }
}

/// Active and reactive current a PQ converter needs at `u_pos_mag` to meet
/// its references.
pub fn required_currents(control: &VscControl, u_pos_mag: f64, fault_active: bool) -> (f64, f64) {
    match *control {
        VscControl::Pq { p_disp, .. } => {
            let q = q_reference(control, u_pos_mag, fault_active);
            (p_disp / u_pos_mag, q / u_pos_mag)
        }
        _ => (0.0, 0.0),
    }
}

/// Operating point seen by one element's constraint rows.
#[derive(Debug, Clone, Copy)]
pub struct Terminal {
    pub u: SequenceTriple,
    pub i: SequenceTriple,
    pub omega: f64,
}

/// The six residual rows of a converter in `state`.
pub fn constraints(
    spec: &VscSpec,
    state: SatState,
    at: &Terminal,
    omega0: f64,
    fault_active: bool,
) -> Result<[f64; 6], ModelError> {
    let mode = spec.mode();
    if !admissible_states(mode).contains(&state) {
        return Err(ModelError::InadmissibleState { mode, state });
    }
    let pe = power_elements(&at.u, &at.i);
    let u_mag = at.u.pos.norm();
    let i_mag = at.i.pos.norm();
    let limit = i_mag - spec.i_max;

    let (r4, r5) = match (&spec.control, state) {
        (VscControl::Pq { p_disp, .. }, SatState::Uss) => {
            (pe.p_con - p_disp, pe.q_con - q_reference(&spec.control, u_mag, fault_active))
        }
        (VscControl::Pq { .. }, SatState::Pss) => {
            (pe.q_con - q_reference(&spec.control, u_mag, fault_active), limit)
        }
        (VscControl::Pv { p_disp, u_ref }, SatState::Uss) => (pe.p_con - p_disp, u_mag - u_ref),
        (VscControl::Pv { u_ref, .. }, SatState::Pss) => (u_mag - u_ref, limit),
        (VscControl::Pq { .. } | VscControl::Pv { .. }, SatState::Fss) => (pe.p_con, limit),
        (VscControl::Gf { u_ref, k_omega, p0 }, s) => {
            let droop = at.omega - omega0 + k_omega * (pe.p_con - p0);
            match s {
                SatState::Uss => (u_mag - u_ref, droop),
                _ => (limit, droop),
            }
        }
    };
    Ok([at.i.neg.re, at.i.neg.im, at.i.zero.re, at.i.zero.im, r4, r5])
}
