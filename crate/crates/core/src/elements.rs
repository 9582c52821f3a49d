//! Elements without power electronics. They have a single operating state.

use crate::converter::Terminal;
use crate::network::BusId;
use crate::phasor::{constant_active_power, to_phase, Phasor};
use num_complex::Complex64;
use thiserror::Error;

/// Frequency characteristic of a Thevenin source: `w = w0 + k (p - p0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridDroop {
    pub k_omega: f64,
    pub p0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NonPeKind {
    /// Positive-sequence source behind an impedance.
    Thevenin { u_th: Phasor, z_th: Phasor, droop: Option<GridDroop> },
    /// Imposes a positive-sequence voltage, zero negative and zero sequence.
    Slack { u_ref: Phasor },
    /// Constant power per phase, injection positive.
    PqNode { p: f64, q: f64 },
    /// Total active power plus a symmetrical voltage of given magnitude.
    PvNode { p: f64, u_ref: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonPeSpec {
    pub name: String,
    pub bus: BusId,
    pub kind: NonPeKind,
}

impl NonPeSpec {
    pub fn droop(&self) -> Option<GridDroop> {
        match self.kind {
            NonPeKind::Thevenin { droop, .. } => droop,
            _ => None,
        }
    }

    /// Thevenin sources and slack buses fix the voltage angle of their island.
    pub fn is_angle_source(&self) -> bool {
        matches!(self.kind, NonPeKind::Thevenin { .. } | NonPeKind::Slack { .. })
    }

    pub fn validate(&self) -> Result<(), String> {
        match self.kind {
            NonPeKind::Thevenin { z_th, .. } if z_th.norm() == 0.0 || !z_th.is_finite() => {
                Err("z_th must be finite and nonzero".into())
            }
            NonPeKind::PvNode { u_ref, .. } if u_ref <= 0.0 => Err("u_ref must be positive".into()),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("constant-power load sees zero voltage on phase {phase}")]
pub struct ZeroPhaseVoltage {
    pub phase: char,
}

/// The six current/voltage residual rows. Frequency droop of a Thevenin
/// source is an extra row produced by [`droop_residual`].
pub fn constraints(spec: &NonPeSpec, at: &Terminal) -> Result<[f64; 6], ZeroPhaseVoltage> {
    let (u, i) = (&at.u, &at.i);
    let rows = match spec.kind {
        NonPeKind::Thevenin { u_th, z_th, .. } => {
            let y = z_th.inv();
            [i.pos - (u_th - u.pos) * y, i.neg + u.neg * y, i.zero + u.zero * y]
        }
        NonPeKind::Slack { u_ref } => [u.pos - u_ref, u.neg, u.zero],
        NonPeKind::PqNode { p, q } => {
            let s = Complex64::new(p, q);
            let (uph, iph) = (to_phase(u).as_array(), to_phase(i).as_array());
            let mut r = [Complex64::default(); 3];
            for k in 0..3 {
                if uph[k].norm() == 0.0 {
                    return Err(ZeroPhaseVoltage { phase: ['a', 'b', 'c'][k] });
                }
                r[k] = iph[k] - (s / uph[k]).conj();
            }
            r
        }
        NonPeKind::PvNode { p, u_ref } => {
            let total = (u.pos * i.pos.conj() + u.neg * i.neg.conj() + u.zero * i.zero.conj()).re;
            let a = Complex64::new(total - p, u.pos.norm() - u_ref);
            [a, u.neg, u.zero]
        }
    };
    Ok([rows[0].re, rows[0].im, rows[1].re, rows[1].im, rows[2].re, rows[2].im])
}

/// Constant active power delivered by the source into its bus.
pub fn injected_active_power(at: &Terminal) -> f64 {
    constant_active_power(&at.u, &at.i)
}

/// `w - w0 - k (p - p0)` for a Thevenin source with droop.
pub fn droop_residual(droop: &GridDroop, at: &Terminal, omega0: f64) -> f64 {
    at.omega - omega0 - droop.k_omega * (injected_active_power(at) - droop.p0)
}
