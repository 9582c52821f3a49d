//! Phasor arithmetic, symmetrical-component transforms and the
//! constant/oscillating decomposition of converter power.
//!
//! Sequence components use `alpha = exp(-j*2*pi/3)`, so the positive-sequence
//! phase set is `(1, alpha^2, alpha)`. With that rotation operator the phase
//! waveforms are read as `v(t) = Re(V * exp(-j*w*t))`, which makes
//! `(1, alpha^2, alpha)` the a-b-c ordered set in time.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Complex phasor in per-unit, rectangular form.
pub type Phasor = Complex64;

pub const ZERO: Phasor = Complex64::new(0.0, 0.0);

/// The rotation operator `exp(-j*2*pi/3)`.
pub fn alpha() -> Phasor {
    Complex64::new(-0.5, -(3.0_f64.sqrt()) / 2.0)
}

pub fn alpha2() -> Phasor {
    Complex64::new(-0.5, 3.0_f64.sqrt() / 2.0)
}

/// Builds a phasor from a magnitude and an angle in degrees.
pub fn polar_deg(mag: f64, deg: f64) -> Phasor {
    Complex64::from_polar(mag, deg.to_radians())
}

/// Angle in degrees, in `(-180, 180]`.
pub fn angle_deg(z: Phasor) -> f64 {
    let a = z.arg().to_degrees();
    if a <= -180.0 {
        a + 360.0
    } else {
        a
    }
}

/// One phasor per symmetrical sequence.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SequenceTriple {
    pub pos: Phasor,
    pub neg: Phasor,
    pub zero: Phasor,
}

/// One phasor per phase.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseTriple {
    pub a: Phasor,
    pub b: Phasor,
    pub c: Phasor,
}

impl SequenceTriple {
    pub fn new(pos: Phasor, neg: Phasor, zero: Phasor) -> Self {
        Self { pos, neg, zero }
    }

    pub fn positive(pos: Phasor) -> Self {
        Self::new(pos, ZERO, ZERO)
    }

    pub fn as_array(&self) -> [Phasor; 3] {
        [self.pos, self.neg, self.zero]
    }

    pub fn from_array(x: [Phasor; 3]) -> Self {
        Self::new(x[0], x[1], x[2])
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.pos * k, self.neg * k, self.zero * k)
    }
}

impl PhaseTriple {
    pub fn new(a: Phasor, b: Phasor, c: Phasor) -> Self {
        Self { a, b, c }
    }

    pub fn as_array(&self) -> [Phasor; 3] {
        [self.a, self.b, self.c]
    }

    pub fn from_array(x: [Phasor; 3]) -> Self {
        Self::new(x[0], x[1], x[2])
    }
}

/// Phase-to-sequence matrix `(1/3) * [[1, a, a^2], [1, a^2, a], [1, 1, 1]]`.
pub fn to_sequence_matrix() -> [[Phasor; 3]; 3] {
    let one = Complex64::new(1.0, 0.0);
    let (a, a2) = (alpha(), alpha2());
    let third = 1.0 / 3.0;
    [
        [one * third, a * third, a2 * third],
        [one * third, a2 * third, a * third],
        [one * third, one * third, one * third],
    ]
}

/// Sequence-to-phase matrix, the inverse of [`to_sequence_matrix`].
pub fn to_phase_matrix() -> [[Phasor; 3]; 3] {
    let one = Complex64::new(1.0, 0.0);
    let (a, a2) = (alpha(), alpha2());
    [[one, one, one], [a2, a, one], [a, a2, one]]
}

fn apply(m: &[[Phasor; 3]; 3], x: [Phasor; 3]) -> [Phasor; 3] {
    let mut y = [ZERO; 3];
    for (r, row) in m.iter().enumerate() {
        y[r] = row[0] * x[0] + row[1] * x[1] + row[2] * x[2];
    }
    y
}

pub fn to_sequence(x: &PhaseTriple) -> SequenceTriple {
    SequenceTriple::from_array(apply(&to_sequence_matrix(), x.as_array()))
}

pub fn to_phase(x: &SequenceTriple) -> PhaseTriple {
    PhaseTriple::from_array(apply(&to_phase_matrix(), x.as_array()))
}

/// Constant and double-frequency elements of the power exchanged by a
/// three-wire device. Oscillating terms are coefficients of
/// `cos(2wt)` / `sin(2wt)` with zero initial phase.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PowerElements {
    pub p_con: f64,
    pub p_cos: f64,
    pub p_sin: f64,
    pub q_con: f64,
    pub q_cos: f64,
    pub q_sin: f64,
    pub p_con_pos: f64,
    pub p_con_neg: f64,
    pub q_con_pos: f64,
    pub q_con_neg: f64,
}

/// Decomposes the power injected by current `i` at voltage `u`.
///
/// Zero-sequence components never contribute. The negative-sequence terms
/// are evaluated in the reverse-rotating frame, whose components are the
/// conjugate of the negative-sequence phasor; this is why `q_con_neg`
/// carries the opposite sign of `Im(u_neg * conj(i_neg))`.
pub fn power_elements(u: &SequenceTriple, i: &SequenceTriple) -> PowerElements {
    let (ux, uy) = (u.pos.re, u.pos.im);
    let (ix, iy) = (i.pos.re, i.pos.im);
    // reverse-frame components of the negative sequence
    let (vx, vy) = (u.neg.re, -u.neg.im);
    let (jx, jy) = (i.neg.re, -i.neg.im);

    let p_con_pos = ux * ix + uy * iy;
    let p_con_neg = vx * jx + vy * jy;
    let q_con_pos = uy * ix - ux * iy;
    let q_con_neg = vy * jx - vx * jy;

    let p_cos = ux * jx + uy * jy + vx * ix + vy * iy;
    let p_sin = -ux * jy + uy * jx + vx * iy - vy * ix;
    let q_cos = -ux * jy + uy * jx - vx * iy + vy * ix;
    let q_sin = -ux * jx - uy * jy + vx * ix + vy * iy;

    PowerElements {
        p_con: p_con_pos + p_con_neg,
        p_cos,
        p_sin,
        q_con: q_con_pos + q_con_neg,
        q_cos,
        q_sin,
        p_con_pos,
        p_con_neg,
        q_con_pos,
        q_con_neg,
    }
}

/// Positive- plus negative-sequence constant active power, the only part of
/// [`power_elements`] needed inside residual evaluation.
pub fn constant_active_power(u: &SequenceTriple, i: &SequenceTriple) -> f64 {
    (u.pos * i.pos.conj()).re + (u.neg * i.neg.conj()).re
}

/// Instantaneous `(p, q)` at angle `wt`, from phase waveforms
/// `Re(U_ph e^{-j wt})` and the space vector `(2/3)(x_a + a x_b + a^2 x_c)`.
/// Reference for the closed forms in [`power_elements`].
pub fn instantaneous_power(u: &SequenceTriple, i: &SequenceTriple, wt: f64) -> (f64, f64) {
    let rot = Complex64::from_polar(1.0, -wt);
    let (a, a2) = (alpha(), alpha2());
    let space = |x: &SequenceTriple| {
        let ph = to_phase(x).as_array().map(|p| (p * rot).re);
        (ph[0] + a * ph[1] + a2 * ph[2]) * (2.0 / 3.0)
    };
    let s = space(u) * space(i).conj();
    (s.re, s.im)
}

/// Evaluates `con + cos * cos(2 wt) + sin * sin(2 wt)` for active and reactive power.
pub fn power_at(pe: &PowerElements, wt: f64) -> (f64, f64) {
    let (c, s) = ((2.0 * wt).cos(), (2.0 * wt).sin());
    (pe.p_con + pe.p_cos * c + pe.p_sin * s, pe.q_con + pe.q_cos * c + pe.q_sin * s)
}
