//! Sequence-domain nodal admittance of the passive network and the
//! phase-domain fault stamps that couple the sequences.

use crate::error::ModelError;
use crate::phasor::{to_phase, to_phase_matrix, to_sequence_matrix, PhaseTriple, Phasor, SequenceTriple, ZERO};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BusId(pub String);

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for BusId {
    fn from(s: &str) -> Self {
        BusId(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Wiring {
    /// No neutral: every branch touching the bus has its zero-sequence path blocked.
    ThreeWire,
    #[default]
    FourWire,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: BusId,
    pub wiring: Wiring,
}

/// Series element between two buses, or a shunt when `to` is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from: BusId,
    pub to: Option<BusId>,
    pub z_pos: Phasor,
    pub z_neg: Phasor,
    /// `None` blocks the zero-sequence path.
    pub z_zero: Option<Phasor>,
}

impl Branch {
    pub fn symmetric(from: &str, to: Option<&str>, z: Phasor) -> Self {
        Branch {
            from: from.into(),
            to: to.map(BusId::from),
            z_pos: z,
            z_neg: z,
            z_zero: Some(z),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FaultKind {
    #[serde(rename = "none")]
    None,
    /// Three phases to ground.
    #[serde(rename = "3p2g")]
    ThreePhaseToGround,
    /// Phase a to phase c.
    #[serde(rename = "p2p")]
    PhaseToPhase,
    /// Phase a to ground.
    #[serde(rename = "1p2g")]
    SinglePhaseToGround,
}

impl FaultKind {
    pub const ALL_FAULTS: [FaultKind; 3] =
        [FaultKind::ThreePhaseToGround, FaultKind::PhaseToPhase, FaultKind::SinglePhaseToGround];

    pub fn label(&self) -> &'static str {
        match self {
            FaultKind::None => "none",
            FaultKind::ThreePhaseToGround => "3p2g",
            FaultKind::PhaseToPhase => "p2p",
            FaultKind::SinglePhaseToGround => "1p2g",
        }
    }

    pub fn parse(s: &str) -> Option<FaultKind> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Some(FaultKind::None),
            "3p2g" => Some(FaultKind::ThreePhaseToGround),
            "p2p" => Some(FaultKind::PhaseToPhase),
            "1p2g" => Some(FaultKind::SinglePhaseToGround),
            _ => None,
        }
    }
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaultSpec {
    pub bus: BusId,
    pub kind: FaultKind,
    pub z_ft: Phasor,
}

impl FaultSpec {
    pub fn none(bus: &str) -> Self {
        FaultSpec { bus: bus.into(), kind: FaultKind::None, z_ft: ZERO }
    }

    pub fn is_active(&self) -> bool {
        self.kind != FaultKind::None
    }
}

/// Sequence index inside the admittance matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Seq {
    Pos = 0,
    Neg = 1,
    Zero = 2,
}

impl Seq {
    pub const ALL: [Seq; 3] = [Seq::Pos, Seq::Neg, Seq::Zero];
}

/// The `3D x 3D` admittance, ordered sequence-major: row `s * D + d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceAdmittance {
    dim: usize,
    y: DMatrix<Complex64>,
}

impl SequenceAdmittance {
    pub fn zeros(dim: usize) -> Self {
        SequenceAdmittance { dim, y: DMatrix::zeros(3 * dim, 3 * dim) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.y
    }

    pub fn get(&self, s: Seq, d: usize, s2: Seq, d2: usize) -> Complex64 {
        self.y[(s as usize * self.dim + d, s2 as usize * self.dim + d2)]
    }

    fn add(&mut self, s: Seq, d: usize, s2: Seq, d2: usize, v: Complex64) {
        self.y[(s as usize * self.dim + d, s2 as usize * self.dim + d2)] += v;
    }

    /// The `D x D` block coupling sequence `s2` voltages into sequence `s` currents.
    pub fn block(&self, s: Seq, s2: Seq) -> DMatrix<Complex64> {
        let d = self.dim;
        self.y.view((s as usize * d, s2 as usize * d), (d, d)).into_owned()
    }

    /// `I = Y U`, per bus.
    pub fn currents(&self, u: &[SequenceTriple]) -> Vec<SequenceTriple> {
        let d = self.dim;
        let mut out = vec![SequenceTriple::default(); d];
        for (row, o) in out.iter_mut().enumerate() {
            let mut acc = [ZERO; 3];
            for (s, a) in acc.iter_mut().enumerate() {
                let r = s * d + row;
                for (col, uc) in u.iter().enumerate() {
                    let uc = uc.as_array();
                    for (s2, us) in uc.iter().enumerate() {
                        *a += self.y[(r, s2 * d + col)] * us;
                    }
                }
            }
            *o = SequenceTriple::from_array(acc);
        }
        out
    }

    /// True when every inter-sequence block is zero.
    pub fn sequences_decoupled(&self, tol: f64) -> bool {
        for s in Seq::ALL {
            for s2 in Seq::ALL {
                if s != s2 && self.block(s, s2).iter().any(|v| v.norm() > tol) {
                    return false;
                }
            }
        }
        true
    }
}

/// Passive network: buses plus branches.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetworkModel {
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
}

impl NetworkModel {
    pub fn bus_index(&self, id: &BusId) -> Option<usize> {
        self.buses.iter().position(|b| &b.id == id)
    }

    pub fn index_map(&self) -> HashMap<BusId, usize> {
        self.buses.iter().enumerate().map(|(i, b)| (b.id.clone(), i)).collect()
    }

    /// Connected components over series branches, as a bus-index -> island map.
    pub fn islands(&self) -> Vec<usize> {
        let idx = self.index_map();
        let mut parent: Vec<usize> = (0..self.buses.len()).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut c = x;
            while p[c] != r {
                let n = p[c];
                p[c] = r;
                c = n;
            }
            r
        }
        for br in &self.branches {
            if let (Some(&a), Some(to)) = (idx.get(&br.from), br.to.as_ref()) {
                if let Some(&b) = idx.get(to) {
                    let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                    if ra != rb {
                        parent[ra.max(rb)] = ra.min(rb);
                    }
                }
            }
        }
        (0..self.buses.len()).map(|i| find(&mut parent, i)).collect()
    }
}

/// Nodal stamping of every branch, per sequence.
pub fn assemble(buses: &[Bus], branches: &[Branch]) -> Result<SequenceAdmittance, ModelError> {
    if buses.is_empty() {
        return Err(ModelError::NoBuses);
    }
    let mut idx = HashMap::new();
    for (i, b) in buses.iter().enumerate() {
        if idx.insert(b.id.clone(), i).is_some() {
            return Err(ModelError::DuplicateBus(b.id.clone()));
        }
    }
    let mut y = SequenceAdmittance::zeros(buses.len());
    for (k, br) in branches.iter().enumerate() {
        let from = *idx.get(&br.from).ok_or_else(|| ModelError::UnknownBus {
            context: format!("branch {k} from"),
            bus: br.from.clone(),
        })?;
        let to = match &br.to {
            Some(t) => Some(*idx.get(t).ok_or_else(|| ModelError::UnknownBus {
                context: format!("branch {k} to"),
                bus: t.clone(),
            })?),
            None => None,
        };
        let blocked = buses[from].wiring == Wiring::ThreeWire
            || to.map(|t| buses[t].wiring == Wiring::ThreeWire).unwrap_or(false);
        let zs = [Some(br.z_pos), Some(br.z_neg), if blocked { None } else { br.z_zero }];
        for (s, z) in Seq::ALL.iter().zip(zs) {
            let Some(z) = z else { continue };
            if z.norm() == 0.0 || !z.is_finite() {
                return Err(ModelError::ZeroImpedance(format!("branch {k}")));
            }
            let yb = z.inv();
            y.add(*s, from, *s, from, yb);
            if let Some(t) = to {
                y.add(*s, t, *s, t, yb);
                y.add(*s, from, *s, t, -yb);
                y.add(*s, t, *s, from, -yb);
            }
        }
    }
    Ok(y)
}

/// Phase-domain admittance of the fault itself.
pub fn fault_phase_admittance(kind: FaultKind, z_ft: Phasor) -> [[Complex64; 3]; 3] {
    let mut y = [[ZERO; 3]; 3];
    if kind == FaultKind::None {
        return y;
    }
    let yf = z_ft.inv();
    match kind {
        FaultKind::ThreePhaseToGround => {
            for (p, row) in y.iter_mut().enumerate() {
                row[p] = yf;
            }
        }
        FaultKind::PhaseToPhase => {
            let (i, j) = (0, 2);
            y[i][i] = yf;
            y[j][j] = yf;
            y[i][j] = -yf;
            y[j][i] = -yf;
        }
        FaultKind::SinglePhaseToGround => y[0][0] = yf,
        FaultKind::None => unreachable!(),
    }
    y
}

/// Fault stamp as a 3x3 sequence block: `T^-1 * Y_ph * T`.
pub fn fault_stamp(kind: FaultKind, z_ft: Phasor) -> Result<[[Complex64; 3]; 3], ModelError> {
    if kind != FaultKind::None && (z_ft.norm() == 0.0 || !z_ft.is_finite()) {
        return Err(ModelError::ZeroImpedance("fault".into()));
    }
    let yph = fault_phase_admittance(kind, z_ft);
    let ti = to_sequence_matrix();
    let t = to_phase_matrix();
    let mut tmp = [[ZERO; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            tmp[r][c] = (0..3).map(|k| yph[r][k] * t[k][c]).sum();
        }
    }
    let mut out = [[ZERO; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            out[r][c] = (0..3).map(|k| ti[r][k] * tmp[k][c]).sum();
        }
    }
    Ok(out)
}

/// Adds the fault stamp into the faulted bus's sequence sub-block.
pub fn apply_fault(y: &mut SequenceAdmittance, bus: usize, fault: &FaultSpec) -> Result<(), ModelError> {
    if !fault.is_active() {
        return Ok(());
    }
    let stamp = fault_stamp(fault.kind, fault.z_ft)?;
    for (r, s) in Seq::ALL.iter().enumerate() {
        for (c, s2) in Seq::ALL.iter().enumerate() {
            y.add(*s, bus, *s2, bus, stamp[r][c]);
        }
    }
    Ok(())
}

/// Scale applied to phase magnitudes in the tabulated reporting convention.
pub fn phase_report_scale() -> f64 {
    1.0 / 3.0_f64.sqrt()
}

pub fn sequence_to_phase_voltages(voltages: &[SequenceTriple]) -> Vec<PhaseTriple> {
    voltages.iter().map(to_phase).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasor::polar_deg;
    use approx::assert_abs_diff_eq;

    fn j(x: f64) -> Complex64 {
        Complex64::new(0.0, x)
    }

    fn bus(id: &str) -> Bus {
        Bus { id: id.into(), wiring: Wiring::FourWire }
    }

    #[test]
    fn single_shunt_stamp() {
        let y = assemble(&[bus("1")], &[Branch::symmetric("1", None, j(0.1))]).unwrap();
        for s in Seq::ALL {
            assert!((y.get(s, 0, s, 0) - j(-10.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn two_bus_chain_matches_hand_built_matrix() {
        // bus1 -- j0.5 -- bus2 -- j0.5 -- ground
        let y = assemble(
            &[bus("1"), bus("2")],
            &[Branch::symmetric("1", Some("2"), j(0.5)), Branch::symmetric("2", None, j(0.5))],
        )
        .unwrap();
        let want = [[j(-2.0), j(2.0)], [j(2.0), j(-4.0)]];
        for s in Seq::ALL {
            for r in 0..2 {
                for c in 0..2 {
                    assert!((y.get(s, r, s, c) - want[r][c]).norm() < 1e-12);
                }
            }
        }
        assert!(y.sequences_decoupled(0.0));
        assert_eq!(y.matrix(), &y.matrix().transpose());
    }

    #[test]
    fn open_zero_sequence_and_three_wire() {
        let mut br = Branch::symmetric("1", None, j(0.1));
        br.z_zero = None;
        let y = assemble(&[bus("1")], &[br]).unwrap();
        assert_eq!(y.get(Seq::Zero, 0, Seq::Zero, 0), ZERO);

        let three = Bus { id: "1".into(), wiring: Wiring::ThreeWire };
        let y = assemble(&[three], &[Branch::symmetric("1", None, j(0.1))]).unwrap();
        assert_eq!(y.get(Seq::Zero, 0, Seq::Zero, 0), ZERO);
        assert!((y.get(Seq::Pos, 0, Seq::Pos, 0) - j(-10.0)).norm() < 1e-12);
    }

    #[test]
    fn assembly_errors() {
        assert!(matches!(assemble(&[], &[]), Err(ModelError::NoBuses)));
        let e = assemble(&[bus("1")], &[Branch::symmetric("1", Some("9"), j(0.1))]).unwrap_err();
        assert!(matches!(e, ModelError::UnknownBus { .. }));
        let e = assemble(&[bus("1")], &[Branch::symmetric("1", None, ZERO)]).unwrap_err();
        assert!(matches!(e, ModelError::ZeroImpedance(_)));
        let e = assemble(&[bus("1"), bus("1")], &[]).unwrap_err();
        assert!(matches!(e, ModelError::DuplicateBus(_)));
    }

    #[test]
    fn three_phase_fault_is_decoupled() {
        let s = fault_stamp(FaultKind::ThreePhaseToGround, j(0.1)).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                let want = if r == c { j(-10.0) } else { ZERO };
                assert!((s[r][c] - want).norm() < 1e-12, "({r},{c})");
            }
        }
    }

    #[test]
    fn single_phase_fault_block_is_uniform() {
        let z = Complex64::new(0.02, 0.1);
        let s = fault_stamp(FaultKind::SinglePhaseToGround, z).unwrap();
        let want = z.inv() / 3.0;
        for row in s {
            for v in row {
                assert!((v - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn phase_to_phase_has_no_zero_sequence() {
        let s = fault_stamp(FaultKind::PhaseToPhase, j(0.1)).unwrap();
        for k in 0..3 {
            assert!(s[2][k].norm() < 1e-12 && s[k][2].norm() < 1e-12);
        }
        // +/- coupling with equal magnitude: |y_f| on every entry of the 2x2 block
        for r in 0..2 {
            for c in 0..2 {
                assert_abs_diff_eq!(s[r][c].norm(), 10.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn fault_stamp_rejects_zero_impedance() {
        assert!(fault_stamp(FaultKind::PhaseToPhase, ZERO).is_err());
        assert!(fault_stamp(FaultKind::None, ZERO).is_ok());
    }

    #[test]
    fn phase_voltage_reporting() {
        let p = sequence_to_phase_voltages(&[SequenceTriple::new(ZERO, ZERO, Complex64::new(1.0, 0.0))]);
        for v in p[0].as_array() {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
        let u = SequenceTriple::positive(polar_deg(0.550, 2.57));
        let p = sequence_to_phase_voltages(&[u]);
        for v in p[0].as_array() {
            assert_abs_diff_eq!(v.norm() * phase_report_scale(), 0.3175, epsilon = 5e-4);
        }
        let u = SequenceTriple::new(polar_deg(0.896, 4.3), polar_deg(0.180, -179.2), polar_deg(0.180, -179.2));
        let p = sequence_to_phase_voltages(&[u])[0];
        let k = phase_report_scale();
        assert_abs_diff_eq!(p.a.norm() * k, 0.310, epsilon = 1e-3);
        assert_abs_diff_eq!(p.b.norm() * k, 0.621, epsilon = 1e-3);
        assert_abs_diff_eq!(p.c.norm() * k, 0.621, epsilon = 1e-3);
    }

    #[test]
    fn islands_follow_series_branches() {
        let net = NetworkModel {
            buses: vec![bus("1"), bus("2"), bus("3")],
            branches: vec![Branch::symmetric("1", Some("2"), j(0.1)), Branch::symmetric("3", None, j(0.1))],
        };
        let isl = net.islands();
        assert_eq!(isl[0], isl[1]);
        assert_ne!(isl[0], isl[2]);
    }
}
