//! Full residual system for one combination of converter saturation states:
//! nodal balance `I = Y U` over every bus and sequence, followed by the
//! constraint rows of every element.

use crate::converter::{self, admissible_states, SatState, Terminal, VscMode, VscSpec};
use crate::elements::{self, NonPeSpec};
use crate::error::ModelError;
use crate::network::{apply_fault, assemble, BusId, FaultSpec, NetworkModel, SequenceAdmittance};
use crate::phasor::{power_elements, PowerElements, SequenceTriple};
use crate::solver::{EvalError, Residual};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq)]
pub enum ElementSpec {
    Vsc(VscSpec),
    NonPe(NonPeSpec),
}

impl ElementSpec {
    pub fn name(&self) -> &str {
        match self {
            ElementSpec::Vsc(v) => &v.name,
            ElementSpec::NonPe(e) => &e.name,
        }
    }

    pub fn bus(&self) -> &BusId {
        match self {
            ElementSpec::Vsc(v) => &v.bus,
            ElementSpec::NonPe(e) => &e.bus,
        }
    }

    pub fn as_vsc(&self) -> Option<&VscSpec> {
        match self {
            ElementSpec::Vsc(v) => Some(v),
            _ => None,
        }
    }
}

/// A network together with every grid-connected element.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSystem {
    pub network: NetworkModel,
    pub elements: Vec<ElementSpec>,
    /// Nominal angular frequency, pu.
    pub omega0: f64,
}

impl PowerSystem {
    pub fn new(network: NetworkModel, elements: Vec<ElementSpec>) -> Self {
        PowerSystem { network, elements, omega0: 1.0 }
    }

    /// Indices into `elements` of the converters, in declaration order.
    pub fn converter_indices(&self) -> Vec<usize> {
        self.elements
            .iter()
            .enumerate()
            .filter_map(|(k, e)| e.as_vsc().map(|_| k))
            .collect()
    }

    pub fn converters(&self) -> impl Iterator<Item = &VscSpec> {
        self.elements.iter().filter_map(|e| e.as_vsc())
    }

    pub fn combination_space(&self) -> CombinationSpace {
        CombinationSpace::new(self.converters().map(|v| v.mode()).collect())
    }

    /// True when the frequency is an unknown of the system.
    pub fn has_frequency(&self) -> bool {
        self.elements.iter().any(|e| match e {
            ElementSpec::Vsc(v) => v.mode() == VscMode::Gf,
            ElementSpec::NonPe(n) => n.droop().is_some(),
        })
    }

    pub fn layout(&self) -> UnknownLayout {
        UnknownLayout {
            buses: self.network.buses.len(),
            elements: self.elements.len(),
            frequency: self.has_frequency(),
        }
    }

    /// Referential integrity, parameter sanity and angle references.
    pub fn validate(&self) -> Result<(), Vec<ModelError>> {
        let mut errs = Vec::new();
        if let Err(e) = assemble(&self.network.buses, &self.network.branches) {
            errs.push(e);
        }
        let idx = self.network.index_map();
        for (k, e) in self.elements.iter().enumerate() {
            if !idx.contains_key(e.bus()) {
                errs.push(ModelError::UnknownBus { context: format!("element `{}`", e.name()), bus: e.bus().clone() });
            }
            let check = match e {
                ElementSpec::Vsc(v) => v.validate(),
                ElementSpec::NonPe(n) => n.validate(),
            };
            if let Err(reason) = check {
                errs.push(ModelError::InvalidElement { index: k, reason: format!("`{}`: {reason}", e.name()) });
            }
        }
        let droops = self.elements.iter().filter(|e| matches!(e, ElementSpec::NonPe(n) if n.droop().is_some())).count();
        if droops > 1 {
            errs.push(ModelError::MultipleGridDroops);
        }
        if errs.is_empty() {
            errs.extend(self.check_angle_references());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    fn check_angle_references(&self) -> Vec<ModelError> {
        let islands = self.network.islands();
        let idx = self.network.index_map();
        let mut stiff: HashMap<usize, usize> = HashMap::new();
        let mut forming: HashMap<usize, usize> = HashMap::new();
        let mut populated: Vec<usize> = Vec::new();
        for e in &self.elements {
            let isl = islands[idx[e.bus()]];
            populated.push(isl);
            match e {
                ElementSpec::NonPe(n) if n.is_angle_source() => *stiff.entry(isl).or_default() += 1,
                ElementSpec::Vsc(v) if v.mode() == VscMode::Gf => *forming.entry(isl).or_default() += 1,
                _ => {}
            }
        }
        populated.sort_unstable();
        populated.dedup();
        let mut errs = Vec::new();
        let mut gf_referenced = 0;
        for isl in populated {
            let bus = self.network.buses[isl].id.clone();
            match (stiff.get(&isl).copied().unwrap_or(0), forming.get(&isl).copied().unwrap_or(0)) {
                (0, 0) => errs.push(ModelError::AngleReference { bus, reason: "no angle reference".into() }),
                (0, _) => gf_referenced += 1,
                (1, _) => {}
                (n, _) => errs.push(ModelError::AngleReference {
                    bus,
                    reason: format!("{n} Thevenin/slack sources, expected exactly one"),
                }),
            }
        }
        if gf_referenced > 1 {
            let bus = self.network.buses[0].id.clone();
            errs.push(ModelError::AngleReference {
                bus,
                reason: "more than one island is referenced only by grid-forming converters".into(),
            });
        }
        errs
    }
}

/// Mixed-radix bijection between combination numbers `f` (1-based) and
/// state vectors. The last converter varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinationSpace {
    modes: Vec<VscMode>,
}

impl CombinationSpace {
    pub fn new(modes: Vec<VscMode>) -> Self {
        CombinationSpace { modes }
    }

    pub fn modes(&self) -> &[VscMode] {
        &self.modes
    }

    pub fn total(&self) -> usize {
        self.modes.iter().map(|m| admissible_states(*m).len()).product()
    }

    pub fn encode(&self, states: &[SatState]) -> Result<usize, ModelError> {
        if states.len() != self.modes.len() {
            return Err(ModelError::StateCount { got: states.len(), want: self.modes.len() });
        }
        let mut f = 0;
        for (mode, state) in self.modes.iter().zip(states) {
            let adm = admissible_states(*mode);
            let digit = adm
                .iter()
                .position(|s| s == state)
                .ok_or(ModelError::InadmissibleState { mode: *mode, state: *state })?;
            f = f * adm.len() + digit;
        }
        Ok(f + 1)
    }

    pub fn decode(&self, f: usize) -> Result<Vec<SatState>, ModelError> {
        let total = self.total();
        if f == 0 || f > total {
            return Err(ModelError::CombinationOutOfRange { f, total });
        }
        let mut rem = f - 1;
        let mut out = vec![SatState::Uss; self.modes.len()];
        for (k, mode) in self.modes.iter().enumerate().rev() {
            let adm = admissible_states(*mode);
            out[k] = adm[rem % adm.len()];
            rem /= adm.len();
        }
        Ok(out)
    }

    pub fn all_uss(&self) -> Vec<SatState> {
        vec![SatState::Uss; self.modes.len()]
    }
}

/// Position of every unknown in the real solution vector.
///
/// Per bus: `[u+ re, u+ im, u- re, u- im, u0 re, u0 im]`, then the same
/// pattern per element current, then `w` when present.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnknownLayout {
    pub buses: usize,
    pub elements: usize,
    pub frequency: bool,
}

impl UnknownLayout {
    pub fn len(&self) -> usize {
        6 * self.buses + 6 * self.elements + usize::from(self.frequency)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn voltage(&self, bus: usize) -> usize {
        6 * bus
    }

    pub fn current(&self, element: usize) -> usize {
        6 * (self.buses + element)
    }

    pub fn omega(&self) -> Option<usize> {
        self.frequency.then(|| 6 * (self.buses + self.elements))
    }

    pub fn read(&self, x: &[f64], offset: usize) -> SequenceTriple {
        SequenceTriple::new(
            Complex64::new(x[offset], x[offset + 1]),
            Complex64::new(x[offset + 2], x[offset + 3]),
            Complex64::new(x[offset + 4], x[offset + 5]),
        )
    }

    pub fn write(&self, x: &mut [f64], offset: usize, v: &SequenceTriple) {
        for (k, c) in v.as_array().iter().enumerate() {
            x[offset + 2 * k] = c.re;
            x[offset + 2 * k + 1] = c.im;
        }
    }
}

/// Which row closes the system when the frequency is an unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FrequencyClosure {
    None,
    /// Thevenin droop row of this element.
    GridDroop(usize),
    /// A stiff source holds `w = w0`.
    Nominal,
    /// No stiff source: this bus carries the angle datum.
    PinAngle(usize),
}

/// Residual system `SE_f` for one fault and one state combination.
#[derive(Debug, Clone)]
pub struct SystemEquations<'a> {
    model: &'a PowerSystem,
    y: SequenceAdmittance,
    layout: UnknownLayout,
    element_bus: Vec<usize>,
    /// Saturation state per element; `None` for non-PE elements.
    states: Vec<Option<SatState>>,
    fault_active: bool,
    closure: FrequencyClosure,
}

/// Builds `SE_f`. `states` lists one entry per converter, in declaration order.
pub fn build_residual<'a>(
    model: &'a PowerSystem,
    fault: &FaultSpec,
    states: &[SatState],
) -> Result<SystemEquations<'a>, ModelError> {
    let space = model.combination_space();
    space.encode(states)?;
    let mut y = assemble(&model.network.buses, &model.network.branches)?;
    if fault.is_active() {
        let bus = model
            .network
            .bus_index(&fault.bus)
            .ok_or_else(|| ModelError::UnknownBus { context: "fault".into(), bus: fault.bus.clone() })?;
        apply_fault(&mut y, bus, fault)?;
    }
    let idx = model.network.index_map();
    let mut element_bus = Vec::with_capacity(model.elements.len());
    for e in &model.elements {
        let b = idx
            .get(e.bus())
            .copied()
            .ok_or_else(|| ModelError::UnknownBus { context: format!("element `{}`", e.name()), bus: e.bus().clone() })?;
        element_bus.push(b);
    }
    let mut next = states.iter();
    let per_element = model
        .elements
        .iter()
        .map(|e| match e {
            ElementSpec::Vsc(_) => next.next().copied(),
            ElementSpec::NonPe(_) => None,
        })
        .collect();

    let layout = model.layout();
    let closure = if !layout.frequency {
        FrequencyClosure::None
    } else if let Some(k) = model.elements.iter().position(|e| matches!(e, ElementSpec::NonPe(n) if n.droop().is_some())) {
        FrequencyClosure::GridDroop(k)
    } else if model.elements.iter().any(|e| matches!(e, ElementSpec::NonPe(n) if n.is_angle_source())) {
        FrequencyClosure::Nominal
    } else {
        let k = model
            .elements
            .iter()
            .position(|e| e.as_vsc().map(|v| v.mode() == VscMode::Gf).unwrap_or(false))
            .expect("frequency unknown implies a grid-forming converter or a droop source");
        FrequencyClosure::PinAngle(element_bus[k])
    };

    Ok(SystemEquations { model, y, layout, element_bus, states: per_element, fault_active: fault.is_active(), closure })
}

impl<'a> SystemEquations<'a> {
    pub fn layout(&self) -> UnknownLayout {
        self.layout
    }

    pub fn admittance(&self) -> &SequenceAdmittance {
        &self.y
    }

    pub fn model(&self) -> &PowerSystem {
        self.model
    }

    pub fn fault_active(&self) -> bool {
        self.fault_active
    }

    pub fn element_bus(&self, element: usize) -> usize {
        self.element_bus[element]
    }

    pub fn omega(&self, x: &[f64]) -> f64 {
        self.layout.omega().map(|k| x[k]).unwrap_or(self.model.omega0)
    }

    pub fn voltages(&self, x: &[f64]) -> Vec<SequenceTriple> {
        (0..self.layout.buses).map(|d| self.layout.read(x, self.layout.voltage(d))).collect()
    }

    pub fn currents(&self, x: &[f64]) -> Vec<SequenceTriple> {
        (0..self.layout.elements).map(|m| self.layout.read(x, self.layout.current(m))).collect()
    }

    pub fn terminal(&self, x: &[f64], element: usize) -> Terminal {
        Terminal {
            u: self.layout.read(x, self.layout.voltage(self.element_bus[element])),
            i: self.layout.read(x, self.layout.current(element)),
            omega: self.omega(x),
        }
    }

    /// Nodal mismatch `sum(element currents) - Y U` per bus.
    pub fn nodal_mismatch(&self, x: &[f64]) -> Vec<SequenceTriple> {
        let u = self.voltages(x);
        let mut inj = vec![[Complex64::default(); 3]; self.layout.buses];
        for m in 0..self.layout.elements {
            let i = self.layout.read(x, self.layout.current(m)).as_array();
            for s in 0..3 {
                inj[self.element_bus[m]][s] += i[s];
            }
        }
        let yu = self.y.currents(&u);
        inj.iter()
            .zip(yu)
            .map(|(a, b)| SequenceTriple::new(a[0] - b.pos, a[1] - b.neg, a[2] - b.zero))
            .collect()
    }

    /// Flat start: `u+ = 1` everywhere, zero currents, `w = w0`. Converter
    /// currents get a small reactive seed lagging the voltage so that full
    /// saturation settles on reactive injection.
    pub fn flat_start(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.layout.len()];
        for d in 0..self.layout.buses {
            x[self.layout.voltage(d)] = 1.0;
        }
        for (m, e) in self.model.elements.iter().enumerate() {
            if let ElementSpec::Vsc(v) = e {
                let o = self.layout.current(m);
                x[o + 1] = -v.i_max.min(0.1);
            }
        }
        if let Some(k) = self.layout.omega() {
            x[k] = self.model.omega0;
        }
        x
    }
}

impl Residual for SystemEquations<'_> {
    fn unknowns(&self) -> usize {
        self.layout.len()
    }

    fn residuals(&self) -> usize {
        self.layout.len()
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        let nodal = self.nodal_mismatch(x);
        for (d, mis) in nodal.iter().enumerate() {
            self.layout.write(out, self.layout.voltage(d), mis);
        }
        let omega0 = self.model.omega0;
        for (m, e) in self.model.elements.iter().enumerate() {
            let at = self.terminal(x, m);
            let rows = match e {
                ElementSpec::Vsc(v) => {
                    let state = self.states[m].expect("converter without state");
                    converter::constraints(v, state, &at, omega0, self.fault_active)
                        .map_err(|err| EvalError(err.to_string()))?
                }
                ElementSpec::NonPe(n) => {
                    elements::constraints(n, &at).map_err(|err| EvalError(format!("`{}`: {err}", n.name)))?
                }
            };
            let o = self.layout.current(m);
            out[o..o + 6].copy_from_slice(&rows);
        }
        if let Some(k) = self.layout.omega() {
            out[k] = match self.closure {
                FrequencyClosure::GridDroop(m) => match &self.model.elements[m] {
                    ElementSpec::NonPe(n) => {
                        let droop = n.droop().expect("droop closure on element without droop");
                        elements::droop_residual(&droop, &self.terminal(x, m), omega0)
                    }
                    ElementSpec::Vsc(_) => unreachable!("droop closure on a converter"),
                },
                FrequencyClosure::Nominal => x[k] - omega0,
                FrequencyClosure::PinAngle(bus) => x[self.layout.voltage(bus) + 1],
                FrequencyClosure::None => unreachable!(),
            };
        }
        Ok(())
    }
}

/// Operating point of one converter at a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConverterPoint {
    pub name: String,
    pub bus: BusId,
    pub mode: VscMode,
    pub state: SatState,
    pub i_max: f64,
    pub u: SequenceTriple,
    pub i: SequenceTriple,
    pub power: PowerElements,
}

/// Solved unknowns of one `SE_f`, with derived per-converter quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumPoint {
    /// Combination number.
    pub f: usize,
    pub states: Vec<SatState>,
    pub voltages: Vec<SequenceTriple>,
    pub currents: Vec<SequenceTriple>,
    pub omega: f64,
    pub residual_norm: f64,
    pub converters: Vec<ConverterPoint>,
    pub x: Vec<f64>,
}

impl EquilibriumPoint {
    pub fn from_solution(sys: &SystemEquations<'_>, states: &[SatState], x: &[f64], residual_norm: f64) -> Self {
        let model = sys.model();
        let mut st = states.iter();
        let converters = model
            .elements
            .iter()
            .enumerate()
            .filter_map(|(m, e)| {
                let v = e.as_vsc()?;
                let at = sys.terminal(x, m);
                Some(ConverterPoint {
                    name: v.name.clone(),
                    bus: v.bus.clone(),
                    mode: v.mode(),
                    state: *st.next().expect("state per converter"),
                    i_max: v.i_max,
                    u: at.u,
                    i: at.i,
                    power: power_elements(&at.u, &at.i),
                })
            })
            .collect();
        EquilibriumPoint {
            f: model.combination_space().encode(states).expect("states validated on build"),
            states: states.to_vec(),
            voltages: sys.voltages(x),
            currents: sys.currents(x),
            omega: sys.omega(x),
            residual_norm,
            converters,
            x: x.to_vec(),
        }
    }
}

/// Reactive current per unit voltage of a PQ converter, from its pre-fault
/// operating point: `i_d0 = q_con / |u+|`.
pub fn frozen_reactive_current(point: &ConverterPoint) -> Option<f64> {
    (point.mode == VscMode::Pq && point.u.pos.norm() > 0.0).then(|| point.power.q_con / point.u.pos.norm())
}

/// Real/imag split helper shared by tests and reporting.
pub fn triple_inf_norm(v: &SequenceTriple) -> f64 {
    v.as_array().iter().flat_map(|c| [c.re.abs(), c.im.abs()]).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::converter::VscControl;
    use crate::elements::NonPeKind;
    use crate::network::{Bus, FaultKind, Wiring};
    use crate::solver::{solve, SolveOptions};

    fn thevenin(bus: &str) -> ElementSpec {
        ElementSpec::NonPe(NonPeSpec {
            name: "grid".into(),
            bus: bus.into(),
            kind: NonPeKind::Thevenin { u_th: Complex64::new(1.0, 0.0), z_th: Complex64::new(0.01, 0.1), droop: None },
        })
    }

    fn pq(bus: &str) -> ElementSpec {
        ElementSpec::Vsc(VscSpec {
            name: "vsc".into(),
            bus: bus.into(),
            i_max: 1.0,
            control: VscControl::Pq { p_disp: 0.7, q_disp: 0.5, k_isp: 2.0, u_ref_gs: 1.0, i_d0: 0.5 },
        })
    }

    fn gf(bus: &str) -> ElementSpec {
        ElementSpec::Vsc(VscSpec {
            name: "gf".into(),
            bus: bus.into(),
            i_max: 2.0,
            control: VscControl::Gf { u_ref: 1.0, k_omega: 0.01, p0: 0.5 },
        })
    }

    fn one_bus(elements: Vec<ElementSpec>) -> PowerSystem {
        let net = NetworkModel { buses: vec![Bus { id: "1".into(), wiring: Wiring::FourWire }], branches: vec![] };
        PowerSystem::new(net, elements)
    }

    #[test]
    fn unknown_counts() {
        assert_eq!(one_bus(vec![thevenin("1")]).layout().len(), 12);
        assert_eq!(one_bus(vec![thevenin("1"), pq("1")]).layout().len(), 18);
        let with_gf = one_bus(vec![thevenin("1"), gf("1")]);
        assert!(with_gf.has_frequency());
        assert_eq!(with_gf.layout().len(), 19);
    }

    #[test]
    fn combination_codec() {
        let space = CombinationSpace::new(vec![VscMode::Gf, VscMode::Pv, VscMode::Pq]);
        assert_eq!(space.total(), 18);
        assert_eq!(space.encode(&space.all_uss()).unwrap(), 1);
        assert_eq!(space.decode(18).unwrap(), vec![SatState::Fss; 3]);
        assert_eq!(space.decode(2).unwrap(), vec![SatState::Uss, SatState::Uss, SatState::Pss]);
        for f in 1..=18 {
            assert_eq!(space.encode(&space.decode(f).unwrap()).unwrap(), f);
        }
        assert!(space.decode(0).is_err() && space.decode(19).is_err());
        assert!(matches!(
            space.encode(&[SatState::Pss, SatState::Uss, SatState::Uss]),
            Err(ModelError::InadmissibleState { .. })
        ));
        assert!(matches!(space.encode(&[SatState::Uss]), Err(ModelError::StateCount { got: 1, want: 3 })));
    }

    #[test]
    fn prefault_single_bus_solution() {
        let model = one_bus(vec![thevenin("1"), pq("1")]);
        let fault = FaultSpec::none("1");
        let sys = build_residual(&model, &fault, &[SatState::Uss]).unwrap();
        let out = solve(&sys, &sys.flat_start(), &SolveOptions::default());
        assert!(out.converged());
        let p = EquilibriumPoint::from_solution(&sys, &[SatState::Uss], &out.x, out.residual_norm);
        let c = &p.converters[0];
        assert!((c.power.p_con - 0.7).abs() < 1e-8 && (c.power.q_con - 0.5).abs() < 1e-8);
        assert!(p.voltages[0].pos.norm() > 1.0);
        for m in sys.nodal_mismatch(&out.x) {
            assert!(triple_inf_norm(&m) < 1e-8);
        }
        assert!(frozen_reactive_current(c).unwrap() > 0.0);
    }

    #[test]
    fn angle_reference_rules() {
        assert!(one_bus(vec![pq("1")]).validate().is_err());
        assert!(one_bus(vec![gf("1"), pq("1")]).validate().is_ok());
        assert!(one_bus(vec![thevenin("1"), thevenin("1")]).validate().is_err());
        let droop = |k| {
            ElementSpec::NonPe(NonPeSpec {
                name: "g".into(),
                bus: "1".into(),
                kind: NonPeKind::Thevenin {
                    u_th: Complex64::new(1.0, 0.0),
                    z_th: Complex64::new(0.0, 0.1),
                    droop: Some(crate::elements::GridDroop { k_omega: k, p0: 0.0 }),
                },
            })
        };
        let errs = one_bus(vec![droop(0.05), droop(0.02)]).validate().unwrap_err();
        assert!(errs.contains(&ModelError::MultipleGridDroops));
        let missing = one_bus(vec![thevenin("9")]).validate().unwrap_err();
        assert!(matches!(missing[0], ModelError::UnknownBus { .. }));
    }

    #[test]
    fn grid_forming_island_pins_angle() {
        let model = one_bus(vec![
            gf("1"),
            ElementSpec::NonPe(NonPeSpec { name: "load".into(), bus: "1".into(), kind: NonPeKind::PqNode { p: -0.4, q: -0.1 } }),
        ]);
        model.validate().unwrap();
        let sys = build_residual(&model, &FaultSpec::none("1"), &[SatState::Uss]).unwrap();
        let out = solve(&sys, &sys.flat_start(), &SolveOptions::default());
        assert!(out.converged());
        let p = EquilibriumPoint::from_solution(&sys, &[SatState::Uss], &out.x, out.residual_norm);
        assert!(p.voltages[0].pos.im.abs() < 1e-10);
        // GF droop: w = 1 - 0.01 (0.4 - 0.5)
        assert!((p.omega - 1.001).abs() < 1e-8, "omega {}", p.omega);
    }

    #[test]
    fn fault_couples_sequences_only_when_active() {
        let model = one_bus(vec![thevenin("1"), pq("1")]);
        let clean = build_residual(&model, &FaultSpec::none("1"), &[SatState::Uss]).unwrap();
        assert!(clean.admittance().sequences_decoupled(1e-15));
        let f = FaultSpec { bus: "1".into(), kind: FaultKind::SinglePhaseToGround, z_ft: Complex64::new(0.0, 0.1) };
        let faulted = build_residual(&model, &f, &[SatState::Uss]).unwrap();
        assert!(!faulted.admittance().sequences_decoupled(1e-9));
        assert!(faulted.fault_active());
    }
}
