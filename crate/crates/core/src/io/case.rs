//! TOML case (network + elements) and scenario (fault + solver settings) files.
//!
//! Complex values are written as strings (`"0.01+0.1j"`), `[re, im]` pairs,
//! plain reals, or `{ mag = .., deg = .. }` tables.

use super::IoError;
use crate::converter::{VscControl, VscSpec};
use crate::elements::{GridDroop, NonPeKind, NonPeSpec};
use crate::network::{Branch, Bus, BusId, FaultKind, FaultSpec, NetworkModel, Wiring};
use crate::phasor::{polar_deg, Phasor};
use crate::saturation::{prefault, AlgorithmOptions, FallbackPolicy};
use crate::solver::SolveOptions;
use crate::system::{frozen_reactive_current, ElementSpec, PowerSystem};
use num_complex::Complex64;
use serde::Deserialize;
use std::path::Path;
use std::str::FromStr;

pub const TEST_SYSTEM_1: &str = include_str!("../../fixtures/test_system_1.toml");
pub const TEST_SYSTEM_1_SCENARIO: &str = include_str!("../../fixtures/test_system_1_scenario.toml");
pub const TEST_SYSTEM_2_PARAMS: &str = include_str!("../../fixtures/test_system_2_params.toml");
pub const TEST_SYSTEM_2_TOPOLOGY: &str = include_str!("../../fixtures/test_system_2_topology.toml");
pub const TEST_SYSTEM_2_SCENARIO: &str = include_str!("../../fixtures/test_system_2_scenario.toml");

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum RawComplex {
    Real(f64),
    Pair([f64; 2]),
    Polar { mag: f64, deg: f64 },
    Text(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum RawBusId {
    Int(i64),
    Text(String),
}

impl From<RawBusId> for BusId {
    fn from(r: RawBusId) -> Self {
        match r {
            RawBusId::Int(i) => BusId(i.to_string()),
            RawBusId::Text(s) => BusId(s),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBus {
    id: RawBusId,
    #[serde(default)]
    wiring: Wiring,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBranch {
    from: RawBusId,
    to: Option<RawBusId>,
    z: Option<RawComplex>,
    z_pos: Option<RawComplex>,
    z_neg: Option<RawComplex>,
    z_zero: Option<RawComplex>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDroop {
    k_omega: f64,
    p0: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawElement {
    Thevenin { name: String, bus: RawBusId, u: RawComplex, z: RawComplex, droop: Option<RawDroop> },
    Slack { name: String, bus: RawBusId, u: RawComplex },
    PqNode { name: String, bus: RawBusId, p: f64, q: f64 },
    PvNode { name: String, bus: RawBusId, p: f64, u_ref: f64 },
    Vsc {
        name: String,
        bus: RawBusId,
        mode: String,
        i_max: f64,
        p: Option<f64>,
        q: Option<f64>,
        k_isp: Option<f64>,
        u_ref_gs: Option<f64>,
        i_d0: Option<f64>,
        u_ref: Option<f64>,
        k_omega: Option<f64>,
        p0: Option<f64>,
    },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCase {
    name: Option<String>,
    omega0: Option<f64>,
    #[serde(default)]
    bus: Vec<RawBus>,
    #[serde(default)]
    branch: Vec<RawBranch>,
    #[serde(default)]
    element: Vec<RawElement>,
}

/// A validated case.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub name: String,
    pub system: PowerSystem,
    /// Per converter: `i_d0` was not given and comes from the pre-fault point.
    pub i_d0_from_prefault: Vec<bool>,
}

fn field_err(origin: &str, field: impl Into<String>, message: impl Into<String>) -> IoError {
    IoError::Field { origin: origin.to_string(), field: field.into(), message: message.into() }
}

fn complex(origin: &str, field: &str, raw: &RawComplex) -> Result<Phasor, IoError> {
    let z = match raw {
        RawComplex::Real(r) => Complex64::new(*r, 0.0),
        RawComplex::Pair([re, im]) => Complex64::new(*re, *im),
        RawComplex::Polar { mag, deg } => polar_deg(*mag, *deg),
        RawComplex::Text(s) => {
            let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
            Complex64::from_str(&compact)
                .map_err(|_| field_err(origin, field, format!("`{s}` is not a complex number")))?
        }
    };
    if !z.is_finite() {
        return Err(field_err(origin, field, "value must be finite"));
    }
    Ok(z)
}

fn impedance(origin: &str, field: &str, raw: &RawComplex) -> Result<Option<Phasor>, IoError> {
    match raw {
        RawComplex::Text(s) if s.trim().eq_ignore_ascii_case("open") => Ok(None),
        _ => complex(origin, field, raw).map(Some),
    }
}

fn parse_raw(text: &str, origin: &str) -> Result<RawCase, IoError> {
    toml::from_str(text).map_err(|e| IoError::Parse { origin: origin.to_string(), message: e.to_string() })
}

fn require(origin: &str, field: String, v: Option<f64>) -> Result<f64, IoError> {
    v.ok_or_else(|| field_err(origin, field, "required for this control mode"))
}

fn forbid(origin: &str, prefix: &str, fields: &[(&str, bool)]) -> Result<(), IoError> {
    match fields.iter().find(|(_, present)| *present) {
        Some((name, _)) => Err(field_err(origin, format!("{prefix}.{name}"), "not used by this control mode")),
        None => Ok(()),
    }
}

fn convert(raw: RawCase, origin: &str) -> Result<Case, IoError> {
    let buses = raw.bus.into_iter().map(|b| Bus { id: b.id.into(), wiring: b.wiring }).collect();
    let mut branches = Vec::new();
    for (k, b) in raw.branch.into_iter().enumerate() {
        let at = |f: &str| format!("branch[{k}].{f}");
        let z = b.z.as_ref().map(|z| complex(origin, &at("z"), z)).transpose()?;
        let pick = |own: &Option<RawComplex>, name: &str| -> Result<Option<Phasor>, IoError> {
            own.as_ref().map(|r| complex(origin, &at(name), r)).transpose()
        };
        let z_pos = pick(&b.z_pos, "z_pos")?.or(z).ok_or_else(|| field_err(origin, at("z"), "missing impedance"))?;
        let z_neg = pick(&b.z_neg, "z_neg")?.or(z).unwrap_or(z_pos);
        let z_zero = match &b.z_zero {
            Some(r) => impedance(origin, &at("z_zero"), r)?,
            None => Some(z.unwrap_or(z_pos)),
        };
        branches.push(Branch { from: b.from.into(), to: b.to.map(Into::into), z_pos, z_neg, z_zero });
    }

    let mut elements = Vec::new();
    let mut from_prefault = Vec::new();
    for (k, e) in raw.element.into_iter().enumerate() {
        let at = |f: &str| format!("element[{k}].{f}");
        let spec = match e {
            RawElement::Thevenin { name, bus, u, z, droop } => ElementSpec::NonPe(NonPeSpec {
                name,
                bus: bus.into(),
                kind: NonPeKind::Thevenin {
                    u_th: complex(origin, &at("u"), &u)?,
                    z_th: complex(origin, &at("z"), &z)?,
                    droop: droop.map(|d| GridDroop { k_omega: d.k_omega, p0: d.p0 }),
                },
            }),
            RawElement::Slack { name, bus, u } => ElementSpec::NonPe(NonPeSpec {
                name,
                bus: bus.into(),
                kind: NonPeKind::Slack { u_ref: complex(origin, &at("u"), &u)? },
            }),
            RawElement::PqNode { name, bus, p, q } => {
                ElementSpec::NonPe(NonPeSpec { name, bus: bus.into(), kind: NonPeKind::PqNode { p, q } })
            }
            RawElement::PvNode { name, bus, p, u_ref } => {
                ElementSpec::NonPe(NonPeSpec { name, bus: bus.into(), kind: NonPeKind::PvNode { p, u_ref } })
            }
            RawElement::Vsc { name, bus, mode, i_max, p, q, k_isp, u_ref_gs, i_d0, u_ref, k_omega, p0 } => {
                let prefix = format!("element[{k}]");
                let control = match mode.to_ascii_lowercase().as_str() {
                    "pq" => {
                        forbid(origin, &prefix, &[("u_ref", u_ref.is_some()), ("k_omega", k_omega.is_some()), ("p0", p0.is_some())])?;
                        from_prefault.push(i_d0.is_none());
                        VscControl::Pq {
                            p_disp: require(origin, at("p"), p)?,
                            q_disp: require(origin, at("q"), q)?,
                            k_isp: require(origin, at("k_isp"), k_isp)?,
                            u_ref_gs: u_ref_gs.unwrap_or(1.0),
                            i_d0: i_d0.unwrap_or(0.0),
                        }
                    }
                    "pv" => {
                        forbid(origin, &prefix, &[
                            ("q", q.is_some()), ("k_isp", k_isp.is_some()), ("u_ref_gs", u_ref_gs.is_some()),
                            ("i_d0", i_d0.is_some()), ("k_omega", k_omega.is_some()), ("p0", p0.is_some()),
                        ])?;
                        from_prefault.push(false);
                        VscControl::Pv { p_disp: require(origin, at("p"), p)?, u_ref: require(origin, at("u_ref"), u_ref)? }
                    }
                    "gf" => {
                        forbid(origin, &prefix, &[
                            ("p", p.is_some()), ("q", q.is_some()), ("k_isp", k_isp.is_some()),
                            ("u_ref_gs", u_ref_gs.is_some()), ("i_d0", i_d0.is_some()),
                        ])?;
                        from_prefault.push(false);
                        VscControl::Gf {
                            u_ref: require(origin, at("u_ref"), u_ref)?,
                            k_omega: require(origin, at("k_omega"), k_omega)?,
                            p0: require(origin, at("p0"), p0)?,
                        }
                    }
                    other => return Err(field_err(origin, at("mode"), format!("unknown mode `{other}` (pq, pv, gf)"))),
                };
                ElementSpec::Vsc(VscSpec { name, bus: bus.into(), i_max, control })
            }
        };
        elements.push(spec);
    }

    let mut system = PowerSystem::new(NetworkModel { buses, branches }, elements);
    if let Some(w) = raw.omega0 {
        system.omega0 = w;
    }
    system.validate().map_err(|errors| IoError::Integrity { origin: origin.to_string(), errors })?;
    Ok(Case { name: raw.name.unwrap_or_else(|| origin.to_string()), system, i_d0_from_prefault: from_prefault })
}

/// Parses and validates a case.
pub fn parse_case(text: &str, origin: &str) -> Result<Case, IoError> {
    convert(parse_raw(text, origin)?, origin)
}

/// Parses a parameter file plus a separate topology file whose buses and
/// branches are appended to the parameter file's own.
pub fn parse_case_with_topology(params: &str, topology: &str, origin: &str) -> Result<Case, IoError> {
    let mut raw = parse_raw(params, origin)?;
    let topo = parse_raw(topology, &format!("{origin} (topology)"))?;
    if !topo.element.is_empty() {
        return Err(field_err(origin, "element", "topology files may only hold buses and branches"));
    }
    raw.bus.extend(topo.bus);
    raw.branch.extend(topo.branch);
    convert(raw, origin)
}

fn read(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Read { path: path.to_path_buf(), source })
}

/// Loads a case file, optionally completed by a topology file.
pub fn load_case(path: &Path, topology: Option<&Path>) -> Result<Case, IoError> {
    let origin = path.display().to_string();
    let text = read(path)?;
    match topology {
        Some(t) => parse_case_with_topology(&text, &read(t)?, &origin),
        None => parse_case(&text, &origin),
    }
}

impl Case {
    /// Built-in Test System 1 (grid Thevenin plus one PQ converter).
    pub fn test_system_1() -> Case {
        parse_case(TEST_SYSTEM_1, "test_system_1").expect("embedded fixture is valid")
    }

    /// Built-in four-bus network with the Test System 2 converter set.
    pub fn test_system_2() -> Case {
        parse_case_with_topology(TEST_SYSTEM_2_PARAMS, TEST_SYSTEM_2_TOPOLOGY, "test_system_2")
            .expect("embedded fixture is valid")
    }

    /// The system to use under fault: missing `i_d0` values are taken from
    /// the pre-fault equilibrium.
    pub fn fault_ready(&self, opts: &AlgorithmOptions) -> Result<PowerSystem, IoError> {
        if !self.i_d0_from_prefault.iter().any(|b| *b) {
            return Ok(self.system.clone());
        }
        let pre = prefault(&self.system, opts)?;
        let point = pre.equilibrium.ok_or_else(|| {
            IoError::Usage(format!("{}: no pre-fault equilibrium to derive i_d0 from", self.name))
        })?;
        let mut out = self.system.clone();
        let mut k = 0;
        for e in out.elements.iter_mut() {
            if let ElementSpec::Vsc(v) = e {
                if let (true, VscControl::Pq { i_d0, .. }) = (self.i_d0_from_prefault[k], &mut v.control) {
                    *i_d0 = frozen_reactive_current(&point.converters[k]).ok_or_else(|| {
                        IoError::Usage(format!("{}: pre-fault voltage of `{}` collapsed", self.name, v.name))
                    })?;
                }
                k += 1;
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFault {
    bus: RawBusId,
    #[serde(rename = "type")]
    kind: FaultKind,
    z_ft: Option<RawComplex>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlgorithm {
    max_outer: Option<usize>,
    fallback: Option<FallbackPolicy>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    fault: Option<RawFault>,
    #[serde(default)]
    solver: SolveOptions,
    #[serde(default)]
    algorithm: RawAlgorithm,
}

/// Fault location and solver settings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scenario {
    pub fault: Option<FaultSpec>,
    pub options: AlgorithmOptions,
}

pub fn parse_scenario(text: &str, origin: &str) -> Result<Scenario, IoError> {
    let raw: RawScenario =
        toml::from_str(text).map_err(|e| IoError::Parse { origin: origin.to_string(), message: e.to_string() })?;
    raw.solver.validate().map_err(|m| field_err(origin, "solver", m))?;
    let fault = raw
        .fault
        .map(|f| -> Result<FaultSpec, IoError> {
            let z_ft = match f.z_ft {
                Some(z) => complex(origin, "fault.z_ft", &z)?,
                None => Complex64::new(0.0, 0.0),
            };
            Ok(FaultSpec { bus: f.bus.into(), kind: f.kind, z_ft })
        })
        .transpose()?;
    Ok(Scenario {
        fault,
        options: AlgorithmOptions {
            solve: raw.solver,
            max_outer: raw.algorithm.max_outer,
            fallback: raw.algorithm.fallback.unwrap_or_default(),
        },
    })
}

pub fn load_scenario(path: &Path) -> Result<Scenario, IoError> {
    parse_scenario(&read(path)?, &path.display().to_string())
}
