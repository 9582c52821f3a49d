//! Dynamic-system update of converter saturation states and the outer
//! fixed-point iteration that searches for a consistent equilibrium.

use crate::converter::{required_currents, SatState, VscControl, VscMode, VscSpec};
use crate::error::ModelError;
use crate::network::{FaultKind, FaultSpec};
use crate::solver::{solve, SolveOptions, SolveStatus};
use crate::system::{build_residual, ConverterPoint, EquilibriumPoint, PowerSystem};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Relative slack on current limits when classifying states.
pub const LIMIT_TOL: f64 = 1e-6;
/// Absolute tolerance on currents that must vanish.
pub const ZERO_CURRENT_TOL: f64 = 1e-6;
/// Slack on the sign conditions that select among mirrored saturated roots.
pub const ROOT_SIGN_TOL: f64 = 1e-9;
/// Default ceiling on the size of an exhaustive enumeration.
pub const ENUMERATION_CAP: usize = 4096;
/// Below this positive-sequence magnitude a PQ converter cannot meet any
/// power reference.
const U_COLLAPSE: f64 = 1e-9;

/// How to pick a fresh combination once the update would revisit one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum FallbackPolicy {
    /// Smallest untested combination number.
    #[default]
    Lowest,
    /// Uniform among untested combinations, reproducible from the seed.
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AlgorithmOptions {
    pub solve: SolveOptions,
    /// Outer iteration limit; `None` means the number of combinations.
    pub max_outer: Option<usize>,
    pub fallback: FallbackPolicy,
}

/// Outcome of solving one `SE_f`.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinationSolve {
    pub states: Vec<SatState>,
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub residual_norm: f64,
    pub iters: usize,
    pub point: Option<EquilibriumPoint>,
}

impl CombinationSolve {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

/// Which branch of a saturated converter's two mirrored roots is wrong.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum WrongRoot {
    /// Full saturation absorbing reactive power.
    Reactive,
    /// Partial saturation with active power opposite to the reference.
    Active,
}

fn p_reference(spec: &VscSpec) -> Option<f64> {
    match spec.control {
        VscControl::Pq { p_disp, .. } | VscControl::Pv { p_disp, .. } => Some(p_disp),
        VscControl::Gf { .. } => None,
    }
}

fn wrong_root(spec: &VscSpec, at: &ConverterPoint) -> Option<WrongRoot> {
    match at.state {
        SatState::Fss if at.power.q_con < -ROOT_SIGN_TOL => Some(WrongRoot::Reactive),
        SatState::Pss => match p_reference(spec) {
            Some(p) if p * at.power.p_con < 0.0 && at.power.p_con.abs() > ROOT_SIGN_TOL => Some(WrongRoot::Active),
            _ => None,
        },
        _ => None,
    }
}

fn root_violations(model: &PowerSystem, point: &EquilibriumPoint) -> Vec<(usize, WrongRoot)> {
    model
        .converters()
        .zip(&point.converters)
        .enumerate()
        .filter_map(|(k, (spec, at))| wrong_root(spec, at).map(|w| (k, w)))
        .collect()
}

/// Solves `SE_f` for `states` from `x0` (flat start when `None`).
///
/// Saturated states have mirrored roots. A fully saturated converter must
/// inject reactive power; a partially saturated one must keep the sign of
/// its active-power reference. If the solver lands on a wrong root, the
/// offending currents are mirrored and the system is solved once more.
pub fn solve_combination(
    model: &PowerSystem,
    fault: &FaultSpec,
    states: &[SatState],
    x0: Option<&[f64]>,
    opts: &SolveOptions,
) -> Result<CombinationSolve, ModelError> {
    let sys = build_residual(model, fault, states)?;
    let flat = sys.flat_start();
    let start = x0.unwrap_or(&flat);
    let mut out = solve(&sys, start, opts);
    let mut point = None;
    if out.converged() {
        let p = EquilibriumPoint::from_solution(&sys, states, &out.x, out.residual_norm);
        let bad = root_violations(model, &p);
        if bad.is_empty() {
            point = Some(p);
        } else {
            // mirror the offending currents: s -> conj(s) flips q, s -> -conj(s) flips p
            let mut seed = out.x.clone();
            let layout = sys.layout();
            let conv_elements = model.converter_indices();
            for (k, wrong) in bad {
                let c = &p.converters[k];
                let s = c.u.pos * c.i.pos.conj();
                let s_new = match wrong {
                    WrongRoot::Reactive => s.conj(),
                    WrongRoot::Active => -s.conj(),
                };
                let u = c.u.pos;
                let i = if u.norm() > 0.0 { (s_new / u).conj() } else { -Complex64::i() * c.i_max };
                let o = layout.current(conv_elements[k]);
                seed[o] = i.re;
                seed[o + 1] = i.im;
            }
            out = solve(&sys, &seed, opts);
            if out.converged() {
                let p = EquilibriumPoint::from_solution(&sys, states, &out.x, out.residual_norm);
                if root_violations(model, &p).is_empty() {
                    point = Some(p);
                } else {
                    out.status = SolveStatus::NoConvergence;
                }
            }
        }
    }
    Ok(CombinationSolve {
        states: states.to_vec(),
        status: out.status,
        x: out.x,
        residual_norm: out.residual_norm,
        iters: out.iters,
        point,
    })
}

fn exceeds(i_mag: f64, i_max: f64) -> bool {
    i_mag > i_max * (1.0 + LIMIT_TOL)
}

fn next_state(spec: &VscSpec, state: SatState, at: &ConverterPoint, fault_active: bool) -> SatState {
    let u = at.u.pos.norm();
    let i = at.i.pos.norm();
    match (&spec.control, state) {
        (VscControl::Pq { .. }, _) => {
            if u < U_COLLAPSE {
                return SatState::Fss;
            }
            let (ip, iq) = required_currents(&spec.control, u, fault_active);
            if !exceeds(ip.hypot(iq), spec.i_max) {
                SatState::Uss
            } else if !exceeds(iq.abs(), spec.i_max) {
                SatState::Pss
            } else {
                SatState::Fss
            }
        }
        (VscControl::Pv { .. }, SatState::Uss) => {
            if exceeds(i, spec.i_max) {
                SatState::Pss
            } else {
                SatState::Uss
            }
        }
        (VscControl::Pv { p_disp, .. }, SatState::Pss) => {
            if at.power.p_con.abs() > p_disp.abs() * (1.0 + LIMIT_TOL) {
                SatState::Uss
            } else {
                SatState::Pss
            }
        }
        (VscControl::Pv { u_ref, .. }, SatState::Fss) => {
            if u > u_ref * (1.0 + LIMIT_TOL) {
                SatState::Pss
            } else {
                SatState::Fss
            }
        }
        (VscControl::Gf { .. }, SatState::Uss) => {
            if exceeds(i, spec.i_max) {
                SatState::Fss
            } else {
                SatState::Uss
            }
        }
        (VscControl::Gf { u_ref, .. }, _) => {
            if u > u_ref * (1.0 + LIMIT_TOL) {
                SatState::Uss
            } else {
                SatState::Fss
            }
        }
    }
}

/// The state update `DS`: next combination from the current one and its
/// solve outcome. Without a solution only grid-following PV converters in
/// partial saturation move (to full saturation).
pub fn ds_update(model: &PowerSystem, fault: &FaultSpec, states: &[SatState], point: Option<&EquilibriumPoint>) -> Vec<SatState> {
    let specs: Vec<&VscSpec> = model.converters().collect();
    match point {
        Some(p) => specs
            .iter()
            .zip(states)
            .zip(&p.converters)
            .map(|((spec, s), at)| next_state(spec, *s, at, fault.is_active()))
            .collect(),
        None => specs
            .iter()
            .zip(states)
            .map(|(spec, s)| match (spec.mode(), s) {
                (VscMode::Pv, SatState::Pss) => SatState::Fss,
                _ => *s,
            })
            .collect(),
    }
}

/// Why a combination is rejected as an equilibrium.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    NoConvergence,
    NotFixedPoint,
    CurrentLimit { converter: String },
    UnbalancedCurrent { converter: String },
    NegativeReactive { converter: String },
    ReversedActive { converter: String },
}

/// Checks every equilibrium condition of a converged solution.
pub fn check_equilibrium(model: &PowerSystem, fault: &FaultSpec, point: &EquilibriumPoint) -> Result<(), Rejection> {
    for c in &point.converters {
        if exceeds(c.i.pos.norm(), c.i_max) {
            return Err(Rejection::CurrentLimit { converter: c.name.clone() });
        }
        if c.i.neg.norm() > ZERO_CURRENT_TOL || c.i.zero.norm() > ZERO_CURRENT_TOL {
            return Err(Rejection::UnbalancedCurrent { converter: c.name.clone() });
        }
    }
    if let Some((k, wrong)) = root_violations(model, point).into_iter().next() {
        let converter = point.converters[k].name.clone();
        return Err(match wrong {
            WrongRoot::Reactive => Rejection::NegativeReactive { converter },
            WrongRoot::Active => Rejection::ReversedActive { converter },
        });
    }
    if ds_update(model, fault, &point.states, Some(point)) != point.states {
        return Err(Rejection::NotFixedPoint);
    }
    Ok(())
}

/// One pass of the outer loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub n_t: usize,
    pub f: usize,
    pub states: Vec<SatState>,
    pub status: SolveStatus,
    /// `null` in JSON when the residual could not be evaluated.
    #[serde(with = "nonfinite_as_null")]
    pub residual_norm: f64,
    pub iters: usize,
    pub warm_start: bool,
    /// Combination proposed by the state update.
    pub proposed: Vec<SatState>,
    /// Set when the proposal was already tested and a fresh one was drawn.
    pub fallback_to: Option<usize>,
}

mod nonfinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// `DS(X) = X` at a converged solution.
    FixedPoint,
    /// Every combination was tested without reaching a fixed point.
    Exhausted,
    /// The outer iteration limit was reached.
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmOutcome {
    pub termination: Termination,
    pub equilibrium: Option<EquilibriumPoint>,
    pub trace: Vec<IterationTrace>,
    /// Combination numbers in the order they were solved.
    pub tested: Vec<usize>,
    pub total_combinations: usize,
}

impl AlgorithmOutcome {
    pub fn found(&self) -> bool {
        self.termination == Termination::FixedPoint
    }
}

fn pick_untested(total: usize, tested: &BTreeSet<usize>, policy: FallbackPolicy, rng: &mut ChaCha8Rng) -> Option<usize> {
    match policy {
        FallbackPolicy::Lowest => (1..=total).find(|f| !tested.contains(f)),
        FallbackPolicy::Random { .. } => {
            let pool: Vec<usize> = (1..=total).filter(|f| !tested.contains(f)).collect();
            pool.choose(rng).copied()
        }
    }
}

/// Fixed-point search over saturation states.
///
/// Starts from every converter unsaturated and a flat start; later solves are
/// warm-started from the last converged solution, retrying from flat when the
/// warm start fails. A proposal that was already tested is replaced by an
/// untested combination chosen by `opts.fallback`.
pub fn run_algorithm(model: &PowerSystem, fault: &FaultSpec, opts: &AlgorithmOptions) -> Result<AlgorithmOutcome, ModelError> {
    let space = model.combination_space();
    let total = space.total();
    let max_outer = opts.max_outer.unwrap_or(total);
    let seed = match opts.fallback {
        FallbackPolicy::Random { seed } => seed,
        FallbackPolicy::Lowest => 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = space.all_uss();
    let mut warm: Option<Vec<f64>> = None;
    let mut tested = BTreeSet::new();
    let mut order = Vec::new();
    let mut trace = Vec::new();

    for n_t in 1..=max_outer {
        let f = space.encode(&states)?;
        tested.insert(f);
        order.push(f);
        let mut res = solve_combination(model, fault, &states, warm.as_deref(), &opts.solve)?;
        let mut warm_used = warm.is_some();
        if res.point.is_none() && warm_used {
            res = solve_combination(model, fault, &states, None, &opts.solve)?;
            warm_used = false;
        }
        let proposed = ds_update(model, fault, &states, res.point.as_ref());
        let mut entry = IterationTrace {
            n_t,
            f,
            states: states.clone(),
            status: res.status,
            residual_norm: res.residual_norm,
            iters: res.iters,
            warm_start: warm_used,
            proposed: proposed.clone(),
            fallback_to: None,
        };
        if let Some(p) = res.point.as_ref() {
            warm = Some(p.x.clone());
            if proposed == states {
                trace.push(entry);
                return Ok(AlgorithmOutcome {
                    termination: Termination::FixedPoint,
                    equilibrium: res.point,
                    trace,
                    tested: order,
                    total_combinations: total,
                });
            }
        }
        let next_f = space.encode(&proposed)?;
        if tested.contains(&next_f) {
            match pick_untested(total, &tested, opts.fallback, &mut rng) {
                Some(g) => {
                    entry.fallback_to = Some(g);
                    states = space.decode(g)?;
                }
                None => {
                    trace.push(entry);
                    return Ok(AlgorithmOutcome {
                        termination: Termination::Exhausted,
                        equilibrium: None,
                        trace,
                        tested: order,
                        total_combinations: total,
                    });
                }
            }
        } else {
            states = proposed;
        }
        trace.push(entry);
    }
    let termination = if tested.len() == total { Termination::Exhausted } else { Termination::IterationLimit };
    Ok(AlgorithmOutcome { termination, equilibrium: None, trace, tested: order, total_combinations: total })
}

/// Whether to spread independent solves over a thread pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

/// Maps `f` over `items`, in parallel when enabled. Output order always
/// follows input order.
pub fn map_ordered<T, U, F>(items: Vec<T>, exec: Execution, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.into_par_iter().map(f).collect()
        }
        _ => items.into_iter().map(f).collect(),
    }
}

/// One combination as seen by the exhaustive oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleEntry {
    pub f: usize,
    pub states: Vec<SatState>,
    pub status: SolveStatus,
    pub verdict: Result<(), Rejection>,
    pub point: Option<EquilibriumPoint>,
}

impl OracleEntry {
    pub fn is_equilibrium(&self) -> bool {
        self.verdict.is_ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub entries: Vec<OracleEntry>,
}

impl OracleReport {
    pub fn equilibria(&self) -> impl Iterator<Item = &OracleEntry> {
        self.entries.iter().filter(|e| e.is_equilibrium())
    }

    /// True when `point` matches an oracle equilibrium with the same
    /// combination and bus voltages within `tol`.
    pub fn contains(&self, point: &EquilibriumPoint, tol: f64) -> bool {
        self.equilibria().any(|e| {
            let q = e.point.as_ref().expect("equilibrium carries a point");
            e.f == point.f
                && q.voltages.len() == point.voltages.len()
                && q.voltages.iter().zip(&point.voltages).all(|(a, b)| {
                    a.as_array().iter().zip(b.as_array()).all(|(x, y)| (x - y).norm() <= tol)
                })
        })
    }
}

/// Solves every combination from a flat start and classifies each one.
pub fn exhaustive_oracle(
    model: &PowerSystem,
    fault: &FaultSpec,
    opts: &SolveOptions,
    exec: Execution,
    cap: usize,
) -> Result<OracleReport, ModelError> {
    let space = model.combination_space();
    let total = space.total();
    if total > cap {
        return Err(ModelError::EnumerationCap { count: total, cap });
    }
    let combos = (1..=total).map(|f| space.decode(f).map(|s| (f, s))).collect::<Result<Vec<_>, _>>()?;
    let entries = map_ordered(combos, exec, |(f, states)| {
        let res = solve_combination(model, fault, &states, None, opts)?;
        let verdict = match res.point.as_ref() {
            Some(p) => check_equilibrium(model, fault, p),
            None => Err(Rejection::NoConvergence),
        };
        Ok(OracleEntry { f, states, status: res.status, verdict, point: res.point })
    })
    .into_iter()
    .collect::<Result<Vec<_>, ModelError>>()?;
    Ok(OracleReport { entries })
}

/// Pre-fault operating point: the outer loop without a fault.
pub fn prefault(model: &PowerSystem, opts: &AlgorithmOptions) -> Result<AlgorithmOutcome, ModelError> {
    let bus = model.network.buses.first().ok_or(ModelError::NoBuses)?.id.clone();
    let none = FaultSpec { bus, kind: FaultKind::None, z_ft: Complex64::new(0.0, 0.0) };
    run_algorithm(model, &none, opts)
}

/// One fault case of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCase {
    pub fault: FaultSpec,
    pub outcome: AlgorithmOutcome,
}

/// Runs the outer loop for every fault in `faults`.
pub fn sweep(
    model: &PowerSystem,
    faults: Vec<FaultSpec>,
    opts: &AlgorithmOptions,
    exec: Execution,
) -> Result<Vec<SweepCase>, ModelError> {
    map_ordered(faults, exec, |fault| run_algorithm(model, &fault, opts).map(|outcome| SweepCase { fault, outcome }))
        .into_iter()
        .collect()
}
