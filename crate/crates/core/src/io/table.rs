//! Human-readable result tables: magnitudes to three decimals, angles to
//! 0.1 degree. Phase voltages are scaled by 1/sqrt(3).

use crate::network::{phase_report_scale, sequence_to_phase_voltages, FaultSpec};
use crate::phasor::{angle_deg, Phasor};
use crate::saturation::{AlgorithmOutcome, OracleReport, Termination};
use crate::system::{frozen_reactive_current, PowerSystem};
use std::fmt::Write;
use std::time::Duration;

pub fn polar(z: Phasor) -> String {
    if z.norm() < 5e-4 {
        return "0".to_string();
    }
    format!("{:.3}∠{:.1}°", z.norm(), angle_deg(z))
}

pub fn rect(z: Phasor) -> String {
    // keep rounding noise from printing as -0.000
    let clean = |x: f64| if x.abs() < 5e-4 { 0.0 } else { x };
    let z = Phasor::new(clean(z.re), clean(z.im));
    let sign = if z.im < 0.0 { '-' } else { '+' };
    format!("{:.3}{sign}j{:.3}", z.re, z.im.abs())
}

fn fault_line(case: &str, fault: &FaultSpec) -> String {
    if fault.is_active() {
        format!("{case}: {} fault at bus {}, z_ft = {}", fault.kind.label(), fault.bus, rect(fault.z_ft))
    } else {
        format!("{case}: no fault")
    }
}

pub fn render_outcome(
    case: &str,
    model: &PowerSystem,
    fault: &FaultSpec,
    outcome: &AlgorithmOutcome,
    wall: Option<Duration>,
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", fault_line(case, fault));
    let n_t = outcome.trace.len();
    let summary = match (&outcome.termination, &outcome.equilibrium) {
        (Termination::FixedPoint, Some(p)) => format!("equilibrium f = {} after n_t = {n_t}", p.f),
        (Termination::Exhausted, _) => format!("no equilibrium: all {} combinations tested", outcome.total_combinations),
        _ => format!("no equilibrium: outer iteration limit reached after n_t = {n_t}"),
    };
    let _ = write!(s, "{summary} ({} combinations)", outcome.total_combinations);
    if let Some(w) = wall {
        let _ = write!(s, ", t_comp = {:.3} s", w.as_secs_f64());
    }
    s.push('\n');
    let Some(p) = outcome.equilibrium.as_ref() else {
        return s;
    };
    if model.has_frequency() {
        let _ = writeln!(s, "omega = {:.4}", p.omega);
    }
    s.push('\n');
    let _ = writeln!(s, "{:<10} {:<4} {:<5} {:>7}  {:<18}", "converter", "mode", "state", "|i+|", "p_con + j q_con");
    for c in &p.converters {
        let mode = format!("{:?}", c.mode).to_lowercase();
        let pq = rect(Phasor::new(c.power.p_con, c.power.q_con));
        let _ = write!(s, "{:<10} {:<4} {:<5} {:>7.3}  {:<18}", c.name, mode, c.state, c.i.pos.norm(), pq);
        match frozen_reactive_current(c) {
            Some(i_d0) if !fault.is_active() => {
                let _ = writeln!(s, "i_d0 = {i_d0:.4}");
            }
            _ => s.push('\n'),
        }
    }
    s.push('\n');
    let k = phase_report_scale();
    let _ = writeln!(
        s,
        "{:<6} {:>15} {:>15} {:>15} {:>15} {:>15} {:>15}",
        "bus", "u+", "u-", "u0", "ua/√3", "ub/√3", "uc/√3"
    );
    let phases = sequence_to_phase_voltages(&p.voltages);
    for ((b, u), ph) in model.network.buses.iter().zip(&p.voltages).zip(phases) {
        let [a, bb, c] = ph.as_array().map(|z| polar(z * k));
        let _ = writeln!(
            s,
            "{:<6} {:>15} {:>15} {:>15} {:>15} {:>15} {:>15}",
            b.id.to_string(),
            polar(u.pos),
            polar(u.neg),
            polar(u.zero),
            a,
            bb,
            c
        );
    }
    s
}

pub fn render_oracle(case: &str, fault: &FaultSpec, report: &OracleReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", fault_line(case, fault));
    let _ = writeln!(s, "{:>5}  {:<20} {:<14} verdict", "f", "states", "solve");
    for e in &report.entries {
        let states = e.states.iter().map(|x| x.label()).collect::<Vec<_>>().join(",");
        let verdict = match &e.verdict {
            Ok(()) => "EQUILIBRIUM".to_string(),
            Err(r) => format!("{r:?}"),
        };
        let _ = writeln!(s, "{:>5}  {:<20} {:<14} {verdict}", e.f, states, format!("{:?}", e.status));
    }
    let _ = writeln!(s, "{} equilibrium point(s)", report.equilibria().count());
    s
}
