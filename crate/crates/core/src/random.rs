//! Seeded generator of small radial networks with one to three converters,
//! used by the differential tests and the benchmarks.

use crate::converter::{VscControl, VscSpec};
use crate::elements::{GridDroop, NonPeKind, NonPeSpec};
use crate::network::{Branch, Bus, BusId, FaultKind, FaultSpec, NetworkModel, Wiring};
use crate::system::{ElementSpec, PowerSystem};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorConfig {
    pub min_converters: usize,
    pub max_converters: usize,
    /// Probability that the grid source carries frequency droop.
    pub grid_droop: f64,
    /// Probability of a grid-forming converter, per converter.
    pub grid_forming: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig { min_converters: 1, max_converters: 3, grid_droop: 0.3, grid_forming: 0.25 }
    }
}

/// A generated system with a suggested fault location.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedCase {
    pub seed: u64,
    pub system: PowerSystem,
    pub fault_bus: BusId,
    pub z_ft: Complex64,
}

impl GeneratedCase {
    pub fn fault(&self, kind: FaultKind) -> FaultSpec {
        FaultSpec { bus: self.fault_bus.clone(), kind, z_ft: self.z_ft }
    }
}

fn series_z(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen_range(0.005..0.04), rng.gen_range(0.03..0.15))
}

pub fn generate(seed: u64, cfg: &GeneratorConfig) -> GeneratedCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_conv = rng.gen_range(cfg.min_converters..=cfg.max_converters);
    let n_bus = rng.gen_range(1..=n_conv + 1);

    let buses: Vec<Bus> = (0..n_bus).map(|k| Bus { id: BusId(k.to_string()), wiring: Wiring::FourWire }).collect();
    let mut branches = Vec::new();
    for k in 1..n_bus {
        let parent = rng.gen_range(0..k);
        let z = series_z(&mut rng);
        // some feeders sit behind a delta winding with no zero-sequence path
        let z_zero = if rng.gen_bool(0.2) { None } else { Some(z * 3.0) };
        branches.push(Branch { from: buses[parent].id.clone(), to: Some(buses[k].id.clone()), z_pos: z, z_neg: z, z_zero });
    }
    if rng.gen_bool(0.3) {
        let at = rng.gen_range(0..n_bus);
        let z = Complex64::new(rng.gen_range(3.0..8.0), rng.gen_range(0.5..2.0));
        branches.push(Branch { from: buses[at].id.clone(), to: None, z_pos: z, z_neg: z, z_zero: Some(z) });
    }

    let droop = rng.gen_bool(cfg.grid_droop).then(|| GridDroop { k_omega: rng.gen_range(0.02..0.08), p0: 0.0 });
    let mut elements = vec![ElementSpec::NonPe(NonPeSpec {
        name: "grid".into(),
        bus: buses[0].id.clone(),
        kind: NonPeKind::Thevenin {
            u_th: Complex64::new(1.0, 0.0),
            z_th: Complex64::new(rng.gen_range(0.005..0.03), rng.gen_range(0.05..0.2)),
            droop,
        },
    })];
    for k in 0..n_conv {
        let bus = buses[rng.gen_range(0..n_bus)].id.clone();
        let control = if rng.gen_bool(cfg.grid_forming) {
            VscControl::Gf { u_ref: rng.gen_range(0.98..1.03), k_omega: rng.gen_range(0.005..0.05), p0: rng.gen_range(0.0..1.0) }
        } else if rng.gen_bool(0.5) {
            VscControl::Pv { p_disp: rng.gen_range(-0.8..0.8), u_ref: rng.gen_range(0.96..1.03) }
        } else {
            let q_disp = rng.gen_range(-0.3..0.5);
            VscControl::Pq {
                p_disp: rng.gen_range(-0.8..0.8),
                q_disp,
                k_isp: rng.gen_range(0.0..3.0),
                u_ref_gs: 1.0,
                i_d0: q_disp,
            }
        };
        let i_max = match control {
            VscControl::Gf { .. } => rng.gen_range(1.2..2.5),
            _ => rng.gen_range(0.8..1.5),
        };
        elements.push(ElementSpec::Vsc(VscSpec { name: format!("VSC{}", k + 1), bus, i_max, control }));
    }

    let fault_bus = buses[rng.gen_range(0..n_bus)].id.clone();
    let z_ft = Complex64::new(0.0, rng.gen_range(0.02..0.2));
    GeneratedCase { seed, system: PowerSystem::new(NetworkModel { buses, branches }, elements), fault_bus, z_ft }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_systems_validate_and_are_reproducible() {
        let cfg = GeneratorConfig::default();
        for seed in 0..200 {
            let a = generate(seed, &cfg);
            a.system.validate().unwrap_or_else(|e| panic!("seed {seed}: {e:?}"));
            let n = a.system.converters().count();
            assert!((1..=3).contains(&n));
            assert_eq!(a, generate(seed, &cfg));
        }
    }
}
