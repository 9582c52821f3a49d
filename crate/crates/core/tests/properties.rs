use num_complex::Complex64;
use proptest::prelude::*;
use vsc_fault::converter::VscMode;
use vsc_fault::network::{fault_stamp, FaultKind};
use vsc_fault::phasor::{
    instantaneous_power, power_at, power_elements, to_phase, to_sequence, PhaseTriple, SequenceTriple,
};
use vsc_fault::system::CombinationSpace;

fn phasor() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn triple() -> impl Strategy<Value = SequenceTriple> {
    (phasor(), phasor(), phasor()).prop_map(|(a, b, c)| SequenceTriple::new(a, b, c))
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn fortescue_round_trip(a in phasor(), b in phasor(), c in phasor()) {
        let ph = PhaseTriple::new(a, b, c);
        let back = to_phase(&to_sequence(&ph));
        for (x, y) in ph.as_array().iter().zip(back.as_array()) {
            prop_assert!(close(*x, y, 1e-12));
        }
    }

    #[test]
    fn power_elements_match_time_domain(u in triple(), i in triple(), wt in 0.0..std::f64::consts::TAU) {
        let i = SequenceTriple { zero: Complex64::default(), ..i };
        let (p, q) = instantaneous_power(&u, &i, wt);
        let (pc, qc) = power_at(&power_elements(&u, &i), wt);
        prop_assert!((p - pc).abs() < 1e-9 && (q - qc).abs() < 1e-9);
    }

    #[test]
    fn zero_sequence_is_invisible(u in triple(), i in triple(), z in phasor(), wt in 0.0..6.3f64) {
        let shifted = SequenceTriple { zero: u.zero + z, ..u };
        prop_assert_eq!(power_elements(&u, &i), power_elements(&shifted, &i));
        let (p0, q0) = instantaneous_power(&u, &i, wt);
        let (p1, q1) = instantaneous_power(&shifted, &i, wt);
        prop_assert!((p0 - p1).abs() < 1e-12 && (q0 - q1).abs() < 1e-12);
    }

    #[test]
    fn power_is_bilinear(u in triple(), v in triple(), i in triple(), k in -3.0..3.0f64) {
        let sum = SequenceTriple::new(u.pos + v.pos, u.neg + v.neg, u.zero + v.zero);
        let (a, b, c) = (power_elements(&u, &i), power_elements(&v, &i), power_elements(&sum, &i));
        prop_assert!((c.p_con - a.p_con - b.p_con).abs() < 1e-12);
        prop_assert!((c.q_sin - a.q_sin - b.q_sin).abs() < 1e-12);
        let scaled = power_elements(&u.scale(k), &i);
        prop_assert!((scaled.p_cos - k * a.p_cos).abs() < 1e-12);
        prop_assert!((scaled.q_cos - k * a.q_cos).abs() < 1e-12);
    }

    #[test]
    fn balanced_sets_have_no_oscillation(up in phasor(), ip in phasor()) {
        let pe = power_elements(&SequenceTriple::positive(up), &SequenceTriple::positive(ip));
        for v in [pe.p_cos, pe.p_sin, pe.q_cos, pe.q_sin, pe.p_con_neg, pe.q_con_neg] {
            prop_assert!(v.abs() < 1e-15);
        }
    }

    #[test]
    fn combination_codec_round_trips(modes in prop::collection::vec(0..3usize, 0..7), pick in any::<u64>()) {
        let modes: Vec<VscMode> = modes.into_iter().map(|m| [VscMode::Pq, VscMode::Pv, VscMode::Gf][m]).collect();
        let space = CombinationSpace::new(modes);
        let f = 1 + (pick as usize) % space.total();
        let states = space.decode(f).unwrap();
        prop_assert_eq!(space.encode(&states).unwrap(), f);
    }

    #[test]
    fn fault_stamp_structure(re in 0.0..0.5f64, im in 0.01..0.5f64) {
        let z = Complex64::new(re, im);
        let s3 = fault_stamp(FaultKind::ThreePhaseToGround, z).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                let want = if r == c { z.inv() } else { Complex64::default() };
                prop_assert!(close(s3[r][c], want, 1e-12));
            }
        }
        let s1 = fault_stamp(FaultKind::SinglePhaseToGround, z).unwrap();
        for row in s1 {
            for v in row {
                prop_assert!(close(v, s1[0][0], 1e-12));
            }
        }
        let s2 = fault_stamp(FaultKind::PhaseToPhase, z).unwrap();
        for k in 0..3 {
            prop_assert!(s2[2][k].norm() < 1e-12 && s2[k][2].norm() < 1e-12);
        }
    }
}
