use std::path::PathBuf;
use vsc_fault::io::cli::{run_cli, EXIT_ERROR, EXIT_FOUND, EXIT_NO_EQUILIBRIUM};
use vsc_fault::io::records::{parse_records, render_records};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).display().to_string()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["vscfault"];
    full.extend_from_slice(args);
    let code = run_cli(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn solve_table_for_test_system_1() {
    let (code, out, err) =
        run(&["solve", "--case", "test_system_1", "--fault-bus", "1", "--fault-type", "3p2g", "--zft", "0+0.1j"]);
    assert_eq!(code, EXIT_FOUND, "{err}");
    assert!(out.contains("n_t = 2"), "{out}");
    assert!(out.contains("FSS"));
    assert!(out.contains("0.317∠2.6°"), "{out}");
}

#[test]
fn solve_without_fault_is_the_dispatch_point() {
    let (code, out, _) = run(&["solve", "--case", "test_system_1", "--fault-type", "none", "--format", "records"]);
    assert_eq!(code, EXIT_FOUND);
    let rec = &parse_records(&out).unwrap()[0];
    let c = &rec.converters[0];
    assert!((c.power.p_con - 0.7).abs() < 1e-8 && (c.power.q_con - 0.5).abs() < 1e-8);
    assert!(c.i_d0.is_some());
}

#[test]
fn prefault_reports_frozen_current() {
    let (code, out, _) = run(&["prefault", "--case", "builtin:test_system_2"]);
    assert_eq!(code, EXIT_FOUND);
    assert!(out.contains("i_d0 ="), "{out}");
}

#[test]
fn scenario_file_and_topology_flag() {
    let (code, out, err) = run(&[
        "solve",
        "--case",
        &fixture("test_system_2_params.toml"),
        "--topology",
        &fixture("test_system_2_topology.toml"),
        "--scenario",
        &fixture("test_system_2_scenario.toml"),
        "--fault-type",
        "1p2g",
    ]);
    assert_eq!(code, EXIT_FOUND, "{err}");
    assert!(out.contains("omega ="));
}

#[test]
fn no_equilibrium_exit_code() {
    let (code, out, _) = run(&[
        "solve",
        "--case",
        "test_system_2",
        "--scenario",
        &fixture("test_system_2_scenario.toml"),
        "--max-outer",
        "1",
    ]);
    assert_eq!(code, EXIT_NO_EQUILIBRIUM);
    assert!(out.contains("no equilibrium"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["solve", "--case", "test_system_1"]).0, EXIT_ERROR);
    assert_eq!(run(&["solve", "--case", "test_system_1", "--fault-bus", "7"]).0, EXIT_ERROR);
    assert_eq!(run(&["solve", "--case", "/no/such/file.toml", "--fault-bus", "1"]).0, EXIT_ERROR);
    assert_eq!(run(&["solve", "--case", "test_system_1", "--fault-bus", "1", "--zft", "abc"]).0, EXIT_ERROR);
    assert_eq!(run(&["solve", "--case", "test_system_1", "--fault-bus", "1", "--tol", "-1"]).0, EXIT_ERROR);
    let (code, _, err) = run(&["solve", "--case", "test_system_1", "--fault-bus", "1"]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("no fault impedance"), "{err}");
    assert_eq!(run(&["sweep", "--case", "test_system_1"]).0, EXIT_ERROR);
    assert_eq!(run(&["frobnicate"]).0, EXIT_ERROR);
    assert_eq!(run(&["--help"]).0, EXIT_FOUND);
}

#[test]
fn schema_errors_name_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.toml");
    std::fs::write(&empty, "name = \"x\"\n").unwrap();
    let (code, _, err) = run(&["solve", "--case", empty.to_str().unwrap(), "--fault-type", "none"]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("no buses"), "{err}");

    let dangling = dir.path().join("dangling.toml");
    std::fs::write(
        &dangling,
        "[[bus]]\nid = 1\n[[branch]]\nfrom = 1\nto = 2\nz = \"0.1j\"\n[[element]]\nkind = \"thevenin\"\nname = \"g\"\nbus = 1\nu = 1.0\nz = \"0.1j\"\n",
    )
    .unwrap();
    let (code, _, err) = run(&["solve", "--case", dangling.to_str().unwrap(), "--fault-type", "none"]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("unknown bus `2`"), "{err}");
}

#[test]
fn records_round_trip_byte_identical() {
    let (code, out, _) = run(&[
        "solve",
        "--case",
        "test_system_1",
        "--scenario",
        &fixture("test_system_1_scenario.toml"),
        "--fault-type",
        "p2p",
        "--format",
        "records",
    ]);
    assert_eq!(code, EXIT_FOUND);
    let recs = parse_records(&out).unwrap();
    assert_eq!(recs.len(), 1);
    assert_eq!(render_records(&recs), out);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.jsonl");
    let (code, out, _) = run(&[
        "solve",
        "--case",
        "test_system_1",
        "--fault-bus",
        "1",
        "--zft",
        "0.1j",
        "--format",
        "records",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_FOUND);
    assert!(out.is_empty());
    let text = std::fs::read_to_string(path).unwrap();
    assert!(parse_records(&text).unwrap()[0].found());
}

#[test]
fn sweep_emits_one_record_per_type_and_impedance() {
    let (code, out, err) = run(&[
        "sweep",
        "--case",
        "test_system_1",
        "--fault-bus",
        "1",
        "--zft",
        "0.05j,0.1j,0.2j",
        "--format",
        "records",
    ]);
    assert_eq!(code, EXIT_FOUND, "{err}");
    let recs = parse_records(&out).unwrap();
    assert_eq!(recs.len(), 9);
    let (code_seq, out_seq, _) = run(&[
        "sweep",
        "--case",
        "test_system_1",
        "--fault-bus",
        "1",
        "--zft",
        "0.05j,0.1j,0.2j",
        "--format",
        "records",
        "--sequential",
    ]);
    assert_eq!(code_seq, code);
    assert_eq!(out_seq, out);
}

#[test]
fn oracle_lists_single_equilibrium() {
    let (code, out, _) =
        run(&["oracle", "--case", "test_system_1", "--fault-bus", "1", "--fault-type", "1p2g", "--zft", "0.1j"]);
    assert_eq!(code, EXIT_FOUND);
    assert!(out.contains("1 equilibrium point(s)"), "{out}");
}
