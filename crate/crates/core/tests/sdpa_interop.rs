//! SDPA export checked against files solved by an external SDP solver.
//!
//! `tests/fixtures/solve_sdpa.py` reads each fixture with cvxpy/CVXOPT;
//! its output is stored in `external_results.json`.

use std::path::PathBuf;

use stringlmi::lmi::{build_affine_system, build_blocks, presets};
use stringlmi::sdp::ipm::{solve, IpmOptions, IpmStatus};
use stringlmi::sdp::{export_sdpa, parse_sdpa};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn exported(c: f64) -> String {
    let sys = presets::open_loop_unstable(c, 0.15);
    export_sdpa(&build_affine_system(&build_blocks(&sys, 1).unwrap(), 1e-6).unwrap())
}

fn external_t(name: &str) -> f64 {
    let text = std::fs::read_to_string(fixture("external_results.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value[name]["status"], "optimal");
    value[name]["t"].as_f64().unwrap()
}

#[test]
fn export_matches_fixture_bytes() {
    for (c, name) in [(10.0, "system23_c10_c015_n1.dat-s"), (6.5, "system23_c6.5_c015_n1.dat-s")] {
        let stored = std::fs::read_to_string(fixture(name)).unwrap();
        assert_eq!(exported(c), stored, "{name}");
    }
}

#[test]
fn internal_solver_agrees_with_external_optimum() {
    for name in ["system23_c10_c015_n1.dat-s", "system23_c6.5_c015_n1.dat-s"] {
        let problem = parse_sdpa(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap();
        let res = solve(&problem, &IpmOptions::default());
        assert_eq!(res.status, IpmStatus::Converged, "{name}");
        let t = *res.x.last().unwrap();
        assert!((t - external_t(name)).abs() < 1e-8, "{name}: internal t = {t}, external t = {}", external_t(name));
    }
}

#[test]
fn external_optimum_decides_like_the_margin_rule() {
    // the margin rule certifies iff the common slack exceeds ε = 1e-6
    assert!(external_t("system23_c10_c015_n1.dat-s") > 1e-6);
    assert!(external_t("system23_c6.5_c015_n1.dat-s") < 1e-6);
}

#[test]
fn parse_round_trip_preserves_problem() {
    let text = exported(10.0);
    let problem = parse_sdpa(&text).unwrap();
    let mut again = String::new();
    stringlmi::sdp::sdpa::write_problem(&problem, &mut again);
    let body: String = text.lines().filter(|l| !l.starts_with('*')).map(|l| format!("{l}\n")).collect();
    assert_eq!(again, body);
}
