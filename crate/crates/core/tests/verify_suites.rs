use hdg_fsi::assembly::Fault;
use hdg_fsi::verify;

#[test]
fn energy_suite_passes_and_catches_sign_flip() {
    let good = verify::energy_suite(Fault::None);
    assert!(good.passed, "{:#?}", good.lines);
    let bad = verify::energy_suite(Fault::StabilizationSign);
    assert!(!bad.passed, "{:#?}", bad.lines);
}

#[test]
fn exactness_suite_passes_and_catches_wrong_trace_coefficient() {
    let good = verify::exactness_suite(Fault::None);
    assert!(good.passed, "{:#?}", good.lines);
    let bad = verify::exactness_suite(Fault::FluidTrace);
    assert!(!bad.passed, "{:#?}", bad.lines);
}

#[test]
fn trace_ratio_is_bounded_under_refinement() {
    let s = verify::trace_inequality_suite(2);
    assert!(s.passed, "{:#?}", s.lines);
}

#[test]
fn projection_errors_converge_at_optimal_rate() {
    let s = verify::projection_suite(3);
    assert!(s.passed, "{:#?}", s.lines);
}

#[test]
fn coarse_projection_error_is_not_trivial() {
    let (v, f) = verify::projection_errors(2, 1).unwrap();
    assert!(v > 1e-3 && f > 1e-3);
}

#[test]
fn cli_verify_with_injected_fault_exits_nonzero() {
    let o = std::process::Command::new(env!("CARGO_BIN_EXE_hdg-fsi"))
        .args(["verify", "--inject", "fluid-trace"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("FAIL exactness"), "{out}");
    assert!(out.contains("PASS projection-rate"), "{out}");
}

#[test]
fn cli_verify_passes_on_a_clean_build() {
    let o = std::process::Command::new(env!("CARGO_BIN_EXE_hdg-fsi"))
        .arg("verify")
        .output()
        .unwrap();
    let out = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{out}");
    assert!(out.contains("4/4 suites passed"), "{out}");
}
