use std::path::Path;
use std::process::{Command, Output};

use hdg_fsi::config::RunConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hdg-fsi"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let out = dir.join(format!("{name}-out"));
    let path = dir.join(format!("{name}.cfg"));
    std::fs::write(&path, format!("{body}\noutput = {}\n", out.display())).unwrap();
    path.display().to_string()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn mesh_generate_then_info() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.mesh");
    let p = path.to_str().unwrap();
    let o = run(&["mesh", "generate", "--problem", "exactness", "--n", "2", "--out", p]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["mesh", "info", p]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("triangles  8\n"), "{text}");
    assert!(text.contains("label bottom (2 facets)"), "{text}");
}

#[test]
fn broken_mesh_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.mesh");
    std::fs::write(&path, "not a mesh\n").unwrap();
    let o = run(&["mesh", "info", path.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "typo", "problem = exactness\nstpes = 4");
    let o = run(&["run", "--config", &cfg]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("stpes") && err.contains("line 2"), "{err}");
}

#[test]
fn run_writes_errors_energy_and_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "exact", "problem = exactness\nk = 1\nn = 2\nL = 3\nT = 0.3");
    let o = run(&["run", "--config", &cfg]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("exact-out");
    for f in ["errors.csv", "energy.csv", "resolved.cfg"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let resolved = std::fs::read_to_string(out.join("resolved.cfg")).unwrap();
    let again = RunConfig::parse(&resolved).unwrap();
    assert_eq!(again.resolved(), resolved);
    let energy = std::fs::read_to_string(out.join("energy.csv")).unwrap();
    assert!(energy.starts_with("n,t,E,D,E_cumulative_check\n"));
    assert_eq!(energy.lines().count(), 5);
}

#[test]
fn example2_without_pulse_gives_zero_probes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "quiet",
        "problem = example2\nk = 1\np_max = 0\nT = 0.001\ndt = 1e-4\nprobe_points = 13",
    );
    let o = run(&["run", "--config", &cfg]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("quiet-out");
    for f in ["flow.csv", "pressure.csv", "displacement.csv"] {
        let text = std::fs::read_to_string(out.join(f)).unwrap();
        let rows: Vec<&str> = text.lines().skip(1).collect();
        assert_eq!(rows.len(), 13);
        for r in rows {
            let v: f64 = r.split(',').nth(1).unwrap().parse().unwrap();
            assert_eq!(v, 0.0, "{f}: {r}");
        }
    }
}

#[test]
fn reruns_are_bitwise_identical() {
    let dir = tempfile::tempdir().unwrap();
    let body = "problem = example2\nk = 1\nT = 0.002\ndt = 2e-4\nprobe_points = 25\nt_max = 0.001";
    let a = write_config(dir.path(), "a", body);
    let b = write_config(dir.path(), "b", body);
    assert_eq!(code(&run(&["run", "--config", &a])), 0);
    assert_eq!(code(&run(&["run", "--config", &b])), 0);
    for f in ["flow.csv", "pressure.csv", "displacement.csv", "energy.csv"] {
        let x = std::fs::read(dir.path().join("a-out").join(f)).unwrap();
        let y = std::fs::read(dir.path().join("b-out").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
    let flow = std::fs::read_to_string(dir.path().join("a-out/flow.csv")).unwrap();
    assert!(flow.lines().skip(1).any(|l| !l.ends_with(",0")), "pulse should move the fluid");
}

#[test]
fn convergence_writes_tables_and_checks_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write_config(dir.path(), "ok", "problem = example1_L1\nk = 1\nn = 2,4\nL = 4\nmin_rate_sigma = 0");
    let o = run(&["convergence", "--study", "h", "--config", &ok]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("ok-out");
    let csv = std::fs::read_to_string(out.join("rates_h.csv")).unwrap();
    assert!(csv.starts_with(hdg_fsi::reporting::CSV_HEADER));
    assert!(out.join("rates_h.md").exists());
    assert!(out.join("resolved.cfg").exists());

    let strict = write_config(dir.path(), "strict", "problem = example1_L1\nk = 1\nn = 2,4\nL = 4\nmin_rate_sigma = 10");
    let o = run(&["convergence", "--study", "h", "--config", &strict]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stdout).contains("threshold not met"));
}

#[test]
fn p_study_emits_degree_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "p", "problem = example1_L1\nk = 0,1\nn = 2\nL = 2");
    let o = run(&["convergence", "--study", "p", "--config", &cfg]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let csv = std::fs::read_to_string(dir.path().join("p-out/rates_p.csv")).unwrap();
    assert!(csv.starts_with("k,e_sigma,e_u\n"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn study_without_exact_solution_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "e2", "problem = example2");
    assert_eq!(code(&run(&["convergence", "--study", "h", "--config", &cfg])), 2);
}

#[test]
fn custom_mesh_run_from_random_state() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("box.mesh");
    assert_eq!(
        code(&run(&["mesh", "generate", "--problem", "exactness", "--n", "2", "--out", mesh.to_str().unwrap()])),
        0
    );
    let body = format!(
        "problem = custom\nmesh_file = {}\nT = 0.1\nL = 5\nseed = 3\nbc.bottom = traction\nbc.top = velocity\nbc.sides_f = slip\nbc.sides_s = velocity",
        mesh.display()
    );
    let cfg = write_config(dir.path(), "custom", &body);
    let o = run(&["run", "--config", &cfg]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let energy = std::fs::read_to_string(dir.path().join("custom-out/energy.csv")).unwrap();
    let rows: Vec<Vec<f64>> = energy
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    let e0 = rows[0][2];
    assert!(e0 > 0.0);
    for r in &rows {
        assert!(((r[4] - e0) / e0).abs() < 1e-9, "{r:?}");
    }
}

#[test]
fn threads_variable_is_validated() {
    let o = bin().env("HDG_FSI_THREADS", "many").args(["verify"]).output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "cfg") {
            RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 6);
}
