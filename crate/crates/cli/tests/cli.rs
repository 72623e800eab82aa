//! The `plateopt` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

use plateopt_cli::run::{DENSITY_FILE, MESH_FILE, METADATA_FILE, TRACE_FILE, VTK_FILE};
use plateopt_cli::spec::OUT_DIR_ENV;

const SMALL: &str = r#"
[geometry]
kind = "rectangle"
width = 2.0
height = 1.0

[mesh]
h = 0.2

[materials]
densities = [1.0, 2.0]
areas = [1.0, 1.0]

[problem]
bc = "hinged"
direction = "minimize"
"#;

fn plateopt(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plateopt"))
        .args(args)
        .env(OUT_DIR_ENV, out)
        .output()
        .unwrap()
}

fn write_spec(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(format!("{name}.toml"));
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn run_writes_every_artifact() {
    let specs = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let spec = write_spec(specs.path(), "small", SMALL);
    let o = plateopt(out.path(), &["run", &spec]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = out.path().join("small");
    for f in [MESH_FILE, TRACE_FILE, DENSITY_FILE, VTK_FILE, METADATA_FILE] {
        assert!(dir.join(f).is_file(), "{f} missing");
    }
    let trace = std::fs::read_to_string(dir.join(TRACE_FILE)).unwrap();
    assert!(trace.starts_with("iter,eigenvalue,delta_rho_l2,step_kind"));
    assert!(trace.trim_end().ends_with("stop"), "{trace}");

    let vtk = std::fs::read_to_string(dir.join(VTK_FILE)).unwrap();
    assert!(vtk.starts_with("# vtk DataFile Version"));
    assert!(vtk.contains("CELL_DATA") && vtk.contains("POINT_DATA"));

    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join(METADATA_FILE)).unwrap()).unwrap();
    assert_eq!(meta["name"], "small");
    assert!(meta["summary"]["final_eigenvalue"].as_f64().unwrap() > 0.0);
}

#[test]
fn dry_run_writes_nothing() {
    let specs = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let spec = write_spec(specs.path(), "small", SMALL);
    let o = plateopt(out.path(), &["run", &spec, "--dry-run", "--seed", "9"]);
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("seed = 9"), "{stdout}");
    assert_eq!(std::fs::read_dir(out.path()).unwrap().count(), 0);
}

#[test]
fn invalid_spec_fails_with_a_field_message() {
    let specs = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let spec = write_spec(specs.path(), "bad", &SMALL.replace("areas = [1.0, 1.0]", "areas = [1.0, 3.0]"));
    let o = plateopt(out.path(), &["run", &spec]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("areas"));
}

#[test]
fn empty_batch_succeeds() {
    let specs = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let o = plateopt(out.path(), &["batch", specs.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn batch_rejects_duplicate_names() {
    let specs = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    write_spec(specs.path(), "a", &format!("name = \"same\"\n{SMALL}"));
    write_spec(specs.path(), "b", &format!("name = \"same\"\n{SMALL}"));
    let o = plateopt(out.path(), &["batch", specs.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("name collision"));
}

#[test]
fn batch_reports_each_spec_and_keeps_going() {
    let specs = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    write_spec(specs.path(), "good", SMALL);
    write_spec(specs.path(), "broken", "[geometry]\nkind = \"disk\"\n");
    let o = plateopt(out.path(), &["batch", specs.path().to_str().unwrap(), "--workers", "2"]);
    assert!(!o.status.success());
    let summary = std::fs::read_to_string(out.path().join("summary.csv")).unwrap();
    assert!(summary.lines().any(|l| l.starts_with("good,ok,")), "{summary}");
    assert!(summary.lines().any(|l| l.starts_with("broken,failed,")), "{summary}");
    assert!(out.path().join("good").join(TRACE_FILE).is_file());
}

#[test]
fn same_seed_replays_byte_for_byte() {
    let specs = tempfile::tempdir().unwrap();
    let spec = write_spec(specs.path(), "small", &SMALL.replace("minimize", "maximize"));
    let outs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for out in &outs {
        let o = plateopt(out.path(), &["run", &spec, "--seed", "3", "--restarts", "2"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in [MESH_FILE, TRACE_FILE, DENSITY_FILE, VTK_FILE] {
        let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("small").join(f)).unwrap();
        assert_eq!(read(&outs[0]), read(&outs[1]), "{f}");
    }
}
