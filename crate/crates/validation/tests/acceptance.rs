//! Acceptance report. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Run alone with `cargo test -p plateopt-validation --test acceptance`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use plateopt_cli::run::{execute, solve, Solved, DENSITY_FILE, TRACE_FILE, VTK_FILE};
use plateopt_cli::spec::RunSpec;
use plateopt_core::eig::EigenOptions;
use plateopt_core::fem::BcKind;
use plateopt_core::mesh::{element_measures, generate_disk, generate_rectangle, TriMesh};
use plateopt_core::optimize::{best_run, multi_start, Direction, OptConfig, Plate};
use plateopt_core::oracle::{analytic_homogeneous, exhaustive_extremum, fixture_hex10, fixture_square8, Domain};
use plateopt_core::rearrange::{
    bathtub_maximize, bathtub_minimize, distribution_function, RearrangementClass, ScalarElementField,
};
use plateopt_validation::{boundary_distance, region_means};
use rayon::prelude::*;

// Tolerances.
const HINGED_REL: f64 = 0.01;
const MIN_ORDER: f64 = 1.8;
const CLAMPED_REL: f64 = 0.02;
const REFERENCE_REL: f64 = 0.10;
const SCALING_REL: f64 = 1e-10;
const ORACLE_HITS: usize = 3;
const STARTS: usize = 4;

// Time budgets.
const FEM_BUDGET: Duration = Duration::from_secs(30);
const ORACLE_BUDGET: Duration = Duration::from_secs(120);
const DISK_BUDGET: Duration = Duration::from_secs(300);

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, n: u32, ok: bool, text: String) {
        if !ok {
            self.failed += 1;
        }
        println!("criterion {n} [{}] {text}", if ok { "PASS" } else { "FAIL" });
    }
}

fn homogeneous(mesh: TriMesh, bc: BcKind, c: f64) -> f64 {
    let plate = Plate::new(mesh, bc).expect("plate");
    let n = plate.measure().len();
    plate.eigenpair(&vec![c; n], &EigenOptions::default(), None).expect("eigenpair").lambda
}

fn criterion_1(r: &mut Report) {
    let t = Instant::now();
    let radius = 2f64.sqrt();
    let exact = analytic_homogeneous(Domain::Disk { radius }, BcKind::Hinged, 1.0).unwrap();
    let vals: Vec<f64> = [10.0, 20.0, 40.0]
        .iter()
        .map(|n| homogeneous(generate_disk(radius, radius / n).unwrap(), BcKind::Hinged, 1.0))
        .collect();
    let errs: Vec<f64> = vals.iter().map(|v| (v - exact).abs()).collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let rel = errs[2] / exact;
    let elapsed = t.elapsed();
    let ok = rel < HINGED_REL && orders.iter().all(|&o| o >= MIN_ORDER) && elapsed < FEM_BUDGET;
    r.line(
        1,
        ok,
        format!(
            "hinged disk R=sqrt2: {:.5} vs {exact:.5} (rel {rel:.2e}, limit {HINGED_REL}); orders {:.2}, {:.2} (min {MIN_ORDER}); {:.1}s",
            vals[2],
            orders[0],
            orders[1],
            elapsed.as_secs_f64()
        ),
    );
}

fn criterion_2(r: &mut Report) {
    let exact = analytic_homogeneous(Domain::Disk { radius: 1.0 }, BcKind::Clamped, 1.0).unwrap();
    let got = homogeneous(generate_disk(1.0, 1.0 / 40.0).unwrap(), BcKind::Clamped, 1.0);
    let rel = (got - exact).abs() / exact;
    r.line(
        2,
        rel < CLAMPED_REL,
        format!("clamped unit disk: {got:.3} vs {exact:.3} (rel {rel:.2e}, limit {CLAMPED_REL})"),
    );
}

fn criterion_3(r: &mut Report) {
    let t = Instant::now();
    let mut notes = Vec::new();
    let mut ok = true;
    for (label, mesh, count) in [("square8", fixture_square8(), 70), ("hex10", fixture_hex10(), 252)] {
        let a = element_measures(&mesh).total_area;
        let class = RearrangementClass::new(vec![1.0, 2.0], vec![a / 2.0, a / 2.0]).unwrap();
        for bc in [BcKind::Hinged, BcKind::Clamped] {
            let plate = Plate::new(mesh.clone(), bc).unwrap();
            for dir in [Direction::Minimize, Direction::Maximize] {
                let oracle = exhaustive_extremum(&mesh, &class, bc, dir).unwrap();
                let cfg = OptConfig::new(dir, bc);
                let runs = multi_start(&plate, &class, &cfg, STARTS).unwrap();
                let tol = 10.0 * cfg.eig.tol * oracle.optimum_value;
                let hits = runs
                    .iter()
                    .filter(|run| (run.final_eigenvalue() - oracle.optimum_value).abs() <= tol)
                    .count();
                let best = best_run(&runs).unwrap().final_eigenvalue();
                let good = oracle.enumeration_count == count
                    && hits >= ORACLE_HITS
                    && (best - oracle.optimum_value).abs() <= tol;
                ok &= good;
                if !good {
                    notes.push(format!(
                        "{label} {bc} {dir}: oracle {:.6} best {best:.6} hits {hits}/{STARTS}",
                        oracle.optimum_value
                    ));
                }
            }
        }
    }
    let elapsed = t.elapsed();
    ok &= elapsed < ORACLE_BUDGET;
    let detail = if notes.is_empty() {
        format!("8 cases all at the exhaustive optimum (>= {ORACLE_HITS}/{STARTS} starts, best-of exact)")
    } else {
        notes.join("; ")
    };
    r.line(3, ok, format!("oracle equivalence: {detail}; {:.1}s", elapsed.as_secs_f64()));
}

fn spec_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../cli/specs")
}

fn load(name: &str) -> RunSpec {
    RunSpec::load(&spec_dir().join(format!("{name}.toml"))).expect("bundled spec")
}

/// Heavy material near the boundary for maximizers and away from it for
/// minimizers. `outward` grows toward the boundary.
fn topology_ok(solved: &Solved, dir: Direction, outward: &[f64]) -> (bool, f64, f64) {
    let run = solved.best();
    let (light, heavy) = region_means(&run.density, &solved.plate.measure().areas, outward);
    let heavy_outside = heavy > light;
    let ok = match dir {
        Direction::Maximize => heavy_outside,
        Direction::Minimize => !heavy_outside,
    };
    (ok, light, heavy)
}

fn homogeneous_bounds(solved: &Solved) -> (f64, f64) {
    let c = solved.class.densities();
    let n = solved.plate.measure().len();
    let eig = &EigenOptions::default();
    let lo = solved.plate.eigenpair(&vec![c[c.len() - 1]; n], eig, None).unwrap().lambda;
    let hi = solved.plate.eigenpair(&vec![c[0]; n], eig, None).unwrap().lambda;
    (lo, hi)
}

fn disk_criterion(r: &mut Report, n: u32, label: &str, cases: &[(&str, f64)], solved: &BTreeMap<String, Solved>, elapsed: Duration) {
    let mut ok = elapsed < DISK_BUDGET;
    let mut parts = Vec::new();
    for &(name, target) in cases {
        let s = &solved[name];
        let dir = s.best().config.direction;
        let lambda = s.best().final_eigenvalue();
        let rel = (lambda - target).abs() / target;
        let radius: Vec<f64> = s.plate.mesh().centroids().iter().map(|c| c[0].hypot(c[1])).collect();
        let (topo, light, heavy) = topology_ok(s, dir, &radius);
        let (lo, hi) = homogeneous_bounds(s);
        ok &= rel <= REFERENCE_REL && topo;
        parts.push(format!(
            "{dir} {lambda:.4} vs {target} (rel {rel:.2}, limit {REFERENCE_REL}; attainable [{lo:.3}, {hi:.3}]), mean radius c1 {light:.3} c2 {heavy:.3} topology {}",
            if topo { "ok" } else { "wrong" }
        ));
    }
    r.line(n, ok, format!("{label}: {}", parts.join("; ")));
}

const REFERENCE: &[(&str, f64)] = &[
    ("example1_rect_max", 1.51),
    ("example1_rect_min", 0.90),
    ("example1_ellipse_max", 4.51),
    ("example1_ellipse_min", 2.58),
    ("example1_crescent_max", 146.23),
    ("example1_crescent_min", 81.11),
    ("example2_holed_max", 654.16),
    ("example2_holed_min", 327.41),
    ("example3_rect_3mat_max", 10.33),
    ("example3_rect_3mat_min", 4.56),
];

fn criterion_6(r: &mut Report, solved: &BTreeMap<String, Solved>) {
    let mut ok = true;
    let mut parts = Vec::new();
    for &(name, target) in REFERENCE {
        let s = &solved[name];
        let run = s.best();
        let dir = run.config.direction;
        let monotone = run.is_monotone(10.0 * run.config.eig.tol);
        let class_ok = run.density.satisfies_class(&s.class, s.plate.measure());
        let outward: Vec<f64> = boundary_distance(s.plate.mesh()).iter().map(|d| -d).collect();
        let (topo, light, heavy) = topology_ok(s, dir, &outward);
        let (light, heavy) = (-light, -heavy);
        let lambda = run.final_eigenvalue();
        let mut good = monotone && class_ok && topo;
        let mut extra = String::new();
        if name == "example1_rect_max" {
            let ceiling = std::f64::consts::PI.powi(4) / 64.0;
            let floor = ceiling / 2.0;
            let within = lambda <= ceiling && lambda > floor;
            good &= within;
            extra = format!(" in ({floor:.4}, {ceiling:.4}] {}", if within { "yes" } else { "no" });
        }
        ok &= good;
        parts.push(format!(
            "{name} {lambda:.4} (reference {target}){extra}, monotone {monotone}, class {class_ok}, boundary distance light {light:.3} heavy {heavy:.3} topology {}",
            if topo { "ok" } else { "wrong" }
        ));
    }
    r.line(6, ok, format!("under-specified geometries: {}", parts.join("; ")));
}

/// Assignments of a two-material class on `mesh` whose heavy area is
/// within half an element of the target.
fn enumerate_extremes(f: &ScalarElementField, mesh: &TriMesh, class: &RearrangementClass) -> (f64, f64) {
    let measure = element_measures(mesh);
    let n = measure.len();
    let c = class.densities();
    let slack = measure.max_area() / 2.0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for mask in 0u32..(1 << n) {
        let heavy: f64 = (0..n).filter(|k| mask >> k & 1 == 1).map(|k| measure.areas[k]).sum();
        if (heavy - class.target_areas()[1]).abs() > slack {
            continue;
        }
        let v: f64 = (0..n)
            .map(|k| c[(mask >> k & 1) as usize] * f.values()[k] * measure.areas[k])
            .sum();
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// Executes one bundled spec twice into separate directories and compares
/// the artifact bytes.
fn replay_identical() -> Result<(), String> {
    let dirs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for d in &dirs {
        let mut spec = load("example3_rect_3mat_min");
        spec.optimizer.seed = Some(5);
        spec.output.dir = Some(d.path().to_path_buf());
        execute(&spec).map_err(|e| format!("{e:#}"))?;
    }
    for file in [TRACE_FILE, DENSITY_FILE, VTK_FILE] {
        let read = |d: &tempfile::TempDir| std::fs::read(d.path().join(file));
        match (read(&dirs[0]), read(&dirs[1])) {
            (Ok(a), Ok(b)) if a == b => {}
            (Ok(_), Ok(_)) => return Err(format!("{file} differs")),
            (Err(e), _) | (_, Err(e)) => return Err(format!("{file}: {e}")),
        }
    }
    Ok(())
}

fn criterion_7(r: &mut Report, solved: &BTreeMap<String, Solved>) {
    let mut fails: Vec<String> = Vec::new();

    for (name, s) in solved {
        for run in &s.runs {
            if !run.is_monotone(10.0 * run.config.eig.tol) {
                fails.push(format!("{name} trace not monotone"));
            }
            if !run.density.satisfies_class(&s.class, s.plate.measure()) {
                fails.push(format!("{name} leaves the class"));
            }
        }
    }

    let plate = Plate::new(generate_rectangle(2.0, 1.0, 0.1).unwrap(), BcKind::Clamped).unwrap();
    let rho: Vec<f64> = plate.mesh().centroids().iter().map(|c| 1.0 + c[0] * c[1]).collect();
    let eig = EigenOptions::default();
    let base = plate.eigenpair(&rho, &eig, None).unwrap().lambda;
    for k in [0.5, 3.0, 10.0] {
        let scaled: Vec<f64> = rho.iter().map(|v| k * v).collect();
        let l = plate.eigenpair(&scaled, &eig, None).unwrap().lambda;
        let rel = (l * k - base).abs() / base;
        if rel > SCALING_REL {
            fails.push(format!("scaling k={k} rel {rel:.1e}"));
        }
    }

    for mesh in [fixture_square8(), fixture_hex10()] {
        let measure = element_measures(&mesh);
        let n = measure.len();
        for shift in 0..4 {
            let f = ScalarElementField::new((0..n).map(|k| ((k * 7 + shift * 3) % n) as f64 + 0.25 * shift as f64).collect()).unwrap();
            let a = measure.total_area;
            let class = RearrangementClass::new(vec![1.0, 3.0], vec![a / 2.0, a / 2.0]).unwrap();
            let (lo, hi) = enumerate_extremes(&f, &mesh, &class);
            let got_lo = bathtub_minimize(&f, &class, &measure).unwrap().weighted_integral(&f, &measure);
            let got_hi = bathtub_maximize(&f, &class, &measure).unwrap().weighted_integral(&f, &measure);
            if (got_lo - lo).abs() > 1e-12 * lo.abs().max(1.0) || (got_hi - hi).abs() > 1e-12 * hi.abs().max(1.0) {
                fails.push(format!("bathtub {got_lo}/{got_hi} vs enumeration {lo}/{hi} on {n} elements"));
            }
        }
    }

    let s = &solved["example1_disk_min"];
    let u2 = s.plate.u_squared(&s.best().eigenpair.u).unwrap();
    let top = u2.values().iter().cloned().fold(0.0, f64::max);
    let mut prev = f64::INFINITY;
    for i in 0..=200 {
        let d = distribution_function(&u2, s.plate.measure(), top * (i as f64 / 200.0 - 0.1));
        if d > prev {
            fails.push("distribution function increased".into());
            break;
        }
        prev = d;
    }

    if let Err(e) = replay_identical() {
        fails.push(format!("replay: {e}"));
    }

    let detail = if fails.is_empty() {
        format!(
            "monotone traces and class preservation on {} runs, scaling to {SCALING_REL:e}, bathtub equals enumeration on 8 and 10 elements, distribution function non-increasing, artifact replay byte-identical",
            solved.values().map(|s| s.runs.len()).sum::<usize>()
        )
    } else {
        fails.join("; ")
    };
    r.line(7, fails.is_empty(), format!("invariants: {detail}"));
}

// 6.28 is a reported eigenvalue, not 2π.
#[allow(clippy::approx_constant)]
fn main() -> ExitCode {
    // The libtest flags cargo passes are ignored.
    let mut r = Report { failed: 0 };
    criterion_1(&mut r);
    criterion_2(&mut r);
    criterion_3(&mut r);

    let t = Instant::now();
    let disks = ["example1_disk_max", "example1_disk_min", "example2_disk_max", "example2_disk_min"];
    let mut solved: BTreeMap<String, Solved> = disks
        .par_iter()
        .map(|n| (n.to_string(), solve(&load(n)).expect("disk run")))
        .collect();
    let disk_time = t.elapsed();
    disk_criterion(
        &mut r,
        4,
        "hinged disk",
        &[("example1_disk_max", 6.28), ("example1_disk_min", 1.24)],
        &solved,
        disk_time,
    );
    disk_criterion(
        &mut r,
        5,
        "clamped disk",
        &[("example2_disk_max", 6.51), ("example2_disk_min", 3.63)],
        &solved,
        disk_time,
    );

    let rest: Vec<(String, Solved)> = REFERENCE
        .par_iter()
        .map(|(n, _)| (n.to_string(), solve(&load(n)).expect("spec run")))
        .collect();
    solved.extend(rest);
    criterion_6(&mut r, &solved);
    criterion_7(&mut r, &solved);

    println!("acceptance: {} of 7 criteria passed", 7 - r.failed);
    if r.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
