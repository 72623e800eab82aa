//! Executing one spec and writing its artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use plateopt_core::error::Error as CoreError;
use plateopt_core::io::{write_density, write_trace_csv, write_vtk};
use plateopt_core::mesh::save_mesh;
use plateopt_core::optimize::{best_run, multi_start, run_metadata, Direction, OptRun, Plate, RunSummary, Termination};
use plateopt_core::fem::BcKind;
use plateopt_core::rearrange::RearrangementClass;
use serde::Serialize;

use crate::spec::RunSpec;

pub const MESH_FILE: &str = "mesh.txt";
pub const TRACE_FILE: &str = "trace.csv";
pub const DENSITY_FILE: &str = "density.txt";
pub const VTK_FILE: &str = "solution.vtk";
pub const METADATA_FILE: &str = "metadata.json";

#[derive(Debug, Clone, Serialize)]
pub struct StartRecord {
    pub seed: u64,
    pub final_eigenvalue: f64,
    pub iterations: usize,
    pub termination: Termination,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub name: String,
    pub geometry: String,
    pub mesh_h: f64,
    pub vertices: usize,
    pub triangles: usize,
    pub mesh_area: f64,
    pub starts: Vec<StartRecord>,
    pub best_start: usize,
    pub summary: RunSummary,
}

/// What a finished run reports back.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub name: String,
    pub dir: PathBuf,
    pub geometry: String,
    pub direction: Direction,
    pub bc: BcKind,
    pub final_eigenvalue: f64,
    pub termination: Termination,
    pub iterations: usize,
}

/// Everything an in-process caller may want to inspect after a run.
pub struct Solved {
    pub plate: Plate,
    pub class: RearrangementClass,
    pub runs: Vec<OptRun>,
    pub best: usize,
}

impl Solved {
    pub fn best(&self) -> &OptRun {
        &self.runs[self.best]
    }
}

/// Meshes the geometry and runs every start, without touching the disk.
pub fn solve(spec: &RunSpec) -> Result<Solved> {
    let mesh = spec.geometry.mesh(spec.mesh.h).context("meshing")?;
    solve_on(spec, mesh)
}

fn solve_on(spec: &RunSpec, mesh: plateopt_core::mesh::TriMesh) -> Result<Solved> {
    let plate = Plate::new(mesh, spec.problem.bc).context("assembling the plate operator")?;
    let class = spec.class()?.fitted_to(plate.measure().total_area);
    let cfg = spec.opt_config(plate.measure().min_area())?;
    let runs = multi_start(&plate, &class, &cfg, spec.restarts())?;
    let best = best_run(&runs).expect("at least one start");
    let best = runs.iter().position(|r| std::ptr::eq(r, best)).unwrap_or(0);
    Ok(Solved {
        plate,
        class,
        runs,
        best,
    })
}

fn write(dir: &Path, file: &str, contents: &str) -> Result<()> {
    let path = dir.join(file);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Runs a spec and writes mesh, trace, density, VTK and metadata into its
/// output directory. If the solver fails, whatever exists so far (the mesh
/// and any partial trace) is still written before the error is returned.
pub fn execute(spec: &RunSpec) -> Result<Outcome> {
    let dir = spec.output_dir();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mesh = spec.geometry.mesh(spec.mesh.h).context("meshing")?;
    save_mesh(&mesh, dir.join(MESH_FILE)).context("writing the mesh")?;
    let (vertices, triangles) = (mesh.num_vertices(), mesh.num_triangles());

    let solved = match solve_on(spec, mesh) {
        Ok(s) => s,
        Err(e) => {
            if let Some(CoreError::Optimization { trace, .. }) = e.downcast_ref::<CoreError>() {
                write(&dir, TRACE_FILE, &write_trace_csv(trace))?;
            }
            return Err(e.context(format!("run '{}' failed; partial artifacts in {}", spec.name(), dir.display())));
        }
    };
    let run = solved.best();
    let plate = &solved.plate;

    write(&dir, TRACE_FILE, &write_trace_csv(&run.trace))?;
    write(&dir, DENSITY_FILE, &write_density(&run.density, &solved.class))?;
    let u = plate.operator().vertex_values(&run.eigenpair.u);
    let title = format!("{} lambda={:?}", spec.name(), run.final_eigenvalue());
    write(&dir, VTK_FILE, &write_vtk(plate.mesh(), run.density.values(), &u, &title)?)?;

    let meta = Metadata {
        name: spec.name().to_string(),
        geometry: spec.geometry.kind().to_string(),
        mesh_h: spec.mesh.h,
        vertices,
        triangles,
        mesh_area: plate.measure().total_area,
        starts: solved
            .runs
            .iter()
            .map(|r| StartRecord {
                seed: r.config.seed,
                final_eigenvalue: r.final_eigenvalue(),
                iterations: r.iterations(),
                termination: r.termination,
            })
            .collect(),
        best_start: solved.best,
        summary: run_metadata(run, &solved.class),
    };
    write(&dir, METADATA_FILE, &serde_json::to_string_pretty(&meta)?)?;

    Ok(Outcome {
        name: spec.name().to_string(),
        dir,
        geometry: spec.geometry.kind().to_string(),
        direction: spec.problem.direction,
        bc: spec.problem.bc,
        final_eigenvalue: run.final_eigenvalue(),
        termination: run.termination,
        iterations: run.iterations(),
    })
}
