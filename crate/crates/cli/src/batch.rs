//! Running a directory of specs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use crate::run::{execute, Outcome};
use crate::spec::{Overrides, RunSpec, OUT_DIR_ENV};

pub const SUMMARY_FILE: &str = "summary.csv";

/// One line of the batch summary.
#[derive(Debug, Clone)]
pub struct Row {
    pub name: String,
    pub file: PathBuf,
    pub result: std::result::Result<Outcome, String>,
}

/// `*.toml` files in `dir`, sorted by file name.
pub fn spec_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "toml") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Loads every spec in `dir`. Specs that fail to load are returned as
/// errors in place; duplicate names abort the whole batch.
pub fn load_all(dir: &Path, overrides: &Overrides) -> Result<Vec<(PathBuf, std::result::Result<RunSpec, String>)>> {
    let mut out = Vec::new();
    let mut seen: BTreeMap<String, PathBuf> = BTreeMap::new();
    for file in spec_files(dir)? {
        let loaded = RunSpec::load(&file).map(|mut s| {
            s.apply(overrides);
            s
        });
        let name = match &loaded {
            Ok(s) => s.name().to_string(),
            Err(_) => stem(&file),
        };
        if let Some(prev) = seen.insert(name.clone(), file.clone()) {
            bail!(
                "name collision: '{name}' is used by both {} and {}",
                prev.display(),
                file.display()
            );
        }
        out.push((file, loaded.map_err(|e| format!("{e:#}"))));
    }
    Ok(out)
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Runs the specs on `workers` threads (all cores when `None`); rows come
/// back in file order.
pub fn run_batch(specs: Vec<(PathBuf, std::result::Result<RunSpec, String>)>, workers: Option<usize>) -> Result<Vec<Row>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder.build().context("starting the worker pool")?;
    Ok(pool.install(|| {
        specs
            .into_par_iter()
            .map(|(file, spec)| match spec {
                Ok(spec) => {
                    let result = execute(&spec).map_err(|e| format!("{e:#}"));
                    if let Err(msg) = &result {
                        log::error!("{}: {msg}", spec.name());
                    }
                    Row {
                        name: spec.name().to_string(),
                        file,
                        result,
                    }
                }
                Err(msg) => Row {
                    name: stem(&file),
                    file,
                    result: Err(msg),
                },
            })
            .collect()
    }))
}

/// Where the summary goes: `$PLATEOPT_OUT_DIR` or `out`.
pub fn summary_root() -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(root) if !root.is_empty() => PathBuf::from(root),
        _ => PathBuf::from("out"),
    }
}

pub fn summary_csv(rows: &[Row]) -> String {
    let mut s = String::from("name,status,geometry,bc,direction,final_eigenvalue,termination,iterations,error\n");
    for r in rows {
        match &r.result {
            Ok(o) => writeln!(
                s,
                "{},ok,{},{},{},{:?},{},{},",
                r.name, o.geometry, o.bc, o.direction, o.final_eigenvalue, o.termination, o.iterations
            ),
            Err(e) => writeln!(s, "{},failed,,,,,,,\"{}\"", r.name, e.replace('"', "'").replace('\n', " ")),
        }
        .unwrap();
    }
    s
}

pub fn summary_table(rows: &[Row]) -> String {
    let mut s = format!(
        "{:<28} {:<20} {:<8} {:<9} {:>14}  {}\n",
        "name", "geometry", "bc", "direction", "eigenvalue", "termination"
    );
    for r in rows {
        match &r.result {
            Ok(o) => writeln!(
                s,
                "{:<28} {:<20} {:<8} {:<9} {:>14.6}  {}",
                r.name, o.geometry, o.bc, o.direction, o.final_eigenvalue, o.termination
            ),
            Err(e) => writeln!(s, "{:<28} FAILED: {e}", r.name),
        }
        .unwrap();
    }
    s
}
