use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use plateopt_cli::batch::{load_all, run_batch, summary_csv, summary_root, summary_table, SUMMARY_FILE};
use plateopt_cli::run::execute;
use plateopt_cli::spec::{Overrides, RunSpec};

/// Optimize the layout of materials on a vibrating plate.
#[derive(Parser)]
#[command(name = "plateopt", version)]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single spec file.
    Run {
        spec: PathBuf,
        #[command(flatten)]
        opts: Common,
    },
    /// Run every *.toml spec in a directory and print a summary.
    Batch {
        dir: PathBuf,
        #[command(flatten)]
        opts: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Override the optimizer seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Independent starts per spec (seeds seed, seed+1, ...).
    #[arg(long)]
    restarts: Option<usize>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Validate and print the effective configuration; write nothing.
    #[arg(long)]
    dry_run: bool,
    /// Override the L2 stopping tolerance on density changes.
    #[arg(long)]
    tol_rho: Option<f64>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            restarts: self.restarts,
            tol_rho: self.tol_rho,
        }
    }
}

fn run_one(spec: PathBuf, opts: Common) -> Result<()> {
    let mut s = RunSpec::load(&spec)?;
    s.apply(&opts.overrides());
    s.validate()?;
    if opts.dry_run {
        println!("# effective spec; output would go to {}", s.output_dir().display());
        print!("{}", s.to_toml()?);
        return Ok(());
    }
    let run = || execute(&s);
    let outcome = match opts.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .context("starting the worker pool")?
            .install(run),
        None => run(),
    }?;
    println!(
        "{}: {} {} eigenvalue {:.6} after {} iterations ({}); artifacts in {}",
        outcome.name,
        outcome.bc,
        outcome.direction,
        outcome.final_eigenvalue,
        outcome.iterations,
        outcome.termination,
        outcome.dir.display()
    );
    Ok(())
}

/// Returns whether every spec succeeded.
fn run_dir(dir: PathBuf, opts: Common) -> Result<bool> {
    let specs = load_all(&dir, &opts.overrides())?;
    if opts.dry_run {
        for (file, spec) in &specs {
            match spec {
                Ok(s) => println!("{}: ok -> {}", file.display(), s.output_dir().display()),
                Err(e) => println!("{}: invalid: {e}", file.display()),
            }
        }
        return Ok(specs.iter().all(|(_, s)| s.is_ok()));
    }
    let rows = run_batch(specs, opts.workers)?;
    let root = summary_root();
    std::fs::create_dir_all(&root).with_context(|| format!("creating {}", root.display()))?;
    let path = root.join(SUMMARY_FILE);
    std::fs::write(&path, summary_csv(&rows)).with_context(|| format!("writing {}", path.display()))?;
    print!("{}", summary_table(&rows));
    println!("summary written to {}", path.display());
    Ok(rows.iter().all(|r| r.result.is_ok()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Run { spec, opts } => run_one(spec, opts).map(|_| true),
        Command::Batch { dir, opts } => run_dir(dir, opts),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
