//! Outer iterations for the density optimization.
//!
//! Minimization replaces `ρ_n` by the layout that maximizes `∫ρ u_n²`, which
//! can only lower the Rayleigh quotient. Maximization goes the other way
//! (minimize `∫ρ u_n²`), but that step may overshoot, so candidates are
//! accepted only if the eigenvalue actually rises; otherwise small
//! exchanges of material are tried at shrinking scales.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eig::{EigenOptions, EigenPair, EigenSolver};
use crate::error::{Error, Result};
use crate::fem::{assemble, assemble_mass, BcKind, DiscreteOperator};
use crate::mesh::{element_measures, ElementMeasure, TriMesh};
use crate::rearrange::{
    bathtub_levels, l2_distance, partial_swap, single_swaps, BathtubMode, DensityField, RearrangementClass,
    ScalarElementField, Selection, uphill_single_swaps,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Minimize,
    Maximize,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Minimize => "minimize",
            Direction::Maximize => "maximize",
        })
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "minimize" | "min" => Ok(Direction::Minimize),
            "maximize" | "max" => Ok(Direction::Maximize),
            other => Err(Error::InvalidArgument(format!("unknown direction '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    /// Vertical stripes, lightest material on the left.
    Stripes,
    /// Seeded random layout.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapSchedule {
    /// First swap area as a fraction of `|Ω|`.
    pub initial_fraction: f64,
    pub shrink: f64,
    /// Smallest swap area as a fraction of `|Ω|`; `None` means one element.
    pub min_fraction: Option<f64>,
    /// Single-element exchanges tried once the smallest scale fails.
    pub single_trials: usize,
}

impl Default for SwapSchedule {
    fn default() -> Self {
        Self {
            initial_fraction: 0.05,
            shrink: 0.5,
            min_fraction: None,
            single_trials: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptConfig {
    pub direction: Direction,
    pub bc_kind: BcKind,
    /// Stop once a bathtub step moves `ρ` by less than this in `L²`.
    /// `None` picks one elementary swap: `(c_m − c_1)·√(2·max |T|)`.
    pub tol_rho: Option<f64>,
    pub max_outer_iters: usize,
    pub swap: SwapSchedule,
    pub eig: EigenOptions,
    pub seed: u64,
    pub selection: Selection,
    pub init: InitKind,
    /// Minimization only: at a bathtub fixed point, try single-element
    /// exchanges and keep one if it lowers the eigenvalue.
    pub polish: bool,
}

impl OptConfig {
    pub fn new(direction: Direction, bc_kind: BcKind) -> Self {
        Self {
            direction,
            bc_kind,
            tol_rho: None,
            max_outer_iters: 200,
            swap: SwapSchedule::default(),
            eig: EigenOptions::default(),
            seed: 0,
            selection: Selection::Sort,
            init: InitKind::Stripes,
            polish: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.tol_rho {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidArgument(format!("tol_rho must be positive, got {t}")));
            }
        }
        let s = &self.swap;
        if !(s.shrink > 0.0 && s.shrink < 1.0) {
            return Err(Error::InvalidArgument(format!("swap shrink factor must lie in (0, 1), got {}", s.shrink)));
        }
        if !(s.initial_fraction > 0.0 && s.initial_fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "initial swap fraction must lie in (0, 1], got {}",
                s.initial_fraction
            )));
        }
        if let Some(f) = s.min_fraction {
            if !(f > 0.0 && f <= s.initial_fraction) {
                return Err(Error::InvalidArgument(format!(
                    "minimum swap fraction must lie in (0, initial], got {f}"
                )));
            }
        }
        if let Selection::Bisection { tol } = self.selection {
            if !(tol > 0.0) {
                return Err(Error::InvalidArgument(format!("bisection tolerance must be positive, got {tol}")));
            }
        }
        if self.max_outer_iters == 0 {
            return Err(Error::InvalidArgument("max_outer_iters must be at least 1".into()));
        }
        self.eig.validate()
    }

    pub fn effective_tol_rho(&self, class: &RearrangementClass, measure: &ElementMeasure) -> f64 {
        self.tol_rho.unwrap_or_else(|| {
            let c = class.densities();
            (c[c.len() - 1] - c[0]) * (2.0 * measure.max_area()).sqrt()
        })
    }
}

/// Relative gain an exchange or overshooting step must show before it is
/// accepted; keeps round-off from driving walks between symmetric layouts.
const ACCEPT_MARGIN: f64 = 1e-12;

fn rises(new: f64, old: f64) -> bool {
    new > old * (1.0 + ACCEPT_MARGIN)
}

fn falls(new: f64, old: f64) -> bool {
    new < old * (1.0 - ACCEPT_MARGIN)
}

/// A meshed plate with its stiffness factorized once.
pub struct Plate {
    mesh: TriMesh,
    op: DiscreteOperator,
    solver: EigenSolver,
    measure: ElementMeasure,
}

impl Plate {
    pub fn new(mesh: TriMesh, bc: BcKind) -> Result<Self> {
        let op = assemble(&mesh, bc)?;
        let solver = EigenSolver::new(&op)?;
        let measure = element_measures(&mesh);
        Ok(Self {
            mesh,
            op,
            solver,
            measure,
        })
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn operator(&self) -> &DiscreteOperator {
        &self.op
    }

    pub fn measure(&self) -> &ElementMeasure {
        &self.measure
    }

    pub fn bc_kind(&self) -> BcKind {
        self.op.bc_kind
    }

    pub fn eigenpair(&self, rho: &[f64], opts: &EigenOptions, warm: Option<&[f64]>) -> Result<EigenPair> {
        let mass = assemble_mass(&self.op, rho)?;
        self.solver.solve(&mass, opts, warm)
    }

    /// Element means of `u²`.
    pub fn u_squared(&self, u: &[f64]) -> Result<ScalarElementField> {
        ScalarElementField::new(self.op.element_mean_square(u).into_iter().map(|v| v.max(0.0)).collect())
    }

    pub fn initial_density(&self, class: &RearrangementClass, init: InitKind, seed: u64) -> Result<DensityField> {
        match init {
            InitKind::Stripes => DensityField::stripes(class, &self.mesh, &self.measure),
            InitKind::Random => DensityField::random(class, &self.measure, seed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Bathtub,
    Swap,
    Stop,
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepKind::Bathtub => "bathtub",
            StepKind::Swap => "swap",
            StepKind::Stop => "stop",
        })
    }
}

/// One outer iteration. Accepted steps carry the eigenvalue of the new
/// density; the final `Stop` record repeats the eigenvalue of the returned
/// density and the size of the last (rejected or null) proposal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub eigenvalue: f64,
    pub delta_rho_l2: f64,
    pub step_kind: StepKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// A bathtub step moved `ρ` by less than the tolerance.
    Tolerance,
    /// The bathtub step reproduced the current density.
    FixedPoint,
    MaxIterations,
    /// No exchange down to single elements raised the eigenvalue.
    SwapExhausted,
    /// A minimization step would have raised the eigenvalue (possible only
    /// through area quantization); the current density is kept.
    NoImprovement,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Tolerance => "tolerance",
            Termination::FixedPoint => "fixed-point",
            Termination::MaxIterations => "max-iterations",
            Termination::SwapExhausted => "swap-exhausted",
            Termination::NoImprovement => "no-improvement",
        })
    }
}

#[derive(Debug, Clone)]
pub struct OptRun {
    pub config: OptConfig,
    pub initial_eigenvalue: f64,
    pub trace: Vec<IterRecord>,
    pub density: DensityField,
    pub eigenpair: EigenPair,
    pub termination: Termination,
    pub wall_time: Duration,
}

impl OptRun {
    pub fn final_eigenvalue(&self) -> f64 {
        self.eigenpair.lambda
    }

    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    /// Eigenvalue sequence: initial value, then every record.
    pub fn eigenvalues(&self) -> Vec<f64> {
        std::iter::once(self.initial_eigenvalue)
            .chain(self.trace.iter().map(|r| r.eigenvalue))
            .collect()
    }

    /// Non-increasing (minimize) or non-decreasing (maximize) up to `slack`
    /// relative to the eigenvalue.
    pub fn is_monotone(&self, slack: f64) -> bool {
        let v = self.eigenvalues();
        v.windows(2).all(|w| {
            let s = slack * w[0].abs();
            match self.config.direction {
                Direction::Minimize => w[1] <= w[0] + s,
                Direction::Maximize => w[1] >= w[0] - s,
            }
        })
    }
}

struct Tracker {
    trace: Vec<IterRecord>,
}

impl Tracker {
    fn push(&mut self, iter: usize, eigenvalue: f64, delta: f64, kind: StepKind) {
        log::debug!("iter {iter}: λ = {eigenvalue:.10} |δρ| = {delta:.3e} ({kind})");
        self.trace.push(IterRecord {
            iter,
            eigenvalue,
            delta_rho_l2: delta,
            step_kind: kind,
        });
    }

    fn fail(self, iteration: usize, source: Error) -> Error {
        Error::Optimization {
            iteration,
            source: Box::new(source),
            trace: self.trace,
        }
    }
}

fn check_inputs(plate: &Plate, class: &RearrangementClass, rho0: &DensityField, cfg: &OptConfig, want: Direction) -> Result<()> {
    cfg.validate()?;
    if cfg.direction != want {
        return Err(Error::InvalidArgument(format!("config direction is {}, expected {want}", cfg.direction)));
    }
    if cfg.bc_kind != plate.bc_kind() {
        return Err(Error::InvalidArgument(format!(
            "config boundary condition is {} but the plate was assembled as {}",
            cfg.bc_kind,
            plate.bc_kind()
        )));
    }
    class.check_against(plate.measure())?;
    if rho0.len() != plate.measure().len() {
        return Err(Error::InvalidArgument(format!(
            "initial density has {} values for {} elements",
            rho0.len(),
            plate.measure().len()
        )));
    }
    if !rho0.satisfies_class(class, plate.measure()) {
        return Err(Error::InvalidArgument(format!(
            "initial density areas {:?} are not within one element of the targets",
            rho0.achieved_areas()
        )));
    }
    Ok(())
}

/// Lowers the principal eigenvalue by repeated bathtub steps.
pub fn minimize_eigenvalue(plate: &Plate, class: &RearrangementClass, rho0: &DensityField, cfg: &OptConfig) -> Result<OptRun> {
    check_inputs(plate, class, rho0, cfg, Direction::Minimize)?;
    let start = Instant::now();
    let measure = plate.measure();
    let tol_rho = cfg.effective_tol_rho(class, measure);
    let mut tr = Tracker { trace: Vec::new() };

    let mut rho = rho0.clone();
    let mut pair = plate.eigenpair(rho.values(), &cfg.eig, None).map_err(|e| tr_fail(0, e))?;
    let initial_eigenvalue = pair.lambda;
    let mut termination = Termination::MaxIterations;
    let mut last_delta = 0.0;

    for n in 1..=cfg.max_outer_iters {
        let f = match plate.u_squared(&pair.u) {
            Ok(f) => f,
            Err(e) => return Err(tr.fail(n, e)),
        };
        let cand = match bathtub_levels(&f, class, measure, BathtubMode::Max, cfg.selection) {
            Ok(l) => l.field,
            Err(e) => return Err(tr.fail(n, e)),
        };
        let stuck = if cand.materials() == rho.materials() {
            last_delta = 0.0;
            Some(Termination::FixedPoint)
        } else {
            let delta = l2_distance(rho.values(), cand.values(), measure)?;
            let next = match plate.eigenpair(cand.values(), &cfg.eig, Some(&pair.u)) {
                Ok(p) => p,
                Err(e) => return Err(tr.fail(n, e)),
            };
            last_delta = delta;
            if next.lambda > pair.lambda {
                log::info!(
                    "bathtub step would raise λ from {} to {}; keeping the current density",
                    pair.lambda,
                    next.lambda
                );
                Some(Termination::NoImprovement)
            } else {
                rho = cand;
                pair = next;
                tr.push(n, pair.lambda, delta, StepKind::Bathtub);
                if delta < tol_rho {
                    termination = Termination::Tolerance;
                    break;
                }
                None
            }
        };
        let Some(reason) = stuck else { continue };
        if cfg.polish {
            let swaps = match uphill_single_swaps(&rho, class, &f, measure, cfg.swap.single_trials) {
                Ok(s) => s,
                Err(e) => return Err(tr.fail(n, e)),
            };
            let mut moved = false;
            for sw in swaps {
                let p = match plate.eigenpair(sw.field.values(), &cfg.eig, Some(&pair.u)) {
                    Ok(p) => p,
                    Err(e) => return Err(tr.fail(n, e)),
                };
                if falls(p.lambda, pair.lambda) {
                    rho = sw.field;
                    pair = p;
                    last_delta = sw.delta_l2;
                    tr.push(n, pair.lambda, sw.delta_l2, StepKind::Swap);
                    moved = true;
                    break;
                }
            }
            if moved {
                continue;
            }
        }
        termination = reason;
        break;
    }
    finish(tr, cfg, initial_eigenvalue, rho, pair, termination, last_delta, start)
}

fn tr_fail(iteration: usize, source: Error) -> Error {
    Error::Optimization {
        iteration,
        source: Box::new(source),
        trace: Vec::new(),
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    mut tr: Tracker,
    cfg: &OptConfig,
    initial_eigenvalue: f64,
    density: DensityField,
    eigenpair: EigenPair,
    termination: Termination,
    last_delta: f64,
    start: Instant,
) -> Result<OptRun> {
    let iter = tr.trace.len() + 1;
    tr.push(iter, eigenpair.lambda, last_delta, StepKind::Stop);
    log::info!(
        "{} finished after {} iterations: λ = {:.6} ({termination})",
        cfg.direction,
        tr.trace.len(),
        eigenpair.lambda
    );
    Ok(OptRun {
        config: *cfg,
        initial_eigenvalue,
        trace: tr.trace,
        density,
        eigenpair,
        termination,
        wall_time: start.elapsed(),
    })
}

/// Raises the principal eigenvalue: bathtub candidates with
/// acceptance-rejection, backed by partial swaps at shrinking scales.
pub fn maximize_eigenvalue(plate: &Plate, class: &RearrangementClass, rho0: &DensityField, cfg: &OptConfig) -> Result<OptRun> {
    check_inputs(plate, class, rho0, cfg, Direction::Maximize)?;
    let start = Instant::now();
    let measure = plate.measure();
    let tol_rho = cfg.effective_tol_rho(class, measure);
    let total = measure.total_area;
    let min_swap = cfg
        .swap
        .min_fraction
        .map_or(measure.min_area(), |f| f * total);
    let mut tr = Tracker { trace: Vec::new() };

    let mut rho = rho0.clone();
    let mut pair = plate.eigenpair(rho.values(), &cfg.eig, None).map_err(|e| tr_fail(0, e))?;
    let initial_eigenvalue = pair.lambda;
    let mut termination = Termination::MaxIterations;
    let mut last_delta = 0.0;

    let eval = |field: &DensityField, warm: &[f64]| plate.eigenpair(field.values(), &cfg.eig, Some(warm));

    'outer: for n in 1..=cfg.max_outer_iters {
        let f = match plate.u_squared(&pair.u) {
            Ok(f) => f,
            Err(e) => return Err(tr.fail(n, e)),
        };
        let cand = match bathtub_levels(&f, class, measure, BathtubMode::Min, cfg.selection) {
            Ok(l) => l.field,
            Err(e) => return Err(tr.fail(n, e)),
        };
        if cand.materials() == rho.materials() {
            last_delta = 0.0;
            termination = Termination::FixedPoint;
            break;
        }
        let delta = l2_distance(rho.values(), cand.values(), measure)?;
        let next = match eval(&cand, &pair.u) {
            Ok(p) => p,
            Err(e) => return Err(tr.fail(n, e)),
        };
        if rises(next.lambda, pair.lambda) {
            rho = cand;
            pair = next;
            tr.push(n, pair.lambda, delta, StepKind::Bathtub);
            last_delta = delta;
            if delta < tol_rho {
                termination = Termination::Tolerance;
                break;
            }
            continue;
        }
        last_delta = delta;

        // The full step overshot; exchange smaller pieces until λ rises.
        let mut area = cfg.swap.initial_fraction * total;
        loop {
            let seed = cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(n as u64);
            match partial_swap(&rho, class, &f, measure, area, seed) {
                Ok(sw) => {
                    let p = match eval(&sw.field, &pair.u) {
                        Ok(p) => p,
                        Err(e) => return Err(tr.fail(n, e)),
                    };
                    if rises(p.lambda, pair.lambda) {
                        rho = sw.field;
                        pair = p;
                        tr.push(n, pair.lambda, sw.delta_l2, StepKind::Swap);
                        last_delta = sw.delta_l2;
                        continue 'outer;
                    }
                }
                Err(Error::NoSwapAvailable) => break,
                Err(e) => return Err(tr.fail(n, e)),
            }
            if area <= min_swap {
                break;
            }
            area = (area * cfg.swap.shrink).max(min_swap);
        }
        let singles = match single_swaps(&rho, class, &f, measure, cfg.swap.single_trials) {
            Ok(s) => s,
            Err(e) => return Err(tr.fail(n, e)),
        };
        for sw in singles {
            let p = match eval(&sw.field, &pair.u) {
                Ok(p) => p,
                Err(e) => return Err(tr.fail(n, e)),
            };
            if rises(p.lambda, pair.lambda) {
                rho = sw.field;
                pair = p;
                tr.push(n, pair.lambda, sw.delta_l2, StepKind::Swap);
                last_delta = sw.delta_l2;
                continue 'outer;
            }
        }
        termination = Termination::SwapExhausted;
        break;
    }
    finish(tr, cfg, initial_eigenvalue, rho, pair, termination, last_delta, start)
}

pub fn optimize(plate: &Plate, class: &RearrangementClass, rho0: &DensityField, cfg: &OptConfig) -> Result<OptRun> {
    match cfg.direction {
        Direction::Minimize => minimize_eigenvalue(plate, class, rho0, cfg),
        Direction::Maximize => maximize_eigenvalue(plate, class, rho0, cfg),
    }
}

/// Runs `restarts` independent starts in parallel. Start `r` uses seed
/// `cfg.seed + r`; the first start uses `cfg.init`, the others are random.
/// Results come back in start order.
pub fn multi_start(plate: &Plate, class: &RearrangementClass, cfg: &OptConfig, restarts: usize) -> Result<Vec<OptRun>> {
    if restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be at least 1".into()));
    }
    (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut c = *cfg;
            c.seed = cfg.seed.wrapping_add(r as u64);
            let init = if r == 0 { cfg.init } else { InitKind::Random };
            let rho0 = plate.initial_density(class, init, c.seed)?;
            optimize(plate, class, &rho0, &c)
        })
        .collect()
}

/// Best run for the configured direction; ties go to the earliest start.
pub fn best_run(runs: &[OptRun]) -> Option<&OptRun> {
    runs.iter().reduce(|best, r| {
        let better = match r.config.direction {
            Direction::Minimize => r.final_eigenvalue() < best.final_eigenvalue(),
            Direction::Maximize => r.final_eigenvalue() > best.final_eigenvalue(),
        };
        if better {
            r
        } else {
            best
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub direction: Direction,
    pub bc_kind: BcKind,
    pub termination: Termination,
    pub iterations: usize,
    pub initial_eigenvalue: f64,
    pub final_eigenvalue: f64,
    pub eigen_residual: f64,
    pub near_degenerate: bool,
    pub densities: Vec<f64>,
    pub target_areas: Vec<f64>,
    pub achieved_areas: Vec<f64>,
    pub config: OptConfig,
    pub wall_time_s: f64,
}

pub fn run_metadata(run: &OptRun, class: &RearrangementClass) -> RunSummary {
    RunSummary {
        direction: run.config.direction,
        bc_kind: run.config.bc_kind,
        termination: run.termination,
        iterations: run.iterations(),
        initial_eigenvalue: run.initial_eigenvalue,
        final_eigenvalue: run.final_eigenvalue(),
        eigen_residual: run.eigenpair.residual,
        near_degenerate: run.eigenpair.near_degenerate,
        densities: class.densities().to_vec(),
        target_areas: class.target_areas().to_vec(),
        achieved_areas: run.density.achieved_areas().to_vec(),
        config: run.config,
        wall_time_s: run.wall_time.as_secs_f64(),
    }
}
