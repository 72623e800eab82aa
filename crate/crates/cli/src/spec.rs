//! Run specification files.
//!
//! A spec is a TOML file with the sections `geometry`, `mesh`, `materials`,
//! `problem`, `optimizer` (optional) and `output` (optional):
//!
//! ```toml
//! name = "disk_max"
//!
//! [geometry]
//! kind = "disk"            # rectangle | disk | ellipse | crescent | rectangle_with_hole
//! radius = 1.4142135623730951
//!
//! [mesh]
//! h = 0.05                 # target edge length
//!
//! [materials]
//! densities = [1.0, 2.0]   # strictly increasing
//! areas = [3.14, 3.14]     # must add up to the plate area within 1%
//!
//! [problem]
//! bc = "hinged"            # or "clamped"
//! direction = "maximize"   # or "minimize"
//!
//! [optimizer]
//! seed = 0
//! restarts = 1
//!
//! [output]
//! dir = "out/disk_max"
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use plateopt_core::eig::EigenOptions;
use plateopt_core::fem::BcKind;
use plateopt_core::mesh::{
    crescent_area, generate_crescent, generate_disk, generate_ellipse, generate_rectangle,
    generate_rectangle_with_hole, TriMesh,
};
use plateopt_core::optimize::{Direction, InitKind, OptConfig, SwapSchedule};
use plateopt_core::rearrange::{RearrangementClass, Selection};
use serde::{Deserialize, Serialize};

/// Environment variable that replaces the output root.
pub const OUT_DIR_ENV: &str = "PLATEOPT_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Geometry {
    Rectangle {
        width: f64,
        height: f64,
    },
    Disk {
        radius: f64,
    },
    /// Semi-axes `a` (along x) and `b`.
    Ellipse {
        a: f64,
        b: f64,
    },
    /// Outer disk minus an inner disk whose centre sits `offset` to the
    /// right. With `area` set, the shape is scaled to that area.
    Crescent {
        outer_radius: f64,
        inner_radius: f64,
        offset: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        area: Option<f64>,
    },
    /// Rectangle with a centred rectangular hole.
    RectangleWithHole {
        width: f64,
        height: f64,
        hole_width: f64,
        hole_height: f64,
    },
}

impl Geometry {
    fn positive(&self) -> Vec<(&'static str, f64)> {
        match *self {
            Geometry::Rectangle { width, height } => vec![("width", width), ("height", height)],
            Geometry::Disk { radius } => vec![("radius", radius)],
            Geometry::Ellipse { a, b } => vec![("a", a), ("b", b)],
            Geometry::Crescent {
                outer_radius,
                inner_radius,
                offset,
                area,
            } => {
                let mut v = vec![("outer_radius", outer_radius), ("inner_radius", inner_radius), ("offset", offset)];
                if let Some(a) = area {
                    v.push(("area", a));
                }
                v
            }
            Geometry::RectangleWithHole {
                width,
                height,
                hole_width,
                hole_height,
            } => vec![
                ("width", width),
                ("height", height),
                ("hole_width", hole_width),
                ("hole_height", hole_height),
            ],
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Geometry::Rectangle { .. } => "rectangle",
            Geometry::Disk { .. } => "disk",
            Geometry::Ellipse { .. } => "ellipse",
            Geometry::Crescent { .. } => "crescent",
            Geometry::RectangleWithHole { .. } => "rectangle_with_hole",
        }
    }

    /// Exact area of the continuous shape.
    pub fn area(&self) -> f64 {
        use std::f64::consts::PI;
        match *self {
            Geometry::Rectangle { width, height } => width * height,
            Geometry::Disk { radius } => PI * radius * radius,
            Geometry::Ellipse { a, b } => PI * a * b,
            Geometry::Crescent {
                outer_radius,
                inner_radius,
                offset,
                area,
            } => area.unwrap_or_else(|| crescent_area(outer_radius, inner_radius, offset)),
            Geometry::RectangleWithHole {
                width,
                height,
                hole_width,
                hole_height,
            } => width * height - hole_width * hole_height,
        }
    }

    pub fn mesh(&self, h: f64) -> Result<TriMesh> {
        let mesh = match *self {
            Geometry::Rectangle { width, height } => generate_rectangle(width, height, h)?,
            Geometry::Disk { radius } => generate_disk(radius, h)?,
            Geometry::Ellipse { a, b } => generate_ellipse(a, b, h)?,
            Geometry::Crescent {
                outer_radius,
                inner_radius,
                offset,
                area,
            } => {
                let s = area.map_or(1.0, |a| (a / crescent_area(outer_radius, inner_radius, offset)).sqrt());
                generate_crescent(outer_radius * s, inner_radius * s, offset * s, h)?
            }
            Geometry::RectangleWithHole {
                width,
                height,
                hole_width,
                hole_height,
            } => generate_rectangle_with_hole(width, height, hole_width, hole_height, h)?,
        };
        Ok(mesh)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    /// Target edge length.
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialsSection {
    pub densities: Vec<f64>,
    pub areas: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub bc: BcKind,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionKind {
    Sort,
    Bisection,
}

/// Every field is optional; missing ones take the library defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_outer_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<InitKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectionKind>,
    /// Area tolerance for bisection; defaults to a quarter of the smallest element.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bisection_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub swap_initial_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub swap_shrink: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub swap_min_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub single_swap_trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polish: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eig_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eig_max_iter: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    /// Defaults to the file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub geometry: Geometry,
    pub mesh: MeshSection,
    pub materials: MaterialsSection,
    pub problem: ProblemSection,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub restarts: Option<usize>,
    pub tol_rho: Option<f64>,
}

impl RunSpec {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Reads and validates a spec; the name falls back to the file stem.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut spec = Self::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
        if spec.name.is_none() {
            spec.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        spec.validate().with_context(|| format!("validating {}", path.display()))?;
        Ok(spec)
    }

    pub fn name(&self) -> &str {
        self.name.as_deref().unwrap_or("run")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if o.seed.is_some() {
            self.optimizer.seed = o.seed;
        }
        if o.restarts.is_some() {
            self.optimizer.restarts = o.restarts;
        }
        if o.tol_rho.is_some() {
            self.optimizer.tol_rho = o.tol_rho;
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in self.geometry.positive() {
            ensure!(v.is_finite() && v > 0.0, "geometry.{field} must be positive, got {v}");
        }
        if let Geometry::RectangleWithHole {
            width,
            height,
            hole_width,
            hole_height,
        } = self.geometry
        {
            ensure!(
                hole_width < width && hole_height < height,
                "geometry: the hole ({hole_width} x {hole_height}) must fit inside the rectangle ({width} x {height})"
            );
        }
        ensure!(self.mesh.h.is_finite() && self.mesh.h > 0.0, "mesh.h must be positive, got {}", self.mesh.h);
        let m = &self.materials;
        ensure!(
            m.densities.len() == m.areas.len(),
            "materials: {} densities but {} areas",
            m.densities.len(),
            m.areas.len()
        );
        RearrangementClass::new(m.densities.clone(), m.areas.clone()).context("materials")?;
        let total: f64 = m.areas.iter().sum();
        let area = self.geometry.area();
        ensure!(
            (total - area).abs() <= 0.01 * area,
            "materials.areas sum to {total} but the {} has area {area:.6} (must agree within 1%)",
            self.geometry.kind()
        );
        let o = &self.optimizer;
        if let Some(r) = o.restarts {
            ensure!(r >= 1, "optimizer.restarts must be at least 1");
        }
        if let Some(t) = o.tol_rho {
            ensure!(t > 0.0, "optimizer.tol_rho must be positive, got {t}");
        }
        if let Some(t) = o.bisection_tol {
            ensure!(t > 0.0, "optimizer.bisection_tol must be positive, got {t}");
        }
        if o.bisection_tol.is_some() && o.selection != Some(SelectionKind::Bisection) {
            bail!("optimizer.bisection_tol is set but optimizer.selection is not \"bisection\"");
        }
        // the rest is checked by the library
        let cfg = self.opt_config(1.0)?;
        cfg.validate().context("optimizer")?;
        Ok(())
    }

    pub fn class(&self) -> Result<RearrangementClass> {
        Ok(RearrangementClass::new(
            self.materials.densities.clone(),
            self.materials.areas.clone(),
        )?)
    }

    pub fn restarts(&self) -> usize {
        self.optimizer.restarts.unwrap_or(1)
    }

    /// Library configuration; `min_element_area` sets the default bisection tolerance.
    pub fn opt_config(&self, min_element_area: f64) -> Result<OptConfig> {
        let o = &self.optimizer;
        let mut cfg = OptConfig::new(self.problem.direction, self.problem.bc);
        let defaults = SwapSchedule::default();
        cfg.tol_rho = o.tol_rho;
        cfg.max_outer_iters = o.max_outer_iters.unwrap_or(cfg.max_outer_iters);
        cfg.seed = o.seed.unwrap_or(0);
        cfg.init = o.init.unwrap_or(InitKind::Stripes);
        cfg.polish = o.polish.unwrap_or(true);
        cfg.selection = match o.selection.unwrap_or(SelectionKind::Sort) {
            SelectionKind::Sort => Selection::Sort,
            SelectionKind::Bisection => Selection::Bisection {
                tol: o.bisection_tol.unwrap_or(0.25 * min_element_area),
            },
        };
        cfg.swap = SwapSchedule {
            initial_fraction: o.swap_initial_fraction.unwrap_or(defaults.initial_fraction),
            shrink: o.swap_shrink.unwrap_or(defaults.shrink),
            min_fraction: o.swap_min_fraction,
            single_trials: o.single_swap_trials.unwrap_or(defaults.single_trials),
        };
        let eig = EigenOptions::default();
        cfg.eig = EigenOptions {
            tol: o.eig_tol.unwrap_or(eig.tol),
            max_iter: o.eig_max_iter.unwrap_or(eig.max_iter),
        };
        Ok(cfg)
    }

    /// `$PLATEOPT_OUT_DIR/<name>` when the variable is set, else
    /// `output.dir`, else `out/<name>`.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUT_DIR_ENV) {
            Some(root) if !root.is_empty() => PathBuf::from(root).join(self.name()),
            _ => self
                .output
                .dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("out").join(self.name())),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }
}
