//! Ground truth for tests: brute-force optima on tiny meshes and closed-form
//! eigenvalues of homogeneous plates.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{assemble, assemble_mass, BcKind};
use crate::mesh::{element_measures, TriMesh};
use crate::optimize::Direction;
use crate::rearrange::{DensityField, RearrangementClass};

/// Refuse to enumerate more assignments than this.
pub const MAX_ASSIGNMENTS: u64 = 1_000_000;

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub optimum_value: f64,
    pub optimizer: DensityField,
    pub description: String,
    pub enumeration_count: u64,
}

/// Smallest eigenvalue of `K x = λ M x` from dense matrices, via the
/// symmetric problem `L⁻¹ K L⁻ᵀ` with `M = LLᵀ`.
pub fn dense_principal_eigenvalue(k: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<f64> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Factorization("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let li = l
        .try_inverse()
        .ok_or_else(|| Error::Factorization("singular Cholesky factor".into()))?;
    let c = &li * k * li.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

fn to_dmatrix(rows: Vec<Vec<f64>>) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// Material labels of every assignment whose areas are within half the
/// largest element of the (mesh-fitted) targets. With equal element areas
/// and targets that are whole multiples, this is the multinomial set.
fn feasible_assignments(class: &RearrangementClass, areas: &[f64], limit: u64) -> Result<Vec<Vec<u8>>> {
    let total: f64 = areas.iter().sum();
    let targets = class.fitted_to(total);
    let max_area = areas.iter().copied().fold(0.0, f64::max);
    let slack = 0.5 * max_area * (1.0 + 1e-9);
    let s = targets.target_areas();
    let m = class.m();
    if m > u8::MAX as usize {
        return Err(Error::InvalidArgument("too many materials for enumeration".into()));
    }

    struct Walk<'a> {
        areas: &'a [f64],
        s: &'a [f64],
        slack: f64,
        limit: u64,
        count: u64,
        cur: Vec<u8>,
        acc: Vec<f64>,
        out: Vec<Vec<u8>>,
    }

    impl Walk<'_> {
        fn go(&mut self, k: usize) -> bool {
            if k == self.areas.len() {
                if self.acc.iter().zip(self.s).all(|(a, s)| (a - s).abs() <= self.slack) {
                    self.count += 1;
                    if self.count > self.limit {
                        return false;
                    }
                    self.out.push(self.cur.clone());
                }
                return true;
            }
            // remaining area must still be able to fill every deficit
            let rest: f64 = self.areas[k..].iter().sum();
            let deficit: f64 = self.acc.iter().zip(self.s).map(|(a, s)| (s - self.slack - a).max(0.0)).sum();
            if deficit > rest + 1e-12 {
                return true;
            }
            for i in 0..self.s.len() {
                if self.acc[i] + self.areas[k] > self.s[i] + self.slack {
                    continue;
                }
                self.acc[i] += self.areas[k];
                self.cur.push(i as u8);
                let more = self.go(k + 1);
                self.cur.pop();
                self.acc[i] -= self.areas[k];
                if !more {
                    return false;
                }
            }
            true
        }
    }

    let mut w = Walk {
        areas,
        s,
        slack,
        limit,
        count: 0,
        cur: Vec::with_capacity(areas.len()),
        acc: vec![0.0; m],
        out: Vec::new(),
    };
    if !w.go(0) {
        return Err(Error::TooManyAssignments {
            count: w.count,
            limit,
        });
    }
    Ok(w.out)
}

/// Enumerates every area-feasible layout, solves each eigenproblem densely,
/// and returns the true discrete extremum. Ties go to the first layout in
/// enumeration order (lexicographic in the material labels).
pub fn exhaustive_extremum(
    mesh: &TriMesh,
    class: &RearrangementClass,
    bc: BcKind,
    direction: Direction,
) -> Result<OracleResult> {
    let measure = element_measures(mesh);
    class.check_against(&measure)?;
    let assignments = feasible_assignments(class, &measure.areas, MAX_ASSIGNMENTS)?;
    if assignments.is_empty() {
        return Err(Error::InvalidArgument("no assignment meets the area targets".into()));
    }
    let op = assemble(mesh, bc)?;
    let k = to_dmatrix(op.stiffness.to_dense());
    let c = class.densities();

    let values: Vec<f64> = assignments
        .par_iter()
        .map(|a| {
            let rho: Vec<f64> = a.iter().map(|&i| c[i as usize]).collect();
            let mass = assemble_mass(&op, &rho)?;
            dense_principal_eigenvalue(&k, &to_dmatrix(mass.matrix.to_dense()))
        })
        .collect::<Result<_>>()?;

    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        let better = match direction {
            Direction::Minimize => *v < values[best],
            Direction::Maximize => *v > values[best],
        };
        if better {
            best = i;
        }
    }
    let materials = assignments[best].iter().map(|&i| i as usize).collect();
    let optimizer = DensityField::from_materials(class, materials, &measure)?;
    Ok(OracleResult {
        optimum_value: values[best],
        optimizer,
        description: format!(
            "{direction} {bc} plate, {} elements, densities {:?}",
            mesh.num_triangles(),
            class.densities()
        ),
        enumeration_count: assignments.len() as u64,
    })
}

/// Number of area-feasible layouts, without solving anything.
pub fn count_assignments(mesh: &TriMesh, class: &RearrangementClass) -> Result<u64> {
    let measure = element_measures(mesh);
    Ok(feasible_assignments(class, &measure.areas, MAX_ASSIGNMENTS)?.len() as u64)
}

/// Unit square cut into a 2×2 grid, every diagonal through the centre.
/// Eight congruent triangles.
pub fn fixture_square8() -> TriMesh {
    let mut v = Vec::new();
    for j in 0..3 {
        for i in 0..3 {
            v.push([i as f64 * 0.5, j as f64 * 0.5]);
        }
    }
    let id = |i: usize, j: usize| j * 3 + i;
    let c = id(1, 1);
    let ring = [id(0, 0), id(1, 0), id(2, 0), id(2, 1), id(2, 2), id(1, 2), id(0, 2), id(0, 1)];
    let t = (0..8).map(|k| [c, ring[k], ring[(k + 1) % 8]]).collect();
    TriMesh::new(v, t).expect("fixture mesh is valid")
}

/// Two unit hexagons of equilateral triangles sharing two triangles:
/// ten elements and two interior vertices.
pub fn fixture_hex10() -> TriMesh {
    let h = 3f64.sqrt() / 2.0;
    let v = vec![
        [0.0, 0.0],  // 0 centre of the left hexagon
        [1.0, 0.0],  // 1 centre of the right hexagon
        [0.5, h],    // 2
        [-0.5, h],   // 3
        [-1.0, 0.0], // 4
        [-0.5, -h],  // 5
        [0.5, -h],   // 6
        [2.0, 0.0],  // 7
        [1.5, h],    // 8
        [1.5, -h],   // 9
    ];
    let t = vec![
        [0, 1, 2],
        [0, 2, 3],
        [0, 3, 4],
        [0, 4, 5],
        [0, 5, 6],
        [0, 6, 1],
        [1, 7, 8],
        [1, 8, 2],
        [1, 6, 9],
        [1, 9, 7],
    ];
    TriMesh::new(v, t).expect("fixture mesh is valid")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Disk { radius: f64 },
    Rectangle { width: f64, height: f64 },
    /// Anything without a closed form; kept so callers can ask and get a
    /// clean error.
    Other,
}

/// Power series for `J_n` (`modified = false`) or `I_n` (`modified = true`).
/// Accurate for the moderate arguments used here (|x| ≲ 10).
pub fn bessel_series(n: u32, x: f64, modified: bool) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powi(n as i32) / (1..=n).map(f64::from).product::<f64>();
    let mut sum = term;
    let q = half * half;
    for k in 1..200u32 {
        term *= q / (f64::from(k) * f64::from(k + n));
        if !modified {
            term = -term;
        }
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> Result<f64> {
    let (mut fa, fb) = (f(a), f(b));
    if fa * fb > 0.0 {
        return Err(Error::InvalidArgument(format!("no sign change on [{a}, {b}]")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fa * fm < 0.0 {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
        if b - a <= 4.0 * f64::EPSILON * b.abs() {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

/// First zero of `J_0`, ≈ 2.404826.
pub fn bessel_j0_first_zero() -> f64 {
    bisect(|x| bessel_series(0, x, false), 2.0, 3.0).expect("J0 changes sign on [2, 3]")
}

/// First root of `J_0(k) I_1(k) + I_0(k) J_1(k) = 0`, ≈ 3.19622.
pub fn clamped_disk_root() -> f64 {
    bisect(
        |k| bessel_series(0, k, false) * bessel_series(1, k, true) + bessel_series(0, k, true) * bessel_series(1, k, false),
        2.5,
        3.5,
    )
    .expect("clamped characteristic function changes sign on [2.5, 3.5]")
}

/// Principal eigenvalue of a homogeneous plate with density `c`.
pub fn analytic_homogeneous(domain: Domain, bc: BcKind, c: f64) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("density must be positive, got {c}")));
    }
    match (domain, bc) {
        (Domain::Disk { radius }, BcKind::Hinged) if radius > 0.0 => {
            let j = bessel_j0_first_zero();
            Ok((j * j / (radius * radius)).powi(2) / c)
        }
        (Domain::Disk { radius }, BcKind::Clamped) if radius > 0.0 => Ok(clamped_disk_root().powi(4) / (radius.powi(4) * c)),
        (Domain::Rectangle { width, height }, BcKind::Hinged) if width > 0.0 && height > 0.0 => {
            let pi2 = std::f64::consts::PI.powi(2);
            Ok((pi2 * (1.0 / (width * width) + 1.0 / (height * height))).powi(2) / c)
        }
        (Domain::Rectangle { .. }, BcKind::Clamped) => Err(Error::InvalidArgument(
            "the clamped rectangle has no closed-form eigenvalue".into(),
        )),
        (Domain::Other, _) => Err(Error::InvalidArgument("no closed-form eigenvalue for this domain".into())),
        _ => Err(Error::InvalidArgument(format!("invalid domain dimensions: {domain:?}"))),
    }
}
