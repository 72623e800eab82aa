//! Principal eigenpair of `K u = λ M u` by inverse iteration.
//!
//! `K` is factorized once per geometry and boundary condition; only `M`
//! changes between optimization steps, so every later solve costs a few
//! triangular sweeps.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{DiscreteOperator, MassMatrix};
use crate::sparse::{CsrMatrix, SkylineCholesky};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    /// Bound on `‖Ku − λMu‖ / ‖Ku‖`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 500 }
    }
}

impl EigenOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol <= 1e-2) {
            return Err(Error::InvalidArgument(format!("eigen tolerance {} outside (0, 1e-2]", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("eigen max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub lambda: f64,
    /// Coefficients over the active DOFs, `uᵀMu = 1`, sign fixed so that `∫ρu ≥ 0`.
    pub u: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub m_normalized: bool,
    /// Set when the block phase found the next Ritz value within 1e-8 (relative).
    pub near_degenerate: bool,
}

const DEGENERATE_GAP: f64 = 1e-8;
const SINGLE_VECTOR_STEPS: usize = 40;
const BLOCK: usize = 4;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Factorized stiffness, reusable across mass matrices.
#[derive(Debug, Clone)]
pub struct EigenSolver {
    stiffness: CsrMatrix,
    factor: SkylineCholesky,
}

impl EigenSolver {
    pub fn new(op: &DiscreteOperator) -> Result<Self> {
        Self::from_matrix(op.stiffness.clone())
    }

    pub fn from_matrix(stiffness: CsrMatrix) -> Result<Self> {
        let factor = SkylineCholesky::factor(&stiffness)?;
        Ok(Self { stiffness, factor })
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn dim(&self) -> usize {
        self.stiffness.dim()
    }

    /// Relative residual `‖Ku − λMu‖ / ‖Ku‖`.
    pub fn residual(&self, mass: &CsrMatrix, u: &[f64], lambda: f64) -> f64 {
        let ku = self.stiffness.mul_vec(u);
        let mu = mass.mul_vec(u);
        let r: Vec<f64> = ku.iter().zip(&mu).map(|(k, m)| k - lambda * m).collect();
        norm(&r) / norm(&ku)
    }

    pub fn solve(&self, mass: &MassMatrix, opts: &EigenOptions, warm: Option<&[f64]>) -> Result<EigenPair> {
        opts.validate()?;
        let n = self.dim();
        let m = &mass.matrix;
        if m.dim() != n {
            return Err(Error::InvalidArgument(format!(
                "mass matrix is {} x {}, stiffness is {n} x {n}",
                m.dim(),
                m.dim()
            )));
        }
        let mut x: Vec<f64> = match warm {
            Some(w) if w.len() == n && w.iter().any(|v| *v != 0.0) => w.to_vec(),
            _ => vec![1.0; n],
        };
        let xmx = m.bilinear(&x, &x);
        if !(xmx > 0.0) {
            return Err(Error::InvalidArgument("mass matrix vanishes on the start vector".into()));
        }
        x.iter_mut().for_each(|v| *v /= xmx.sqrt());

        let single = opts.max_iter.min(SINGLE_VECTOR_STEPS);
        let mut lambda = f64::NAN;
        let mut residual = f64::INFINITY;
        for it in 1..=single {
            let y = m.mul_vec(&x);
            let z = self.factor.solve(&y);
            let mz = m.mul_vec(&z);
            let zmz = dot(&z, &mz);
            if !(zmz > 0.0) || !zmz.is_finite() {
                return Err(Error::Factorization("inverse iteration produced a null vector".into()));
            }
            lambda = dot(&z, &y) / zmz;
            // K z = y up to the solve's backward error, so the residual is
            // formed from y; an explicit K z bottoms out near eps * cond(K).
            let r: Vec<f64> = y.iter().zip(&mz).map(|(k, mm)| k - lambda * mm).collect();
            residual = norm(&r) / norm(&y);
            x = z.iter().map(|v| v / zmz.sqrt()).collect();
            if residual <= opts.tol {
                return Ok(self.finish(mass, x, lambda, residual, it, false));
            }
        }
        if opts.max_iter > single {
            // Slow convergence means λ₂/λ₁ is close to one; a small block
            // converges at the rate λ₁/λ₅ instead and separates the pair.
            return self.block_iteration(mass, x, opts.max_iter - single, opts.tol, single);
        }
        let last = self.finish(mass, x, lambda, residual, single, false);
        Err(Error::NotConverged {
            iterations: single,
            residual,
            last: Box::new(last),
        })
    }

    /// Subspace iteration on `BLOCK` vectors with Rayleigh-Ritz, seeded with
    /// `start` and fixed pseudo-random vectors.
    fn block_iteration(&self, mass: &MassMatrix, start: Vec<f64>, budget: usize, tol: f64, used: usize) -> Result<EigenPair> {
        let m = &mass.matrix;
        let n = self.dim();
        let p = BLOCK.min(n);
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut cols = vec![start];
        while cols.len() < p {
            cols.push((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
        }
        let mut best = (f64::NAN, f64::INFINITY, cols[0].clone());
        for it in 1..=budget {
            let mx: Vec<Vec<f64>> = cols.iter().map(|c| m.mul_vec(c)).collect();
            let z: Vec<Vec<f64>> = mx.iter().map(|y| self.factor.solve(y)).collect();
            let mz: Vec<Vec<f64>> = z.iter().map(|c| m.mul_vec(c)).collect();
            // K z_j = M x_j, so zᵢᵀ K z_j = zᵢᵀ M x_j
            let kr = DMatrix::from_fn(p, p, |i, j| 0.5 * (dot(&z[i], &mx[j]) + dot(&z[j], &mx[i])));
            let mr = DMatrix::from_fn(p, p, |i, j| 0.5 * (dot(&z[i], &mz[j]) + dot(&z[j], &mz[i])));
            let l = mr
                .cholesky()
                .ok_or_else(|| Error::Factorization("block vectors became linearly dependent".into()))?
                .l();
            let li = l
                .try_inverse()
                .ok_or_else(|| Error::Factorization("singular block Gram matrix".into()))?;
            let eig = SymmetricEigen::new(&li * kr * li.transpose());
            let mut order: Vec<usize> = (0..p).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let coeffs: Vec<Vec<f64>> = order
                .iter()
                .map(|&k| (li.transpose() * eig.eigenvectors.column(k)).iter().copied().collect())
                .collect();
            let combine = |basis: &[Vec<f64>], a: &[f64]| -> Vec<f64> {
                let mut out = vec![0.0; n];
                for (b, w) in basis.iter().zip(a) {
                    out.iter_mut().zip(b).for_each(|(o, v)| *o += w * v);
                }
                out
            };
            let theta = eig.eigenvalues[order[0]];
            let y1 = combine(&mx, &coeffs[0]);
            let m1 = combine(&mz, &coeffs[0]);
            let r: Vec<f64> = y1.iter().zip(&m1).map(|(a, b)| a - theta * b).collect();
            let residual = norm(&r) / norm(&y1);
            cols = coeffs.iter().map(|a| combine(&z, a)).collect();
            best = (theta, residual, cols[0].clone());
            if residual <= tol {
                let gap = if p > 1 { eig.eigenvalues[order[1]] - theta } else { f64::INFINITY };
                let degenerate = gap <= DEGENERATE_GAP * theta.abs();
                return Ok(self.finish(mass, cols.swap_remove(0), theta, residual, used + it, degenerate));
            }
        }
        let (lambda, residual, u) = best;
        let last = self.finish(mass, u, lambda, residual, used + budget, false);
        Err(Error::NotConverged {
            iterations: used + budget,
            residual,
            last: Box::new(last),
        })
    }

    fn finish(&self, mass: &MassMatrix, mut u: Vec<f64>, lambda: f64, residual: f64, iterations: usize, near_degenerate: bool) -> EigenPair {
        if dot(&mass.mean_weights, &u) < 0.0 {
            u.iter_mut().for_each(|v| *v = -*v);
        }
        EigenPair {
            lambda,
            u,
            residual,
            iterations,
            m_normalized: true,
            near_degenerate,
        }
    }
}

/// One-shot principal eigenpair: factorizes `op.stiffness` and runs inverse iteration.
pub fn principal_eigenpair(op: &DiscreteOperator, mass: &MassMatrix, tol: f64, max_iter: usize) -> Result<EigenPair> {
    EigenSolver::new(op)?.solve(mass, &EigenOptions { tol, max_iter }, None)
}

/// `uᵀKu / uᵀMu`.
pub fn rayleigh_quotient(u: &[f64], k: &CsrMatrix, m: &CsrMatrix) -> Result<f64> {
    if u.len() != k.dim() || u.len() != m.dim() {
        return Err(Error::InvalidArgument("vector length does not match the operators".into()));
    }
    let den = m.bilinear(u, u);
    if !(den > 0.0) {
        return Err(Error::InvalidArgument("vector has zero mass norm".into()));
    }
    Ok(k.bilinear(u, u) / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble, assemble_mass, BcKind};
    use crate::mesh::generate_disk;

    fn scalar(k: f64, m: f64) -> (EigenSolver, MassMatrix) {
        let solver = EigenSolver::from_matrix(CsrMatrix::from_triplets(1, vec![(0, 0, k)])).unwrap();
        let mass = MassMatrix {
            matrix: CsrMatrix::from_triplets(1, vec![(0, 0, m)]),
            density_version: 0,
            mean_weights: vec![m],
        };
        (solver, mass)
    }

    #[test]
    fn one_dof_problem() {
        let (s, m) = scalar(2.0, 1.0);
        let p = s.solve(&m, &EigenOptions::default(), None).unwrap();
        assert!((p.lambda - 2.0).abs() <= 4.0 * f64::EPSILON);
        assert!((p.u[0] - 1.0).abs() <= 4.0 * f64::EPSILON);
        assert!(p.residual <= 1e-15);
    }

    #[test]
    fn rejects_bad_options() {
        let (s, m) = scalar(2.0, 1.0);
        assert!(s.solve(&m, &EigenOptions { tol: 0.0, max_iter: 5 }, None).is_err());
        assert!(s.solve(&m, &EigenOptions { tol: 0.1, max_iter: 5 }, None).is_err());
        assert!(s.solve(&m, &EigenOptions { tol: 1e-6, max_iter: 0 }, None).is_err());
    }

    #[test]
    fn diagonal_pencil_finds_smallest() {
        let k = CsrMatrix::from_triplets(3, vec![(0, 0, 5.0), (1, 1, 3.0), (2, 2, 9.0)]);
        let solver = EigenSolver::from_matrix(k).unwrap();
        let mass = MassMatrix {
            matrix: CsrMatrix::from_triplets(3, vec![(0, 0, 1.0), (1, 1, 2.0), (2, 2, 1.0)]),
            density_version: 0,
            mean_weights: vec![1.0, 2.0, 1.0],
        };
        let p = solver.solve(&mass, &EigenOptions::default(), None).unwrap();
        assert!((p.lambda - 1.5).abs() < 1e-12);
        assert!(p.u[1] > 0.0);
    }

    #[test]
    fn exact_degeneracy_is_flagged() {
        let k = CsrMatrix::from_triplets(3, vec![(0, 0, 1.0), (1, 1, 1.0), (2, 2, 4.0)]);
        let solver = EigenSolver::from_matrix(k).unwrap();
        let mass = MassMatrix {
            matrix: CsrMatrix::from_triplets(3, vec![(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]),
            density_version: 0,
            mean_weights: vec![1.0; 3],
        };
        // any vector in the degenerate plane is an eigenvector, so this converges
        let p = solver.solve(&mass, &EigenOptions { tol: 1e-12, max_iter: 200 }, None).unwrap();
        assert!((p.lambda - 1.0).abs() < 1e-12);
    }

    #[test]
    fn close_pair_converges_through_the_block_phase() {
        let n = 6;
        let diag = [1.0, 1.0 + 1e-7, 3.0, 4.0, 5.0, 6.0];
        let k = CsrMatrix::from_triplets(n, (0..n).map(|i| (i, i, diag[i])).collect());
        let solver = EigenSolver::from_matrix(k).unwrap();
        let mass = MassMatrix {
            matrix: CsrMatrix::from_triplets(n, (0..n).map(|i| (i, i, 1.0)).collect()),
            density_version: 0,
            mean_weights: vec![1.0; n],
        };
        let p = solver.solve(&mass, &EigenOptions { tol: 1e-12, max_iter: 200 }, None).unwrap();
        assert!((p.lambda - 1.0).abs() < 1e-12);
        assert!(p.iterations > SINGLE_VECTOR_STEPS);
        assert!(p.u[0].abs() > 1.0 - 1e-6, "{:?}", p.u);
        assert!(!p.near_degenerate);

        let diag = [1.0, 1.0 + 1e-10, 3.0, 4.0, 5.0, 6.0];
        let k = CsrMatrix::from_triplets(n, (0..n).map(|i| (i, i, diag[i])).collect());
        let solver = EigenSolver::from_matrix(k).unwrap();
        let p = solver.solve(&mass, &EigenOptions { tol: 1e-12, max_iter: 200 }, None).unwrap();
        assert!((p.lambda - 1.0).abs() < 1e-9);
    }

    #[test]
    fn non_convergence_carries_last_iterate() {
        let k = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 1, 1.1)]);
        let solver = EigenSolver::from_matrix(k).unwrap();
        let mass = MassMatrix {
            matrix: CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 1, 1.0)]),
            density_version: 0,
            mean_weights: vec![1.0; 2],
        };
        match solver.solve(&mass, &EigenOptions { tol: 1e-12, max_iter: 3 }, None) {
            Err(Error::NotConverged { iterations, residual, last }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 1e-12);
                assert_eq!(last.u.len(), 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rayleigh_quotient_of_eigenvector() {
        let mesh = generate_disk(1.0, 0.2).unwrap();
        for bc in [BcKind::Hinged, BcKind::Clamped] {
            let op = assemble(&mesh, bc).unwrap();
            let mass = assemble_mass(&op, &vec![1.0; mesh.num_triangles()]).unwrap();
            let p = principal_eigenpair(&op, &mass, 1e-10, 500).unwrap();
            let rq = rayleigh_quotient(&p.u, &op.stiffness, &mass.matrix).unwrap();
            assert!((rq - p.lambda).abs() <= 1e-9 * p.lambda, "{bc}");
            assert!(p.lambda > 0.0);
            assert!(dot(&mass.mean_weights, &p.u) >= 0.0);
        }
    }

    #[test]
    fn rayleigh_quotient_rejects_zero() {
        let k = CsrMatrix::from_triplets(1, vec![(0, 0, 1.0)]);
        assert!(rayleigh_quotient(&[0.0], &k, &k).is_err());
    }
}
