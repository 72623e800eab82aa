//! Discrete bi-Laplacian operators and density-weighted mass matrices.
//!
//! * Hinged plates use the Ciarlet-Raviart mixed method with continuous
//!   piecewise-linear `u` and `w = -Δu`. Both fields vanish on the boundary
//!   (`u = 0` and `Δu = 0`), and `w` is eliminated with the lumped P1 mass,
//!   giving `K = A D⁻¹ A` with `A` the Dirichlet P1 stiffness.
//! * Clamped plates use the Morley element: vertex values plus normal
//!   derivatives at edge midpoints. Both are set to zero on the boundary.
//!   The energy is the broken Hessian norm `Σ_T ∫_T D²u : D²v`.
//!
//! Densities are constant per triangle. Every element keeps the values of
//! its local basis at a degree-4 quadrature rule, which integrates the mass
//! products exactly for both element families.

use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix6;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{element_measures, signed_area, Point, TriMesh};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcKind {
    /// Navier conditions `u = 0`, `Δu = 0`.
    Hinged,
    /// Dirichlet conditions `u = 0`, `∂u/∂n = 0`.
    Clamped,
}

impl fmt::Display for BcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BcKind::Hinged => "hinged",
            BcKind::Clamped => "clamped",
        })
    }
}

impl FromStr for BcKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hinged" | "navier" => Ok(BcKind::Hinged),
            "clamped" | "dirichlet" => Ok(BcKind::Clamped),
            other => Err(Error::InvalidArgument(format!(
                "unknown boundary condition '{other}' (expected hinged or clamped)"
            ))),
        }
    }
}

/// Number of quadrature points per triangle.
pub const QUAD_POINTS: usize = 6;

/// Degree-4 symmetric rule: barycentric points and weights (weights sum to 1).
const QUAD: [([f64; 3], f64); QUAD_POINTS] = {
    const A1: f64 = 0.445_948_490_915_964_886_32;
    const B1: f64 = 1.0 - 2.0 * A1;
    const W1: f64 = 0.223_381_589_678_011_465_70;
    const A2: f64 = 0.091_576_213_509_770_743_46;
    const B2: f64 = 1.0 - 2.0 * A2;
    const W2: f64 = 0.109_951_743_655_321_867_64;
    [
        ([B1, A1, A1], W1),
        ([A1, B1, A1], W1),
        ([A1, A1, B1], W1),
        ([B2, A2, A2], W2),
        ([A2, B2, A2], W2),
        ([A2, A2, B2], W2),
    ]
};

pub fn quadrature_weights() -> [f64; QUAD_POINTS] {
    QUAD.map(|(_, w)| w)
}

/// A degree of freedom's home in the mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeshEntity {
    Vertex(usize),
    Edge(usize),
}

/// Mesh entity to active DOF index. Constrained entities map to `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub vertex: Vec<Option<usize>>,
    /// Empty for the hinged discretization, which has no edge DOFs.
    pub edge: Vec<Option<usize>>,
    pub num_active: usize,
}

impl DofMap {
    pub fn entity_dof(&self, e: MeshEntity) -> Option<usize> {
        match e {
            MeshEntity::Vertex(v) => self.vertex.get(v).copied().flatten(),
            MeshEntity::Edge(k) => self.edge.get(k).copied().flatten(),
        }
    }
}

/// Local basis data for one triangle.
#[derive(Debug, Clone)]
pub struct ElementBasis {
    /// Active DOF per local basis function; `None` where constrained.
    pub dofs: Vec<Option<usize>>,
    /// `values[j][q]`: local basis `j` at quadrature point `q`.
    pub values: Vec<[f64; QUAD_POINTS]>,
    pub area: f64,
}

impl ElementBasis {
    /// `∫_T u_h² / |T|` for the coefficient vector `u`.
    pub fn mean_square(&self, u: &[f64]) -> f64 {
        let w = quadrature_weights();
        let mut acc = 0.0;
        for (q, wq) in w.iter().enumerate() {
            let mut uq = 0.0;
            for (j, dof) in self.dofs.iter().enumerate() {
                if let Some(d) = dof {
                    uq += u[*d] * self.values[j][q];
                }
            }
            acc += wq * uq * uq;
        }
        acc
    }

    /// `∫_T φ_i φ_j` for all local pairs.
    fn local_mass(&self) -> Vec<Vec<f64>> {
        let w = quadrature_weights();
        let n = self.values.len();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..QUAD_POINTS).map(|q| w[q] * self.values[i][q] * self.values[j][q]).sum();
                m[i][j] = self.area * s;
            }
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub bc_kind: BcKind,
    pub stiffness: CsrMatrix,
    pub dof_map: DofMap,
    pub constrained_dofs: Vec<MeshEntity>,
    pub elements: Vec<ElementBasis>,
}

impl DiscreteOperator {
    pub fn num_dofs(&self) -> usize {
        self.dof_map.num_active
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    /// Nodal displacement at each mesh vertex (zero where constrained).
    pub fn vertex_values(&self, u: &[f64]) -> Vec<f64> {
        self.dof_map
            .vertex
            .iter()
            .map(|d| d.map_or(0.0, |d| u[d]))
            .collect()
    }

    /// Element averages of `u_h²`; the weighted sum `Σ ρ_T f_T |T|` equals `uᵀ M(ρ) u`.
    pub fn element_mean_square(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.num_dofs());
        self.elements.iter().map(|e| e.mean_square(u)).collect()
    }
}

pub fn assemble(mesh: &TriMesh, bc: BcKind) -> Result<DiscreteOperator> {
    match bc {
        BcKind::Hinged => assemble_hinged(mesh),
        BcKind::Clamped => assemble_clamped(mesh),
    }
}

fn p1_element(p: [Point; 3], dofs: [Option<usize>; 3]) -> ElementBasis {
    let values = (0..3)
        .map(|j| {
            let mut v = [0.0; QUAD_POINTS];
            for (q, (bary, _)) in QUAD.iter().enumerate() {
                v[q] = bary[j];
            }
            v
        })
        .collect();
    ElementBasis {
        dofs: dofs.to_vec(),
        values,
        area: signed_area(p[0], p[1], p[2]),
    }
}

/// P1 stiffness `∫_T ∇λ_i · ∇λ_j`.
fn p1_stiffness(p: [Point; 3]) -> [[f64; 3]; 3] {
    let area = signed_area(p[0], p[1], p[2]);
    let b = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
    let c = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
        }
    }
    k
}

/// Mixed P1 discretization of the hinged plate.
pub fn assemble_hinged(mesh: &TriMesh) -> Result<DiscreteOperator> {
    let nv = mesh.num_vertices();
    let mut vertex = vec![None; nv];
    let mut constrained = Vec::new();
    let mut n = 0;
    for (v, slot) in vertex.iter_mut().enumerate() {
        if mesh.is_boundary_vertex(v) {
            constrained.push(MeshEntity::Vertex(v));
        } else {
            *slot = Some(n);
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Assembly("mesh has no interior vertex; nothing to solve for".into()));
    }

    let mut lap = Vec::new();
    let mut lumped = vec![0.0; n];
    let mut elements = Vec::with_capacity(mesh.num_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.triangle_points(t);
        let dofs = tri.map(|v| vertex[v]);
        let k = p1_stiffness(p);
        let area = signed_area(p[0], p[1], p[2]);
        for i in 0..3 {
            let Some(di) = dofs[i] else { continue };
            lumped[di] += area / 3.0;
            for j in 0..3 {
                if let Some(dj) = dofs[j] {
                    lap.push((di, dj, k[i][j]));
                }
            }
        }
        elements.push(p1_element(p, dofs));
    }
    let a = CsrMatrix::from_triplets(n, lap);
    if let Some(k) = lumped.iter().position(|&m| !(m > 0.0)) {
        return Err(Error::Assembly(format!("lumped mass vanishes at dof {k}")));
    }

    // K = A D⁻¹ A, row k of A contributes a_ki a_kj / d_k.
    let mut trip = Vec::new();
    for k in 0..n {
        let row: Vec<(usize, f64)> = a.row(k).collect();
        for &(i, aki) in &row {
            for &(j, akj) in &row {
                trip.push((i, j, aki * akj / lumped[k]));
            }
        }
    }
    let stiffness = CsrMatrix::from_triplets(n, trip);
    Ok(DiscreteOperator {
        bc_kind: BcKind::Hinged,
        stiffness,
        dof_map: DofMap {
            vertex,
            edge: Vec::new(),
            num_active: n,
        },
        constrained_dofs: constrained,
        elements,
    })
}

/// Unit normal of a global edge `[a, b]` (`a < b`): the tangent `b - a`
/// rotated clockwise. Shared by both triangles on the edge.
fn edge_normal(pa: Point, pb: Point) -> [f64; 2] {
    let (tx, ty) = (pb[0] - pa[0], pb[1] - pa[1]);
    let len = tx.hypot(ty);
    [ty / len, -tx / len]
}

struct MorleyLocal {
    /// `coef[k][j]`: coefficient of monomial `k` in basis `j`.
    coef: Matrix6<f64>,
    centre: Point,
    scale: f64,
}

impl MorleyLocal {
    fn new(p: [Point; 3], normals: [[f64; 2]; 3]) -> Result<Self> {
        let centre = [
            (p[0][0] + p[1][0] + p[2][0]) / 3.0,
            (p[0][1] + p[1][1] + p[2][1]) / 3.0,
        ];
        let scale = (0..3)
            .map(|k| crate::mesh::dist(p[k], p[(k + 1) % 3]))
            .fold(0.0, f64::max);
        let local = |q: Point| [(q[0] - centre[0]) / scale, (q[1] - centre[1]) / scale];
        let mut c = Matrix6::zeros();
        for k in 0..3 {
            let [x, y] = local(p[k]);
            let row = [1.0, x, y, x * x, x * y, y * y];
            for (j, v) in row.iter().enumerate() {
                c[(k, j)] = *v;
            }
        }
        for k in 0..3 {
            let a = p[(k + 1) % 3];
            let b = p[(k + 2) % 3];
            let [x, y] = local([(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]);
            let [nx, ny] = normals[k];
            let dx = [0.0, 1.0, 0.0, 2.0 * x, y, 0.0];
            let dy = [0.0, 0.0, 1.0, 0.0, x, 2.0 * y];
            for j in 0..6 {
                c[(3 + k, j)] = (nx * dx[j] + ny * dy[j]) / scale;
            }
        }
        let coef = c
            .try_inverse()
            .ok_or_else(|| Error::Assembly("singular Morley element".into()))?;
        Ok(Self { coef, centre, scale })
    }

    fn value(&self, j: usize, q: Point) -> f64 {
        let x = (q[0] - self.centre[0]) / self.scale;
        let y = (q[1] - self.centre[1]) / self.scale;
        let m = [1.0, x, y, x * x, x * y, y * y];
        (0..6).map(|k| self.coef[(k, j)] * m[k]).sum()
    }

    /// Constant Hessian `(u_xx, u_xy, u_yy)` of basis `j`.
    fn hessian(&self, j: usize) -> [f64; 3] {
        let s2 = self.scale * self.scale;
        [
            2.0 * self.coef[(3, j)] / s2,
            self.coef[(4, j)] / s2,
            2.0 * self.coef[(5, j)] / s2,
        ]
    }
}

/// Morley discretization of the clamped plate.
pub fn assemble_clamped(mesh: &TriMesh) -> Result<DiscreteOperator> {
    let nv = mesh.num_vertices();
    let boundary_edge = mesh.boundary_edge_mask();
    let mut constrained = Vec::new();
    let mut n = 0;
    let mut vertex = vec![None; nv];
    for (v, slot) in vertex.iter_mut().enumerate() {
        if mesh.is_boundary_vertex(v) {
            constrained.push(MeshEntity::Vertex(v));
        } else {
            *slot = Some(n);
            n += 1;
        }
    }
    let mut edge = vec![None; mesh.edges().len()];
    for (k, slot) in edge.iter_mut().enumerate() {
        if boundary_edge[k] {
            constrained.push(MeshEntity::Edge(k));
        } else {
            *slot = Some(n);
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Assembly("mesh has no interior degrees of freedom".into()));
    }
    let verts = mesh.vertices();
    let normals: Vec<[f64; 2]> = mesh
        .edges()
        .iter()
        .map(|&[a, b]| edge_normal(verts[a], verts[b]))
        .collect();

    let mut trip = Vec::new();
    let mut elements = Vec::with_capacity(mesh.num_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.triangle_points(t);
        let te = mesh.tri_edges()[t];
        let local = MorleyLocal::new(p, te.map(|e| normals[e]))?;
        let dofs: Vec<Option<usize>> = tri
            .iter()
            .map(|&v| vertex[v])
            .chain(te.iter().map(|&e| edge[e]))
            .collect();
        let area = signed_area(p[0], p[1], p[2]);
        let hess: Vec<[f64; 3]> = (0..6).map(|j| local.hessian(j)).collect();
        for i in 0..6 {
            let Some(di) = dofs[i] else { continue };
            for j in 0..6 {
                let Some(dj) = dofs[j] else { continue };
                let (a, b) = (hess[i], hess[j]);
                trip.push((di, dj, area * (a[0] * b[0] + 2.0 * a[1] * b[1] + a[2] * b[2])));
            }
        }
        let qpts: Vec<Point> = QUAD
            .iter()
            .map(|(l, _)| {
                [
                    l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
                    l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
                ]
            })
            .collect();
        let values = (0..6)
            .map(|j| {
                let mut v = [0.0; QUAD_POINTS];
                for (q, x) in qpts.iter().enumerate() {
                    v[q] = local.value(j, *x);
                }
                v
            })
            .collect();
        elements.push(ElementBasis { dofs, values, area });
    }
    Ok(DiscreteOperator {
        bc_kind: BcKind::Clamped,
        stiffness: CsrMatrix::from_triplets(n, trip),
        dof_map: DofMap {
            vertex,
            edge,
            num_active: n,
        },
        constrained_dofs: constrained,
        elements,
    })
}

/// Density-weighted mass matrix over the displacement DOFs.
#[derive(Debug, Clone)]
pub struct MassMatrix {
    pub matrix: CsrMatrix,
    /// Fingerprint of the density values the matrix was built from.
    pub density_version: u64,
    /// `∫ ρ φ_i`; fixes the sign of eigenvectors.
    pub mean_weights: Vec<f64>,
}

/// FNV-1a over the bit patterns of the density values.
pub fn density_fingerprint(rho: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in rho {
        for byte in v.to_bits().to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

pub fn assemble_mass(op: &DiscreteOperator, rho: &[f64]) -> Result<MassMatrix> {
    if rho.len() != op.num_elements() {
        return Err(Error::InvalidArgument(format!(
            "density has {} values but the mesh has {} triangles",
            rho.len(),
            op.num_elements()
        )));
    }
    if let Some(k) = rho.iter().position(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::InvalidArgument(format!("density at element {k} is {}", rho[k])));
    }
    let n = op.num_dofs();
    let w = quadrature_weights();
    let mut trip = Vec::new();
    let mut mean_weights = vec![0.0; n];
    for (e, &r) in op.elements.iter().zip(rho) {
        let local = e.local_mass();
        for (i, di) in e.dofs.iter().enumerate() {
            let Some(di) = *di else { continue };
            let integral: f64 = (0..QUAD_POINTS).map(|q| w[q] * e.values[i][q]).sum();
            mean_weights[di] += r * (e.area * integral);
            for (j, dj) in e.dofs.iter().enumerate() {
                if let Some(dj) = *dj {
                    trip.push((di, dj, r * local[i][j]));
                }
            }
        }
    }
    Ok(MassMatrix {
        matrix: CsrMatrix::from_triplets(n, trip),
        density_version: density_fingerprint(rho),
        mean_weights,
    })
}

/// Consistent P1 mass over all vertices, with no boundary constraint.
pub fn p1_mass_unconstrained(mesh: &TriMesh, rho: &[f64]) -> Result<CsrMatrix> {
    if rho.len() != mesh.num_triangles() {
        return Err(Error::InvalidArgument(format!(
            "density has {} values but the mesh has {} triangles",
            rho.len(),
            mesh.num_triangles()
        )));
    }
    let mut trip = Vec::new();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let e = p1_element(mesh.triangle_points(t), tri.map(Some));
        let m = e.local_mass();
        for i in 0..3 {
            for j in 0..3 {
                trip.push((tri[i], tri[j], rho[t] * m[i][j]));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(mesh.num_vertices(), trip))
}

/// Total `Σ ρ_T |T|`, the mass of the plate.
pub fn total_mass(mesh: &TriMesh, rho: &[f64]) -> f64 {
    element_measures(mesh).areas.iter().zip(rho).map(|(a, r)| a * r).sum()
}
