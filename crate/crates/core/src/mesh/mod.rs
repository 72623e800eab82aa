//! Conforming triangle meshes of the plate domain.
//!
//! A [`TriMesh`] is validated on construction and immutable afterwards. The
//! boundary is derived from edge incidence (edges owned by exactly one
//! triangle), so a mesh can never disagree with its own boundary tags.

mod generate;
mod text;

use std::collections::BTreeSet;
use std::collections::HashMap;

pub use generate::{
    crescent_area, generate_crescent, generate_disk, generate_ellipse, generate_rectangle,
    generate_rectangle_with_hole,
};
pub use text::{load_mesh, parse_mesh, save_mesh, write_mesh};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Signed area of the triangle `(a, b, c)`; positive for counter-clockwise order.
pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<[usize; 2]>,
    boundary_vertices: BTreeSet<usize>,
    edges: Vec<[usize; 2]>,
    tri_edges: Vec<[usize; 3]>,
}

impl TriMesh {
    /// Builds and validates a mesh. Clockwise triangles are flipped to
    /// counter-clockwise with a warning; degenerate triangles, dangling
    /// vertices and non-manifold edges are rejected.
    pub fn new(vertices: Vec<Point>, mut triangles: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidMesh(format!(
                "need at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("mesh has no triangles".into()));
        }
        if let Some(i) = vertices.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::InvalidMesh(format!("vertex {i} has a non-finite coordinate")));
        }
        let nv = vertices.len();
        let mut used = vec![false; nv];
        let mut flipped = 0usize;
        for (t, tri) in triangles.iter_mut().enumerate() {
            for &v in tri.iter() {
                if v >= nv {
                    return Err(Error::InvalidMesh(format!(
                        "triangle {t} references vertex {v}, but there are only {nv} vertices"
                    )));
                }
                used[v] = true;
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!("triangle {t} repeats a vertex")));
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            let scale = edge_scale(&vertices, tri);
            if area.abs() <= 1e-14 * scale * scale {
                return Err(Error::InvalidMesh(format!("triangle {t} is degenerate")));
            }
            if area < 0.0 {
                tri.swap(1, 2);
                flipped += 1;
            }
        }
        if flipped > 0 {
            log::warn!("reoriented {flipped} clockwise triangle(s) to counter-clockwise");
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::InvalidMesh(format!("vertex {v} belongs to no triangle")));
        }

        // Directed half-edges: in a consistently oriented manifold mesh each
        // undirected edge appears at most once per direction.
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                if let Some(other) = directed.insert((a, b), t) {
                    return Err(Error::InvalidMesh(format!(
                        "edge ({a}, {b}) is traversed in the same direction by triangles {other} and {t}"
                    )));
                }
            }
        }

        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut keys: Vec<(usize, usize)> = directed.keys().map(|&(a, b)| (a.min(b), a.max(b))).collect();
        keys.sort_unstable();
        keys.dedup();
        for (i, &k) in keys.iter().enumerate() {
            edge_index.insert(k, i);
        }
        let edges: Vec<[usize; 2]> = keys.iter().map(|&(a, b)| [a, b]).collect();
        let tri_edges: Vec<[usize; 3]> = triangles
            .iter()
            .map(|tri| {
                let mut e = [0usize; 3];
                for (k, slot) in e.iter_mut().enumerate() {
                    let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                    *slot = edge_index[&(a.min(b), a.max(b))];
                }
                e
            })
            .collect();

        let mut boundary_edges = Vec::new();
        for tri in &triangles {
            for k in 0..3 {
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                if !directed.contains_key(&(b, a)) {
                    boundary_edges.push([a, b]);
                }
            }
        }
        if boundary_edges.is_empty() {
            return Err(Error::InvalidMesh("mesh has no boundary".into()));
        }
        let boundary_vertices = boundary_edges.iter().flat_map(|e| e.iter().copied()).collect();

        Ok(Self {
            vertices,
            triangles,
            boundary_edges,
            boundary_vertices,
            edges,
            tri_edges,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Boundary edges oriented with the domain on their left.
    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary_edges
    }

    pub fn boundary_vertices(&self) -> &BTreeSet<usize> {
        &self.boundary_vertices
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertices.contains(&v)
    }

    /// Undirected edges as `[low, high]` vertex pairs, sorted.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// `tri_edges()[t][k]` is the edge of triangle `t` opposite its local vertex `k`.
    pub fn tri_edges(&self) -> &[[usize; 3]] {
        &self.tri_edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Boolean mask over [`edges`](Self::edges) marking boundary edges.
    pub fn boundary_edge_mask(&self) -> Vec<bool> {
        let set: BTreeSet<(usize, usize)> = self
            .boundary_edges
            .iter()
            .map(|&[a, b]| (a.min(b), a.max(b)))
            .collect();
        self.edges.iter().map(|&[a, b]| set.contains(&(a, b))).collect()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangle_points(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn centroids(&self) -> Vec<Point> {
        (0..self.num_triangles()).map(|t| self.centroid(t)).collect()
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edges
            .iter()
            .map(|&[a, b]| dist(self.vertices[a], self.vertices[b]))
            .fold(0.0, f64::max)
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        let mut min = f64::INFINITY;
        for t in 0..self.num_triangles() {
            let p = self.triangle_points(t);
            for k in 0..3 {
                let (o, a, b) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
                let u = [a[0] - o[0], a[1] - o[1]];
                let v = [b[0] - o[0], b[1] - o[1]];
                let cos = (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
                min = min.min(cos.clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
        min
    }

    /// Copy of the mesh with every vertex mapped through `f`. Fails if the
    /// map degenerates or inverts a triangle beyond repair.
    pub fn map_vertices(&self, f: impl Fn(Point) -> Point) -> Result<Self> {
        let vertices = self.vertices.iter().map(|&p| f(p)).collect();
        Self::new(vertices, self.triangles.clone())
    }
}

fn edge_scale(vertices: &[Point], tri: &[usize; 3]) -> f64 {
    (0..3)
        .map(|k| dist(vertices[tri[k]], vertices[tri[(k + 1) % 3]]))
        .fold(0.0, f64::max)
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementMeasure {
    pub areas: Vec<f64>,
    pub total_area: f64,
}

impl ElementMeasure {
    pub fn len(&self) -> usize {
        self.areas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.areas.is_empty()
    }

    pub fn max_area(&self) -> f64 {
        self.areas.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_area(&self) -> f64 {
        self.areas.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Shoelace areas of all triangles, summed in triangle order.
pub fn element_measures(mesh: &TriMesh) -> ElementMeasure {
    let areas: Vec<f64> = (0..mesh.num_triangles())
        .map(|t| {
            let [a, b, c] = mesh.triangle_points(t);
            signed_area(a, b, c)
        })
        .collect();
    let total_area = areas.iter().sum();
    ElementMeasure { areas, total_area }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> TriMesh {
        TriMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn unit_right_triangle_area() {
        let m = TriMesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap();
        let em = element_measures(&m);
        assert_eq!(em.areas, vec![0.5]);
        assert_eq!(em.total_area, 0.5);
    }

    #[test]
    fn boundary_is_derived_from_incidence() {
        let m = square();
        assert_eq!(m.boundary_edges().len(), 4);
        assert_eq!(m.edges().len(), 5);
        assert_eq!(m.boundary_vertices().len(), 4);
        assert_eq!(m.boundary_edge_mask().iter().filter(|b| !**b).count(), 1);
    }

    #[test]
    fn clockwise_triangles_are_flipped() {
        let m = TriMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 2, 1], [0, 2, 3]],
        )
        .unwrap();
        assert!(element_measures(&m).areas.iter().all(|&a| a > 0.0));
        assert_eq!(element_measures(&m).total_area, 1.0);
    }

    #[test]
    fn rejects_out_of_range_and_degenerate() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(matches!(TriMesh::new(v.clone(), vec![[0, 1, 3]]), Err(Error::InvalidMesh(_))));
        let collinear = vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        assert!(TriMesh::new(collinear, vec![[0, 1, 2]]).is_err());
        assert!(TriMesh::new(v, vec![[0, 1, 1]]).is_err());
    }

    #[test]
    fn rejects_non_manifold_edge() {
        // three triangles on the edge (0, 1)
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.5, 1.0], [0.5, -1.0], [0.5, 2.0]];
        let r = TriMesh::new(v, vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]]);
        assert!(r.is_err());
    }

    #[test]
    fn rejects_dangling_vertex() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [5.0, 5.0]];
        assert!(TriMesh::new(v, vec![[0, 1, 2]]).is_err());
    }

    #[test]
    fn tri_edges_are_opposite_vertices() {
        let m = square();
        for (t, tri) in m.triangles().iter().enumerate() {
            for k in 0..3 {
                let e = m.edges()[m.tri_edges()[t][k]];
                assert!(!e.contains(&tri[k]));
            }
        }
    }
}
