//! Shape statistics used by the acceptance report.
//!
//! Kept in a package of its own so that `cargo test --workspace` runs the
//! report after every other test binary.

use plateopt_core::mesh::{Point, TriMesh};
use plateopt_core::rearrange::DensityField;

/// Distance from `p` to the segment `ab`.
pub fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}

/// Distance from each triangle centroid to the nearest boundary edge.
pub fn boundary_distance(mesh: &TriMesh) -> Vec<f64> {
    let v = mesh.vertices();
    mesh.centroids()
        .into_iter()
        .map(|c| {
            mesh.boundary_edges()
                .iter()
                .map(|e| segment_distance(c, v[e[0]], v[e[1]]))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Area-weighted mean of `score` over the lightest and the heaviest
/// material. NaN for an empty region.
pub fn region_means(density: &DensityField, areas: &[f64], score: &[f64]) -> (f64, f64) {
    let top = density.materials().iter().copied().max().unwrap_or(0);
    let mean = |k: usize| {
        let (mut s, mut a) = (0.0, 0.0);
        for ((&mat, &w), &v) in density.materials().iter().zip(areas).zip(score) {
            if mat == k {
                s += w * v;
                a += w;
            }
        }
        s / a
    };
    (mean(0), mean(top))
}

#[cfg(test)]
mod tests {
    use super::*;
    use plateopt_core::mesh::{element_measures, generate_rectangle};
    use plateopt_core::rearrange::RearrangementClass;

    #[test]
    fn segment_distance_cases() {
        assert_eq!(segment_distance([0.5, 2.0], [0.0, 0.0], [1.0, 0.0]), 2.0);
        assert_eq!(segment_distance([3.0, 4.0], [0.0, 0.0], [0.0, 0.0]), 5.0);
        assert_eq!(segment_distance([-3.0, 4.0], [0.0, 0.0], [1.0, 0.0]), 5.0);
    }

    #[test]
    fn square_centre_is_farthest_from_the_boundary() {
        let mesh = generate_rectangle(2.0, 2.0, 0.25).unwrap();
        let d = boundary_distance(&mesh);
        assert!(d.iter().all(|&x| x > 0.0 && x <= 1.0));
        let far = d.iter().cloned().fold(0.0, f64::max);
        assert!(far > 0.8, "{far}");
    }

    #[test]
    fn region_means_split_by_material() {
        let mesh = generate_rectangle(2.0, 1.0, 0.5).unwrap();
        let measure = element_measures(&mesh);
        let class = RearrangementClass::new(vec![1.0, 2.0], vec![1.0, 1.0]).unwrap();
        let x: Vec<f64> = mesh.centroids().iter().map(|c| c[0]).collect();
        let mats = x.iter().map(|&v| usize::from(v > 1.0)).collect();
        let rho = DensityField::from_materials(&class, mats, &measure).unwrap();
        let (light, heavy) = region_means(&rho, &measure.areas, &x);
        assert!((light - 0.5).abs() < 1e-12 && (heavy - 1.5).abs() < 1e-12, "{light} {heavy}");
    }
}
