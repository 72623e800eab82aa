//! Mesh generators for the benchmark plate shapes.
//!
//! Polygonal domains get structured grids split into right triangles with
//! alternating diagonals. Curved domains are approximated by an inscribed
//! polygon, filled with a hexagonal lattice of interior points and
//! triangulated with a constrained Delaunay triangulation, followed by a few
//! rounds of Laplacian smoothing.

use std::f64::consts::PI;

use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use super::{signed_area, Point, TriMesh};
use crate::error::{Error, Result};

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

/// Splits `[breaks[0], breaks[last]]` so that every break point is a node
/// and no sub-interval is longer than `h`.
fn subdivide(breaks: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![breaks[0]];
    for w in breaks.windows(2) {
        let len = w[1] - w[0];
        let n = (len / h - 1e-9).ceil().max(1.0) as usize;
        for k in 1..=n {
            out.push(if k == n { w[1] } else { w[0] + len * k as f64 / n as f64 });
        }
    }
    out
}

/// Structured triangulation of a tensor grid, skipping cells for which
/// `keep(i, j)` is false. Unused grid nodes are dropped.
fn structured(xs: &[f64], ys: &[f64], keep: impl Fn(usize, usize) -> bool) -> Result<TriMesh> {
    let (nx, ny) = (xs.len() - 1, ys.len() - 1);
    let node = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            if !keep(i, j) {
                continue;
            }
            let (v00, v10, v01, v11) = (node(i, j), node(i + 1, j), node(i, j + 1), node(i + 1, j + 1));
            if (i + j) % 2 == 0 {
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            } else {
                triangles.push([v00, v10, v01]);
                triangles.push([v10, v11, v01]);
            }
        }
    }
    let vertices: Vec<Point> = (0..=ny)
        .flat_map(|j| (0..=nx).map(move |i| (i, j)))
        .map(|(i, j)| [xs[i], ys[j]])
        .collect();
    let mut used = vec![false; vertices.len()];
    for t in &triangles {
        for &v in t {
            used[v] = true;
        }
    }
    let mut compact = vec![usize::MAX; vertices.len()];
    let mut kept = Vec::new();
    for (v, &u) in used.iter().enumerate() {
        if u {
            compact[v] = kept.len();
            kept.push(vertices[v]);
        }
    }
    let triangles = triangles
        .into_iter()
        .map(|t| [compact[t[0]], compact[t[1]], compact[t[2]]])
        .collect();
    TriMesh::new(kept, triangles)
}

/// Structured mesh of `[0, width] x [0, height]` with spacing at most `target_h`.
pub fn generate_rectangle(width: f64, height: f64, target_h: f64) -> Result<TriMesh> {
    check_positive("width", width)?;
    check_positive("height", height)?;
    check_positive("target_h", target_h)?;
    let xs = subdivide(&[0.0, width], target_h);
    let ys = subdivide(&[0.0, height], target_h);
    structured(&xs, &ys, |_, _| true)
}

/// Rectangle `[0, outer_w] x [0, outer_h]` minus a centered `hole_w x hole_h`
/// rectangle. Hole edges are grid lines, so the area is exact.
pub fn generate_rectangle_with_hole(
    outer_w: f64,
    outer_h: f64,
    hole_w: f64,
    hole_h: f64,
    target_h: f64,
) -> Result<TriMesh> {
    check_positive("outer_w", outer_w)?;
    check_positive("outer_h", outer_h)?;
    check_positive("hole_w", hole_w)?;
    check_positive("hole_h", hole_h)?;
    check_positive("target_h", target_h)?;
    if hole_w >= outer_w || hole_h >= outer_h {
        return Err(Error::InvalidArgument(format!(
            "hole {hole_w} x {hole_h} is not strictly inside the {outer_w} x {outer_h} rectangle"
        )));
    }
    let (x0, y0) = ((outer_w - hole_w) / 2.0, (outer_h - hole_h) / 2.0);
    let (x1, y1) = (x0 + hole_w, y0 + hole_h);
    let xs = subdivide(&[0.0, x0, x1, outer_w], target_h);
    let ys = subdivide(&[0.0, y0, y1, outer_h], target_h);
    structured(&xs, &ys, |i, j| {
        let cx = 0.5 * (xs[i] + xs[i + 1]);
        let cy = 0.5 * (ys[j] + ys[j + 1]);
        !(cx > x0 && cx < x1 && cy > y0 && cy < y1)
    })
}

/// Disk of the given radius centred at the origin.
pub fn generate_disk(radius: f64, target_h: f64) -> Result<TriMesh> {
    generate_ellipse(radius, radius, target_h)
}

/// Ellipse with semi-axes `a` (along x) and `b` (along y), centred at the origin.
pub fn generate_ellipse(a: f64, b: f64, target_h: f64) -> Result<TriMesh> {
    check_positive("a", a)?;
    check_positive("b", b)?;
    check_positive("target_h", target_h)?;
    let boundary = if a == b {
        let n = boundary_count(2.0 * PI * a, target_h);
        (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                [a * t.cos(), a * t.sin()]
            })
            .collect()
    } else {
        arc_length_samples(|t| [a * t.cos(), b * t.sin()], 0.0, 2.0 * PI, target_h, false)
    };
    mesh_polygon(vec![boundary], target_h)
}

fn boundary_count(length: f64, h: f64) -> usize {
    ((length / h).ceil() as usize).max(8)
}

/// Points along a parametric curve on `[t0, t1]` at equal arc-length spacing
/// no larger than `h`. The end point is included only when `closed_end`.
fn arc_length_samples(
    curve: impl Fn(f64) -> Point,
    t0: f64,
    t1: f64,
    h: f64,
    closed_end: bool,
) -> Vec<Point> {
    const FINE: usize = 1 << 14;
    let mut cum = Vec::with_capacity(FINE + 1);
    cum.push(0.0);
    let mut prev = curve(t0);
    for k in 1..=FINE {
        let p = curve(t0 + (t1 - t0) * k as f64 / FINE as f64);
        cum.push(cum[k - 1] + (p[0] - prev[0]).hypot(p[1] - prev[1]));
        prev = p;
    }
    let total = cum[FINE];
    let n = boundary_count(total, h);
    let last = if closed_end { n } else { n - 1 };
    let mut out = Vec::with_capacity(last + 1);
    let mut seg = 0;
    for k in 0..=last {
        let s = total * k as f64 / n as f64;
        while seg + 1 < FINE && cum[seg + 1] < s {
            seg += 1;
        }
        let frac = if cum[seg + 1] > cum[seg] {
            ((s - cum[seg]) / (cum[seg + 1] - cum[seg])).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let t = t0 + (t1 - t0) * (seg as f64 + frac) / FINE as f64;
        out.push(curve(t));
    }
    out
}

/// Area of the disk of radius `r_outer` minus the disk of radius `r_inner`
/// whose centre is offset by `offset`.
pub fn crescent_area(r_outer: f64, r_inner: f64, offset: f64) -> f64 {
    let (big, small, d) = (r_outer, r_inner, offset);
    let lens = if d >= big + small {
        0.0
    } else if d <= (big - small).abs() {
        PI * big.min(small).powi(2)
    } else {
        let a1 = ((d * d + small * small - big * big) / (2.0 * d * small)).clamp(-1.0, 1.0).acos();
        let a2 = ((d * d + big * big - small * small) / (2.0 * d * big)).clamp(-1.0, 1.0).acos();
        let k = ((-d + small + big) * (d + small - big) * (d - small + big) * (d + small + big)).sqrt();
        small * small * a1 + big * big * a2 - 0.5 * k
    };
    PI * big * big - lens
}

/// Disk of radius `r_outer` at the origin minus the disk of radius `r_inner`
/// centred at `(offset, 0)`. The two circles must cross, so the remainder is
/// a single crescent with two horns.
pub fn generate_crescent(r_outer: f64, r_inner: f64, offset: f64, target_h: f64) -> Result<TriMesh> {
    check_positive("r_outer", r_outer)?;
    check_positive("r_inner", r_inner)?;
    check_positive("target_h", target_h)?;
    if !(offset.is_finite() && offset > 0.0) {
        return Err(Error::InvalidArgument(format!("offset must be positive, got {offset}")));
    }
    if offset >= r_outer + r_inner {
        return Err(Error::InvalidArgument(
            "inner disk lies outside the outer disk; the difference is not a crescent".into(),
        ));
    }
    if offset <= r_inner - r_outer {
        return Err(Error::InvalidArgument("inner disk covers the outer disk; the difference is empty".into()));
    }
    if offset <= r_outer - r_inner {
        return Err(Error::InvalidArgument(
            "inner disk lies inside the outer disk; the difference is an annulus, not a crescent".into(),
        ));
    }
    let xs = (offset * offset + r_outer * r_outer - r_inner * r_inner) / (2.0 * offset);
    let ys = (r_outer * r_outer - xs * xs).max(0.0).sqrt();
    let phi = ys.atan2(xs);
    let alpha = ys.atan2(xs - offset);

    // outer arc counter-clockwise from the upper horn to the lower horn
    let mut boundary = arc_length_samples(
        |t| [r_outer * t.cos(), r_outer * t.sin()],
        phi,
        2.0 * PI - phi,
        target_h,
        true,
    );
    // inner arc clockwise from the lower horn back to the upper one
    let inner = arc_length_samples(
        |t| [offset + r_inner * t.cos(), r_inner * t.sin()],
        2.0 * PI - alpha,
        alpha,
        target_h,
        true,
    );
    boundary.extend_from_slice(&inner[1..inner.len() - 1]);
    mesh_polygon(vec![boundary], target_h)
}

fn inside_polygon(loops: &[Vec<Point>], p: Point) -> bool {
    let mut inside = false;
    for lp in loops {
        let n = lp.len();
        for i in 0..n {
            let (a, b) = (lp[i], lp[(i + 1) % n]);
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}

fn boundary_distance(loops: &[Vec<Point>], p: Point) -> f64 {
    let mut d = f64::INFINITY;
    for lp in loops {
        let n = lp.len();
        for i in 0..n {
            d = d.min(segment_distance(p, lp[i], lp[(i + 1) % n]));
        }
    }
    d
}

const SMOOTHING_ROUNDS: usize = 4;

/// Triangulates the region bounded by closed polygonal loops (even-odd
/// rule). Loop vertices become mesh vertices and loop segments become
/// boundary edges.
fn mesh_polygon(loops: Vec<Vec<Point>>, h: f64) -> Result<TriMesh> {
    let mut points: Vec<Point> = loops.iter().flatten().copied().collect();
    let mut constraints = Vec::new();
    let mut offset = 0;
    for lp in &loops {
        let n = lp.len();
        for i in 0..n {
            constraints.push([offset + i, offset + (i + 1) % n]);
        }
        offset += n;
    }
    let n_fixed = points.len();

    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    // hexagonal lattice anchored at the bounding-box centre
    let centre = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    let dy = h * 3f64.sqrt() / 2.0;
    let jmax = ((hi[1] - lo[1]) / (2.0 * dy)).ceil() as i64 + 1;
    let imax = ((hi[0] - lo[0]) / (2.0 * h)).ceil() as i64 + 1;
    for j in -jmax..=jmax {
        let shift = if j.rem_euclid(2) == 1 { 0.5 * h } else { 0.0 };
        for i in -imax..=imax {
            let p = [centre[0] + i as f64 * h + shift, centre[1] + j as f64 * dy];
            if inside_polygon(&loops, p) && boundary_distance(&loops, p) >= 0.55 * h {
                points.push(p);
            }
        }
    }

    let mut triangles = triangulate(&points, &constraints, &loops)?;
    for _ in 0..SMOOTHING_ROUNDS {
        let mut sum = vec![[0.0f64; 2]; points.len()];
        let mut count = vec![0usize; points.len()];
        for t in &triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                for (x, y) in [(a, b), (b, a)] {
                    sum[x][0] += points[y][0];
                    sum[x][1] += points[y][1];
                    count[x] += 1;
                }
            }
        }
        for v in n_fixed..points.len() {
            if count[v] == 0 {
                continue;
            }
            let p = [sum[v][0] / count[v] as f64, sum[v][1] / count[v] as f64];
            if inside_polygon(&loops, p) && boundary_distance(&loops, p) > 0.25 * h {
                points[v] = p;
            }
        }
        triangles = triangulate(&points, &constraints, &loops)?;
    }
    TriMesh::new(points, triangles)
}

fn triangulate(points: &[Point], constraints: &[[usize; 2]], loops: &[Vec<Point>]) -> Result<Vec<[usize; 3]>> {
    let verts: Vec<Point2<f64>> = points.iter().map(|p| Point2::new(p[0], p[1])).collect();
    let cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::bulk_load_cdt(verts, constraints.to_vec())
        .map_err(|e| Error::InvalidArgument(format!("triangulation failed: {e:?}")))?;
    if cdt.num_vertices() != points.len() {
        return Err(Error::InvalidArgument("duplicate points in mesh generation".into()));
    }
    let mut tris = Vec::with_capacity(cdt.num_inner_faces());
    for face in cdt.inner_faces() {
        let [a, b, c] = face.vertices().map(|v| v.fix().index());
        let (pa, pb, pc) = (points[a], points[b], points[c]);
        let centroid = [(pa[0] + pb[0] + pc[0]) / 3.0, (pa[1] + pb[1] + pc[1]) / 3.0];
        if !inside_polygon(loops, centroid) {
            continue;
        }
        if signed_area(pa, pb, pc) > 0.0 {
            tris.push([a, b, c]);
        } else {
            tris.push([a, c, b]);
        }
    }
    Ok(tris)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::element_measures;

    #[test]
    fn unit_square_half_spacing_has_eight_triangles() {
        let m = generate_rectangle(1.0, 1.0, 0.5).unwrap();
        assert_eq!(m.num_triangles(), 8);
        assert_eq!(element_measures(&m).total_area, 1.0);
    }

    #[test]
    fn rectangle_area_is_exact() {
        let m = generate_rectangle(2.0, 3.0, 0.1).unwrap();
        assert!((element_measures(&m).total_area - 6.0).abs() < 1e-12);
        assert!(m.max_edge_length() <= 1.5 * 0.1);
    }

    #[test]
    fn two_by_two_square_totals_four() {
        let m = generate_rectangle(2.0, 2.0, 1.0).unwrap();
        assert!((element_measures(&m).total_area - 4.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(generate_rectangle(0.0, 1.0, 0.1).is_err());
        assert!(generate_rectangle(1.0, -1.0, 0.1).is_err());
        assert!(generate_rectangle(1.0, 1.0, 0.0).is_err());
        assert!(generate_disk(-1.0, 0.1).is_err());
        assert!(generate_ellipse(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn holed_rectangle_area() {
        let m = generate_rectangle_with_hole(2.0, 2.0, 1.0, 1.0, 0.2).unwrap();
        assert!((element_measures(&m).total_area - 3.0).abs() < 1e-12);
        let m = generate_rectangle_with_hole(2.1, 1.5, 0.9, 0.7, 0.1).unwrap();
        assert!((element_measures(&m).total_area - 2.52).abs() < 1e-12);
        // two boundary loops: 4 + 4 corners, all boundary vertices of degree 2
        assert_eq!(m.boundary_vertices().len(), m.boundary_edges().len());
    }

    #[test]
    fn holed_rectangle_rejects_bad_hole() {
        assert!(generate_rectangle_with_hole(2.0, 2.0, 0.0, 1.0, 0.1).is_err());
        assert!(generate_rectangle_with_hole(2.0, 2.0, 2.0, 1.0, 0.1).is_err());
        assert!(generate_rectangle_with_hole(2.0, 2.0, 1.0, 3.0, 0.1).is_err());
    }

    #[test]
    fn disk_area_and_quality() {
        let m = generate_disk(1.0, 0.05).unwrap();
        let a = element_measures(&m).total_area;
        assert!(a < PI);
        assert!((a - PI).abs() / PI < 0.005, "area {a}");
        assert!(m.min_angle_deg() >= 20.0, "min angle {}", m.min_angle_deg());
        for &v in m.boundary_vertices() {
            let p = m.vertices()[v];
            assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn disk_area_grows_under_refinement() {
        let areas: Vec<f64> = [0.4, 0.2, 0.1, 0.05]
            .iter()
            .map(|&h| element_measures(&generate_disk(1.0, h).unwrap()).total_area)
            .collect();
        for w in areas.windows(2) {
            assert!(w[1] > w[0] && w[1] < PI, "{areas:?}");
        }
    }

    #[test]
    fn degenerate_ellipse_is_the_disk() {
        let d = generate_disk(1.3, 0.1).unwrap();
        let e = generate_ellipse(1.3, 1.3, 0.1).unwrap();
        let (ad, ae) = (element_measures(&d), element_measures(&e));
        assert_eq!(ad.areas.len(), ae.areas.len());
        for (x, y) in ad.areas.iter().zip(&ae.areas) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn ellipse_area() {
        let m = generate_ellipse(3.0, 1.0, 0.05).unwrap();
        let a = element_measures(&m).total_area;
        assert!((a - 3.0 * PI).abs() / (3.0 * PI) < 0.005, "area {a}");
        assert!(m.min_angle_deg() >= 20.0, "min angle {}", m.min_angle_deg());
    }

    #[test]
    fn two_to_one_ellipse_of_area_16_49() {
        let m = generate_ellipse(3.24, 1.62, 0.08).unwrap();
        let a = element_measures(&m).total_area;
        assert!((a - 16.49).abs() / 16.49 < 0.02, "area {a}");
    }

    #[test]
    fn crescent_rejects_non_crossing_circles() {
        assert!(generate_crescent(1.0, 0.5, 2.0, 0.1).is_err());
        assert!(generate_crescent(1.0, 0.5, 0.2, 0.1).is_err());
        assert!(generate_crescent(0.5, 2.0, 0.2, 0.1).is_err());
    }

    #[test]
    fn crescent_is_a_set_difference() {
        let (ro, ri, d) = (1.6, 1.0, 0.9);
        let m = generate_crescent(ro, ri, d, 0.05).unwrap();
        for c in m.centroids() {
            assert!(c[0].hypot(c[1]) < ro);
            assert!((c[0] - d).hypot(c[1]) > ri);
        }
        let a = element_measures(&m).total_area;
        let exact = crescent_area(ro, ri, d);
        assert!((a - exact).abs() / exact < 0.01, "{a} vs {exact}");
        // a single boundary loop
        assert_eq!(m.boundary_vertices().len(), m.boundary_edges().len());
        assert!(m.min_angle_deg() >= 20.0, "min angle {}", m.min_angle_deg());
    }

    #[test]
    fn crescent_area_limits() {
        assert!((crescent_area(1.0, 0.5, 3.0) - PI).abs() < 1e-15);
        assert!((crescent_area(1.0, 0.5, 0.1) - 0.75 * PI).abs() < 1e-12);
    }
}
