//! Files written to disk and read back.

use plateopt_core::io::{parse_density, save, write_density, write_vtk};
use plateopt_core::mesh::{element_measures, generate_rectangle_with_hole, load_mesh, save_mesh};
use plateopt_core::rearrange::{DensityField, RearrangementClass};

#[test]
fn mesh_and_density_survive_a_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = generate_rectangle_with_hole(2.1, 1.5, 0.9, 0.7, 0.15).unwrap();
    let path = dir.path().join("plate.mesh");
    save_mesh(&mesh, &path).unwrap();
    let back = load_mesh(&path).unwrap();
    assert_eq!(back.vertices(), mesh.vertices());
    assert_eq!(back.triangles(), mesh.triangles());
    assert_eq!(back.boundary_edges().len(), mesh.boundary_edges().len());

    let m = element_measures(&mesh);
    assert!((m.total_area - 2.52).abs() < 1e-12);
    let class = RearrangementClass::new(vec![1.0, 2.0], vec![1.4, 1.12]).unwrap();
    let rho = DensityField::random(&class, &m, 9).unwrap();
    let dpath = dir.path().join("density.txt");
    save(&dpath, &write_density(&rho, &class)).unwrap();
    let (header, values) = parse_density(&std::fs::read_to_string(&dpath).unwrap()).unwrap();
    assert_eq!(header.unwrap().densities, vec![1.0, 2.0]);
    assert_eq!(DensityField::from_values(&class, &values, &m).unwrap(), rho);
}

#[test]
fn vtk_counts_match_the_mesh() {
    let mesh = generate_rectangle_with_hole(2.1, 1.5, 0.9, 0.7, 0.3).unwrap();
    let rho = vec![1.0; mesh.num_triangles()];
    let u = vec![0.5; mesh.num_vertices()];
    let vtk = write_vtk(&mesh, &rho, &u, "holed").unwrap();
    let cell_types = vtk.lines().skip_while(|l| !l.starts_with("CELL_TYPES")).next().unwrap();
    assert_eq!(cell_types, format!("CELL_TYPES {}", mesh.num_triangles()));
    assert_eq!(vtk.matches("SCALARS density double 1").count(), 1);
    assert!(vtk.contains(&format!("POINT_DATA {}", mesh.num_vertices())));
}
