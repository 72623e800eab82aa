//! Text artifacts: density fields, iteration traces and legacy VTK.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::optimize::IterRecord;
use crate::rearrange::{DensityField, RearrangementClass};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityHeader {
    pub densities: Vec<f64>,
    pub target_areas: Vec<f64>,
    pub achieved_areas: Vec<f64>,
}

/// Two comment lines (a title and a JSON header), then `elem density` per line.
pub fn write_density(field: &DensityField, class: &RearrangementClass) -> String {
    let header = DensityHeader {
        densities: class.densities().to_vec(),
        target_areas: class.target_areas().to_vec(),
        achieved_areas: field.achieved_areas().to_vec(),
    };
    let mut out = String::from("# plateopt density field\n");
    let json = serde_json::to_string(&header).expect("header serializes");
    writeln!(out, "# {json}").unwrap();
    for (k, v) in field.values().iter().enumerate() {
        writeln!(out, "{k} {v}").unwrap();
    }
    out
}

/// Parses a density file. The header is optional; element indices must run
/// 0, 1, 2, … in order.
pub fn parse_density(text: &str) -> Result<(Option<DensityHeader>, Vec<f64>)> {
    let mut header = None;
    let mut values = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() {
            continue;
        }
        if let Some(c) = s.strip_prefix('#') {
            let c = c.trim();
            if c.starts_with('{') {
                header = Some(serde_json::from_str(c).map_err(|e| Error::Parse {
                    line,
                    msg: format!("bad header: {e}"),
                })?);
            }
            continue;
        }
        let mut it = s.split_whitespace();
        let (Some(k), Some(v), None) = (it.next(), it.next(), it.next()) else {
            return Err(Error::Parse {
                line,
                msg: format!("expected 'elem density', got '{s}'"),
            });
        };
        let k: usize = k.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("bad element index '{k}'"),
        })?;
        if k != values.len() {
            return Err(Error::Parse {
                line,
                msg: format!("expected element {}, got {k}", values.len()),
            });
        }
        let v: f64 = v.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("bad density '{v}'"),
        })?;
        values.push(v);
    }
    Ok((header, values))
}

pub const TRACE_HEADER: &str = "iter,eigenvalue,delta_rho_l2,step_kind";

/// Values use Rust's shortest round-trip formatting, so identical runs give
/// identical bytes.
pub fn write_trace_csv(trace: &[IterRecord]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in trace {
        writeln!(out, "{},{:?},{:?},{}", r.iter, r.eigenvalue, r.delta_rho_l2, r.step_kind).unwrap();
    }
    out
}

/// Legacy ASCII unstructured grid with the density as cell data and the
/// eigenfunction (vertex values) as point data.
pub fn write_vtk(mesh: &TriMesh, density: &[f64], eigenfunction: &[f64], title: &str) -> Result<String> {
    if density.len() != mesh.num_triangles() {
        return Err(Error::InvalidArgument(format!(
            "{} densities for {} triangles",
            density.len(),
            mesh.num_triangles()
        )));
    }
    if eigenfunction.len() != mesh.num_vertices() {
        return Err(Error::InvalidArgument(format!(
            "{} eigenfunction values for {} vertices",
            eigenfunction.len(),
            mesh.num_vertices()
        )));
    }
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    let nt = mesh.num_triangles();
    let mut out = String::new();
    writeln!(out, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID").unwrap();
    writeln!(out, "POINTS {} double", mesh.num_vertices()).unwrap();
    for p in mesh.vertices() {
        writeln!(out, "{:?} {:?} 0", p[0], p[1]).unwrap();
    }
    writeln!(out, "CELLS {nt} {}", 4 * nt).unwrap();
    for t in mesh.triangles() {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    writeln!(out, "CELL_TYPES {nt}").unwrap();
    for _ in 0..nt {
        out.push_str("5\n");
    }
    writeln!(out, "CELL_DATA {nt}\nSCALARS density double 1\nLOOKUP_TABLE default").unwrap();
    for d in density {
        writeln!(out, "{d:?}").unwrap();
    }
    writeln!(out, "POINT_DATA {}\nSCALARS eigenfunction double 1\nLOOKUP_TABLE default", mesh.num_vertices()).unwrap();
    for u in eigenfunction {
        writeln!(out, "{u:?}").unwrap();
    }
    Ok(out)
}

pub fn save(path: impl AsRef<Path>, contents: &str) -> Result<()> {
    std::fs::write(path, contents)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{element_measures, generate_rectangle};
    use crate::optimize::StepKind;

    #[test]
    fn density_round_trip() {
        let mesh = generate_rectangle(1.0, 1.0, 0.5).unwrap();
        let m = element_measures(&mesh);
        let class = RearrangementClass::new(vec![1.0, 2.5], vec![0.5, 0.5]).unwrap();
        let f = DensityField::stripes(&class, &mesh, &m).unwrap();
        let text = write_density(&f, &class);
        let (h, v) = parse_density(&text).unwrap();
        let h = h.unwrap();
        assert_eq!(v, f.values());
        assert_eq!(h.achieved_areas, f.achieved_areas());
        assert_eq!(DensityField::from_values(&class, &v, &m).unwrap(), f);
    }

    #[test]
    fn density_parse_errors() {
        assert!(matches!(parse_density("0 1\n2 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_density("0 x\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_density("# c\n0 1 2\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_density("# {bad\n"), Err(Error::Parse { line: 1, .. })));
        let (h, v) = parse_density("# plain comment\n0 1.5\n").unwrap();
        assert!(h.is_none());
        assert_eq!(v, vec![1.5]);
    }

    #[test]
    fn trace_csv_layout() {
        let t = [
            IterRecord {
                iter: 1,
                eigenvalue: 2.5,
                delta_rho_l2: 0.125,
                step_kind: StepKind::Bathtub,
            },
            IterRecord {
                iter: 2,
                eigenvalue: 2.5,
                delta_rho_l2: 0.0,
                step_kind: StepKind::Stop,
            },
        ];
        assert_eq!(
            write_trace_csv(&t),
            "iter,eigenvalue,delta_rho_l2,step_kind\n1,2.5,0.125,bathtub\n2,2.5,0.0,stop\n"
        );
    }

    #[test]
    fn vtk_structure() {
        let mesh = generate_rectangle(1.0, 1.0, 0.5).unwrap();
        let rho = vec![1.0; mesh.num_triangles()];
        let u = vec![0.0; mesh.num_vertices()];
        let s = write_vtk(&mesh, &rho, &u, "test").unwrap();
        assert!(s.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(s.contains(&format!("CELLS {} {}", mesh.num_triangles(), 4 * mesh.num_triangles())));
        assert!(s.contains(&format!("CELL_DATA {}\nSCALARS density double 1", mesh.num_triangles())));
        assert!(s.contains("SCALARS eigenfunction double 1"));
        assert_eq!(s.matches("SCALARS density").count(), 1);
        assert!(write_vtk(&mesh, &rho[1..], &u, "x").is_err());
    }
}
