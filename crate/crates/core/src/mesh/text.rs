//! Plain-text mesh format.
//!
//! ```text
//! nv nt nb
//! x y            (nv lines)
//! i j k          (nt lines, 0-based)
//! a b            (nb lines, boundary edges)
//! ```
//!
//! Tokens are whitespace separated and `#` starts a comment that runs to the
//! end of the line.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Point, TriMesh};
use crate::error::{Error, Result};

pub fn write_mesh(mesh: &TriMesh) -> String {
    let mut s = String::new();
    s.push_str("# plateopt triangle mesh: nv nt nb, vertices, triangles, boundary edges\n");
    let _ = writeln!(
        s,
        "{} {} {}",
        mesh.num_vertices(),
        mesh.num_triangles(),
        mesh.boundary_edges().len()
    );
    for p in mesh.vertices() {
        let _ = writeln!(s, "{} {}", p[0], p[1]);
    }
    for t in mesh.triangles() {
        let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
    }
    for e in mesh.boundary_edges() {
        let _ = writeln!(s, "{} {}", e[0], e[1]);
    }
    s
}

pub fn save_mesh(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_mesh(mesh))?;
    Ok(())
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriMesh> {
    parse_mesh(&fs::read_to_string(path)?)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next non-empty line with comments stripped, tokenized.
    fn next_record(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, raw) in self.inner.by_ref() {
            let body = raw.split('#').next().unwrap_or("");
            let tokens: Vec<&str> = body.split_whitespace().collect();
            if !tokens.is_empty() {
                return Some((i + 1, tokens));
            }
        }
        None
    }

    fn expect(&mut self, what: &str, width: usize, last_line: usize) -> Result<(usize, Vec<&'a str>)> {
        let (line, tokens) = self.next_record().ok_or_else(|| Error::Parse {
            line: last_line,
            msg: format!("unexpected end of file, expected {what}"),
        })?;
        if tokens.len() != width {
            return Err(Error::Parse {
                line,
                msg: format!("expected {width} values for {what}, found {}", tokens.len()),
            });
        }
        Ok((line, tokens))
    }
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse '{tok}'"),
    })
}

pub fn parse_mesh(text: &str) -> Result<TriMesh> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (mut line, header) = lines.expect("header 'nv nt nb'", 3, 0)?;
    let nv: usize = parse_num(header[0], line)?;
    let nt: usize = parse_num(header[1], line)?;
    let nb: usize = parse_num(header[2], line)?;

    let mut vertices: Vec<Point> = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (l, tok) = lines.expect("vertex 'x y'", 2, line)?;
        line = l;
        vertices.push([parse_num(tok[0], l)?, parse_num(tok[1], l)?]);
    }
    let mut triangles = Vec::with_capacity(nt);
    let mut tri_lines = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (l, tok) = lines.expect("triangle 'i j k'", 3, line)?;
        line = l;
        let tri: [usize; 3] = [parse_num(tok[0], l)?, parse_num(tok[1], l)?, parse_num(tok[2], l)?];
        if let Some(&v) = tri.iter().find(|&&v| v >= nv) {
            return Err(Error::Parse {
                line: l,
                msg: format!("vertex index {v} out of range (nv = {nv})"),
            });
        }
        triangles.push(tri);
        tri_lines.push(l);
    }
    let mut boundary = BTreeSet::new();
    for _ in 0..nb {
        let (l, tok) = lines.expect("boundary edge 'a b'", 2, line)?;
        line = l;
        let (a, b): (usize, usize) = (parse_num(tok[0], l)?, parse_num(tok[1], l)?);
        if a >= nv || b >= nv {
            return Err(Error::Parse {
                line: l,
                msg: format!("boundary edge ({a}, {b}) out of range (nv = {nv})"),
            });
        }
        boundary.insert((a.min(b), a.max(b)));
    }
    if let Some((l, _)) = lines.next_record() {
        return Err(Error::Parse {
            line: l,
            msg: "trailing data after boundary edges".into(),
        });
    }

    let mesh = TriMesh::new(vertices, triangles).map_err(|e| match e {
        Error::InvalidMesh(msg) => {
            // point at the offending triangle when the message names one
            let line = msg
                .strip_prefix("triangle ")
                .and_then(|r| r.split_whitespace().next())
                .and_then(|t| t.parse::<usize>().ok())
                .and_then(|t| tri_lines.get(t).copied())
                .unwrap_or(line);
            Error::Parse { line, msg }
        }
        other => other,
    })?;
    let derived: BTreeSet<(usize, usize)> = mesh
        .boundary_edges()
        .iter()
        .map(|&[a, b]| (a.min(b), a.max(b)))
        .collect();
    if derived != boundary {
        return Err(Error::Parse {
            line,
            msg: format!(
                "boundary edge list ({} edges) does not match the mesh boundary ({} edges)",
                boundary.len(),
                derived.len()
            ),
        });
    }
    Ok(mesh)
}
