//! Wavefront OBJ subset: `v` and triangular `f` records.
//!
//! Normals in the input are ignored; on output, area-weighted vertex normals
//! are recomputed and written as `vn` records.

use std::fmt::Write as _;
use std::path::Path;

use super::TriMesh;
use crate::error::{Error, Result};
use crate::geom::Vec3;

pub fn parse_obj(text: &str, origin: &Path) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let coords: Vec<f64> = it
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::parse(origin, lineno + 1, format!("bad vertex: {e}")))?;
                if coords.len() != 3 {
                    return Err(Error::parse(
                        origin,
                        lineno + 1,
                        "vertex needs three coordinates",
                    ));
                }
                vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = it
                    .map(|t| resolve_index(t, vertices.len()))
                    .collect::<std::result::Result<_, String>>()
                    .map_err(|e| Error::parse(origin, lineno + 1, e))?;
                if idx.len() != 3 {
                    return Err(Error::parse(
                        origin,
                        lineno + 1,
                        format!("only triangles are supported, found a {}-gon", idx.len()),
                    ));
                }
                faces.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, faces)
}

fn resolve_index(token: &str, count: usize) -> std::result::Result<usize, String> {
    let head = token.split('/').next().unwrap_or("");
    let i: i64 = head
        .parse()
        .map_err(|_| format!("bad face index {token:?}"))?;
    let resolved = if i > 0 {
        i - 1
    } else if i < 0 {
        count as i64 + i
    } else {
        return Err("face index 0 is invalid".into());
    };
    if resolved < 0 {
        return Err(format!("face index {i} out of range"));
    }
    Ok(resolved as usize)
}

pub fn read_obj(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text, path)
}

/// Serializes vertices, recomputed normals and faces in index order.
pub fn to_obj_string(mesh: &TriMesh) -> String {
    let mut s = String::with_capacity(mesh.vertices.len() * 64 + mesh.faces.len() * 32);
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    for n in mesh.vertex_normals() {
        let _ = writeln!(s, "vn {} {} {}", n.x, n.y, n.z);
    }
    for f in &mesh.faces {
        let (a, b, c) = (f[0] + 1, f[1] + 1, f[2] + 1);
        let _ = writeln!(s, "f {a}//{a} {b}//{b} {c}//{c}");
    }
    s
}

pub fn write_obj(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_obj_string(mesh)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_slashes_and_negative_indices() {
        let text = "# tri\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1/1/1 2//1 -1\n";
        let m = parse_obj(text, Path::new("t.obj")).unwrap();
        assert_eq!(m.faces, vec![[0, 1, 2]]);
    }

    #[test]
    fn rejects_quads_and_bad_indices() {
        let quad = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        assert!(matches!(
            parse_obj(quad, Path::new("q.obj")),
            Err(Error::Parse { line: 5, .. })
        ));
        let bad = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 7\n";
        assert!(parse_obj(bad, Path::new("b.obj")).is_err());
    }

    #[test]
    fn round_trip_is_exact() {
        let m = crate::shapes::icosphere(2);
        let back = parse_obj(&to_obj_string(&m), Path::new("mem")).unwrap();
        assert!(back.bit_eq(&m));
    }
}
