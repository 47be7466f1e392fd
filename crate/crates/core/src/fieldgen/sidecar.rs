//! Field sidecar files, keyed by element index against a named mesh.
//!
//! Text form (`.csv`):
//!
//! ```text
//! vertex,value              (per-vertex scalar)
//! vertex,x,y,z              (per-vertex vector)
//! edge,v0,v1,value          (per-edge scalar, edges in sorted order)
//! ```
//!
//! Binary form (any other extension): 8-byte magic `FRFIELD1`, a kind byte
//! (0 vertex scalar, 1 vertex vector, 2 edge scalar), the element count as
//! u64, then per element the value(s) as f64; edges are prefixed by their
//! two vertex ids as u64. All little endian.
//!
//! A directory of fields carries a `fields.json` manifest naming the mesh
//! and the sidecar of each available field. Improvement values are raw
//! `nc(e) - nc(e')` estimates: positive means flipping helps.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EdgeField, FeatureFields};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh::{obj, Edge, TriMesh};

const MAGIC: &[u8; 8] = b"FRFIELD1";
pub const MANIFEST: &str = "fields.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    VertexScalar = 0,
    VertexVector = 1,
    EdgeScalar = 2,
}

fn is_csv(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()) == Some("csv")
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn binary_header(kind: Kind, count: usize) -> Vec<u8> {
    let mut b = Vec::with_capacity(17 + count * 8);
    b.extend_from_slice(MAGIC);
    b.push(kind as u8);
    b.extend_from_slice(&(count as u64).to_le_bytes());
    b
}

/// Reads a binary sidecar, checks magic, kind and count, and returns the
/// payload.
fn read_binary(path: &Path, kind: Kind, expected: usize, record: usize) -> Result<Vec<u8>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 17 || &bytes[..8] != MAGIC {
        return Err(Error::parse(path, 0, "not a field sidecar"));
    }
    if bytes[8] != kind as u8 {
        return Err(Error::parse(
            path,
            0,
            format!("field kind {} where {} was expected", bytes[8], kind as u8),
        ));
    }
    let count = u64::from_le_bytes(bytes[9..17].try_into().unwrap()) as usize;
    let payload = &bytes[17..];
    let found = payload.len() / record;
    if count != expected || payload.len() != count * record {
        return Err(Error::ElementCountMismatch {
            path: path.to_path_buf(),
            expected,
            found: if count == expected { found } else { count },
        });
    }
    Ok(payload.to_vec())
}

fn f64_at(b: &[u8], o: usize) -> f64 {
    f64::from_le_bytes(b[o..o + 8].try_into().unwrap())
}

fn u64_at(b: &[u8], o: usize) -> u64 {
    u64::from_le_bytes(b[o..o + 8].try_into().unwrap())
}

/// Parses CSV rows after the header; each row must start with its index.
fn read_csv_rows(path: &Path, columns: usize, expected: usize) -> Result<Vec<Vec<String>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::with_capacity(expected);
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<String> = line.split(',').map(|c| c.trim().to_string()).collect();
        if cols.len() != columns {
            return Err(Error::parse(
                path,
                i + 1,
                format!("expected {columns} columns, found {}", cols.len()),
            ));
        }
        if cols[0] != rows.len().to_string() {
            return Err(Error::parse(
                path,
                i + 1,
                format!("expected index {}, found {}", rows.len(), cols[0]),
            ));
        }
        rows.push(cols);
    }
    if rows.len() != expected {
        return Err(Error::ElementCountMismatch {
            path: path.to_path_buf(),
            expected,
            found: rows.len(),
        });
    }
    Ok(rows)
}

fn parse_f64(path: &Path, row: usize, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|e| Error::parse(path, row + 2, format!("bad number {s:?}: {e}")))
}

pub fn write_vertex_scalars(path: impl AsRef<Path>, values: &[f64]) -> Result<()> {
    let path = path.as_ref();
    if is_csv(path) {
        let mut s = String::from("vertex,value\n");
        for (i, v) in values.iter().enumerate() {
            let _ = writeln!(s, "{i},{v}");
        }
        write_bytes(path, s.as_bytes())
    } else {
        let mut b = binary_header(Kind::VertexScalar, values.len());
        for v in values {
            b.extend_from_slice(&v.to_le_bytes());
        }
        write_bytes(path, &b)
    }
}

pub fn read_vertex_scalars(path: impl AsRef<Path>, expected: usize) -> Result<Vec<f64>> {
    let path = path.as_ref();
    if is_csv(path) {
        read_csv_rows(path, 2, expected)?
            .iter()
            .enumerate()
            .map(|(r, c)| parse_f64(path, r, &c[1]))
            .collect()
    } else {
        let b = read_binary(path, Kind::VertexScalar, expected, 8)?;
        Ok((0..expected).map(|i| f64_at(&b, 8 * i)).collect())
    }
}

pub fn write_vertex_vectors(path: impl AsRef<Path>, values: &[Vec3]) -> Result<()> {
    let path = path.as_ref();
    if is_csv(path) {
        let mut s = String::from("vertex,x,y,z\n");
        for (i, v) in values.iter().enumerate() {
            let _ = writeln!(s, "{i},{},{},{}", v.x, v.y, v.z);
        }
        write_bytes(path, s.as_bytes())
    } else {
        let mut b = binary_header(Kind::VertexVector, values.len());
        for v in values {
            for c in v.iter() {
                b.extend_from_slice(&c.to_le_bytes());
            }
        }
        write_bytes(path, &b)
    }
}

pub fn read_vertex_vectors(path: impl AsRef<Path>, expected: usize) -> Result<Vec<Vec3>> {
    let path = path.as_ref();
    if is_csv(path) {
        read_csv_rows(path, 4, expected)?
            .iter()
            .enumerate()
            .map(|(r, c)| {
                Ok(Vec3::new(
                    parse_f64(path, r, &c[1])?,
                    parse_f64(path, r, &c[2])?,
                    parse_f64(path, r, &c[3])?,
                ))
            })
            .collect()
    } else {
        let b = read_binary(path, Kind::VertexVector, expected, 24)?;
        Ok((0..expected)
            .map(|i| {
                Vec3::new(
                    f64_at(&b, 24 * i),
                    f64_at(&b, 24 * i + 8),
                    f64_at(&b, 24 * i + 16),
                )
            })
            .collect())
    }
}

pub fn write_edge_scalars(path: impl AsRef<Path>, field: &EdgeField) -> Result<()> {
    let path = path.as_ref();
    if is_csv(path) {
        let mut s = String::from("edge,v0,v1,value\n");
        for (i, (e, v)) in field.edges.iter().zip(&field.values).enumerate() {
            let _ = writeln!(s, "{i},{},{},{v}", e.0, e.1);
        }
        write_bytes(path, s.as_bytes())
    } else {
        let mut b = binary_header(Kind::EdgeScalar, field.len());
        for (e, v) in field.edges.iter().zip(&field.values) {
            b.extend_from_slice(&(e.0 as u64).to_le_bytes());
            b.extend_from_slice(&(e.1 as u64).to_le_bytes());
            b.extend_from_slice(&v.to_le_bytes());
        }
        write_bytes(path, &b)
    }
}

/// Reads a per-edge field whose rows must list exactly `edges`, in order.
pub fn read_edge_scalars(path: impl AsRef<Path>, edges: &[Edge]) -> Result<EdgeField> {
    let path = path.as_ref();
    let mut read_edges = Vec::with_capacity(edges.len());
    let mut values = Vec::with_capacity(edges.len());
    if is_csv(path) {
        for (r, c) in read_csv_rows(path, 4, edges.len())?.iter().enumerate() {
            let v = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| Error::parse(path, r + 2, format!("bad vertex id {s:?}: {e}")))
            };
            read_edges.push(Edge::new(v(&c[1])?, v(&c[2])?));
            values.push(parse_f64(path, r, &c[3])?);
        }
    } else {
        let b = read_binary(path, Kind::EdgeScalar, edges.len(), 24)?;
        for i in 0..edges.len() {
            read_edges.push(Edge::new(
                u64_at(&b, 24 * i) as usize,
                u64_at(&b, 24 * i + 8) as usize,
            ));
            values.push(f64_at(&b, 24 * i + 16));
        }
    }
    if let Some(i) = (0..edges.len()).find(|&i| read_edges[i] != edges[i]) {
        return Err(Error::Format(format!(
            "{}: edge {i} is ({}, {}) but the mesh has ({}, {})",
            path.display(),
            read_edges[i].0,
            read_edges[i].1,
            edges[i].0,
            edges[i].1
        )));
    }
    Ok(EdgeField {
        edges: read_edges,
        values,
    })
}

/// Sidecar format used when writing a field directory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SidecarFormat {
    #[default]
    Csv,
    Binary,
}

impl SidecarFormat {
    fn ext(self) -> &'static str {
        match self {
            SidecarFormat::Csv => "csv",
            SidecarFormat::Binary => "bin",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldManifest {
    pub mesh: String,
    pub vertices: usize,
    pub edges: usize,
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub improvement: Option<String>,
}

/// Any subset of the three guidance fields for one mesh.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FieldSet {
    pub epsilon: f64,
    pub distance: Option<Vec<f64>>,
    pub direction: Option<Vec<Vec3>>,
    pub improvement: Option<EdgeField>,
}

impl FieldSet {
    pub fn from_features(fields: &FeatureFields, improvement: Option<EdgeField>) -> Self {
        Self {
            epsilon: fields.epsilon,
            distance: Some(fields.distance.clone()),
            direction: Some(fields.direction.clone()),
            improvement,
        }
    }

    /// Writes `mesh` as `mesh.obj`, the available fields, and the manifest
    /// into `dir`.
    pub fn write_dir(
        &self,
        dir: impl AsRef<Path>,
        mesh: &TriMesh,
        format: SidecarFormat,
    ) -> Result<PathBuf> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        obj::write_obj(mesh, dir.join("mesh.obj"))?;
        let name = |stem: &str| format!("{stem}.{}", format.ext());
        let mut manifest = FieldManifest {
            mesh: "mesh.obj".into(),
            vertices: mesh.vertices.len(),
            edges: mesh.edges().len(),
            epsilon: self.epsilon,
            distance: None,
            direction: None,
            improvement: None,
        };
        if let Some(d) = &self.distance {
            write_vertex_scalars(dir.join(name("distance")), d)?;
            manifest.distance = Some(name("distance"));
        }
        if let Some(r) = &self.direction {
            write_vertex_vectors(dir.join(name("direction")), r)?;
            manifest.direction = Some(name("direction"));
        }
        if let Some(s) = &self.improvement {
            write_edge_scalars(dir.join(name("improvement")), s)?;
            manifest.improvement = Some(name("improvement"));
        }
        let path = dir.join(MANIFEST);
        let text =
            serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    /// Loads the manifest in `dir`, its mesh and whichever fields it lists.
    pub fn read_dir(dir: impl AsRef<Path>) -> Result<(TriMesh, FieldSet)> {
        let dir = dir.as_ref();
        let path = dir.join(MANIFEST);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let m: FieldManifest = serde_json::from_str(&text)
            .map_err(|e| Error::parse(&path, e.line(), e.to_string()))?;
        let mesh = obj::read_obj(dir.join(&m.mesh))?;
        if mesh.vertices.len() != m.vertices {
            return Err(Error::ElementCountMismatch {
                path: dir.join(&m.mesh),
                expected: m.vertices,
                found: mesh.vertices.len(),
            });
        }
        let edges = mesh.edges();
        let mut set = FieldSet {
            epsilon: m.epsilon,
            ..Default::default()
        };
        if let Some(f) = &m.distance {
            set.distance = Some(read_vertex_scalars(dir.join(f), mesh.vertices.len())?);
        }
        if let Some(f) = &m.direction {
            set.direction = Some(read_vertex_vectors(dir.join(f), mesh.vertices.len())?);
        }
        if let Some(f) = &m.improvement {
            set.improvement = Some(read_edge_scalars(dir.join(f), &edges)?);
        }
        Ok((mesh, set))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (TriMesh, FieldSet) {
        let mesh = crate::shapes::grid_plane(3, 1.0, 0.0);
        let n = mesh.vertices.len();
        let edges = mesh.edges();
        let set = FieldSet {
            epsilon: 0.2,
            distance: Some((0..n).map(|i| i as f64 * 0.01 + 1.0 / 3.0).collect()),
            direction: Some(
                (0..n)
                    .map(|i| Vec3::new(0.1 * i as f64, -0.7, 1e-17))
                    .collect(),
            ),
            improvement: Some(EdgeField {
                values: (0..edges.len()).map(|i| (i as f64).sin()).collect(),
                edges,
            }),
        };
        (mesh, set)
    }

    #[test]
    fn directory_round_trip_both_formats() {
        let (mesh, set) = sample();
        for format in [SidecarFormat::Csv, SidecarFormat::Binary] {
            let dir = tempfile::tempdir().unwrap();
            set.write_dir(dir.path(), &mesh, format).unwrap();
            let (m2, s2) = FieldSet::read_dir(dir.path()).unwrap();
            assert!(m2.bit_eq(&mesh));
            assert_eq!(s2, set);
        }
    }

    #[test]
    fn truncated_and_mismatched_files_fail() {
        let (_, set) = sample();
        let dir = tempfile::tempdir().unwrap();
        let d = set.distance.unwrap();
        for name in ["d.csv", "d.bin"] {
            let p = dir.path().join(name);
            write_vertex_scalars(&p, &d).unwrap();
            assert!(matches!(
                read_vertex_scalars(&p, d.len() + 1),
                Err(Error::ElementCountMismatch { .. })
            ));
            let bytes = std::fs::read(&p).unwrap();
            std::fs::write(&p, &bytes[..bytes.len() / 2]).unwrap();
            assert!(read_vertex_scalars(&p, d.len()).is_err());
        }
    }
}
