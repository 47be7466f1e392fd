//! Indexed triangle meshes, adjacency, guarded local edits and discrete
//! operators.

mod adjacency;
mod edit;
mod laplacian;
pub mod obj;
mod simplify;

pub use adjacency::{build_adjacency, AdjacencyIndex};
pub use edit::{edge_collapse, edge_flip, CollapseTarget, EditGuard, EditRejection, MeshEditor};
pub use laplacian::{cotangent_laplacian, LaplacianResult, MAX_COTANGENT};
pub use simplify::{simplify_short_edges, SimplifyReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{triangle_area, triangle_area_vector, triangle_normal, Aabb, Vec3};

/// Undirected edge, stored as a sorted vertex pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge(pub usize, pub usize);

impl Edge {
    pub fn new(a: usize, b: usize) -> Self {
        if a <= b {
            Edge(a, b)
        } else {
            Edge(b, a)
        }
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0 == v || self.1 == v
    }
}

/// Triangle mesh: vertex positions and counterclockwise index triples.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
}

impl TriMesh {
    /// Builds a mesh after checking index ranges, repeated vertices and
    /// finite coordinates.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = Self { vertices, faces };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, v) in self.vertices.iter().enumerate() {
            if !v.iter().all(|c| c.is_finite()) {
                return Err(Error::NonFiniteVertex { vertex: i });
            }
        }
        let n = self.vertices.len();
        for (fi, f) in self.faces.iter().enumerate() {
            for &idx in f {
                if idx >= n {
                    return Err(Error::FaceIndexOutOfRange {
                        face: fi,
                        index: idx,
                        count: n,
                    });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                let vertex = if f[0] == f[1] || f[0] == f[2] {
                    f[0]
                } else {
                    f[1]
                };
                return Err(Error::RepeatedVertex { face: fi, vertex });
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn face_positions(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn face_normal(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.face_positions(f);
        triangle_normal(&a, &b, &c)
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.face_positions(f);
        triangle_area(&a, &b, &c)
    }

    pub fn face_normals(&self) -> Vec<Vec3> {
        (0..self.faces.len()).map(|f| self.face_normal(f)).collect()
    }

    pub fn face_areas(&self) -> Vec<f64> {
        (0..self.faces.len()).map(|f| self.face_area(f)).collect()
    }

    pub fn total_area(&self) -> f64 {
        self.face_areas().iter().sum()
    }

    /// Area-weighted vertex normals.
    pub fn vertex_normals(&self) -> Vec<Vec3> {
        let mut acc = vec![Vec3::zeros(); self.vertices.len()];
        for f in &self.faces {
            let n = triangle_area_vector(
                &self.vertices[f[0]],
                &self.vertices[f[1]],
                &self.vertices[f[2]],
            );
            for &v in f {
                acc[v] += n;
            }
        }
        acc.iter().map(crate::geom::normalize_or_zero).collect()
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter())
    }

    /// Sorted list of unique undirected edges.
    pub fn edges(&self) -> Vec<Edge> {
        let mut edges: Vec<Edge> = self
            .faces
            .iter()
            .flat_map(|f| {
                [
                    Edge::new(f[0], f[1]),
                    Edge::new(f[1], f[2]),
                    Edge::new(f[2], f[0]),
                ]
            })
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    pub fn edge_length(&self, e: Edge) -> f64 {
        (self.vertices[e.0] - self.vertices[e.1]).norm()
    }

    pub fn median_edge_length(&self) -> Option<f64> {
        let lens: Vec<f64> = self.edges().iter().map(|&e| self.edge_length(e)).collect();
        crate::geom::quantile(&lens, 0.5)
    }

    /// V - E + F.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges().len() as i64 + self.faces.len() as i64
    }

    /// Drops vertices referenced by no face, remapping face indices.
    /// Returns the old-to-new vertex map.
    pub fn remove_unreferenced_vertices(&mut self) -> Vec<Option<usize>> {
        let mut used = vec![false; self.vertices.len()];
        for f in &self.faces {
            for &v in f {
                used[v] = true;
            }
        }
        let mut map = vec![None; self.vertices.len()];
        let mut verts = Vec::with_capacity(self.vertices.len());
        for (i, v) in self.vertices.iter().enumerate() {
            if used[i] {
                map[i] = Some(verts.len());
                verts.push(*v);
            }
        }
        for f in &mut self.faces {
            for v in f.iter_mut() {
                *v = map[*v].expect("referenced vertex");
            }
        }
        self.vertices = verts;
        map
    }

    /// Applies `rotation` (about the origin) to every vertex.
    pub fn transformed(&self, rotation: &nalgebra::Matrix3<f64>) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(|v| rotation * v).collect(),
            faces: self.faces.clone(),
        }
    }

    pub fn scaled(&self, factor: f64) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(|v| v * factor).collect(),
            faces: self.faces.clone(),
        }
    }

    /// Bit-level fingerprint of positions and faces, for "unchanged" checks.
    pub fn bit_eq(&self, other: &TriMesh) -> bool {
        self.faces == other.faces
            && self.vertices.len() == other.vertices.len()
            && self.vertices.iter().zip(&other.vertices).all(|(a, b)| {
                a.iter()
                    .zip(b.iter())
                    .all(|(x, y)| x.to_bits() == y.to_bits())
            })
    }

    /// Smallest face area considered non-degenerate for this mesh:
    /// `1e-12 * bbox_diagonal^2`.
    pub fn area_epsilon(&self) -> f64 {
        let d = self.bounds().diagonal();
        1e-12 * d * d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_indices() {
        let v = vec![Vec3::zeros(), Vec3::x(), Vec3::y()];
        assert!(matches!(
            TriMesh::new(v.clone(), vec![[0, 1, 3]]),
            Err(Error::FaceIndexOutOfRange { index: 3, .. })
        ));
        assert!(matches!(
            TriMesh::new(v.clone(), vec![[0, 1, 1]]),
            Err(Error::RepeatedVertex { vertex: 1, .. })
        ));
        assert!(TriMesh::new(v, vec![[0, 1, 2]]).is_ok());
    }

    #[test]
    fn edges_are_unique_and_sorted() {
        let m = TriMesh::new(
            vec![
                Vec3::zeros(),
                Vec3::x(),
                Vec3::y(),
                Vec3::new(1.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [1, 3, 2]],
        )
        .unwrap();
        assert_eq!(
            m.edges(),
            vec![Edge(0, 1), Edge(0, 2), Edge(1, 2), Edge(1, 3), Edge(2, 3)]
        );
        assert_eq!(m.euler_characteristic(), 1);
    }
}
