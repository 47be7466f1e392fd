use std::collections::HashMap;

use smallvec::SmallVec;

use super::{Edge, TriMesh};
use crate::error::{Error, Result};

/// Incidence tables derived from a face list.
///
/// Built deterministically from the faces alone: edges are sorted, and every
/// incidence list is in ascending face order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyIndex {
    pub vertex_faces: Vec<Vec<usize>>,
    /// Sorted unique edges; an edge id is a position in this list.
    pub edges: Vec<Edge>,
    /// Incident faces per edge (1 on the boundary, 2 inside).
    pub edge_faces: Vec<SmallVec<[usize; 2]>>,
    /// `face_neighbors[f][i]` is the face across edge (f[i], f[i+1]).
    pub face_neighbors: Vec<[Option<usize>; 3]>,
    lookup: HashMap<Edge, usize>,
}

/// Builds adjacency, rejecting edges with more than two incident faces.
pub fn build_adjacency(mesh: &TriMesh) -> Result<AdjacencyIndex> {
    let mut vertex_faces = vec![Vec::new(); mesh.vertices.len()];
    let mut incidences: Vec<(Edge, usize)> = Vec::with_capacity(mesh.faces.len() * 3);
    for (fi, f) in mesh.faces.iter().enumerate() {
        for i in 0..3 {
            vertex_faces[f[i]].push(fi);
            incidences.push((Edge::new(f[i], f[(i + 1) % 3]), fi));
        }
    }
    incidences.sort_unstable();
    let mut edges = Vec::new();
    let mut edge_faces: Vec<SmallVec<[usize; 2]>> = Vec::new();
    for (e, f) in incidences {
        if edges.last() == Some(&e) {
            let faces = edge_faces.last_mut().unwrap();
            faces.push(f);
            if faces.len() > 2 {
                let count = mesh
                    .faces
                    .iter()
                    .filter(|t| (0..3).any(|i| Edge::new(t[i], t[(i + 1) % 3]) == e))
                    .count();
                return Err(Error::NonManifoldEdge {
                    edge: e,
                    faces: count,
                });
            }
        } else {
            edges.push(e);
            edge_faces.push(SmallVec::from_slice(&[f]));
        }
    }
    let lookup: HashMap<Edge, usize> = edges.iter().enumerate().map(|(i, e)| (*e, i)).collect();
    let face_neighbors = mesh
        .faces
        .iter()
        .enumerate()
        .map(|(fi, f)| {
            let mut n = [None; 3];
            for (i, slot) in n.iter_mut().enumerate() {
                let e = Edge::new(f[i], f[(i + 1) % 3]);
                *slot = edge_faces[lookup[&e]].iter().copied().find(|&g| g != fi);
            }
            n
        })
        .collect();
    Ok(AdjacencyIndex {
        vertex_faces,
        edges,
        edge_faces,
        face_neighbors,
        lookup,
    })
}

impl AdjacencyIndex {
    pub fn edge_id(&self, e: Edge) -> Option<usize> {
        self.lookup.get(&e).copied()
    }

    pub fn is_boundary_edge(&self, id: usize) -> bool {
        self.edge_faces[id].len() == 1
    }

    pub fn boundary_vertices(&self, vertex_count: usize) -> Vec<bool> {
        let mut b = vec![false; vertex_count];
        for (id, e) in self.edges.iter().enumerate() {
            if self.is_boundary_edge(id) {
                b[e.0] = true;
                b[e.1] = true;
            }
        }
        b
    }

    /// Vertex neighbours (sorted).
    pub fn vertex_neighbors(&self, vertex_count: usize) -> Vec<Vec<usize>> {
        let mut n = vec![Vec::new(); vertex_count];
        for e in &self.edges {
            n[e.0].push(e.1);
            n[e.1].push(e.0);
        }
        for l in &mut n {
            l.sort_unstable();
        }
        n
    }

    /// Total length of boundary edges.
    pub fn boundary_length(&self, mesh: &TriMesh) -> f64 {
        self.edges
            .iter()
            .enumerate()
            .filter(|(id, _)| self.is_boundary_edge(*id))
            .map(|(_, e)| mesh.edge_length(*e))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec3;

    fn verts(n: usize) -> Vec<Vec3> {
        (0..n)
            .map(|i| Vec3::new(i as f64, (i * i) as f64, 0.0))
            .collect()
    }

    #[test]
    fn single_triangle() {
        let m = TriMesh::new(verts(3), vec![[0, 1, 2]]).unwrap();
        let a = build_adjacency(&m).unwrap();
        assert_eq!(a.edges.len(), 3);
        assert!(a.edge_faces.iter().all(|f| f.len() == 1));
        assert_eq!(a.face_neighbors[0], [None, None, None]);
    }

    #[test]
    fn two_triangles_share_an_edge() {
        let m = TriMesh::new(verts(4), vec![[0, 1, 2], [2, 1, 3]]).unwrap();
        let a = build_adjacency(&m).unwrap();
        assert_eq!(a.edges.len(), 5);
        let shared = a.edge_id(Edge::new(1, 2)).unwrap();
        assert_eq!(a.edge_faces[shared].as_slice(), &[0, 1]);
        assert_eq!(a.face_neighbors[0][1], Some(1));
        assert_eq!(a.edge_faces.iter().filter(|f| f.len() == 1).count(), 4);
    }

    #[test]
    fn three_faces_on_one_edge_is_rejected() {
        let m = TriMesh::new(verts(5), vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]]).unwrap();
        match build_adjacency(&m) {
            Err(Error::NonManifoldEdge { edge, faces }) => {
                assert_eq!(edge, Edge(0, 1));
                assert_eq!(faces, 3);
            }
            other => panic!("expected non-manifold error, got {other:?}"),
        }
    }

    #[test]
    fn rebuild_is_identical() {
        let m = TriMesh::new(verts(4), vec![[0, 1, 2], [2, 1, 3]]).unwrap();
        assert_eq!(build_adjacency(&m).unwrap(), build_adjacency(&m).unwrap());
    }
}
