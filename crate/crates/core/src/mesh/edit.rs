use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::{build_adjacency, Edge, TriMesh};
use crate::error::{Error, Result};
use crate::geom::{angle_between, triangle_area, triangle_area_vector, triangle_min_angle, Vec3};

/// Invariants every candidate edit must satisfy before it is applied.
///
/// Quality is enforced relative to the edited footprint: an edit may not
/// push the smallest angle below `min_angle` unless the footprint already
/// was below it, and in that case it may not make it worse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EditGuard {
    /// Largest allowed rotation of any face normal, radians.
    pub max_normal_rotation: f64,
    /// Smallest acceptable triangle angle, radians.
    pub min_angle: f64,
    /// Reject edits that would create an edge with more than two faces.
    pub manifold: bool,
    /// Enforce the link condition on collapses.
    pub link_condition: bool,
}

impl Default for EditGuard {
    fn default() -> Self {
        Self {
            max_normal_rotation: 75f64.to_radians(),
            min_angle: 1f64.to_radians(),
            manifold: true,
            link_condition: true,
        }
    }
}

impl EditGuard {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("max_normal_rotation", self.max_normal_rotation),
            ("min_angle", self.min_angle),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "edit guard {name} must be finite and positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Why an edit was refused. The mesh is untouched in every case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EditRejection {
    MissingEdge,
    BoundaryEdge,
    NonManifoldEdge,
    /// Faces around the edge disagree on orientation.
    InconsistentOrientation,
    DuplicateEdge,
    NormalRotation {
        radians: f64,
    },
    Degenerate,
    LowQuality {
        radians: f64,
    },
    LinkCondition,
    NonFinite,
}

impl fmt::Display for EditRejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EditRejection::MissingEdge => write!(f, "edge does not exist"),
            EditRejection::BoundaryEdge => write!(f, "edge is on the boundary"),
            EditRejection::NonManifoldEdge => write!(f, "edge is non-manifold"),
            EditRejection::InconsistentOrientation => {
                write!(f, "incident faces are inconsistently oriented")
            }
            EditRejection::DuplicateEdge => write!(f, "flip would duplicate an existing edge"),
            EditRejection::NormalRotation { radians } => {
                write!(
                    f,
                    "face normal would rotate by {:.1} degrees",
                    radians.to_degrees()
                )
            }
            EditRejection::Degenerate => write!(f, "edit would create a degenerate face"),
            EditRejection::LowQuality { radians } => {
                write!(
                    f,
                    "edit would create a {:.3} degree angle",
                    radians.to_degrees()
                )
            }
            EditRejection::LinkCondition => write!(f, "collapse violates the link condition"),
            EditRejection::NonFinite => write!(f, "edit produces non-finite coordinates"),
        }
    }
}

impl std::error::Error for EditRejection {}

/// Placement of the merged vertex in an edge collapse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollapseTarget {
    Midpoint,
    /// Keep the position of this endpoint.
    Endpoint(usize),
}

/// Splits the quad around `e` into its flipped triangles.
///
/// `f1` and `f2` are the faces incident to `e`. Returns the two replacement
/// faces (for the slots of `f1` and `f2`) and the new edge, or `None` when
/// the two faces traverse the edge in the same direction.
pub(crate) fn flipped_faces(
    f1: [usize; 3],
    f2: [usize; 3],
    e: Edge,
) -> Option<([usize; 3], [usize; 3], Edge)> {
    let directed =
        |f: &[usize; 3], a: usize, b: usize| (0..3).any(|i| f[i] == a && f[(i + 1) % 3] == b);
    let third = |f: &[usize; 3]| *f.iter().find(|&&v| !e.contains(v)).unwrap();
    let (a, b) = if directed(&f1, e.0, e.1) {
        (e.0, e.1)
    } else {
        (e.1, e.0)
    };
    if !directed(&f1, a, b) || !directed(&f2, b, a) {
        return None;
    }
    let c = third(&f1);
    let d = third(&f2);
    if c == d {
        return None;
    }
    Some(([a, d, c], [b, c, d], Edge::new(c, d)))
}

/// Mutable view of a mesh supporting guarded local edits with incremental
/// vertex-face incidence.
///
/// Collapses leave dead face and vertex slots behind until
/// [`MeshEditor::into_mesh`] compacts them; flips and moves never change
/// element ids.
#[derive(Debug, Clone)]
pub struct MeshEditor {
    mesh: TriMesh,
    vertex_faces: Vec<SmallVec<[usize; 8]>>,
    face_alive: Vec<bool>,
    vertex_alive: Vec<bool>,
    area_eps: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct FlipPlan {
    pub faces: [usize; 2],
    pub new_faces: [[usize; 3]; 2],
    pub new_edge: Edge,
}

impl MeshEditor {
    /// Wraps `mesh`, which must be valid and edge-manifold.
    pub fn new(mesh: TriMesh) -> Result<Self> {
        mesh.validate()?;
        build_adjacency(&mesh)?;
        let mut vertex_faces = vec![SmallVec::new(); mesh.vertices.len()];
        for (fi, f) in mesh.faces.iter().enumerate() {
            for &v in f {
                vertex_faces[v].push(fi);
            }
        }
        let area_eps = mesh.area_epsilon();
        Ok(Self {
            face_alive: vec![true; mesh.faces.len()],
            vertex_alive: vec![true; mesh.vertices.len()],
            vertex_faces,
            area_eps,
            mesh,
        })
    }

    /// The underlying mesh. After collapses it may still hold dead faces;
    /// check [`MeshEditor::is_face_alive`] or call `into_mesh`.
    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn is_face_alive(&self, f: usize) -> bool {
        self.face_alive[f]
    }

    pub fn is_vertex_alive(&self, v: usize) -> bool {
        self.vertex_alive[v]
    }

    pub fn live_face_count(&self) -> usize {
        self.face_alive.iter().filter(|&&a| a).count()
    }

    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }

    pub fn area_epsilon(&self) -> f64 {
        self.area_eps
    }

    /// Compacts dead elements away and returns the mesh.
    pub fn into_mesh(self) -> TriMesh {
        let mut mesh = self.mesh;
        if self.face_alive.iter().all(|&a| a) && self.vertex_alive.iter().all(|&a| a) {
            return mesh;
        }
        mesh.faces = mesh
            .faces
            .iter()
            .zip(&self.face_alive)
            .filter(|(_, &alive)| alive)
            .map(|(f, _)| *f)
            .collect();
        mesh.remove_unreferenced_vertices();
        mesh
    }

    pub fn edge_faces(&self, e: Edge) -> SmallVec<[usize; 4]> {
        if e.0 >= self.vertex_faces.len() || e.1 >= self.vertex_faces.len() {
            return SmallVec::new();
        }
        self.vertex_faces[e.0]
            .iter()
            .copied()
            .filter(|&f| self.face_alive[f] && self.mesh.faces[f].contains(&e.1))
            .collect()
    }

    pub fn has_edge(&self, e: Edge) -> bool {
        !self.edge_faces(e).is_empty()
    }

    /// Sorted neighbours of `v`.
    pub fn neighbors(&self, v: usize) -> SmallVec<[usize; 16]> {
        let mut n: SmallVec<[usize; 16]> = self.vertex_faces[v]
            .iter()
            .filter(|&&f| self.face_alive[f])
            .flat_map(|&f| self.mesh.faces[f])
            .filter(|&u| u != v)
            .collect();
        n.sort_unstable();
        n.dedup();
        n
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.neighbors(v)
            .iter()
            .any(|&u| self.edge_faces(Edge::new(u, v)).len() == 1)
    }

    fn positions(&self, f: &[usize; 3]) -> [Vec3; 3] {
        [
            self.mesh.vertices[f[0]],
            self.mesh.vertices[f[1]],
            self.mesh.vertices[f[2]],
        ]
    }

    fn check_shape(
        &self,
        guard: &EditGuard,
        old_min: f64,
        new: &[[Vec3; 3]],
    ) -> Result<(), EditRejection> {
        let floor = guard.min_angle.min(old_min);
        for t in new {
            if !t.iter().all(|p| p.iter().all(|c| c.is_finite())) {
                return Err(EditRejection::NonFinite);
            }
            if triangle_area(&t[0], &t[1], &t[2]) <= self.area_eps {
                return Err(EditRejection::Degenerate);
            }
            let q = triangle_min_angle(&t[0], &t[1], &t[2]);
            if q < floor {
                return Err(EditRejection::LowQuality { radians: q });
            }
        }
        Ok(())
    }

    /// Checks that each face keeps its orientation within the guard's
    /// rotation budget and its shape within the quality rule.
    fn check_face_updates(
        &self,
        guard: &EditGuard,
        pairs: &[([Vec3; 3], [Vec3; 3])],
    ) -> Result<(), EditRejection> {
        let old_min = pairs
            .iter()
            .map(|(o, _)| triangle_min_angle(&o[0], &o[1], &o[2]))
            .fold(f64::INFINITY, f64::min);
        let new: SmallVec<[[Vec3; 3]; 16]> = pairs.iter().map(|(_, n)| *n).collect();
        self.check_shape(guard, old_min, &new)?;
        for (o, n) in pairs {
            let a = triangle_area_vector(&o[0], &o[1], &o[2]);
            let b = triangle_area_vector(&n[0], &n[1], &n[2]);
            let rot = angle_between(&a, &b);
            if rot > guard.max_normal_rotation {
                return Err(EditRejection::NormalRotation { radians: rot });
            }
        }
        Ok(())
    }

    pub(crate) fn plan_flip(&self, e: Edge, guard: &EditGuard) -> Result<FlipPlan, EditRejection> {
        let faces = self.edge_faces(e);
        let (f1, f2) = match faces.len() {
            0 => return Err(EditRejection::MissingEdge),
            1 => return Err(EditRejection::BoundaryEdge),
            2 => (faces[0], faces[1]),
            _ => return Err(EditRejection::NonManifoldEdge),
        };
        let (n1, n2, new_edge) = flipped_faces(self.mesh.faces[f1], self.mesh.faces[f2], e)
            .ok_or(EditRejection::InconsistentOrientation)?;
        if guard.manifold && self.has_edge(new_edge) {
            return Err(EditRejection::DuplicateEdge);
        }
        let o1 = self.positions(&self.mesh.faces[f1]);
        let o2 = self.positions(&self.mesh.faces[f2]);
        let t1 = self.positions(&n1);
        let t2 = self.positions(&n2);
        let old_min = triangle_min_angle(&o1[0], &o1[1], &o1[2])
            .min(triangle_min_angle(&o2[0], &o2[1], &o2[2]));
        self.check_shape(guard, old_min, &[t1, t2])?;
        let reference = triangle_area_vector(&o1[0], &o1[1], &o1[2])
            + triangle_area_vector(&o2[0], &o2[1], &o2[2]);
        if reference.norm() <= self.area_eps {
            return Err(EditRejection::Degenerate);
        }
        for t in [t1, t2] {
            let rot = angle_between(&reference, &triangle_area_vector(&t[0], &t[1], &t[2]));
            if rot > guard.max_normal_rotation {
                return Err(EditRejection::NormalRotation { radians: rot });
            }
        }
        Ok(FlipPlan {
            faces: [f1, f2],
            new_faces: [n1, n2],
            new_edge,
        })
    }

    pub(crate) fn apply_flip(&mut self, plan: &FlipPlan) {
        for (slot, nf) in plan.faces.iter().zip(&plan.new_faces) {
            let old = self.mesh.faces[*slot];
            for v in old {
                if !nf.contains(&v) {
                    self.vertex_faces[v].retain(|f| f != slot);
                }
            }
            for v in *nf {
                if !old.contains(&v) {
                    let list = &mut self.vertex_faces[v];
                    let pos = list.partition_point(|f| f < slot);
                    list.insert(pos, *slot);
                }
            }
            self.mesh.faces[*slot] = *nf;
        }
    }

    /// Whether `e` could be flipped under `guard`.
    pub fn can_flip(&self, e: Edge, guard: &EditGuard) -> Result<Edge, EditRejection> {
        self.plan_flip(e, guard).map(|p| p.new_edge)
    }

    /// Flips interior edge `e`, returning the new edge and the two rewritten
    /// face ids.
    pub fn flip(
        &mut self,
        e: Edge,
        guard: &EditGuard,
    ) -> Result<(Edge, [usize; 2]), EditRejection> {
        let plan = self.plan_flip(e, guard)?;
        self.apply_flip(&plan);
        Ok((plan.new_edge, plan.faces))
    }

    /// Moves vertex `v` to `target` if every incident face passes the guard.
    pub fn move_vertex(
        &mut self,
        v: usize,
        target: Vec3,
        guard: &EditGuard,
    ) -> Result<(), EditRejection> {
        if !target.iter().all(|c| c.is_finite()) {
            return Err(EditRejection::NonFinite);
        }
        let pairs: SmallVec<[([Vec3; 3], [Vec3; 3]); 16]> = self.vertex_faces[v]
            .iter()
            .filter(|&&f| self.face_alive[f])
            .map(|&f| {
                let face = self.mesh.faces[f];
                let old = self.positions(&face);
                let mut new = old;
                for i in 0..3 {
                    if face[i] == v {
                        new[i] = target;
                    }
                }
                (old, new)
            })
            .collect();
        self.check_face_updates(guard, &pairs)?;
        self.mesh.vertices[v] = target;
        Ok(())
    }

    /// Collapses `e`, merging its endpoints into the lower-indexed vertex.
    /// Returns the surviving vertex id.
    pub fn collapse(
        &mut self,
        e: Edge,
        target: CollapseTarget,
        guard: &EditGuard,
    ) -> Result<usize, EditRejection> {
        let faces = self.edge_faces(e);
        match faces.len() {
            0 => return Err(EditRejection::MissingEdge),
            1 | 2 => {}
            _ => return Err(EditRejection::NonManifoldEdge),
        }
        let (keep, gone) = (e.0, e.1);
        let pos = match target {
            CollapseTarget::Midpoint => (self.mesh.vertices[keep] + self.mesh.vertices[gone]) * 0.5,
            CollapseTarget::Endpoint(v) if e.contains(v) => self.mesh.vertices[v],
            CollapseTarget::Endpoint(_) => return Err(EditRejection::MissingEdge),
        };
        if !pos.iter().all(|c| c.is_finite()) {
            return Err(EditRejection::NonFinite);
        }
        let opposite: SmallVec<[usize; 2]> = faces
            .iter()
            .map(|&f| {
                *self.mesh.faces[f]
                    .iter()
                    .find(|&&v| !e.contains(v))
                    .unwrap()
            })
            .collect();
        if guard.link_condition {
            let na = self.neighbors(keep);
            let nb = self.neighbors(gone);
            let mut common: SmallVec<[usize; 4]> = na
                .iter()
                .copied()
                .filter(|u| nb.binary_search(u).is_ok())
                .collect();
            common.sort_unstable();
            let mut expected = opposite.clone();
            expected.sort_unstable();
            if common.as_slice() != expected.as_slice() {
                return Err(EditRejection::LinkCondition);
            }
            if faces.len() == 2 && self.is_boundary_vertex(keep) && self.is_boundary_vertex(gone) {
                return Err(EditRejection::LinkCondition);
            }
        }
        // Surviving faces around the merged vertex, before and after.
        let mut touched: SmallVec<[usize; 16]> = self.vertex_faces[keep]
            .iter()
            .chain(self.vertex_faces[gone].iter())
            .copied()
            .filter(|f| self.face_alive[*f] && !faces.contains(f))
            .collect();
        touched.sort_unstable();
        touched.dedup();
        if touched.is_empty() {
            // Nothing would survive around the merged vertex.
            return Err(EditRejection::LinkCondition);
        }
        let mut pairs: SmallVec<[([Vec3; 3], [Vec3; 3]); 16]> = SmallVec::new();
        let mut new_sets: SmallVec<[[usize; 3]; 16]> = SmallVec::new();
        for &f in &touched {
            let face = self.mesh.faces[f];
            let old = self.positions(&face);
            let mut new = old;
            let mut renamed = face;
            for i in 0..3 {
                if face[i] == keep || face[i] == gone {
                    new[i] = pos;
                    renamed[i] = keep;
                }
            }
            let mut key = renamed;
            key.sort_unstable();
            if new_sets.contains(&key) {
                return Err(EditRejection::NonManifoldEdge);
            }
            new_sets.push(key);
            pairs.push((old, new));
        }
        self.check_face_updates(guard, &pairs)?;

        for &f in &faces {
            self.face_alive[f] = false;
            for v in self.mesh.faces[f] {
                self.vertex_faces[v].retain(|g| *g != f);
            }
        }
        let moved: SmallVec<[usize; 8]> = std::mem::take(&mut self.vertex_faces[gone]);
        for &f in &moved {
            for v in self.mesh.faces[f].iter_mut() {
                if *v == gone {
                    *v = keep;
                }
            }
        }
        let mut merged: SmallVec<[usize; 8]> = self.vertex_faces[keep]
            .iter()
            .chain(moved.iter())
            .copied()
            .collect();
        merged.sort_unstable();
        merged.dedup();
        self.vertex_faces[keep] = merged;
        self.vertex_alive[gone] = false;
        self.mesh.vertices[keep] = pos;
        Ok(keep)
    }
}

/// Flips `edge` on a copy of `mesh`.
pub fn edge_flip(mesh: &TriMesh, edge: Edge, guard: &EditGuard) -> Result<TriMesh, EditRejection> {
    let mut ed = MeshEditor::new(mesh.clone()).map_err(|_| EditRejection::NonManifoldEdge)?;
    ed.flip(edge, guard)?;
    Ok(ed.into_mesh())
}

/// Collapses `edge` on a copy of `mesh`.
pub fn edge_collapse(
    mesh: &TriMesh,
    edge: Edge,
    target: CollapseTarget,
    guard: &EditGuard,
) -> Result<TriMesh, EditRejection> {
    let mut ed = MeshEditor::new(mesh.clone()).map_err(|_| EditRejection::NonManifoldEdge)?;
    ed.collapse(edge, target, guard)?;
    Ok(ed.into_mesh())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_adjacency;

    fn quad() -> TriMesh {
        // Unit square split along (0,0)-(1,1).
        TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(1.0, 1.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    fn face_set(m: &TriMesh) -> Vec<[usize; 3]> {
        let mut s: Vec<[usize; 3]> = m
            .faces
            .iter()
            .map(|f| {
                let mut f = *f;
                f.sort_unstable();
                f
            })
            .collect();
        s.sort_unstable();
        s
    }

    fn tetrahedron() -> TriMesh {
        TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(0.0, 0.0, 1.0),
            ],
            vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]],
        )
        .unwrap()
    }

    #[test]
    fn flip_planar_quad_diagonal() {
        let m = quad();
        let g = EditGuard::default();
        let flipped = edge_flip(&m, Edge(0, 2), &g).unwrap();
        let edges = flipped.edges();
        assert!(edges.contains(&Edge(1, 3)));
        assert!(!edges.contains(&Edge(0, 2)));
        assert_eq!(flipped.faces.len(), 2);
        for f in 0..2 {
            assert!((flipped.face_normal(f) - Vec3::z()).norm() < 1e-12);
        }
        build_adjacency(&flipped).unwrap();
        // Involution on the face set.
        let back = edge_flip(&flipped, Edge(1, 3), &g).unwrap();
        assert_eq!(face_set(&back), face_set(&m));
    }

    #[test]
    fn flip_rejects_boundary_and_duplicate() {
        let g = EditGuard::default();
        assert_eq!(
            edge_flip(&quad(), Edge(0, 1), &g),
            Err(EditRejection::BoundaryEdge)
        );
        assert_eq!(
            edge_flip(&tetrahedron(), Edge(0, 1), &g),
            Err(EditRejection::DuplicateEdge)
        );
    }

    #[test]
    fn flip_that_folds_is_rejected_and_mesh_unchanged() {
        // Non-convex planar quad: flipping the diagonal would fold one new
        // face back over the other.
        let m = TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(2.0, 0.0, 0.0),
                Vec3::new(0.3, 0.3, 0.0),
                Vec3::new(0.0, 2.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        // Direct normal computation of the would-be faces.
        let flipped = [[0usize, 3, 1], [2, 1, 3]];
        let normals: Vec<Vec3> = flipped
            .iter()
            .map(|f| {
                crate::geom::triangle_normal(
                    &m.vertices[f[0]],
                    &m.vertices[f[1]],
                    &m.vertices[f[2]],
                )
            })
            .collect();
        assert!(normals.iter().any(|n| n.z < -0.99));
        let mut ed = MeshEditor::new(m.clone()).unwrap();
        let r = ed.flip(Edge(0, 2), &EditGuard::default());
        assert!(
            matches!(r, Err(EditRejection::NormalRotation { .. })),
            "{r:?}"
        );
        assert!(ed.mesh().bit_eq(&m));
    }

    fn fan() -> TriMesh {
        // Hexagonal fan around vertex 0.
        let mut v = vec![Vec3::zeros()];
        for i in 0..6 {
            let a = i as f64 * std::f64::consts::PI / 3.0;
            v.push(Vec3::new(a.cos(), a.sin(), 0.0));
        }
        let faces = (0..6).map(|i| [0, 1 + i, 1 + (i + 1) % 6]).collect();
        TriMesh::new(v, faces).unwrap()
    }

    #[test]
    fn interior_collapse_removes_two_faces() {
        let m = fan();
        let out = edge_collapse(
            &m,
            Edge(0, 1),
            CollapseTarget::Endpoint(1),
            &EditGuard::default(),
        )
        .unwrap();
        assert_eq!(out.faces.len(), 4);
        assert_eq!(out.vertices.len(), 6);
        build_adjacency(&out).unwrap();
    }

    #[test]
    fn boundary_collapse_removes_one_face() {
        let m = fan();
        let out = edge_collapse(
            &m,
            Edge(1, 2),
            CollapseTarget::Midpoint,
            &EditGuard::default(),
        )
        .unwrap();
        assert_eq!(out.faces.len(), 5);
        assert_eq!(out.vertices.len(), 6);
    }

    #[test]
    fn link_condition_violation_is_rejected() {
        // Vertices 0 and 1 share neighbours 2 and 3 through the faces on
        // edge (0,1), and also 4 through separate faces.
        let m = TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.5, 1.0, 0.0),
                Vec3::new(0.5, -1.0, 0.0),
                Vec3::new(0.5, 2.0, 1.0),
            ],
            vec![[0, 1, 2], [1, 0, 3], [0, 2, 4], [2, 1, 4]],
        )
        .unwrap();
        let mut ed = MeshEditor::new(m.clone()).unwrap();
        assert_eq!(
            ed.collapse(Edge(0, 1), CollapseTarget::Midpoint, &EditGuard::default()),
            Err(EditRejection::LinkCondition)
        );
        assert!(ed.into_mesh().bit_eq(&m));
    }

    #[test]
    fn collapsing_sliver_edge_removes_the_sliver() {
        // Isoceles sliver (0,1,2) with a very short base (0,1), fanned into
        // a larger patch.
        let m = TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(0.01, 0.0, 0.0),
                Vec3::new(0.005, 1.0, 0.0),
                Vec3::new(0.005, -1.0, 0.0),
                Vec3::new(-1.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
            ],
            vec![
                [0, 1, 2],
                [1, 0, 3],
                [0, 2, 4],
                [0, 4, 3],
                [1, 5, 2],
                [1, 3, 5],
            ],
        )
        .unwrap();
        let mut guard = EditGuard::default();
        guard.min_angle = 1e-3;
        let removed_area = m.face_area(0) + m.face_area(1);
        assert!(removed_area < 0.011);
        let out = edge_collapse(&m, Edge(0, 1), CollapseTarget::Midpoint, &guard).unwrap();
        assert_eq!(out.faces.len(), 4);
        // Every surviving face keeps a reasonable angle.
        for f in 0..out.faces.len() {
            let [a, b, c] = out.face_positions(f);
            assert!(triangle_min_angle(&a, &b, &c) > 0.2);
        }
        assert!((out.total_area() - (m.total_area())).abs() < 1e-12);
    }

    #[test]
    fn tetrahedron_collapse_is_refused() {
        let m = tetrahedron();
        assert!(edge_collapse(
            &m,
            Edge(0, 1),
            CollapseTarget::Midpoint,
            &EditGuard::default()
        )
        .is_err());
    }

    #[test]
    fn move_vertex_through_ring_is_rejected() {
        let m = fan();
        let mut ed = MeshEditor::new(m.clone()).unwrap();
        // Push the centre far outside its one-ring: incident faces invert.
        let r = ed.move_vertex(0, Vec3::new(3.0, 0.0, 0.0), &EditGuard::default());
        assert!(r.is_err());
        assert!(ed.mesh().bit_eq(&m));
        // A small in-plane move is fine.
        ed.move_vertex(0, Vec3::new(0.1, 0.0, 0.0), &EditGuard::default())
            .unwrap();
    }

    #[test]
    fn guard_validation() {
        assert!(EditGuard::default().validate().is_ok());
        let g = EditGuard {
            min_angle: 0.0,
            ..EditGuard::default()
        };
        assert!(g.validate().is_err());
    }
}
