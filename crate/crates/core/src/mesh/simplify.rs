use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::{CollapseTarget, Edge, EditGuard, MeshEditor, TriMesh};
use crate::error::Result;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimplifyReport {
    pub input_faces: usize,
    pub output_faces: usize,
    pub target_faces: usize,
    pub collapsed: usize,
    pub rejected: usize,
    /// True when the queue ran dry before reaching `target_faces`.
    pub stopped_early: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    len: f64,
    edge: Edge,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    // Reversed so the max-heap pops the shortest edge, ties to the lower edge.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .len
            .total_cmp(&self.len)
            .then_with(|| other.edge.cmp(&self.edge))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Collapses shortest edges first until at most `face_fraction` of the input
/// faces remain, every remaining collapse is refused by `guard`, or (when
/// given) the shortest edge exceeds `max_edge_length`.
///
/// Collapses go to the edge midpoint, except that an edge with exactly one
/// boundary endpoint collapses onto that endpoint so the boundary stays put.
pub fn simplify_short_edges(
    mesh: &TriMesh,
    face_fraction: f64,
    guard: &EditGuard,
    max_edge_length: Option<f64>,
) -> Result<(TriMesh, SimplifyReport)> {
    if !(face_fraction > 0.0 && face_fraction <= 1.0) {
        return Err(crate::Error::InvalidParameter(format!(
            "face fraction must be in (0, 1], got {face_fraction}"
        )));
    }
    guard.validate()?;
    let input_faces = mesh.faces.len();
    let target_faces = (face_fraction * input_faces as f64).floor() as usize;
    let mut report = SimplifyReport {
        input_faces,
        output_faces: input_faces,
        target_faces,
        ..Default::default()
    };
    if input_faces <= target_faces {
        return Ok((mesh.clone(), report));
    }
    let mut ed = MeshEditor::new(mesh.clone())?;
    let mut heap: BinaryHeap<Candidate> = mesh
        .edges()
        .into_iter()
        .map(|edge| Candidate {
            len: mesh.edge_length(edge),
            edge,
        })
        .collect();
    let mut live = input_faces;
    while live > target_faces {
        let Some(c) = heap.pop() else {
            report.stopped_early = true;
            break;
        };
        if max_edge_length.is_some_and(|m| c.len > m) {
            report.stopped_early = true;
            break;
        }
        if !ed.is_vertex_alive(c.edge.0) || !ed.is_vertex_alive(c.edge.1) || !ed.has_edge(c.edge) {
            continue;
        }
        let current = (ed.mesh().vertices[c.edge.0] - ed.mesh().vertices[c.edge.1]).norm();
        if current.to_bits() != c.len.to_bits() {
            continue;
        }
        let removed = ed.edge_faces(c.edge).len();
        let b0 = ed.is_boundary_vertex(c.edge.0);
        let b1 = ed.is_boundary_vertex(c.edge.1);
        let target = match (b0, b1) {
            (true, false) => CollapseTarget::Endpoint(c.edge.0),
            (false, true) => CollapseTarget::Endpoint(c.edge.1),
            _ => CollapseTarget::Midpoint,
        };
        match ed.collapse(c.edge, target, guard) {
            Ok(kept) => {
                report.collapsed += 1;
                live -= removed;
                let p = ed.mesh().vertices[kept];
                for u in ed.neighbors(kept) {
                    heap.push(Candidate {
                        len: (ed.mesh().vertices[u] - p).norm(),
                        edge: Edge::new(kept, u),
                    });
                }
            }
            Err(_) => report.rejected += 1,
        }
    }
    if report.collapsed == 0 {
        log::warn!(
            "simplification could not collapse any edge ({} candidates refused); mesh returned unchanged",
            report.rejected
        );
        return Ok((mesh.clone(), report));
    }
    let out = ed.into_mesh();
    report.output_faces = out.faces.len();
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_adjacency;
    use crate::shapes::icosphere;

    #[test]
    fn fraction_one_is_identity() {
        let m = icosphere(2);
        let (out, r) = simplify_short_edges(&m, 1.0, &EditGuard::default(), None).unwrap();
        assert!(out.bit_eq(&m));
        assert_eq!(r.collapsed, 0);
    }

    #[test]
    fn icosphere_reaches_a_third() {
        let m = icosphere(4);
        let (out, r) = simplify_short_edges(&m, 0.33, &EditGuard::default(), None).unwrap();
        let target = 0.33 * m.faces.len() as f64;
        let got = out.faces.len() as f64;
        assert!(
            (got - target).abs() <= 0.02 * target,
            "{got} vs {target}: {r:?}"
        );
        build_adjacency(&out).unwrap();
        assert_eq!(out.euler_characteristic(), 2);
    }

    #[test]
    fn locked_mesh_is_returned_unchanged() {
        // A lone triangle: every collapse would leave nothing valid behind.
        let m = TriMesh::new(
            vec![
                crate::geom::Vec3::new(0.0, 0.0, 0.0),
                crate::geom::Vec3::new(1.0, 0.0, 0.0),
                crate::geom::Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let (out, r) = simplify_short_edges(&m, 0.5, &EditGuard::default(), None).unwrap();
        assert!(out.bit_eq(&m));
        assert!(r.stopped_early);
    }

    #[test]
    fn rejects_bad_fraction() {
        assert!(simplify_short_edges(&icosphere(1), 0.0, &EditGuard::default(), None).is_err());
    }
}
