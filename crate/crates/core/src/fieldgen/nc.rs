//! Normal consistency between a coarse mesh and a reference surface, and
//! the per-edge flip improvement derived from it.
//!
//! Faces are sampled with a deterministic stratified pattern laid out from
//! the face's lowest-index vertex. A face therefore gets the same samples
//! whichever mesh or patch it appears in, which makes the improvement of a
//! flip and of its inverse exact negatives of each other.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::{stratified_barycentrics, stratified_level};
use super::{CorrespondenceMap, EdgeField, MapDirection};
use crate::bvh::{MeshBvh, Nearest};
use crate::error::{Error, Result};
use crate::geom::{triangle_area, triangle_normal, Vec3};
use crate::mesh::{EditGuard, MeshEditor, TriMesh};

/// Ground-truth surface prepared for closest-point and normal queries.
#[derive(Debug, Clone)]
pub struct ReferenceSurface {
    mesh: TriMesh,
    bvh: MeshBvh,
    normals: Vec<Vec3>,
}

impl ReferenceSurface {
    pub fn new(mesh: TriMesh) -> Self {
        let bvh = MeshBvh::from_mesh(&mesh);
        let normals = mesh.face_normals();
        Self { mesh, bvh, normals }
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn closest(&self, p: &Vec3) -> Option<Nearest> {
        self.bvh.nearest(p)
    }

    pub fn normal(&self, face: usize) -> Vec3 {
        self.normals[face]
    }
}

/// Stratified sample density for normal-consistency integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NcSampler {
    /// Samples per unit area.
    pub density: f64,
    /// Cap on the per-face subdivision level (at most `max_level^2` samples).
    pub max_level: usize,
}

impl NcSampler {
    pub const DEFAULT_MAX_LEVEL: usize = 32;

    pub fn new(density: f64) -> Self {
        Self {
            density,
            max_level: Self::DEFAULT_MAX_LEVEL,
        }
    }

    /// Density giving `per_face` samples per face of `mesh` on average.
    pub fn for_mesh(mesh: &TriMesh, per_face: f64) -> Self {
        let area = mesh.total_area();
        let density = if area > 0.0 {
            per_face * mesh.faces.len() as f64 / area
        } else {
            per_face
        };
        Self::new(density)
    }

    pub fn level(&self, tri: &[Vec3; 3]) -> usize {
        stratified_level(
            triangle_area(&tri[0], &tri[1], &tri[2]),
            self.density,
            self.max_level,
        )
    }
}

/// Rotates `f` so its smallest vertex id comes first, keeping orientation.
pub fn canonical_face(f: [usize; 3]) -> [usize; 3] {
    let i = (0..3).min_by_key(|&i| f[i]).unwrap();
    [f[i], f[(i + 1) % 3], f[(i + 2) % 3]]
}

/// Sample points of face `f` of `mesh`, in canonical order.
pub fn face_sample_points(
    mesh: &TriMesh,
    f: [usize; 3],
    sampler: &NcSampler,
) -> Vec<([f64; 3], Vec3)> {
    let c = canonical_face(f);
    let tri = [
        mesh.vertices[c[0]],
        mesh.vertices[c[1]],
        mesh.vertices[c[2]],
    ];
    stratified_barycentrics(sampler.level(&tri))
        .into_iter()
        .map(|b| (b, tri[0] * b[0] + tri[1] * b[1] + tri[2] * b[2]))
        .collect()
}

/// Summed normal deviation of one face against the reference, and the
/// number of samples.
pub fn face_deviation(
    mesh: &TriMesh,
    f: [usize; 3],
    reference: &ReferenceSurface,
    sampler: &NcSampler,
) -> (f64, usize) {
    let c = canonical_face(f);
    let tri = [
        mesh.vertices[c[0]],
        mesh.vertices[c[1]],
        mesh.vertices[c[2]],
    ];
    let n = triangle_normal(&tri[0], &tri[1], &tri[2]);
    let pattern = stratified_barycentrics(sampler.level(&tri));
    let mut sum = 0.0;
    for b in &pattern {
        let p = tri[0] * b[0] + tri[1] * b[1] + tri[2] * b[2];
        if let Some(hit) = reference.closest(&p) {
            sum += (n - reference.normal(hit.index)).norm();
        }
    }
    (sum, pattern.len())
}

/// Per-face normal consistency with the number of samples behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceConsistency {
    pub nc: Vec<f64>,
    pub samples: Vec<usize>,
}

/// Mean normal deviation over each face's correspondence samples; faces
/// without samples use one centroid sample.
pub fn normal_consistency_faces(
    coarse: &TriMesh,
    reference: &ReferenceSurface,
    map: &CorrespondenceMap,
) -> Result<FaceConsistency> {
    if map.direction != MapDirection::CoarseToGt {
        return Err(Error::InvalidParameter(
            "normal consistency needs a coarse-to-ground-truth map".into(),
        ));
    }
    let normals = coarse.face_normals();
    let mut sums = vec![0.0; coarse.faces.len()];
    let mut counts = vec![0usize; coarse.faces.len()];
    for s in &map.samples {
        if s.source_face >= coarse.faces.len() || s.target_face >= reference.mesh().faces.len() {
            return Err(Error::Format(format!(
                "correspondence sample references face {} -> {} outside the meshes",
                s.source_face, s.target_face
            )));
        }
        sums[s.source_face] += (normals[s.source_face] - reference.normal(s.target_face)).norm();
        counts[s.source_face] += 1;
    }
    for f in 0..coarse.faces.len() {
        if counts[f] == 0 {
            let [a, b, c] = coarse.face_positions(f);
            if let Some(hit) = reference.closest(&((a + b + c) / 3.0)) {
                sums[f] = (normals[f] - reference.normal(hit.index)).norm();
            }
            counts[f] = 1;
        }
    }
    Ok(FaceConsistency {
        nc: sums
            .iter()
            .zip(&counts)
            .map(|(s, &n)| s / n as f64)
            .collect(),
        samples: counts,
    })
}

/// Per-face normal consistency from the stratified pattern.
pub fn normal_consistency_stratified(
    coarse: &TriMesh,
    reference: &ReferenceSurface,
    sampler: &NcSampler,
) -> FaceConsistency {
    let (nc, samples) = coarse
        .faces
        .par_iter()
        .map(|&f| {
            let (s, n) = face_deviation(coarse, f, reference, sampler);
            (s / n as f64, n)
        })
        .unzip();
    FaceConsistency { nc, samples }
}

/// Flip improvement `nc(e) - nc(e')` for every edge of `coarse`, where
/// `nc(e)` is the sample-weighted consistency of the two faces at `e` and
/// `e'` is the flipped edge. Positive values mean the flip helps. Edges
/// the guard would not flip get 0.
pub fn surface_improvement_field(
    coarse: &TriMesh,
    reference: &ReferenceSurface,
    sampler: &NcSampler,
    guard: &EditGuard,
) -> Result<EdgeField> {
    let editor = MeshEditor::new(coarse.clone())?;
    let current: Vec<(f64, usize)> = coarse
        .faces
        .par_iter()
        .map(|&f| face_deviation(coarse, f, reference, sampler))
        .collect();
    let edges = coarse.edges();
    let values = edges
        .par_iter()
        .map(|&e| match editor.plan_flip(e, guard) {
            Err(_) => 0.0,
            Ok(plan) => {
                let (s1, n1) = current[plan.faces[0]];
                let (s2, n2) = current[plan.faces[1]];
                let (t1, m1) = face_deviation(coarse, plan.new_faces[0], reference, sampler);
                let (t2, m2) = face_deviation(coarse, plan.new_faces[1], reference, sampler);
                let before = (s1 + s2) / (n1 + n2) as f64;
                let after = (t1 + t2) / (m1 + m2) as f64;
                before - after
            }
        })
        .collect();
    Ok(EdgeField { edges, values })
}
