//! Sources of the three guidance fields.
//!
//! Every provider answers per patch, in the patch's local vertex order.
//! Values are cleaned up by [`query_patch`] before the remeshing engine
//! sees them: distances are clamped into `[0, epsilon]`, directions are
//! renormalized or zeroed, non-finite numbers are replaced, and each repair
//! is counted.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bvh::{Bvh, SegmentPrim};
use crate::error::{Error, Result};
use crate::fieldgen::{
    distance_direction_fields_indexed, surface_improvement_field, CurveIndex, EdgeField,
    FeatureCurveSet, FeatureFields, FieldSet, NcSampler, ReferenceSurface, ON_CURVE,
};
use crate::geom::Vec3;
use crate::mesh::{build_adjacency, Edge, EditGuard, MeshEditor, TriMesh};
use crate::patchwork::Patch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Capabilities {
    pub distance: bool,
    pub direction: bool,
    pub improvement: bool,
}

impl Capabilities {
    pub const ALL: Capabilities = Capabilities {
        distance: true,
        direction: true,
        improvement: true,
    };
    pub const NONE: Capabilities = Capabilities {
        distance: false,
        direction: false,
        improvement: false,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Oracle,
    Heuristic,
    External,
}

/// Supplier of guidance fields on patches. A provider without a capability
/// returns `Ok(None)` for it instead of inventing values.
pub trait FieldProvider: Sync {
    fn capabilities(&self) -> Capabilities;
    fn provenance(&self) -> Provenance;
    fn distance(&self, patch: &Patch, epsilon: f64) -> Result<Option<Vec<f64>>>;
    fn direction(&self, patch: &Patch, epsilon: f64) -> Result<Option<Vec<Vec3>>>;
    /// Flip improvement (`nc(e) - nc(e')`, positive is better) for the
    /// edges of the patch mesh, in local vertex ids.
    fn improvement(&self, patch: &Patch, guard: &EditGuard) -> Result<Option<EdgeField>>;
}

/// Counts of values repaired at the provider boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Violations {
    pub distance: usize,
    pub direction: usize,
    pub improvement: usize,
}

impl Violations {
    pub fn total(&self) -> usize {
        self.distance + self.direction + self.improvement
    }

    pub fn add(&mut self, other: &Violations) {
        self.distance += other.distance;
        self.direction += other.direction;
        self.improvement += other.improvement;
    }
}

/// Clamps distances into `[0, epsilon]`; non-finite values become `epsilon`.
pub fn sanitize_distance(values: &mut [f64], epsilon: f64) -> usize {
    let mut bad = 0;
    for v in values.iter_mut() {
        let fixed = if v.is_finite() {
            v.clamp(0.0, epsilon)
        } else {
            epsilon
        };
        if fixed.to_bits() != v.to_bits() {
            bad += 1;
            *v = fixed;
        }
    }
    bad
}

/// Makes every direction unit length or exactly zero.
pub fn sanitize_direction(values: &mut [Vec3]) -> usize {
    let mut bad = 0;
    for v in values.iter_mut() {
        if *v == Vec3::zeros() {
            continue;
        }
        let n = v.norm();
        if !n.is_finite() || n < 1e-6 {
            *v = Vec3::zeros();
            bad += 1;
        } else if (n - 1.0).abs() > 1e-9 {
            *v /= n;
            bad += 1;
        }
    }
    bad
}

pub fn sanitize_improvement(values: &mut [f64]) -> usize {
    let mut bad = 0;
    for v in values.iter_mut() {
        if !v.is_finite() {
            *v = 0.0;
            bad += 1;
        }
    }
    bad
}

/// Fields returned for one patch after clean-up.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PatchFields {
    pub distance: Option<Vec<f64>>,
    pub direction: Option<Vec<Vec3>>,
    pub improvement: Option<EdgeField>,
    pub violations: Violations,
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Format(format!(
            "provider returned {got} {what} values for {want} elements"
        )));
    }
    Ok(())
}

/// Asks `provider` for the requested fields on `patch` and sanitizes them.
pub fn query_patch(
    provider: &dyn FieldProvider,
    patch: &Patch,
    want: Capabilities,
    epsilon: f64,
    guard: &EditGuard,
) -> Result<PatchFields> {
    let caps = provider.capabilities();
    let mut out = PatchFields::default();
    let n = patch.vertex_ids.len();
    if want.distance && caps.distance {
        if let Some(mut d) = provider.distance(patch, epsilon)? {
            check_len("distance", d.len(), n)?;
            out.violations.distance = sanitize_distance(&mut d, epsilon);
            out.distance = Some(d);
        }
    }
    if want.direction && caps.direction {
        if let Some(mut r) = provider.direction(patch, epsilon)? {
            check_len("direction", r.len(), n)?;
            out.violations.direction = sanitize_direction(&mut r);
            out.direction = Some(r);
        }
    }
    if want.improvement && caps.improvement {
        if let Some(mut s) = provider.improvement(patch, guard)? {
            check_len("improvement", s.values.len(), s.edges.len())?;
            out.violations.improvement = sanitize_improvement(&mut s.values);
            out.improvement = Some(s);
        }
    }
    Ok(out)
}

/// Exact fields from a ground-truth mesh and its feature curves.
#[derive(Debug, Clone)]
pub struct OracleProvider {
    curves: CurveIndex,
    reference: ReferenceSurface,
    sampler: NcSampler,
}

impl OracleProvider {
    pub fn new(gt: TriMesh, curves: &FeatureCurveSet, sampler: NcSampler) -> Self {
        Self {
            curves: CurveIndex::new(curves),
            reference: ReferenceSurface::new(gt),
            sampler,
        }
    }

    pub fn reference(&self) -> &ReferenceSurface {
        &self.reference
    }

    pub fn feature_fields(&self, vertices: &[Vec3], epsilon: f64) -> FeatureFields {
        distance_direction_fields_indexed(vertices, &self.curves, epsilon)
    }
}

pub fn oracle_provider(
    gt: TriMesh,
    curves: &FeatureCurveSet,
    sampler: NcSampler,
) -> OracleProvider {
    OracleProvider::new(gt, curves, sampler)
}

impl FieldProvider for OracleProvider {
    fn capabilities(&self) -> Capabilities {
        Capabilities::ALL
    }

    fn provenance(&self) -> Provenance {
        Provenance::Oracle
    }

    fn distance(&self, patch: &Patch, epsilon: f64) -> Result<Option<Vec<f64>>> {
        Ok(Some(
            self.feature_fields(&patch.mesh.vertices, epsilon).distance,
        ))
    }

    fn direction(&self, patch: &Patch, epsilon: f64) -> Result<Option<Vec<Vec3>>> {
        Ok(Some(
            self.feature_fields(&patch.mesh.vertices, epsilon).direction,
        ))
    }

    fn improvement(&self, patch: &Patch, guard: &EditGuard) -> Result<Option<EdgeField>> {
        surface_improvement_field(&patch.mesh, &self.reference, &self.sampler, guard).map(Some)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeuristicConfig {
    /// Dihedral angle above which an edge counts as a crease, degrees.
    pub feature_angle_deg: f64,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        Self {
            feature_angle_deg: 40.0,
        }
    }
}

/// Ground-truth-free estimates from the patch geometry alone. Edges whose
/// dihedral angle exceeds the feature angle form the detected creases;
/// distance and direction point to the nearest crease edge. Flip
/// improvement compares each candidate triangle pair against the normals of
/// the four faces around the quad, taking for every triangle the closest
/// of those planes.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicProvider {
    pub cfg: HeuristicConfig,
}

pub fn heuristic_provider(cfg: HeuristicConfig) -> HeuristicProvider {
    HeuristicProvider { cfg }
}

impl HeuristicProvider {
    /// Creases of `mesh` as segments.
    pub fn detect_creases(&self, mesh: &TriMesh) -> Result<Vec<Edge>> {
        let adj = build_adjacency(mesh)?;
        let normals = mesh.face_normals();
        let limit = self.cfg.feature_angle_deg.to_radians();
        Ok(adj
            .edges
            .iter()
            .zip(&adj.edge_faces)
            .filter(|(_, f)| {
                f.len() == 2 && crate::geom::angle_between(&normals[f[0]], &normals[f[1]]) > limit
            })
            .map(|(e, _)| *e)
            .collect())
    }

    fn fields(&self, mesh: &TriMesh, epsilon: f64) -> Result<FeatureFields> {
        let creases = self.detect_creases(mesh)?;
        let bvh = Bvh::build(
            creases
                .iter()
                .map(|e| SegmentPrim {
                    a: mesh.vertices[e.0],
                    b: mesh.vertices[e.1],
                })
                .collect(),
        );
        let mut f = FeatureFields::empty(mesh.vertices.len(), epsilon);
        for (i, v) in mesh.vertices.iter().enumerate() {
            if let Some(hit) = bvh.nearest(v) {
                let d = hit.distance_squared.sqrt();
                if d < epsilon {
                    f.distance[i] = d;
                    f.direction[i] = if d < ON_CURVE {
                        Vec3::zeros()
                    } else {
                        (hit.point - v) / d
                    };
                }
            }
        }
        Ok(f)
    }
}

fn quad_score(tris: &[[Vec3; 3]; 2], planes: &[Vec3]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for t in tris {
        let a = crate::geom::triangle_area(&t[0], &t[1], &t[2]);
        let n = crate::geom::triangle_normal(&t[0], &t[1], &t[2]);
        let dev = planes
            .iter()
            .map(|p| (n - p).norm())
            .fold(f64::INFINITY, f64::min);
        num += a * dev;
        den += a;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

impl FieldProvider for HeuristicProvider {
    fn capabilities(&self) -> Capabilities {
        Capabilities::ALL
    }

    fn provenance(&self) -> Provenance {
        Provenance::Heuristic
    }

    fn distance(&self, patch: &Patch, epsilon: f64) -> Result<Option<Vec<f64>>> {
        Ok(Some(self.fields(&patch.mesh, epsilon)?.distance))
    }

    fn direction(&self, patch: &Patch, epsilon: f64) -> Result<Option<Vec<Vec3>>> {
        Ok(Some(self.fields(&patch.mesh, epsilon)?.direction))
    }

    fn improvement(&self, patch: &Patch, guard: &EditGuard) -> Result<Option<EdgeField>> {
        let mesh = &patch.mesh;
        let editor = MeshEditor::new(mesh.clone())?;
        let adj = build_adjacency(mesh)?;
        let normals = mesh.face_normals();
        let edges = mesh.edges();
        let pos = |f: [usize; 3]| f.map(|v| mesh.vertices[v]);
        let values = edges
            .iter()
            .map(|&e| {
                let Ok(plan) = editor.plan_flip(e, guard) else {
                    return 0.0;
                };
                // Faces across the four outer sides of the quad.
                let mut planes: Vec<Vec3> = Vec::with_capacity(4);
                for &f in &plan.faces {
                    let fv = mesh.faces[f];
                    for k in 0..3 {
                        let side = Edge::new(fv[k], fv[(k + 1) % 3]);
                        if side == e {
                            continue;
                        }
                        let id = adj.edge_id(side).expect("face side is an edge");
                        if let Some(&g) = adj.edge_faces[id].iter().find(|&&g| g != f) {
                            planes.push(normals[g]);
                        }
                    }
                }
                if planes.is_empty() {
                    return 0.0;
                }
                let before = quad_score(
                    &[
                        pos(mesh.faces[plan.faces[0]]),
                        pos(mesh.faces[plan.faces[1]]),
                    ],
                    &planes,
                );
                let after = quad_score(&[pos(plan.new_faces[0]), pos(plan.new_faces[1])], &planes);
                before - after
            })
            .collect();
        Ok(Some(EdgeField { edges, values }))
    }
}

/// Fields read from sidecar files keyed against a mesh's vertex and edge
/// indices. Patch queries look values up through the patch's parent ids.
#[derive(Debug, Clone)]
pub struct FileProvider {
    mesh_vertices: usize,
    fields: FieldSet,
}

pub fn file_provider(dir: impl AsRef<Path>) -> Result<FileProvider> {
    FileProvider::load(dir)
}

impl FileProvider {
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let (mesh, fields) = FieldSet::read_dir(dir)?;
        Ok(Self {
            mesh_vertices: mesh.vertices.len(),
            fields,
        })
    }

    pub fn from_fields(mesh_vertices: usize, fields: FieldSet) -> Self {
        Self {
            mesh_vertices,
            fields,
        }
    }

    pub fn fields(&self) -> &FieldSet {
        &self.fields
    }

    /// Vertex count of the mesh the fields are keyed against.
    pub fn mesh_vertices(&self) -> usize {
        self.mesh_vertices
    }

    fn gather<T: Copy>(&self, values: &[T], patch: &Patch) -> Result<Vec<T>> {
        patch
            .vertex_ids
            .iter()
            .map(|&g| {
                values.get(g).copied().ok_or_else(|| {
                    Error::Format(format!(
                        "vertex {g} is outside the {} vertices the field files describe",
                        self.mesh_vertices
                    ))
                })
            })
            .collect()
    }
}

impl FieldProvider for FileProvider {
    fn capabilities(&self) -> Capabilities {
        Capabilities {
            distance: self.fields.distance.is_some(),
            direction: self.fields.direction.is_some(),
            improvement: self.fields.improvement.is_some(),
        }
    }

    fn provenance(&self) -> Provenance {
        Provenance::External
    }

    fn distance(&self, patch: &Patch, _epsilon: f64) -> Result<Option<Vec<f64>>> {
        self.fields
            .distance
            .as_ref()
            .map(|d| self.gather(d, patch))
            .transpose()
    }

    fn direction(&self, patch: &Patch, _epsilon: f64) -> Result<Option<Vec<Vec3>>> {
        self.fields
            .direction
            .as_ref()
            .map(|r| self.gather(r, patch))
            .transpose()
    }

    fn improvement(&self, patch: &Patch, _guard: &EditGuard) -> Result<Option<EdgeField>> {
        let Some(stored) = &self.fields.improvement else {
            return Ok(None);
        };
        let edges = patch.mesh.edges();
        let values = edges
            .iter()
            .map(|e| {
                stored
                    .get(Edge::new(patch.vertex_ids[e.0], patch.vertex_ids[e.1]))
                    .unwrap_or(0.0)
            })
            .collect();
        Ok(Some(EdgeField { edges, values }))
    }
}

/// Provider with no capabilities.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullProvider;

impl FieldProvider for NullProvider {
    fn capabilities(&self) -> Capabilities {
        Capabilities::NONE
    }
    fn provenance(&self) -> Provenance {
        Provenance::External
    }
    fn distance(&self, _: &Patch, _: f64) -> Result<Option<Vec<f64>>> {
        Ok(None)
    }
    fn direction(&self, _: &Patch, _: f64) -> Result<Option<Vec<Vec3>>> {
        Ok(None)
    }
    fn improvement(&self, _: &Patch, _: &EditGuard) -> Result<Option<EdgeField>> {
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldgen::FeatureCurve;
    use crate::patchwork::crop_patch;
    use crate::shapes::grid_plane;

    fn whole(mesh: &TriMesh) -> Patch {
        crop_patch(mesh, mesh.vertices[0], 1e6, usize::MAX).unwrap()
    }

    #[test]
    fn sanitizers_count_repairs() {
        let mut d = vec![-0.1, 0.05, 0.3, f64::NAN];
        assert_eq!(sanitize_distance(&mut d, 0.2), 3);
        assert_eq!(d, vec![0.0, 0.05, 0.2, 0.2]);
        let mut r = vec![
            Vec3::new(2.0, 0.0, 0.0),
            Vec3::zeros(),
            Vec3::new(1e-9, 0.0, 0.0),
            Vec3::y(),
        ];
        assert_eq!(sanitize_direction(&mut r), 2);
        assert_eq!(r, vec![Vec3::x(), Vec3::zeros(), Vec3::zeros(), Vec3::y()]);
    }

    #[test]
    fn heuristic_on_flat_plane_finds_nothing() {
        let m = grid_plane(6, 1.0, 0.0);
        let p = whole(&m);
        let h = HeuristicProvider::default();
        let d = h.distance(&p, 0.3).unwrap().unwrap();
        assert!(d.iter().all(|&x| x == 0.3));
        assert!(h
            .direction(&p, 0.3)
            .unwrap()
            .unwrap()
            .iter()
            .all(|r| *r == Vec3::zeros()));
    }

    #[test]
    fn heuristic_marks_box_edges() {
        let m = crate::shapes::box_mesh(Vec3::zeros(), Vec3::repeat(1.0), 4);
        let p = whole(&m);
        let d = HeuristicProvider::default()
            .distance(&p, 0.3)
            .unwrap()
            .unwrap();
        for (v, dv) in m.vertices.iter().zip(&d) {
            let on_edge = v.iter().filter(|&&c| c == 0.0 || c == 1.0).count() >= 2;
            if on_edge {
                assert_eq!(*dv, 0.0);
            }
        }
    }

    #[test]
    fn file_provider_reports_missing_capabilities() {
        let m = grid_plane(4, 1.0, 0.0);
        let n = m.vertices.len();
        let set = FieldSet {
            epsilon: 0.2,
            distance: Some(vec![0.1; n]),
            direction: Some(vec![Vec3::x(); n]),
            improvement: None,
        };
        let dir = tempfile::tempdir().unwrap();
        set.write_dir(dir.path(), &m, crate::fieldgen::SidecarFormat::Csv)
            .unwrap();
        let fp = file_provider(dir.path()).unwrap();
        assert_eq!(
            fp.capabilities(),
            Capabilities {
                distance: true,
                direction: true,
                improvement: false
            }
        );
        let p = whole(&m);
        assert!(fp.improvement(&p, &EditGuard::default()).unwrap().is_none());
        assert_eq!(fp.distance(&p, 0.2).unwrap().unwrap(), vec![0.1; n]);
    }

    #[test]
    fn oracle_delegates_to_fieldgen() {
        let m = grid_plane(5, 1.0, 0.0);
        let curves = FeatureCurveSet::new(vec![FeatureCurve::sharp(vec![
            Vec3::new(0.4, -1.0, 0.0),
            Vec3::new(0.4, 2.0, 0.0),
        ])])
        .unwrap();
        let o = oracle_provider(m.clone(), &curves, NcSampler::new(50.0));
        let p = whole(&m);
        let direct = crate::fieldgen::distance_direction_fields(&m.vertices, &curves, 0.2);
        assert_eq!(o.distance(&p, 0.2).unwrap().unwrap(), direct.distance);
        assert_eq!(o.direction(&p, 0.2).unwrap().unwrap(), direct.direction);
    }
}
