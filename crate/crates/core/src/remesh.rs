//! Feature-aware refinement of a coarse mesh: snap vertices onto predicted
//! feature curves, flip edges with the largest predicted improvement, then
//! clean up remaining creases from face normals alone.

use std::collections::{BTreeMap, HashSet};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fieldgen::EdgeField;
use crate::geom::{triangle_normal, Vec3};
use crate::mesh::{simplify_short_edges, Edge, EditGuard, MeshEditor, SimplifyReport, TriMesh};
use crate::patchwork::{
    extract_patches, fuse_edge_fields, fuse_vertex_fields, FusionConfig, Patch, PatchConfig,
    PatchCropper,
};
use crate::providers::{query_patch, Capabilities, FieldProvider, Provenance, Violations};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemeshConfig {
    /// Snap radius in units of lambda.
    pub alpha_prox: f64,
    pub flip_threshold: f64,
    /// Cap on flips per selection round; unlimited when absent.
    pub n_flip: Option<usize>,
    pub max_flip_sets: usize,
    /// Selection rounds per flip set, each reusing the set's estimate.
    pub max_outer_iters: usize,
    pub post_dot: f64,
    pub postprocess: bool,
    pub max_post_sweeps: usize,
    /// Field truncation distance in units of lambda.
    pub epsilon: f64,
    /// Fraction of faces kept by the preliminary short-edge simplification.
    pub simplify: Option<f64>,
    pub seed: u64,
    pub record_timings: bool,
    pub patches: PatchConfig,
    pub fusion: FusionConfig,
    pub guard: EditGuard,
}

impl Default for RemeshConfig {
    fn default() -> Self {
        Self {
            alpha_prox: 2.0,
            flip_threshold: 0.01,
            n_flip: None,
            max_flip_sets: 2,
            max_outer_iters: 8,
            post_dot: 0.95,
            postprocess: true,
            max_post_sweeps: 100,
            epsilon: 4.0,
            simplify: None,
            seed: 0,
            record_timings: false,
            patches: PatchConfig::default(),
            fusion: FusionConfig::default(),
            guard: EditGuard::default(),
        }
    }
}

impl RemeshConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.alpha_prox > 0.0 && self.alpha_prox.is_finite()) {
            return bad(format!(
                "alpha_prox must be positive, got {}",
                self.alpha_prox
            ));
        }
        if !(self.flip_threshold > 0.0 && self.flip_threshold.is_finite()) {
            return bad(format!(
                "flip_threshold must be positive, got {}",
                self.flip_threshold
            ));
        }
        if !(self.post_dot > 0.0 && self.post_dot < 1.0) {
            return bad(format!(
                "post_dot must lie in (0, 1), got {}",
                self.post_dot
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.n_flip == Some(0) {
            return bad("n_flip must be at least 1".into());
        }
        if let Some(f) = self.simplify {
            if !(f > 0.0 && f <= 1.0) {
                return bad(format!("simplify fraction must be in (0, 1], got {f}"));
            }
        }
        self.fusion.validate()?;
        self.guard.validate()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapReport {
    /// Vertices within the snap radius with a nonzero move.
    pub candidates: usize,
    pub moved: usize,
    pub discarded: usize,
}

/// Moves every vertex with `d[v] <= alpha_prox * lambda` to
/// `v + d[v] * r[v]`, nearest vertices first (ties by index). Moves the
/// guard refuses are dropped.
pub fn snap_vertices(
    mesh: &TriMesh,
    d: &[f64],
    r: &[Vec3],
    cfg: &RemeshConfig,
    lambda: f64,
    guard: &EditGuard,
) -> Result<(TriMesh, SnapReport)> {
    let n = mesh.vertices.len();
    if d.len() != n || r.len() != n {
        return Err(Error::InvalidParameter(format!(
            "vertex fields have {} and {} values for {n} vertices",
            d.len(),
            r.len()
        )));
    }
    let limit = cfg.alpha_prox * lambda;
    let mut order: Vec<usize> = (0..n)
        .filter(|&v| d[v] <= limit && d[v] > 0.0 && r[v] != Vec3::zeros())
        .collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    let mut report = SnapReport {
        candidates: order.len(),
        ..Default::default()
    };
    let mut ed = MeshEditor::new(mesh.clone())?;
    for v in order {
        let target = mesh.vertices[v] + r[v] * d[v];
        match ed.move_vertex(v, target, guard) {
            Ok(()) => report.moved += 1,
            Err(_) => report.discarded += 1,
        }
    }
    Ok((ed.into_mesh(), report))
}

fn ranked_candidates(s: &EdgeField, threshold: f64) -> Vec<(Edge, f64)> {
    let mut c: Vec<(Edge, f64)> = s
        .edges
        .iter()
        .zip(&s.values)
        .filter(|(_, &v)| v > threshold)
        .map(|(e, &v)| (*e, v))
        .collect();
    c.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    c
}

fn select_on(
    ed: &MeshEditor,
    ranked: &[(Edge, f64)],
    skip: &HashSet<Edge>,
    n_flip: Option<usize>,
    guard: &EditGuard,
) -> Vec<Edge> {
    let mut used: HashSet<usize> = HashSet::new();
    let mut created: HashSet<Edge> = HashSet::new();
    let mut out = Vec::new();
    for &(e, _) in ranked {
        if n_flip.is_some_and(|k| out.len() >= k) {
            break;
        }
        if skip.contains(&e) {
            continue;
        }
        let Ok(plan) = ed.plan_flip(e, guard) else {
            continue;
        };
        // Two flips on different quads can still produce the same edge.
        if plan.faces.iter().any(|f| used.contains(f)) || created.contains(&plan.new_edge) {
            continue;
        }
        used.extend(plan.faces);
        created.insert(plan.new_edge);
        out.push(e);
    }
    out
}

/// Greedy non-interacting flip set: edges by descending `s` (ties to the
/// lower edge) with `s > flip_threshold`, flippable under `guard`, and
/// sharing no face with an edge already taken.
pub fn select_noninteracting_flips(
    mesh: &TriMesh,
    s: &EdgeField,
    cfg: &RemeshConfig,
    guard: &EditGuard,
) -> Result<Vec<Edge>> {
    let ed = MeshEditor::new(mesh.clone())?;
    Ok(select_on(
        &ed,
        &ranked_candidates(s, cfg.flip_threshold),
        &HashSet::new(),
        cfg.n_flip,
        guard,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppliedFlip {
    pub set: usize,
    pub edge: Edge,
    pub new_edge: Edge,
    pub improvement: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FlipReport {
    pub sets: usize,
    pub flips: Vec<AppliedFlip>,
    /// Edges above threshold that no round managed to flip.
    pub remaining: usize,
    pub violations: Violations,
}

fn estimate_improvement(
    mesh: &TriMesh,
    patches: &[Patch],
    provider: &dyn FieldProvider,
    guard: &EditGuard,
    epsilon: f64,
) -> Result<Option<(EdgeField, Violations)>> {
    let want = Capabilities {
        improvement: true,
        ..Capabilities::NONE
    };
    let per_patch: Vec<_> = patches
        .par_iter()
        .map(|p| query_patch(provider, p, want, epsilon, guard))
        .collect::<Result<_>>()?;
    let mut violations = Violations::default();
    let mut preds = Vec::new();
    for (p, f) in patches.iter().zip(&per_patch) {
        violations.add(&f.violations);
        if let Some(s) = &f.improvement {
            preds.push((p, s));
        }
    }
    if preds.is_empty() {
        return Ok(None);
    }
    Ok(Some((fuse_edge_fields(&mesh.edges(), &preds)?, violations)))
}

/// Up to `max_flip_sets` rounds of: refresh patches on the current mesh,
/// estimate and fuse improvement, then apply non-interacting flips until
/// nothing above threshold is flippable or `max_outer_iters` rounds ran.
/// Vertices never move.
pub fn flip_pass(
    mesh: &TriMesh,
    provider: &dyn FieldProvider,
    patches: &[Patch],
    cfg: &RemeshConfig,
    lambda: f64,
    guard: &EditGuard,
) -> Result<(TriMesh, FlipReport)> {
    flip_sets(mesh, provider, patches, cfg, lambda, guard).map(|(m, r, _)| (m, r))
}

/// `flip_pass` that also returns the last fused improvement estimate.
fn flip_sets(
    mesh: &TriMesh,
    provider: &dyn FieldProvider,
    patches: &[Patch],
    cfg: &RemeshConfig,
    lambda: f64,
    guard: &EditGuard,
) -> Result<(TriMesh, FlipReport, Option<EdgeField>)> {
    let mut last = None;
    let mut current = mesh.clone();
    let mut report = FlipReport::default();
    let epsilon = cfg.epsilon * lambda;
    for set in 0..cfg.max_flip_sets {
        let refreshed: Vec<Patch> = {
            let cropper = PatchCropper::new(&current)?;
            patches
                .iter()
                .map(|p| cropper.refresh(p))
                .filter(|p| !p.is_empty())
                .collect()
        };
        let Some((s, v)) = estimate_improvement(&current, &refreshed, provider, guard, epsilon)?
        else {
            break;
        };
        report.violations.add(&v);
        report.sets += 1;
        let ranked = ranked_candidates(&s, cfg.flip_threshold);
        let mut ed = MeshEditor::new(current.clone())?;
        let mut done: HashSet<Edge> = HashSet::new();
        let mut applied_this_set = 0;
        for _ in 0..cfg.max_outer_iters {
            let chosen = select_on(&ed, &ranked, &done, cfg.n_flip, guard);
            if chosen.is_empty() {
                break;
            }
            for e in chosen {
                let value = s.get(e).unwrap_or(0.0);
                let (new_edge, _) = ed
                    .flip(e, guard)
                    .map_err(|r| Error::Invariant(format!("selected flip refused: {r}")))?;
                done.insert(e);
                report.flips.push(AppliedFlip {
                    set,
                    edge: e,
                    new_edge,
                    improvement: value,
                });
                applied_this_set += 1;
            }
        }
        current = ed.into_mesh();
        report.remaining = ranked.iter().filter(|(e, _)| !done.contains(e)).count();
        last = Some(s);
        if applied_this_set == 0 {
            break;
        }
    }
    Ok((current, report, last))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PostFlip {
    pub edge: Edge,
    /// Neighbour-normal dot sum over the pairs the flip touches.
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PostprocessReport {
    pub sweeps: usize,
    pub flips: Vec<PostFlip>,
    /// False when the sweep cap stopped the loop.
    pub converged: bool,
}

fn unit_normal(mesh: &TriMesh, f: [usize; 3]) -> Vec3 {
    let p = f.map(|v| mesh.vertices[v]);
    triangle_normal(&p[0], &p[1], &p[2])
}

/// Dot products of the two quad triangles with each other and with the
/// faces across the quad's outer sides. `exclude` are the face slots the
/// triangles replace.
fn quad_dot_sum(ed: &MeshEditor, tris: [[usize; 3]; 2], exclude: [usize; 2]) -> f64 {
    let mesh = ed.mesh();
    let n = tris.map(|t| unit_normal(mesh, t));
    let mut sum = n[0].dot(&n[1]);
    for (t, nt) in tris.iter().zip(&n) {
        for k in 0..3 {
            let side = Edge::new(t[k], t[(k + 1) % 3]);
            if tris[0].contains(&side.0)
                && tris[0].contains(&side.1)
                && tris[1].contains(&side.0)
                && tris[1].contains(&side.1)
            {
                continue;
            }
            for g in ed.edge_faces(side) {
                if !exclude.contains(&g) {
                    sum += nt.dot(&mesh.face_normal(g));
                }
            }
        }
    }
    sum
}

fn max_neighbor_dot(ed: &MeshEditor, f: usize) -> Option<f64> {
    let mesh = ed.mesh();
    let fv = mesh.faces[f];
    let n = mesh.face_normal(f);
    let mut best: Option<f64> = None;
    for k in 0..3 {
        for g in ed.edge_faces(Edge::new(fv[k], fv[(k + 1) % 3])) {
            if g != f {
                let d = n.dot(&mesh.face_normal(g));
                best = Some(best.map_or(d, |b: f64| b.max(d)));
            }
        }
    }
    best
}

/// Smallest gain counted as an improvement, so rounding cannot cycle.
const POST_MIN_GAIN: f64 = 1e-12;

/// Flips edges of faces whose best neighbour agreement is below `post_dot`
/// when the flip raises the summed neighbour-normal dot products around the
/// edge. Sweeps faces in index order until a sweep changes nothing or the
/// sweep cap is reached.
pub fn postprocess_flips(
    mesh: &TriMesh,
    cfg: &RemeshConfig,
    guard: &EditGuard,
) -> Result<(TriMesh, PostprocessReport)> {
    postprocess_flips_except(mesh, cfg, guard, &HashSet::new())
}

/// `postprocess_flips` that never flips an edge in `protected`.
pub fn postprocess_flips_except(
    mesh: &TriMesh,
    cfg: &RemeshConfig,
    guard: &EditGuard,
    protected: &HashSet<Edge>,
) -> Result<(TriMesh, PostprocessReport)> {
    let mut ed = MeshEditor::new(mesh.clone())?;
    let mut report = PostprocessReport::default();
    while report.sweeps < cfg.max_post_sweeps {
        report.sweeps += 1;
        let mut changed = false;
        for f in 0..ed.mesh().faces.len() {
            if !ed.is_face_alive(f) || max_neighbor_dot(&ed, f).is_none_or(|d| d >= cfg.post_dot) {
                continue;
            }
            let fv = ed.mesh().faces[f];
            for k in 0..3 {
                let e = Edge::new(fv[k], fv[(k + 1) % 3]);
                if protected.contains(&e) {
                    continue;
                }
                let Ok(plan) = ed.plan_flip(e, guard) else {
                    continue;
                };
                let old = plan.faces.map(|g| ed.mesh().faces[g]);
                let before = quad_dot_sum(&ed, old, plan.faces);
                let after = quad_dot_sum(&ed, plan.new_faces, plan.faces);
                if after > before + POST_MIN_GAIN {
                    ed.apply_flip(&plan);
                    report.flips.push(PostFlip {
                        edge: e,
                        before,
                        after,
                    });
                    changed = true;
                    break;
                }
            }
        }
        if !changed {
            report.converged = true;
            break;
        }
    }
    Ok((ed.into_mesh(), report))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeshCounts {
    pub vertices: usize,
    pub faces: usize,
}

impl From<&TriMesh> for MeshCounts {
    fn from(m: &TriMesh) -> Self {
        Self {
            vertices: m.vertices.len(),
            faces: m.faces.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedStage {
    pub stage: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PatchStage {
    pub patches: usize,
    pub covered_vertices: usize,
    pub excluded_patches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub lambda: f64,
    pub provenance: Provenance,
    pub capabilities: Capabilities,
    pub config: RemeshConfig,
    pub input: MeshCounts,
    pub simplify: Option<SimplifyReport>,
    pub patches: PatchStage,
    pub snap: Option<SnapReport>,
    pub flip_sets: usize,
    pub flips: usize,
    pub flips_remaining: usize,
    pub postprocess_flips: usize,
    pub postprocess_sweeps: usize,
    pub postprocess_converged: Option<bool>,
    pub violations: Violations,
    pub skipped: Vec<SkippedStage>,
    pub output: MeshCounts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<BTreeMap<String, f64>>,
}

impl StageReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }
}

/// Receives the mesh after each stage, keyed by stage name.
pub type StageObserver<'a> = &'a mut dyn FnMut(&str, &TriMesh) -> Result<()>;

pub fn run_pipeline(
    coarse: &TriMesh,
    provider: &dyn FieldProvider,
    cfg: &RemeshConfig,
    lambda: f64,
) -> Result<(TriMesh, StageReport)> {
    run_pipeline_observed(coarse, provider, cfg, lambda, None)
}

/// Optional simplification, patch extraction, fused distance and direction,
/// snapping, flip sets, then postprocessing. Stages whose fields the
/// provider cannot supply are skipped and listed in the report;
/// postprocessing runs only after a field-driven stage.
pub fn run_pipeline_observed(
    coarse: &TriMesh,
    provider: &dyn FieldProvider,
    cfg: &RemeshConfig,
    lambda: f64,
    mut observer: Option<StageObserver<'_>>,
) -> Result<(TriMesh, StageReport)> {
    cfg.validate()?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let guard = &cfg.guard;
    let epsilon = cfg.epsilon * lambda;
    let caps = provider.capabilities();
    let mut timings = BTreeMap::new();
    let mut clock = Instant::now();
    let mut lap = |name: &str, timings: &mut BTreeMap<String, f64>| {
        timings.insert(name.to_string(), clock.elapsed().as_secs_f64());
        clock = Instant::now();
    };
    let mut notify = |name: &str, m: &TriMesh| match observer.as_mut() {
        Some(f) => f(name, m),
        None => Ok(()),
    };
    let mut report = StageReport {
        lambda,
        provenance: provider.provenance(),
        capabilities: caps,
        config: *cfg,
        input: coarse.into(),
        simplify: None,
        patches: PatchStage::default(),
        snap: None,
        flip_sets: 0,
        flips: 0,
        flips_remaining: 0,
        postprocess_flips: 0,
        postprocess_sweeps: 0,
        postprocess_converged: None,
        violations: Violations::default(),
        skipped: Vec::new(),
        output: coarse.into(),
        timings: None,
    };
    let skip = |report: &mut StageReport, stage: &str, reason: &str| {
        report.skipped.push(SkippedStage {
            stage: stage.into(),
            reason: reason.into(),
        })
    };

    let mut mesh = coarse.clone();
    if let Some(fraction) = cfg.simplify {
        let (m, r) = simplify_short_edges(&mesh, fraction, guard, None)?;
        mesh = m;
        report.simplify = Some(r);
        notify("simplify", &mesh)?;
        lap("simplify", &mut timings);
    }

    let snapping = caps.distance && caps.direction;
    let flipping = caps.improvement;
    if !snapping {
        skip(
            &mut report,
            "snap",
            "provider lacks distance or direction fields",
        );
    }
    if !flipping {
        skip(&mut report, "flip", "provider lacks improvement fields");
    }
    if !snapping && !flipping {
        if cfg.postprocess {
            skip(&mut report, "postprocess", "no field-driven stage ran");
        }
        report.output = (&mesh).into();
        return Ok((mesh, report));
    }

    let mut protected: HashSet<Edge> = HashSet::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let patches = extract_patches(&mesh, &cfg.patches, lambda, &mut rng)?;
    report.patches.patches = patches.len();
    lap("patches", &mut timings);

    if snapping {
        let want = Capabilities {
            distance: true,
            direction: true,
            improvement: false,
        };
        let per_patch: Vec<_> = patches
            .par_iter()
            .map(|p| query_patch(provider, p, want, epsilon, guard))
            .collect::<Result<_>>()?;
        let mut fields = Vec::with_capacity(patches.len());
        for pf in &per_patch {
            report.violations.add(&pf.violations);
            let (Some(d), Some(r)) = (&pf.distance, &pf.direction) else {
                return Err(Error::Invariant(
                    "provider advertised fields it did not return".into(),
                ));
            };
            fields.push(crate::fieldgen::FeatureFields {
                distance: d.clone(),
                direction: r.clone(),
                epsilon,
            });
        }
        let preds: Vec<_> = patches.iter().zip(&fields).collect();
        let fusion = cfg
            .fusion
            .for_source(provider.provenance() == Provenance::Oracle);
        let fused = fuse_vertex_fields(mesh.vertices.len(), &preds, &fusion, lambda, epsilon)?;
        report.patches.covered_vertices = fused.covered.iter().filter(|&&c| c).count();
        report.patches.excluded_patches = fused.excluded.len();
        lap("fields", &mut timings);
        let (m, snap) = snap_vertices(
            &mesh,
            &fused.fields.distance,
            &fused.fields.direction,
            cfg,
            lambda,
            guard,
        )?;
        mesh = m;
        report.snap = Some(snap);
        notify("snap", &mesh)?;
        lap("snap", &mut timings);
    }

    if flipping {
        let (m, flips, estimate) = flip_sets(&mesh, provider, &patches, cfg, lambda, guard)?;
        // Edges the field stage created or rates as worse flipped are left
        // alone by the normal-driven cleanup.
        protected.extend(flips.flips.iter().map(|f| f.new_edge));
        if let Some(s) = estimate {
            protected.extend(
                s.edges
                    .iter()
                    .zip(&s.values)
                    .filter(|(_, &v)| v < -cfg.flip_threshold)
                    .map(|(e, _)| *e),
            );
        }
        mesh = m;
        report.flip_sets = flips.sets;
        report.flips = flips.flips.len();
        report.flips_remaining = flips.remaining;
        report.violations.add(&flips.violations);
        notify("flip", &mesh)?;
        lap("flip", &mut timings);
    }

    if cfg.postprocess {
        let (m, post) = postprocess_flips_except(&mesh, cfg, guard, &protected)?;
        mesh = m;
        report.postprocess_flips = post.flips.len();
        report.postprocess_sweeps = post.sweeps;
        report.postprocess_converged = Some(post.converged);
        notify("postprocess", &mesh)?;
        lap("postprocess", &mut timings);
    }

    if cfg.record_timings {
        report.timings = Some(timings);
    }
    report.output = (&mesh).into();
    Ok((mesh, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_adjacency;
    use crate::patchwork::crop_patch;
    use crate::providers::NullProvider;
    use crate::shapes::{grid_plane, icosphere};

    fn whole_patch(mesh: &TriMesh) -> Patch {
        crop_patch(mesh, mesh.vertices[0], 1e6, usize::MAX).unwrap()
    }

    /// Serves a fixed improvement field over whole-mesh patches.
    struct WholeField(EdgeField);

    impl FieldProvider for WholeField {
        fn capabilities(&self) -> Capabilities {
            Capabilities {
                improvement: true,
                ..Capabilities::NONE
            }
        }
        fn provenance(&self) -> Provenance {
            Provenance::Oracle
        }
        fn distance(&self, _: &Patch, _: f64) -> Result<Option<Vec<f64>>> {
            Ok(None)
        }
        fn direction(&self, _: &Patch, _: f64) -> Result<Option<Vec<Vec3>>> {
            Ok(None)
        }
        fn improvement(&self, patch: &Patch, _: &EditGuard) -> Result<Option<EdgeField>> {
            let edges = patch.mesh.edges();
            let values = edges
                .iter()
                .map(|e| self.0.get(*e).unwrap_or(0.0))
                .collect();
            Ok(Some(EdgeField { edges, values }))
        }
    }

    #[test]
    fn far_fields_move_nothing() {
        let m = grid_plane(4, 1.0, 0.0);
        let n = m.vertices.len();
        let cfg = RemeshConfig::default();
        let (out, r) = snap_vertices(
            &m,
            &vec![0.4; n],
            &vec![Vec3::x(); n],
            &cfg,
            0.05,
            &cfg.guard,
        )
        .unwrap();
        assert!(out.bit_eq(&m));
        assert_eq!(r.candidates, 0);
    }

    #[test]
    fn fold_over_snap_is_discarded() {
        let m = grid_plane(3, 1.0, 0.0);
        let n = m.vertices.len();
        let centre = m
            .vertices
            .iter()
            .position(|v| (v - Vec3::new(0.5, 0.5, 0.0)).norm() < 1e-12)
            .unwrap();
        let mut d = vec![1.0; n];
        let mut r = vec![Vec3::zeros(); n];
        // Lands at x = 1.4, outside the 1-ring.
        d[centre] = 0.9;
        r[centre] = Vec3::x();
        let cfg = RemeshConfig {
            alpha_prox: 20.0,
            ..RemeshConfig::default()
        };
        let (out, rep) = snap_vertices(&m, &d, &r, &cfg, 0.05, &cfg.guard).unwrap();
        assert_eq!((rep.candidates, rep.moved, rep.discarded), (1, 0, 1));
        assert!(out.bit_eq(&m));
    }

    #[test]
    fn zero_improvement_selects_nothing() {
        let m = grid_plane(4, 1.0, 0.0);
        let s = EdgeField::zeros(&m);
        assert!(select_noninteracting_flips(
            &m,
            &s,
            &RemeshConfig::default(),
            &EditGuard::default()
        )
        .unwrap()
        .is_empty());
    }

    #[test]
    fn face_sharing_edges_exclude_each_other() {
        let m = grid_plane(3, 1.0, 0.0);
        let mut s = EdgeField::zeros(&m);
        let interior: Vec<usize> = (0..s.edges.len())
            .filter(|&i| {
                MeshEditor::new(m.clone())
                    .unwrap()
                    .can_flip(s.edges[i], &EditGuard::default())
                    .is_ok()
            })
            .collect();
        let sides: Vec<usize> = m
            .faces
            .iter()
            .map(|f| {
                interior
                    .iter()
                    .copied()
                    .filter(|&i| f.contains(&s.edges[i].0) && f.contains(&s.edges[i].1))
                    .collect::<Vec<_>>()
            })
            .find(|v| v.len() >= 2)
            .unwrap();
        s.values[sides[0]] = 0.5;
        s.values[sides[1]] = 0.4;
        let sel =
            select_noninteracting_flips(&m, &s, &RemeshConfig::default(), &EditGuard::default())
                .unwrap();
        assert_eq!(sel, vec![s.edges[sides[0]]]);
        // Equal values: the lower edge wins.
        s.values[sides[1]] = 0.5;
        let sel =
            select_noninteracting_flips(&m, &s, &RemeshConfig::default(), &EditGuard::default())
                .unwrap();
        assert_eq!(sel, vec![s.edges[sides[0]].min(s.edges[sides[1]])]);
    }

    #[test]
    fn flips_creating_the_same_edge_exclude_each_other() {
        // Square bipyramid: every ring edge flips to the apex-apex edge.
        let mut vertices: Vec<Vec3> = (0..4)
            .map(|i| {
                let a = std::f64::consts::FRAC_PI_2 * i as f64;
                Vec3::new(a.cos(), a.sin(), 0.0)
            })
            .collect();
        vertices.push(Vec3::new(0.0, 0.0, 1.0));
        vertices.push(Vec3::new(0.0, 0.0, -1.0));
        let faces = (0..4)
            .flat_map(|i| [[i, (i + 1) % 4, 4], [(i + 1) % 4, i, 5]])
            .collect();
        let m = TriMesh::new(vertices, faces).unwrap();
        let guard = EditGuard {
            max_normal_rotation: std::f64::consts::PI,
            ..Default::default()
        };
        let mut s = EdgeField::zeros(&m);
        for (e, v) in s.edges.iter().zip(&mut s.values) {
            if e.1 < 4 {
                *v = 1.0;
            }
        }
        let sel = select_noninteracting_flips(&m, &s, &RemeshConfig::default(), &guard).unwrap();
        assert_eq!(sel.len(), 1);
        let (out, report) = flip_pass(
            &m,
            &WholeField(s),
            &[whole_patch(&m)],
            &RemeshConfig::default(),
            1.0,
            &guard,
        )
        .unwrap();
        assert_eq!(report.flips.len(), 1);
        build_adjacency(&out).unwrap();
    }

    #[test]
    fn smooth_sphere_postprocess_is_identity() {
        let m = icosphere(3);
        let (out, r) =
            postprocess_flips(&m, &RemeshConfig::default(), &EditGuard::default()).unwrap();
        assert!(r.flips.is_empty() && r.converged);
        assert!(out.bit_eq(&m));
    }

    #[test]
    fn null_provider_is_identity() {
        let m = icosphere(2);
        let (out, r) = run_pipeline(&m, &NullProvider, &RemeshConfig::default(), 0.1).unwrap();
        assert!(out.bit_eq(&m));
        assert_eq!(r.skipped.len(), 3);
    }
}
