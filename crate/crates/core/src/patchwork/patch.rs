use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bvh::{Bvh, MeshBvh, SegmentPrim};
use crate::error::{Error, Result};
use crate::fieldgen::sampling::sample_surface;
use crate::fieldgen::{FeatureCurve, FeatureCurveSet};
use crate::geom::Vec3;
use crate::mesh::{build_adjacency, Edge, TriMesh};

/// Poisson-disk seeds on the surface: area-uniform candidates accepted in
/// random order when at least `spacing` from every accepted seed. At most
/// `max_seeds` are returned.
pub fn poisson_seeds<R: Rng + ?Sized>(
    mesh: &TriMesh,
    spacing: f64,
    max_seeds: usize,
    rng: &mut R,
) -> Result<Vec<Vec3>> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "seed spacing must be positive, got {spacing}"
        )));
    }
    let area = mesh.total_area();
    if max_seeds == 0 || !(area > 0.0) {
        return Ok(Vec::new());
    }
    let candidates = ((30.0 * area / (spacing * spacing)).ceil() as usize).clamp(64, 500_000);
    let samples = sample_surface(mesh, candidates, rng);
    let cell = |p: &Vec3| [0, 1, 2].map(|a| (p[a] / spacing).floor() as i64);
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    let mut seeds: Vec<Vec3> = Vec::new();
    let s2 = spacing * spacing;
    'next: for s in samples {
        let c = cell(&s.point);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = grid.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                        if ids
                            .iter()
                            .any(|&i| (seeds[i] - s.point).norm_squared() < s2)
                        {
                            continue 'next;
                        }
                    }
                }
            }
        }
        grid.entry(c).or_default().push(seeds.len());
        seeds.push(s.point);
        if seeds.len() >= max_seeds {
            break;
        }
    }
    Ok(seeds)
}

/// A connected piece of a larger mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    /// Local vertex index to parent vertex index, ascending.
    pub vertex_ids: Vec<usize>,
    /// Parent face index of each local face, ascending.
    pub face_ids: Vec<usize>,
    #[serde(skip)]
    pub mesh: TriMesh,
    pub seed: Vec3,
    pub radius: f64,
    /// Parent vertex the patch grows from.
    pub root: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Visit {
    dist: f64,
    vertex: usize,
}

impl Eq for Visit {}

impl Ord for Visit {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Visit {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest edge-path distances from `root`, up to `limit`.
pub fn graph_distances(
    mesh: &TriMesh,
    neighbors: &[Vec<usize>],
    root: usize,
    limit: f64,
) -> HashMap<usize, f64> {
    let mut dist: HashMap<usize, f64> = HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(root, 0.0);
    heap.push(Visit {
        dist: 0.0,
        vertex: root,
    });
    while let Some(Visit { dist: d, vertex: v }) = heap.pop() {
        if d > dist[&v] {
            continue;
        }
        for &u in &neighbors[v] {
            let nd = d + (mesh.vertices[u] - mesh.vertices[v]).norm();
            if nd <= limit && dist.get(&u).is_none_or(|&old| nd < old) {
                dist.insert(u, nd);
                heap.push(Visit {
                    dist: nd,
                    vertex: u,
                });
            }
        }
    }
    dist
}

/// Precomputed incidence of the parent mesh for repeated cropping.
#[derive(Debug, Clone)]
pub struct PatchCropper<'a> {
    mesh: &'a TriMesh,
    neighbors: Vec<Vec<usize>>,
    vertex_faces: Vec<Vec<usize>>,
}

impl<'a> PatchCropper<'a> {
    pub fn new(mesh: &'a TriMesh) -> Result<Self> {
        let adj = build_adjacency(mesh)?;
        Ok(Self {
            mesh,
            neighbors: adj.vertex_neighbors(mesh.vertices.len()),
            vertex_faces: adj.vertex_faces.clone(),
        })
    }

    pub fn mesh(&self) -> &TriMesh {
        self.mesh
    }

    fn nearest_vertex(&self, p: &Vec3) -> Option<(usize, f64)> {
        self.mesh
            .vertices
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.vertex_faces[*i].is_empty())
            .map(|(i, v)| (i, (v - p).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
    }

    /// Faces with every vertex inside `inside`, restricted to the
    /// edge-connected component touching `root`.
    fn faces_within(&self, root: usize, inside: &dyn Fn(usize) -> bool) -> Vec<usize> {
        let mut candidate: HashMap<usize, bool> = HashMap::new();
        let ok = |f: usize| self.mesh.faces[f].iter().all(|&v| inside(v));
        let Some(&start) = self.vertex_faces[root].iter().find(|&&f| ok(f)) else {
            return Vec::new();
        };
        let mut stack = vec![start];
        candidate.insert(start, true);
        while let Some(f) = stack.pop() {
            let fv = self.mesh.faces[f];
            for k in 0..3 {
                let (a, b) = (fv[k], fv[(k + 1) % 3]);
                for &g in &self.vertex_faces[a] {
                    if candidate.contains_key(&g) || !self.mesh.faces[g].contains(&b) {
                        continue;
                    }
                    if ok(g) {
                        candidate.insert(g, true);
                        stack.push(g);
                    }
                }
            }
        }
        let mut faces: Vec<usize> = candidate.into_keys().collect();
        faces.sort_unstable();
        faces
    }

    fn vertex_count(&self, faces: &[usize]) -> usize {
        let mut vs: Vec<usize> = faces.iter().flat_map(|&f| self.mesh.faces[f]).collect();
        vs.sort_unstable();
        vs.dedup();
        vs.len()
    }

    /// Faces within graph distance `radius` of the vertex nearest `seed`,
    /// shrinking the radius until at most `max_vertices` remain.
    pub fn crop(&self, seed: Vec3, radius: f64, max_vertices: usize) -> Result<Patch> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "patch radius must be positive, got {radius}"
            )));
        }
        let (root, gap) = self.nearest_vertex(&seed).ok_or_else(|| {
            Error::InvalidParameter("cannot crop a patch from an empty mesh".into())
        })?;
        if gap > radius {
            return Err(Error::SeedTooFar {
                distance: gap,
                radius,
            });
        }
        let dist = graph_distances(self.mesh, &self.neighbors, root, radius);
        let within = |limit: f64| {
            let d = &dist;
            move |v: usize| d.get(&v).is_some_and(|&x| x <= limit)
        };
        let mut limit = radius;
        let mut faces = self.faces_within(root, &within(limit));
        if self.vertex_count(&faces) > max_vertices {
            // Largest distance threshold whose patch fits, by bisection over
            // the sorted distances.
            let mut levels: Vec<f64> = dist.values().copied().collect();
            levels.sort_by(f64::total_cmp);
            levels.dedup();
            let (mut lo, mut hi) = (0usize, levels.len() - 1);
            while lo < hi {
                let mid = (lo + hi).div_ceil(2);
                if self.vertex_count(&self.faces_within(root, &within(levels[mid]))) <= max_vertices
                {
                    lo = mid;
                } else {
                    hi = mid - 1;
                }
            }
            limit = levels[lo];
            faces = self.faces_within(root, &within(limit));
        }
        Ok(self.assemble(faces, seed, limit, root))
    }

    fn assemble(&self, face_ids: Vec<usize>, seed: Vec3, radius: f64, root: usize) -> Patch {
        let mut vertex_ids: Vec<usize> =
            face_ids.iter().flat_map(|&f| self.mesh.faces[f]).collect();
        vertex_ids.sort_unstable();
        vertex_ids.dedup();
        let local: HashMap<usize, usize> = vertex_ids
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, i))
            .collect();
        let mesh = TriMesh {
            vertices: vertex_ids.iter().map(|&v| self.mesh.vertices[v]).collect(),
            faces: face_ids
                .iter()
                .map(|&f| self.mesh.faces[f].map(|v| local[&v]))
                .collect(),
        };
        Patch {
            vertex_ids,
            face_ids,
            mesh,
            seed,
            radius,
            root,
        }
    }

    /// Re-derives the faces of `patch` from its vertex set after the parent
    /// mesh was edited in place (flips, moves); vertex ids are unchanged.
    pub fn refresh(&self, patch: &Patch) -> Patch {
        let members: std::collections::HashSet<usize> = patch.vertex_ids.iter().copied().collect();
        let faces = self.faces_within(patch.root, &|v| members.contains(&v));
        self.assemble(faces, patch.seed, patch.radius, patch.root)
    }
}

/// Convenience wrapper around [`PatchCropper::crop`].
pub fn crop_patch(mesh: &TriMesh, seed: Vec3, radius: f64, max_vertices: usize) -> Result<Patch> {
    PatchCropper::new(mesh)?.crop(seed, radius, max_vertices)
}

impl Patch {
    pub fn is_empty(&self) -> bool {
        self.face_ids.is_empty()
    }

    /// Edges of the patch mesh with two incident patch faces, as parent
    /// edges.
    pub fn interior_edges(&self) -> Vec<Edge> {
        let mut count: HashMap<Edge, u8> = HashMap::new();
        for f in &self.mesh.faces {
            for k in 0..3 {
                *count.entry(Edge::new(f[k], f[(k + 1) % 3])).or_default() += 1;
            }
        }
        let mut out: Vec<Edge> = count
            .into_iter()
            .filter(|&(_, c)| c == 2)
            .map(|(e, _)| Edge::new(self.vertex_ids[e.0], self.vertex_ids[e.1]))
            .collect();
        out.sort_unstable();
        out
    }
}

/// Curves passing through the inside of the patch surface: some point of
/// the curve lies within `tolerance` of the patch and farther than
/// `tolerance` from its boundary edges. Curves are kept whole.
pub fn select_interior_features(
    patch: &Patch,
    curves: &FeatureCurveSet,
    tolerance: f64,
) -> FeatureCurveSet {
    if patch.is_empty() {
        return FeatureCurveSet::default();
    }
    let surface = MeshBvh::from_mesh(&patch.mesh);
    let mut counts: HashMap<Edge, u8> = HashMap::new();
    for f in &patch.mesh.faces {
        for k in 0..3 {
            *counts.entry(Edge::new(f[k], f[(k + 1) % 3])).or_default() += 1;
        }
    }
    let mut boundary: Vec<Edge> = counts
        .into_iter()
        .filter(|&(_, c)| c == 1)
        .map(|(e, _)| e)
        .collect();
    boundary.sort_unstable();
    let rim = Bvh::build(
        boundary
            .iter()
            .map(|e| SegmentPrim {
                a: patch.mesh.vertices[e.0],
                b: patch.mesh.vertices[e.1],
            })
            .collect(),
    );
    let t2 = tolerance * tolerance;
    let interior_point = |p: &Vec3| {
        surface.nearest(p).is_some_and(|h| h.distance_squared <= t2)
            && rim.nearest(p).is_none_or(|h| h.distance_squared > t2)
    };
    let step = (tolerance * 0.5).max(f64::MIN_POSITIVE);
    let passes = |c: &FeatureCurve| {
        c.segments().any(|(a, b)| {
            let n = ((b - a).norm() / step).ceil().max(1.0) as usize;
            (0..=n).any(|i| interior_point(&(a + (b - a) * (i as f64 / n as f64))))
        })
    };
    FeatureCurveSet {
        curves: curves
            .curves
            .iter()
            .filter(|c| c.sharp && passes(c))
            .cloned()
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::grid_plane;
    use rand::SeedableRng;

    #[test]
    fn wide_spacing_gives_one_seed() {
        let m = crate::shapes::icosphere(2);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        assert_eq!(poisson_seeds(&m, 10.0, 1000, &mut rng).unwrap().len(), 1);
    }

    #[test]
    fn seeds_keep_their_distance() {
        let m = grid_plane(11, 1.0, 0.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let s = poisson_seeds(&m, 0.1, 1000, &mut rng).unwrap();
        assert!(s.len() > 30);
        for i in 0..s.len() {
            for j in 0..i {
                assert!((s[i] - s[j]).norm() >= 0.09);
            }
        }
        let capped = poisson_seeds(&m, 0.01, 1000, &mut rng).unwrap();
        assert_eq!(capped.len(), 1000);
    }

    #[test]
    fn big_radius_takes_the_whole_component() {
        let m = crate::shapes::icosphere(1);
        let p = crop_patch(&m, Vec3::new(0.0, 0.0, 1.0), 100.0, 2000).unwrap();
        assert_eq!(p.face_ids.len(), m.faces.len());
        assert_eq!(p.vertex_ids.len(), m.vertices.len());
    }

    #[test]
    fn vertex_budget_shrinks_the_radius() {
        let m = grid_plane(30, 1.0, 0.0);
        let p = crop_patch(&m, Vec3::new(0.5, 0.5, 0.0), 10.0, 100).unwrap();
        assert!(p.vertex_ids.len() <= 100);
        assert!(p.vertex_ids.len() > 60);
        assert!(p.radius < 10.0);
        build_adjacency(&p.mesh).unwrap();
    }

    #[test]
    fn far_seed_is_an_error() {
        let m = grid_plane(3, 1.0, 0.0);
        assert!(matches!(
            crop_patch(&m, Vec3::new(0.5, 0.5, 5.0), 1.0, 100),
            Err(Error::SeedTooFar { .. })
        ));
    }

    #[test]
    fn interior_feature_selection() {
        let m = grid_plane(11, 1.0, 0.0);
        let p = crop_patch(&m, Vec3::new(0.5, 0.5, 0.0), 100.0, 2000).unwrap();
        let line = |a: Vec3, b: Vec3| FeatureCurve::sharp(vec![a, b]);
        let curves = FeatureCurveSet::new(vec![
            line(Vec3::new(0.5, -1.0, 0.0), Vec3::new(0.5, 2.0, 0.0)),
            line(Vec3::new(5.0, 5.0, 5.0), Vec3::new(6.0, 5.0, 5.0)),
            line(Vec3::new(-0.5, 0.0, 0.0), Vec3::new(1.5, 0.0, 0.0)),
        ])
        .unwrap();
        let kept = select_interior_features(&p, &curves, 0.02);
        assert_eq!(kept.curves, vec![curves.curves[0].clone()]);
    }
}
