use featremesh::fieldgen::{
    characteristic_size, distance_direction_fields, surface_improvement_field, CurveIndex,
    EdgeField, FeatureCurve, FeatureCurveSet, FeatureFields, NcSampler, ReferenceSurface,
};
use featremesh::geom::Vec3;
use featremesh::mesh::{EditGuard, MeshEditor, TriMesh};
use featremesh::metrics::{match_meshes, scores};
use featremesh::patchwork::{crop_patch, fuse_vertex_fields, FusionConfig, Patch, PatchExclusion};
use featremesh::remesh::{select_noninteracting_flips, snap_vertices, RemeshConfig};
use featremesh::shapes::{box_mesh, folded_grid, icosphere};
use proptest::prelude::*;

fn offsets(n: usize, amount: f64) -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((-amount..amount, -amount..amount, -amount..amount), n)
}

fn jittered(m: &TriMesh, d: &[(f64, f64, f64)]) -> TriMesh {
    let mut out = m.clone();
    for (v, &(x, y, z)) in out.vertices.iter_mut().zip(d) {
        *v += Vec3::new(x, y, z);
    }
    out
}

/// One quad straddling a fold: `c`, `d` on the fold line, `a` on the flat
/// side, `b` on the raised side, split along the wrong diagonal (a, b).
fn crease_quad(fold: f64, d: &[(f64, f64, f64)]) -> TriMesh {
    let a = Vec3::new(-0.8, 0.0, 0.0);
    let b = Vec3::new(0.8 * fold.cos(), 0.0, 0.8 * fold.sin());
    let c = Vec3::new(0.0, -0.8, 0.0);
    let e = Vec3::new(0.0, 0.8, 0.0);
    jittered(
        &TriMesh::new(vec![a, b, c, e], vec![[0, 2, 1], [0, 1, 3]]).unwrap(),
        d,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn improvement_is_antisymmetric(fold in 0.2f64..1.4, d in offsets(4, 0.1)) {
        let (gt, _) = folded_grid(5, 1.0, fold);
        let reference = ReferenceSurface::new(gt);
        let quad = crease_quad(fold, &d);
        let guard = EditGuard { max_normal_rotation: std::f64::consts::PI, ..Default::default() };
        let sampler = NcSampler::for_mesh(&quad, 40.0);
        let mut ed = MeshEditor::new(quad.clone()).unwrap();
        let e = featremesh::mesh::Edge::new(0, 1);
        prop_assume!(ed.can_flip(e, &guard).is_ok());
        let (back, _) = ed.flip(e, &guard).unwrap();
        let flipped = ed.into_mesh();
        prop_assume!(MeshEditor::new(flipped.clone()).unwrap().can_flip(back, &guard).is_ok());
        let s = surface_improvement_field(&quad, &reference, &sampler, &guard).unwrap();
        let s2 = surface_improvement_field(&flipped, &reference, &sampler, &guard).unwrap();
        let sum = s.get(e).unwrap() + s2.get(back).unwrap();
        prop_assert!(sum.abs() <= 1e-12, "s + s' = {}", sum);
    }

    #[test]
    fn fusion_ignores_patch_order(seed in 0u64..1000, rot in 1usize..7) {
        let m = icosphere(2);
        let patches: Vec<Patch> = (0..7)
            .map(|i| crop_patch(&m, m.vertices[i * 17], 0.9, usize::MAX).unwrap())
            .collect();
        let mut state = seed;
        let mut noise = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let fields: Vec<FeatureFields> = patches
            .iter()
            .map(|p| FeatureFields {
                distance: p.vertex_ids.iter().map(|_| 0.2 * noise()).collect(),
                direction: p
                    .vertex_ids
                    .iter()
                    .map(|_| Vec3::new(noise() - 0.5, noise() - 0.5, noise() - 0.5).normalize())
                    .collect(),
                epsilon: 0.2,
            })
            .collect();
        let cfg = FusionConfig { exclusion: PatchExclusion::Never, ..Default::default() };
        let preds: Vec<(&Patch, &FeatureFields)> = patches.iter().zip(&fields).collect();
        let mut shuffled = preds.clone();
        shuffled.rotate_left(rot);
        shuffled.swap(0, 6 - rot % 6);
        let a = fuse_vertex_fields(m.vertices.len(), &preds, &cfg, 0.05, 0.2).unwrap();
        let b = fuse_vertex_fields(m.vertices.len(), &shuffled, &cfg, 0.05, 0.2).unwrap();
        for v in 0..m.vertices.len() {
            prop_assert_eq!(a.fields.distance[v].to_bits(), b.fields.distance[v].to_bits());
            for k in 0..3 {
                prop_assert_eq!(a.fields.direction[v][k].to_bits(), b.fields.direction[v][k].to_bits());
            }
        }
    }

    #[test]
    fn selected_flips_are_independent(values in prop::collection::vec(-0.5f64..1.0, 1..300), d in offsets(49, 0.03)) {
        let (g, _) = folded_grid(7, 1.0, 0.6);
        let m = jittered(&g, &d);
        let mut s = EdgeField::zeros(&m);
        for (i, v) in s.values.iter_mut().enumerate() {
            *v = values[i % values.len()];
        }
        let cfg = RemeshConfig::default();
        let sel = select_noninteracting_flips(&m, &s, &cfg, &cfg.guard).unwrap();
        let ed = MeshEditor::new(m.clone()).unwrap();
        let mut faces = std::collections::HashSet::new();
        for e in &sel {
            prop_assert!(s.get(*e).unwrap() > cfg.flip_threshold);
            for f in ed.edge_faces(*e) {
                prop_assert!(faces.insert(f), "face {} shared", f);
            }
        }
    }

    #[test]
    fn oracle_snapping_lands_on_curves(fold in 0.3f64..1.3, d in offsets(81, 0.04)) {
        let (g, curves) = folded_grid(9, 1.0, fold);
        let m = jittered(&g, &d);
        let lambda = 0.05;
        let cfg = RemeshConfig::default();
        let f = distance_direction_fields(&m.vertices, &curves, cfg.epsilon * lambda);
        let (out, report) = snap_vertices(&m, &f.distance, &f.direction, &cfg, lambda, &cfg.guard).unwrap();
        let index = CurveIndex::new(&curves);
        let total = |mesh: &TriMesh| mesh.vertices.iter().map(|v| index.distance(v)).sum::<f64>();
        prop_assert!(total(&out) <= total(&m) + 1e-12);
        let mut moved = 0;
        for (a, b) in m.vertices.iter().zip(&out.vertices) {
            if a != b {
                moved += 1;
                prop_assert!(index.distance(b) <= 1e-9);
            }
        }
        prop_assert_eq!(moved, report.moved);
    }

    #[test]
    fn f_score_bounds_and_swap_symmetry(seed in 1u64..500, d in offsets(98, 0.05)) {
        let gt = box_mesh(Vec3::repeat(-1.0), Vec3::repeat(1.0), 4);
        let recon = jittered(&box_mesh(Vec3::repeat(-1.0), Vec3::repeat(1.0), 4), &d);
        let ab = match_meshes(&recon, &gt, 400, seed).unwrap();
        let ba = match_meshes(&gt, &recon, 400, seed - 1).unwrap();
        let s = scores(&ab, 0.05, 10f64.to_radians());
        let t = scores(&ba, 0.05, 10f64.to_radians());
        for (p, r, f) in [(s.precision.value, s.recall.value, s.f), (s.normal_precision.value, s.normal_recall.value, s.normal_f)] {
            prop_assert!(f <= 2.0 * p.min(r) + 1e-15);
            prop_assert!(f >= p.min(r) - 1e-15 && f <= p.max(r) + 1e-15);
        }
        prop_assert_eq!(s.precision, t.recall);
        prop_assert_eq!(s.normal_precision, t.normal_recall);
    }

    #[test]
    fn characteristic_size_matches_sort_and_interpolate(extents in prop::collection::vec(0.1f64..10.0, 1..20), q in 0.01f64..0.99) {
        let set = FeatureCurveSet::new(
            extents.iter().map(|&e| FeatureCurve::sharp(vec![Vec3::zeros(), Vec3::new(0.0, e, 0.3 * e)])).collect(),
        )
        .unwrap();
        let mut sorted = extents.clone();
        sorted.sort_by(f64::total_cmp);
        let pos = q * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(sorted.len() - 1);
        let expect = sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo]);
        prop_assert!((characteristic_size(&set, q).unwrap() - expect).abs() <= 1e-12);
    }
}
