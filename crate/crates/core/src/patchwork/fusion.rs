use serde::{Deserialize, Serialize};

use super::Patch;
use crate::error::{Error, Result};
use crate::fieldgen::{EdgeField, FeatureFields};
use crate::geom::{quantile, Vec3};
use crate::mesh::Edge;

/// Fused direction vectors shorter than this become zero.
pub const MIN_DIRECTION_NORM: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionWeighting {
    #[default]
    Uniform,
    /// Each prediction weighted by the vertex's one-third area share in
    /// its patch.
    Area,
}

/// Which field sources the patch exclusion rule applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatchExclusion {
    Always,
    /// Only estimated fields; exact ground-truth fields are never dropped.
    #[default]
    Predicted,
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    /// Quantile of a patch's predicted distances tested for exclusion.
    pub alpha_exclude: f64,
    /// Exclusion threshold in units of lambda.
    pub exclude_threshold: f64,
    pub exclusion: PatchExclusion,
    pub weighting: FusionWeighting,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            alpha_exclude: 0.10,
            exclude_threshold: 0.5,
            exclusion: PatchExclusion::Predicted,
            weighting: FusionWeighting::Uniform,
        }
    }
}

impl FusionConfig {
    /// Resolves [`PatchExclusion::Predicted`] for fields that are exact
    /// (`exact = true`) or estimated.
    pub fn for_source(&self, exact: bool) -> FusionConfig {
        let exclusion = match self.exclusion {
            PatchExclusion::Predicted if exact => PatchExclusion::Never,
            PatchExclusion::Predicted => PatchExclusion::Always,
            other => other,
        };
        FusionConfig { exclusion, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_exclude > 0.0 && self.alpha_exclude < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha_exclude must lie in (0, 1), got {}",
                self.alpha_exclude
            )));
        }
        if !(self.exclude_threshold > 0.0) {
            return Err(Error::InvalidParameter(
                "exclude_threshold must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexFusion {
    pub fields: FeatureFields,
    /// Whether each vertex received at least one retained prediction.
    pub covered: Vec<bool>,
    /// Indices into the prediction list of excluded patches.
    pub excluded: Vec<usize>,
}

fn vertex_weights(patch: &Patch, weighting: FusionWeighting) -> Vec<f64> {
    match weighting {
        FusionWeighting::Uniform => vec![1.0; patch.vertex_ids.len()],
        FusionWeighting::Area => {
            let mut w = vec![0.0; patch.vertex_ids.len()];
            for (f, face) in patch.mesh.faces.iter().enumerate() {
                let a = patch.mesh.face_area(f) / 3.0;
                for &v in face {
                    w[v] += a;
                }
            }
            w
        }
    }
}

/// Sum of `(weight, value)` pairs in a canonical order, so the result does
/// not depend on the order patches were listed in.
fn ordered_sum<const N: usize>(items: &mut [(f64, [f64; N])]) -> (f64, [f64; N]) {
    items.sort_by(|a, b| {
        a.0.total_cmp(&b.0).then_with(|| {
            (0..N)
                .map(|k| a.1[k].total_cmp(&b.1[k]))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let mut w = 0.0;
    let mut s = [0.0; N];
    for (wi, v) in items.iter() {
        w += wi;
        for k in 0..N {
            s[k] += wi * v[k];
        }
    }
    (w, s)
}

/// Combines per-patch distance and direction predictions into whole-mesh
/// fields. Unless exclusion is `Never`, patches whose `alpha_exclude`
/// distance quantile exceeds `exclude_threshold * lambda` are dropped; the
/// rest are averaged per
/// vertex and directions renormalized. Uncovered vertices get distance
/// `epsilon` and zero direction.
pub fn fuse_vertex_fields(
    vertex_count: usize,
    predictions: &[(&Patch, &FeatureFields)],
    cfg: &FusionConfig,
    lambda: f64,
    epsilon: f64,
) -> Result<VertexFusion> {
    cfg.validate()?;
    let mut dist_items: Vec<Vec<(f64, [f64; 1])>> = vec![Vec::new(); vertex_count];
    let mut dir_items: Vec<Vec<(f64, [f64; 3])>> = vec![Vec::new(); vertex_count];
    let mut excluded = Vec::new();
    for (i, (patch, fields)) in predictions.iter().enumerate() {
        if fields.len() != patch.vertex_ids.len() {
            return Err(Error::Format(format!(
                "prediction {i} has {} values for a patch of {} vertices",
                fields.len(),
                patch.vertex_ids.len()
            )));
        }
        let q = quantile(&fields.distance, cfg.alpha_exclude).unwrap_or(f64::INFINITY);
        if cfg.exclusion != PatchExclusion::Never && q > cfg.exclude_threshold * lambda {
            excluded.push(i);
            continue;
        }
        let w = vertex_weights(patch, cfg.weighting);
        for (local, &global) in patch.vertex_ids.iter().enumerate() {
            if global >= vertex_count {
                return Err(Error::Format(format!(
                    "patch vertex {global} outside a mesh of {vertex_count}"
                )));
            }
            let r = fields.direction[local];
            dist_items[global].push((w[local], [fields.distance[local]]));
            dir_items[global].push((w[local], [r.x, r.y, r.z]));
        }
    }
    if excluded.len() == predictions.len() && !predictions.is_empty() {
        log::warn!(
            "all {} patches were excluded from fusion; fields fall back to defaults",
            predictions.len()
        );
    }
    let mut out = FeatureFields::empty(vertex_count, epsilon);
    let mut covered = vec![false; vertex_count];
    for v in 0..vertex_count {
        if dist_items[v].is_empty() {
            continue;
        }
        let (w, [d]) = ordered_sum(&mut dist_items[v]);
        if !(w > 0.0) {
            continue;
        }
        covered[v] = true;
        out.distance[v] = (d / w).clamp(0.0, epsilon);
        let (w, s) = ordered_sum(&mut dir_items[v]);
        let r = Vec3::new(s[0], s[1], s[2]) / w;
        let n = r.norm();
        out.direction[v] = if n < MIN_DIRECTION_NORM {
            Vec3::zeros()
        } else {
            r / n
        };
    }
    Ok(VertexFusion {
        fields: out,
        covered,
        excluded,
    })
}

/// Averages per-patch edge predictions onto `edges` (sorted parent edges).
/// Only edges interior to a patch contribute; uncovered edges get 0.
pub fn fuse_edge_fields(edges: &[Edge], predictions: &[(&Patch, &EdgeField)]) -> Result<EdgeField> {
    let mut items: Vec<Vec<(f64, [f64; 1])>> = vec![Vec::new(); edges.len()];
    for (i, (patch, field)) in predictions.iter().enumerate() {
        let interior = patch.interior_edges();
        for (e, v) in field.edges.iter().zip(&field.values) {
            let (Some(&a), Some(&b)) = (patch.vertex_ids.get(e.0), patch.vertex_ids.get(e.1))
            else {
                return Err(Error::Format(format!(
                    "prediction {i} names edge ({}, {}) outside its patch",
                    e.0, e.1
                )));
            };
            let g = Edge::new(a, b);
            if interior.binary_search(&g).is_err() {
                continue;
            }
            if let Ok(slot) = edges.binary_search(&g) {
                items[slot].push((1.0, [*v]));
            }
        }
    }
    let values = items
        .iter_mut()
        .map(|it| {
            if it.is_empty() {
                0.0
            } else {
                let (w, [s]) = ordered_sum(it);
                s / w
            }
        })
        .collect();
    Ok(EdgeField {
        edges: edges.to_vec(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patchwork::crop_patch;
    use crate::shapes::grid_plane;

    #[test]
    fn two_patches_average() {
        let m = grid_plane(5, 1.0, 0.0);
        let p = crop_patch(&m, Vec3::new(0.5, 0.5, 0.0), 10.0, 1000).unwrap();
        let n = p.vertex_ids.len();
        let a = FeatureFields {
            distance: vec![0.01; n],
            direction: vec![Vec3::x(); n],
            epsilon: 0.2,
        };
        let b = FeatureFields {
            distance: vec![0.03; n],
            direction: vec![Vec3::y(); n],
            epsilon: 0.2,
        };
        let f = fuse_vertex_fields(
            m.vertices.len(),
            &[(&p, &a), (&p, &b)],
            &FusionConfig::default(),
            0.1,
            0.2,
        )
        .unwrap();
        assert!(f.fields.distance.iter().all(|&d| (d - 0.02).abs() < 1e-15));
        let diag = Vec3::new(1.0, 1.0, 0.0).normalize();
        assert!(f.fields.direction.iter().all(|r| (r - diag).norm() < 1e-15));
        // 10% quantile 0.06 > 0.05: excluded.
        let far = FeatureFields {
            distance: vec![0.06; n],
            direction: vec![Vec3::z(); n],
            epsilon: 0.2,
        };
        let f = fuse_vertex_fields(
            m.vertices.len(),
            &[(&p, &a), (&p, &far)],
            &FusionConfig::default(),
            0.1,
            0.2,
        )
        .unwrap();
        assert_eq!(f.excluded, vec![1]);
        assert!(f.fields.distance.iter().all(|&d| d == 0.01));
        let keep = FusionConfig::default().for_source(true);
        let f =
            fuse_vertex_fields(m.vertices.len(), &[(&p, &a), (&p, &far)], &keep, 0.1, 0.2).unwrap();
        assert!(f.excluded.is_empty());
    }

    #[test]
    fn edges_average_and_default_to_zero() {
        let m = grid_plane(5, 1.0, 0.0);
        let edges = m.edges();
        let p = crop_patch(&m, Vec3::new(0.5, 0.5, 0.0), 0.4, 1000).unwrap();
        let local = p.mesh.edges();
        let f1 = EdgeField {
            edges: local.clone(),
            values: vec![0.2; local.len()],
        };
        let f2 = EdgeField {
            edges: local.clone(),
            values: vec![0.4; local.len()],
        };
        let fused = fuse_edge_fields(&edges, &[(&p, &f1), (&p, &f2)]).unwrap();
        let interior = p.interior_edges();
        assert!(!interior.is_empty());
        for (e, v) in fused.edges.iter().zip(&fused.values) {
            if interior.contains(e) {
                assert!((v - 0.3).abs() < 1e-15);
            } else {
                assert_eq!(*v, 0.0);
            }
        }
    }
}
