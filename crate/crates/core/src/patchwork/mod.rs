//! Overlapping patches cut from a large mesh, and fusion of per-patch field
//! predictions back onto the whole mesh.

mod dataset;
mod fusion;
mod patch;

pub use dataset::{write_patch_dataset, DatasetManifest, PatchRecord};
pub use fusion::{
    fuse_edge_fields, fuse_vertex_fields, FusionConfig, FusionWeighting, PatchExclusion,
    VertexFusion, MIN_DIRECTION_NORM,
};
pub use patch::{
    crop_patch, graph_distances, poisson_seeds, select_interior_features, Patch, PatchCropper,
};

use serde::{Deserialize, Serialize};

/// Patch layout parameters, lengths in units of lambda.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PatchConfig {
    pub seed_spacing: f64,
    pub radius: f64,
    pub max_vertices: usize,
    pub max_seeds: usize,
}

impl Default for PatchConfig {
    fn default() -> Self {
        Self {
            seed_spacing: 16.0,
            radius: 32.0,
            max_vertices: 2000,
            max_seeds: 1000,
        }
    }
}

/// Seeds and crops the full patch cover of `mesh`, dropping empty patches.
pub fn extract_patches<R: rand::Rng + ?Sized>(
    mesh: &crate::mesh::TriMesh,
    cfg: &PatchConfig,
    lambda: f64,
    rng: &mut R,
) -> crate::Result<Vec<Patch>> {
    use rayon::prelude::*;
    let seeds = poisson_seeds(mesh, cfg.seed_spacing * lambda, cfg.max_seeds, rng)?;
    let cropper = PatchCropper::new(mesh)?;
    let patches: crate::Result<Vec<Patch>> = seeds
        .par_iter()
        .map(|&s| cropper.crop(s, cfg.radius * lambda, cfg.max_vertices))
        .collect();
    Ok(patches?.into_iter().filter(|p| !p.is_empty()).collect())
}
