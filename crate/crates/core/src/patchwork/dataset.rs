use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Patch;
use crate::error::{Error, Result};
use crate::fieldgen::{FieldSet, SidecarFormat};
use crate::geom::Vec3;

/// Per-patch entry of a dataset manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchRecord {
    pub dir: String,
    pub seed: Vec3,
    pub radius: f64,
    pub root: usize,
    /// Local to parent vertex ids.
    pub vertex_ids: Vec<usize>,
    pub face_ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub lambda: f64,
    pub epsilon: f64,
    pub patches: Vec<PatchRecord>,
}

/// Writes one sub-directory per patch (mesh, field sidecars, field
/// manifest) plus `manifest.json` with seeds, radii and id maps.
pub fn write_patch_dataset(
    dir: impl AsRef<Path>,
    patches: &[(Patch, FieldSet)],
    lambda: f64,
    format: SidecarFormat,
) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut records = Vec::with_capacity(patches.len());
    let mut epsilon = 0.0;
    for (i, (patch, fields)) in patches.iter().enumerate() {
        let name = format!("patch_{i:04}");
        fields.write_dir(dir.join(&name), &patch.mesh, format)?;
        epsilon = fields.epsilon;
        records.push(PatchRecord {
            dir: name,
            seed: patch.seed,
            radius: patch.radius,
            root: patch.root,
            vertex_ids: patch.vertex_ids.clone(),
            face_ids: patch.face_ids.clone(),
        });
    }
    let manifest = DatasetManifest {
        lambda,
        epsilon,
        patches: records,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patchwork::crop_patch;

    #[test]
    fn writes_manifest_and_patches() {
        let m = crate::shapes::grid_plane(6, 1.0, 0.0);
        let p = crop_patch(&m, Vec3::new(0.5, 0.5, 0.0), 0.3, 100).unwrap();
        let n = p.vertex_ids.len();
        let fields = FieldSet {
            epsilon: 0.2,
            distance: Some(vec![0.2; n]),
            ..Default::default()
        };
        let dir = tempfile::tempdir().unwrap();
        write_patch_dataset(
            dir.path(),
            &[(p.clone(), fields.clone())],
            0.05,
            SidecarFormat::Csv,
        )
        .unwrap();
        let text = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        let manifest: DatasetManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(manifest.patches[0].vertex_ids, p.vertex_ids);
        let (mesh, back) = FieldSet::read_dir(dir.path().join("patch_0000")).unwrap();
        assert_eq!(mesh.faces, p.mesh.faces);
        assert_eq!(back, fields);
    }
}
