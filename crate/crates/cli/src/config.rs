use std::path::Path;

use featremesh::fieldgen::{ScalingConfig, SidecarFormat};
use featremesh::metrics::MetricsConfig;
use featremesh::remesh::RemeshConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Data generation settings not owned by a library module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    /// Padding voxels around the bounding box.
    pub padding: usize,
    pub rotate: bool,
    /// Fraction of faces kept by simplification; absent disables it.
    pub simplify: Option<f64>,
    /// Average stratified samples per coarse face for normal consistency.
    pub samples_per_face: f64,
    /// Random ground-truth samples per coarse face for the reverse map.
    pub gt_samples_per_face: f64,
    pub patches: bool,
    pub format: SidecarFormat,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            padding: 3,
            rotate: true,
            simplify: Some(0.33),
            samples_per_face: 50.0,
            gt_samples_per_face: 4.0,
            patches: false,
            format: SidecarFormat::Csv,
        }
    }
}

/// Effective configuration of a run: defaults, then a TOML file, then
/// command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub scaling: ScalingConfig,
    pub data: DataConfig,
    pub remesh: RemeshConfig,
    pub metrics: MetricsConfig,
    /// Where the values came from, in order of application.
    #[serde(skip_deserializing)]
    pub sources: Vec<String>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(RunConfig {
                sources: vec!["defaults".into()],
                ..Default::default()
            });
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Input(format!("{}: {}", path.display(), e.message())))?;
        cfg.sources = vec!["defaults".into(), format!("file:{}", path.display())];
        Ok(cfg)
    }

    /// Seeds every stochastic component from the run seed.
    pub fn propagate_seed(&mut self) {
        self.remesh.seed = self.seed;
        self.metrics.seed = self.seed;
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.scaling.validate()?;
        self.remesh.validate()?;
        self.metrics.validate()?;
        if let Some(f) = self.data.simplify {
            if !(f > 0.0 && f <= 1.0) {
                return Err(CliError::Input(format!(
                    "data.simplify must be in (0, 1], got {f}"
                )));
            }
        }
        if !(self.data.samples_per_face > 0.0 && self.data.gt_samples_per_face > 0.0) {
            return Err(CliError::Input(
                "sample counts per face must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_overrides_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        std::fs::write(
            &p,
            "seed = 7\n[remesh]\nalpha_prox = 3.0\n[remesh.fusion]\nweighting = \"area\"\n",
        )
        .unwrap();
        let c = RunConfig::load(Some(&p)).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.remesh.alpha_prox, 3.0);
        assert_eq!(c.remesh.flip_threshold, 0.01);
        assert_eq!(
            c.remesh.fusion.weighting,
            featremesh::patchwork::FusionWeighting::Area
        );
        assert_eq!(c.sources.len(), 2);
    }

    #[test]
    fn unknown_file_is_input_error() {
        let e = RunConfig::load(Some(Path::new("/nonexistent/run.toml"))).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
