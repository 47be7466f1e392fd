use serde::{Deserialize, Serialize};

use super::FeatureCurveSet;
use crate::error::{Error, Result};
use crate::geom::quantile;
use crate::mesh::TriMesh;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScalingConfig {
    /// Grid spacing.
    pub lambda: f64,
    /// Grid spacings spanned by a curve of characteristic size.
    pub samples: f64,
    /// Quantile of curve extents taken as the characteristic size.
    pub alpha_curve: f64,
    /// Per-axis voxel budget.
    pub max_grid: usize,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            lambda: 0.05,
            samples: 80.0,
            alpha_curve: 0.25,
            max_grid: 512,
        }
    }
}

impl ScalingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if !(self.samples >= 1.0 && self.samples.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "n must be at least 1, got {}",
                self.samples
            )));
        }
        if !(self.alpha_curve > 0.0 && self.alpha_curve < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha_curve must lie in (0, 1), got {}",
                self.alpha_curve
            )));
        }
        if self.max_grid < 2 {
            return Err(Error::InvalidParameter(
                "max_grid must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

/// The `alpha_curve` quantile of the curves' per-axis extents.
pub fn characteristic_size(curves: &FeatureCurveSet, alpha_curve: f64) -> Result<f64> {
    if curves.is_empty() {
        return Err(Error::NoFeatureCurves);
    }
    let extents: Vec<f64> = curves.curves.iter().map(|c| c.extent()).collect();
    quantile(&extents, alpha_curve).ok_or(Error::NoFeatureCurves)
}

#[derive(Debug, Clone)]
pub struct Scaled {
    pub mesh: TriMesh,
    pub curves: FeatureCurveSet,
    pub beta: f64,
    pub characteristic_size: f64,
}

/// Scales mesh and curves by `beta = lambda * n / l_S` so the characteristic
/// curve spans `n` grid spacings.
pub fn scale_for_sampling(
    mesh: &TriMesh,
    curves: &FeatureCurveSet,
    cfg: &ScalingConfig,
) -> Result<Scaled> {
    cfg.validate()?;
    let l_s = characteristic_size(curves, cfg.alpha_curve)?;
    if !(l_s > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "characteristic size must be positive, got {l_s}"
        )));
    }
    let beta = cfg.lambda * cfg.samples / l_s;
    let scaled = mesh.scaled(beta);
    let extent = scaled.bounds().extent();
    let dims = [0, 1, 2].map(|a| (extent[a] / cfg.lambda).ceil() as usize + 1);
    if dims.iter().any(|&d| d > cfg.max_grid) {
        return Err(Error::GridBudgetExceeded {
            dims,
            max_grid: cfg.max_grid,
        });
    }
    Ok(Scaled {
        mesh: scaled,
        curves: curves.scaled(beta),
        beta,
        characteristic_size: l_s,
    })
}
