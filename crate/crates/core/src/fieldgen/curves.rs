use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bvh::{Bvh, SegmentPrim};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh::TriMesh;

/// One feature polyline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCurve {
    pub points: Vec<Vec3>,
    #[serde(default = "default_sharp")]
    pub sharp: bool,
}

fn default_sharp() -> bool {
    true
}

impl FeatureCurve {
    pub fn sharp(points: Vec<Vec3>) -> Self {
        Self {
            points,
            sharp: true,
        }
    }

    /// Largest axis-aligned extent of the curve's bounding box.
    pub fn extent(&self) -> f64 {
        (0..3)
            .map(|axis| {
                let (lo, hi) = self
                    .points
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                        (lo.min(p[axis]), hi.max(p[axis]))
                    });
                hi - lo
            })
            .fold(0.0, f64::max)
    }

    pub fn segments(&self) -> impl Iterator<Item = (Vec3, Vec3)> + '_ {
        self.points.windows(2).map(|w| (w[0], w[1]))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureCurveSet {
    pub curves: Vec<FeatureCurve>,
}

impl FeatureCurveSet {
    pub fn new(curves: Vec<FeatureCurve>) -> Result<Self> {
        let set = Self { curves };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.curves.iter().enumerate() {
            if c.points.len() < 2 {
                return Err(Error::InvalidCurve {
                    curve: i,
                    reason: format!("needs at least 2 points, has {}", c.points.len()),
                });
            }
            if let Some(j) = c.points.windows(2).position(|w| w[0] == w[1]) {
                return Err(Error::InvalidCurve {
                    curve: i,
                    reason: format!("points {j} and {} coincide", j + 1),
                });
            }
            if !c.points.iter().all(|p| p.iter().all(|x| x.is_finite())) {
                return Err(Error::InvalidCurve {
                    curve: i,
                    reason: "non-finite coordinate".into(),
                });
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn sharp_only(&self) -> FeatureCurveSet {
        FeatureCurveSet {
            curves: self.curves.iter().filter(|c| c.sharp).cloned().collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> FeatureCurveSet {
        self.map_points(|p| p * factor)
    }

    pub fn transformed(&self, rotation: &nalgebra::Matrix3<f64>) -> FeatureCurveSet {
        self.map_points(|p| rotation * p)
    }

    fn map_points(&self, f: impl Fn(&Vec3) -> Vec3) -> FeatureCurveSet {
        FeatureCurveSet {
            curves: self
                .curves
                .iter()
                .map(|c| FeatureCurve {
                    points: c.points.iter().map(&f).collect(),
                    sharp: c.sharp,
                })
                .collect(),
        }
    }

    /// Loads JSON, or YAML when the extension is `.yml`/`.yaml`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let set: FeatureCurveSet = if is_yaml(path) {
            serde_yaml::from_str(&text).map_err(|e| Error::parse(path, 0, e.to_string()))?
        } else {
            serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))?
        };
        set.validate()?;
        Ok(set)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = if is_yaml(path) {
            serde_yaml::to_string(self).map_err(|e| Error::Format(e.to_string()))?
        } else {
            serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))?
        };
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

fn is_yaml(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("yml") | Some("yaml")
    )
}

#[derive(Debug, Deserialize)]
struct AbcFeatures {
    #[serde(default)]
    curves: Vec<AbcCurve>,
}

#[derive(Debug, Deserialize)]
struct AbcCurve {
    #[serde(default)]
    sharp: bool,
    #[serde(default)]
    vert_indices: Vec<usize>,
}

/// Converts an ABC-style feature annotation (YAML with `curves` entries
/// carrying `sharp` and `vert_indices` into `mesh`) into polylines.
/// Non-sharp curves are dropped, as are curves with fewer than two distinct
/// points.
pub fn curves_from_abc_yaml(text: &str, mesh: &TriMesh) -> Result<FeatureCurveSet> {
    let parsed: AbcFeatures =
        serde_yaml::from_str(text).map_err(|e| Error::Format(format!("feature yaml: {e}")))?;
    let mut curves = Vec::new();
    for (ci, c) in parsed.curves.iter().enumerate() {
        if !c.sharp {
            continue;
        }
        let mut points: Vec<Vec3> = Vec::with_capacity(c.vert_indices.len());
        for &vi in &c.vert_indices {
            let p = *mesh.vertices.get(vi).ok_or_else(|| Error::InvalidCurve {
                curve: ci,
                reason: format!("vertex index {vi} out of range"),
            })?;
            if points.last() != Some(&p) {
                points.push(p);
            }
        }
        if points.len() >= 2 {
            curves.push(FeatureCurve::sharp(points));
        }
    }
    FeatureCurveSet::new(curves)
}

/// Closest-point index over every segment of the sharp curves.
#[derive(Debug, Clone)]
pub struct CurveIndex {
    bvh: Bvh<SegmentPrim>,
}

impl CurveIndex {
    pub fn new(curves: &FeatureCurveSet) -> Self {
        let prims = curves
            .curves
            .iter()
            .filter(|c| c.sharp)
            .flat_map(|c| c.segments().map(|(a, b)| SegmentPrim { a, b }))
            .collect();
        Self {
            bvh: Bvh::build(prims),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.bvh.is_empty()
    }

    /// Closest point on any curve and its distance.
    pub fn closest(&self, p: &Vec3) -> Option<(Vec3, f64)> {
        self.bvh
            .nearest(p)
            .map(|n| (n.point, n.distance_squared.sqrt()))
    }

    pub fn distance(&self, p: &Vec3) -> f64 {
        self.closest(p).map_or(f64::INFINITY, |(_, d)| d)
    }
}
