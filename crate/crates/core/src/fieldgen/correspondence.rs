use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nc::{face_sample_points, NcSampler, ReferenceSurface};
use super::sampling::{bary_point, sample_surface};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh::TriMesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapDirection {
    CoarseToGt,
    GtToCoarse,
}

impl MapDirection {
    fn label(self) -> &'static str {
        match self {
            MapDirection::CoarseToGt => "coarse-to-gt",
            MapDirection::GtToCoarse => "gt-to-coarse",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub source_face: usize,
    pub bary: [f64; 3],
    pub target_face: usize,
    pub target_point: Vec3,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceMap {
    pub direction: MapDirection,
    pub samples: Vec<Correspondence>,
}

/// How source points are placed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SamplePattern {
    /// Area-uniform random points, `density` per unit area.
    Random { density: f64, seed: u64 },
    /// The deterministic per-face pattern used for normal consistency.
    Stratified(NcSampler),
}

/// Maps points on `src` to their exact closest points on `dst`. Swapping
/// the meshes (and the direction label) gives the reverse map.
pub fn correspondence_map(
    src: &TriMesh,
    dst: &ReferenceSurface,
    pattern: SamplePattern,
    direction: MapDirection,
) -> CorrespondenceMap {
    let points: Vec<(usize, [f64; 3], Vec3)> = match pattern {
        SamplePattern::Random { density, seed } => {
            let n = (density * src.total_area()).round().max(0.0) as usize;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            sample_surface(src, n, &mut rng)
                .into_iter()
                .map(|s| (s.face, s.bary, s.point))
                .collect()
        }
        SamplePattern::Stratified(sampler) => src
            .faces
            .iter()
            .enumerate()
            .flat_map(|(fi, &f)| {
                // Report barycentrics against the face's stored vertex order.
                let shift = (0..3).min_by_key(|&i| f[i]).unwrap();
                face_sample_points(src, f, &sampler)
                    .into_iter()
                    .map(move |(b, p)| {
                        let mut stored = [0.0; 3];
                        for (k, bk) in b.iter().enumerate() {
                            stored[(k + shift) % 3] = *bk;
                        }
                        (fi, stored, p)
                    })
            })
            .collect(),
    };
    let samples = points
        .par_iter()
        .filter_map(|&(face, bary, p)| {
            dst.closest(&p).map(|hit| Correspondence {
                source_face: face,
                bary,
                target_face: hit.index,
                target_point: hit.point,
                distance: hit.distance_squared.sqrt(),
            })
        })
        .collect();
    CorrespondenceMap { direction, samples }
}

impl CorrespondenceMap {
    pub fn source_point(&self, src: &TriMesh, i: usize) -> Vec3 {
        let s = &self.samples[i];
        bary_point(src, s.source_face, s.bary)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.samples.len() * 96);
        let _ = writeln!(out, "# direction: {}", self.direction.label());
        out.push_str("source_face,b0,b1,b2,target_face,tx,ty,tz,distance\n");
        for s in &self.samples {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                s.source_face,
                s.bary[0],
                s.bary[1],
                s.bary[2],
                s.target_face,
                s.target_point.x,
                s.target_point.y,
                s.target_point.z,
                s.distance
            );
        }
        out
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut direction = None;
        let mut samples = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            if let Some(rest) = line.strip_prefix("# direction:") {
                direction = match rest.trim() {
                    "coarse-to-gt" => Some(MapDirection::CoarseToGt),
                    "gt-to-coarse" => Some(MapDirection::GtToCoarse),
                    other => {
                        return Err(Error::parse(
                            path,
                            lineno,
                            format!("unknown direction {other:?}"),
                        ))
                    }
                };
                continue;
            }
            if line.starts_with('#') || line.starts_with("source_face") || line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 9 {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("expected 9 columns, found {}", cols.len()),
                ));
            }
            let f = |k: usize| {
                cols[k]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::parse(path, lineno, format!("column {k}: {e}")))
            };
            let u = |k: usize| {
                cols[k]
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| Error::parse(path, lineno, format!("column {k}: {e}")))
            };
            samples.push(Correspondence {
                source_face: u(0)?,
                bary: [f(1)?, f(2)?, f(3)?],
                target_face: u(4)?,
                target_point: Vec3::new(f(5)?, f(6)?, f(7)?),
                distance: f(8)?,
            });
        }
        let direction =
            direction.ok_or_else(|| Error::parse(path, 1, "missing direction header"))?;
        Ok(CorrespondenceMap { direction, samples })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::grid_plane;

    #[test]
    fn self_map_has_zero_distance() {
        let m = crate::shapes::icosphere(2);
        let r = ReferenceSurface::new(m.clone());
        let map = correspondence_map(
            &m,
            &r,
            SamplePattern::Random {
                density: 50.0,
                seed: 1,
            },
            MapDirection::CoarseToGt,
        );
        assert!(!map.samples.is_empty());
        assert!(map.samples.iter().all(|s| s.distance < 1e-12));
    }

    #[test]
    fn parallel_planes() {
        let src = grid_plane(5, 1.0, 0.3);
        let dst = ReferenceSurface::new(grid_plane(3, 1.0, 0.0));
        let map = correspondence_map(
            &src,
            &dst,
            SamplePattern::Stratified(NcSampler::new(100.0)),
            MapDirection::CoarseToGt,
        );
        for (i, s) in map.samples.iter().enumerate() {
            assert!((s.distance - 0.3).abs() < 1e-12);
            assert!(s.bary.iter().all(|&b| b >= 0.0));
            let p = map.source_point(&src, i);
            assert!((p - s.target_point - Vec3::new(0.0, 0.0, 0.3)).norm() < 1e-12);
        }
    }

    #[test]
    fn csv_round_trip() {
        let src = grid_plane(3, 1.0, 0.3);
        let dst = ReferenceSurface::new(grid_plane(3, 1.0, 0.0));
        let map = correspondence_map(
            &src,
            &dst,
            SamplePattern::Random {
                density: 30.0,
                seed: 4,
            },
            MapDirection::GtToCoarse,
        );
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("map.csv");
        map.save_csv(&p).unwrap();
        assert_eq!(CorrespondenceMap::load_csv(&p).unwrap(), map);
    }
}
