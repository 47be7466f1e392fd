use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CurveIndex, FeatureCurveSet};
use crate::geom::Vec3;
use crate::mesh::{Edge, TriMesh};

/// Below this distance a vertex counts as lying on the curve and its
/// direction is zero.
pub const ON_CURVE: f64 = 1e-9;

/// Truncated distance-to-feature and direction-to-feature fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureFields {
    pub distance: Vec<f64>,
    pub direction: Vec<Vec3>,
    pub epsilon: f64,
}

impl FeatureFields {
    /// Fields of a vertex set with no features nearby.
    pub fn empty(vertex_count: usize, epsilon: f64) -> Self {
        Self {
            distance: vec![epsilon; vertex_count],
            direction: vec![Vec3::zeros(); vertex_count],
            epsilon,
        }
    }

    pub fn len(&self) -> usize {
        self.distance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distance.is_empty()
    }

    /// Gathers the values of `ids` (indices into `self`).
    pub fn select(&self, ids: &[usize]) -> FeatureFields {
        FeatureFields {
            distance: ids.iter().map(|&i| self.distance[i]).collect(),
            direction: ids.iter().map(|&i| self.direction[i]).collect(),
            epsilon: self.epsilon,
        }
    }
}

/// Distance `min(|q(v) - v|, epsilon)` to the closest point `q(v)` on any
/// sharp curve, and the unit direction toward it where the distance is
/// below `epsilon` (zero elsewhere and on the curve itself).
pub fn distance_direction_fields(
    vertices: &[Vec3],
    curves: &FeatureCurveSet,
    epsilon: f64,
) -> FeatureFields {
    let index = CurveIndex::new(curves);
    distance_direction_fields_indexed(vertices, &index, epsilon)
}

pub fn distance_direction_fields_indexed(
    vertices: &[Vec3],
    index: &CurveIndex,
    epsilon: f64,
) -> FeatureFields {
    let (distance, direction): (Vec<f64>, Vec<Vec3>) = vertices
        .par_iter()
        .map(|v| match index.closest(v) {
            None => (epsilon, Vec3::zeros()),
            Some((q, dist)) => {
                if dist >= epsilon {
                    (epsilon, Vec3::zeros())
                } else if dist < ON_CURVE {
                    (dist, Vec3::zeros())
                } else {
                    (dist, (q - v) / dist)
                }
            }
        })
        .unzip();
    FeatureFields {
        distance,
        direction,
        epsilon,
    }
}

/// One scalar per undirected edge; `edges` is sorted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EdgeField {
    pub edges: Vec<Edge>,
    pub values: Vec<f64>,
}

impl EdgeField {
    pub fn zeros(mesh: &TriMesh) -> Self {
        let edges = mesh.edges();
        let values = vec![0.0; edges.len()];
        Self { edges, values }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn get(&self, e: Edge) -> Option<f64> {
        self.edges.binary_search(&e).ok().map(|i| self.values[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldgen::FeatureCurve;

    #[test]
    fn far_vertices_are_truncated() {
        let curves =
            FeatureCurveSet::new(vec![FeatureCurve::sharp(vec![Vec3::zeros(), Vec3::x()])])
                .unwrap();
        let f = distance_direction_fields(&[Vec3::new(0.5, 3.0, 0.0)], &curves, 0.2);
        assert_eq!(f.distance, vec![0.2]);
        assert_eq!(f.direction, vec![Vec3::zeros()]);
    }

    #[test]
    fn direction_points_at_the_curve() {
        let eps = 0.2;
        let curves = FeatureCurveSet::new(vec![FeatureCurve::sharp(vec![
            Vec3::new(0.0, -1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ])])
        .unwrap();
        let f = distance_direction_fields(
            &[Vec3::new(eps / 2.0, 0.3, 0.0), Vec3::new(0.0, 0.5, 0.0)],
            &curves,
            eps,
        );
        assert!((f.distance[0] - eps / 2.0).abs() < 1e-15);
        assert!((f.direction[0] - Vec3::new(-1.0, 0.0, 0.0)).norm() < 1e-15);
        assert_eq!(f.distance[1], 0.0);
        assert_eq!(f.direction[1], Vec3::zeros());
    }

    #[test]
    fn no_curves_gives_defaults() {
        let f = distance_direction_fields(&[Vec3::zeros(); 3], &FeatureCurveSet::default(), 0.5);
        assert_eq!(f, FeatureFields::empty(3, 0.5));
    }
}
