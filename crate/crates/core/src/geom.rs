//! Small geometric kernels shared by every module: closest points on
//! triangles and segments, bounding boxes, triangle shape measures.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Self {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Self {
        let mut b = Self::empty();
        for p in points {
            b.grow(p);
        }
        b
    }

    pub fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x
    }

    pub fn extent(&self) -> Vec3 {
        if self.is_empty() {
            Vec3::zeros()
        } else {
            self.max - self.min
        }
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    /// Squared distance from `p` to the box (zero inside).
    pub fn distance_squared(&self, p: &Vec3) -> f64 {
        let mut d2 = 0.0;
        for i in 0..3 {
            let v = if p[i] < self.min[i] {
                self.min[i] - p[i]
            } else if p[i] > self.max[i] {
                p[i] - self.max[i]
            } else {
                0.0
            };
            d2 += v * v;
        }
        d2
    }

    pub fn longest_axis(&self) -> usize {
        let e = self.extent();
        if e.x >= e.y && e.x >= e.z {
            0
        } else if e.y >= e.z {
            1
        } else {
            2
        }
    }
}

/// Result of a closest-point query against a triangle.
#[derive(Debug, Clone, Copy)]
pub struct TriangleHit {
    pub point: Vec3,
    /// Barycentric coordinates of `point` with respect to (a, b, c).
    pub bary: [f64; 3],
    pub distance_squared: f64,
}

/// Closest point on triangle (a, b, c) to `p`, by Voronoi-region
/// classification. Works for degenerate triangles.
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> TriangleHit {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    let finish = |bary: [f64; 3]| {
        let point = a * bary[0] + b * bary[1] + c * bary[2];
        TriangleHit {
            point,
            bary,
            distance_squared: (p - point).norm_squared(),
        }
    };
    if d1 <= 0.0 && d2 <= 0.0 {
        return finish([1.0, 0.0, 0.0]);
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return finish([0.0, 1.0, 0.0]);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return finish([1.0 - v, v, 0.0]);
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return finish([0.0, 0.0, 1.0]);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return finish([1.0 - w, 0.0, w]);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return finish([0.0, 1.0 - w, w]);
    }
    let denom = va + vb + vc;
    if denom.abs() <= f64::MIN_POSITIVE || !denom.is_finite() {
        // Collinear vertices that slipped past the edge tests: fall back to
        // the closest of the three edges.
        let candidates = [
            (closest_point_on_segment(p, a, b), 0usize),
            (closest_point_on_segment(p, b, c), 1),
            (closest_point_on_segment(p, c, a), 2),
        ];
        let (best, which) = candidates
            .iter()
            .min_by(|x, y| x.0 .1.total_cmp(&y.0 .1))
            .copied()
            .unwrap();
        let t = best.2;
        let bary = match which {
            0 => [1.0 - t, t, 0.0],
            1 => [0.0, 1.0 - t, t],
            _ => [t, 0.0, 1.0 - t],
        };
        return finish(bary);
    }
    let v = vb / denom;
    let w = vc / denom;
    finish([1.0 - v - w, v, w])
}

/// Closest point on segment [a, b] to `p`; returns (point, squared distance, t).
pub fn closest_point_on_segment(p: &Vec3, a: &Vec3, b: &Vec3) -> (Vec3, f64, f64) {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = a + ab * t;
    (q, (p - q).norm_squared(), t)
}

/// Unnormalized face normal (twice the area vector).
pub fn triangle_area_vector(a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    (b - a).cross(&(c - a))
}

pub fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * triangle_area_vector(a, b, c).norm()
}

/// Unit normal, or zero for degenerate triangles.
pub fn triangle_normal(a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    normalize_or_zero(&triangle_area_vector(a, b, c))
}

pub fn normalize_or_zero(v: &Vec3) -> Vec3 {
    let n = v.norm();
    if n > 0.0 && n.is_finite() {
        v / n
    } else {
        Vec3::zeros()
    }
}

/// Angle between two vectors in radians, robust near 0 and pi.
pub fn angle_between(u: &Vec3, v: &Vec3) -> f64 {
    u.cross(v).norm().atan2(u.dot(v))
}

/// Smallest interior angle of a triangle in radians (0 for degenerate ones).
pub fn triangle_min_angle(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let corner = |p: &Vec3, q: &Vec3, r: &Vec3| {
        let u = q - p;
        let v = r - p;
        if u.norm_squared() == 0.0 || v.norm_squared() == 0.0 {
            0.0
        } else {
            angle_between(&u, &v)
        }
    };
    corner(a, b, c).min(corner(b, c, a)).min(corner(c, a, b))
}

/// Linear-interpolation quantile (order statistics interpolated at
/// position `q * (n - 1)`). Returns `None` for empty input.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = q.clamp(0.0, 1.0);
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_regions() {
        let a = Vec3::new(0.0, 0.0, 0.0);
        let b = Vec3::new(1.0, 0.0, 0.0);
        let c = Vec3::new(0.0, 1.0, 0.0);
        let h = closest_point_on_triangle(&Vec3::new(0.25, 0.25, 2.0), &a, &b, &c);
        assert!((h.point - Vec3::new(0.25, 0.25, 0.0)).norm() < 1e-15);
        assert!((h.distance_squared - 4.0).abs() < 1e-12);
        let h = closest_point_on_triangle(&Vec3::new(-1.0, -1.0, 0.0), &a, &b, &c);
        assert_eq!(h.bary, [1.0, 0.0, 0.0]);
        let h = closest_point_on_triangle(&Vec3::new(1.0, 1.0, 0.0), &a, &b, &c);
        assert!((h.point - Vec3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn degenerate_triangle_falls_back_to_edges() {
        let a = Vec3::new(0.0, 0.0, 0.0);
        let b = Vec3::new(1.0, 0.0, 0.0);
        let c = Vec3::new(2.0, 0.0, 0.0);
        let h = closest_point_on_triangle(&Vec3::new(1.5, 1.0, 0.0), &a, &b, &c);
        assert!((h.distance_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quantile_interpolates() {
        assert_eq!(quantile(&[4.0, 1.0, 3.0, 2.0], 0.25), Some(1.75));
        assert_eq!(quantile(&[7.0], 0.9), Some(7.0));
        assert_eq!(quantile(&[], 0.5), None);
    }

    #[test]
    fn min_angle_of_right_isoceles() {
        let a = triangle_min_angle(
            &Vec3::new(0.0, 0.0, 0.0),
            &Vec3::new(1.0, 0.0, 0.0),
            &Vec3::new(0.0, 1.0, 0.0),
        );
        assert!((a - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    }
}
