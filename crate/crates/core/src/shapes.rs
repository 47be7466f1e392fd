//! Reference shapes: closed-form meshes, analytic signed distance functions
//! and their sharp feature curves. Used by the fixtures, the CLI demos and
//! the test-suites.

use std::collections::HashMap;

use crate::fieldgen::{FeatureCurve, FeatureCurveSet};
use crate::geom::Vec3;
use crate::mesh::TriMesh;

/// Unit icosphere centred at the origin, `subdivisions` levels of 1:4 split.
pub fn icosphere(subdivisions: usize) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut f: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(f.len() * 4);
        let mut midpoint = |a: usize, b: usize, v: &mut Vec<Vec3>| {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                v.push(((v[a] + v[b]) * 0.5).normalize());
                v.len() - 1
            })
        };
        for [a, b, c] in f {
            let ab = midpoint(a, b, &mut v);
            let bc = midpoint(b, c, &mut v);
            let ca = midpoint(c, a, &mut v);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        f = next;
    }
    TriMesh {
        vertices: v,
        faces: f,
    }
}

/// Axis-aligned box with each face split into `div x div` quads (two
/// triangles each), outward oriented, vertices shared along box edges.
pub fn box_mesh(min: Vec3, max: Vec3, div: usize) -> TriMesh {
    let div = div.max(1);
    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut vid = |g: [i64; 3], vertices: &mut Vec<Vec3>| {
        *index.entry(g).or_insert_with(|| {
            let p = Vec3::new(
                min.x + (max.x - min.x) * g[0] as f64 / div as f64,
                min.y + (max.y - min.y) * g[1] as f64 / div as f64,
                min.z + (max.z - min.z) * g[2] as f64 / div as f64,
            );
            vertices.push(p);
            vertices.len() - 1
        })
    };
    let d = div as i64;
    // (normal axis, side, u axis, v axis) with u x v pointing outward.
    let sides = [
        (0usize, 0i64, 2usize, 1usize),
        (0, 1, 1, 2),
        (1, 0, 0, 2),
        (1, 1, 2, 0),
        (2, 0, 1, 0),
        (2, 1, 0, 1),
    ];
    for &(axis, side, u, w) in &sides {
        for i in 0..d {
            for j in 0..d {
                let corner = |di: i64, dj: i64| {
                    let mut g = [0i64; 3];
                    g[axis] = side * d;
                    g[u] = i + di;
                    g[w] = j + dj;
                    g
                };
                let a = vid(corner(0, 0), &mut vertices);
                let b = vid(corner(1, 0), &mut vertices);
                let c = vid(corner(1, 1), &mut vertices);
                let e = vid(corner(0, 1), &mut vertices);
                faces.push([a, b, c]);
                faces.push([a, c, e]);
            }
        }
    }
    TriMesh { vertices, faces }
}

/// The twelve edges of an axis-aligned box as feature curves.
pub fn box_edges(min: Vec3, max: Vec3) -> FeatureCurveSet {
    let corner = |i: usize| {
        Vec3::new(
            if i & 1 == 0 { min.x } else { max.x },
            if i & 2 == 0 { min.y } else { max.y },
            if i & 4 == 0 { min.z } else { max.z },
        )
    };
    let mut curves = Vec::new();
    for i in 0..8usize {
        for bit in [1usize, 2, 4] {
            if i & bit == 0 {
                curves.push(FeatureCurve::sharp(vec![corner(i), corner(i | bit)]));
            }
        }
    }
    FeatureCurveSet { curves }
}

/// Regular planar grid in the z = `z` plane, `n x n` vertices over
/// `[0, size]^2`, normals +z.
pub fn grid_plane(n: usize, size: f64, z: f64) -> TriMesh {
    let h = size / (n - 1) as f64;
    let mut vertices = Vec::new();
    for j in 0..n {
        for i in 0..n {
            vertices.push(Vec3::new(i as f64 * h, j as f64 * h, z));
        }
    }
    let mut faces = Vec::new();
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            let a = j * n + i;
            faces.push([a, a + 1, a + n + 1]);
            faces.push([a, a + n + 1, a + n]);
        }
    }
    TriMesh { vertices, faces }
}

/// Grid over `[-size, size]^2` folded along the y axis: the half with
/// x <= 0 stays in z = 0, the other half rises by `fold` radians. `n` is
/// the number of vertices per side and should be odd so a vertex column
/// lies on the fold. Returns the mesh and the fold line.
pub fn folded_grid(n: usize, size: f64, fold: f64) -> (TriMesh, FeatureCurveSet) {
    let mut m = grid_plane(n, 2.0 * size, 0.0);
    for v in &mut m.vertices {
        let x = v.x - size;
        let y = v.y - size;
        *v = if x <= 0.0 {
            Vec3::new(x, y, 0.0)
        } else {
            Vec3::new(x * fold.cos(), y, x * fold.sin())
        };
    }
    let line = FeatureCurve::sharp(vec![Vec3::new(0.0, -size, 0.0), Vec3::new(0.0, size, 0.0)]);
    (m, FeatureCurveSet { curves: vec![line] })
}

/// Analytic signed distance (negative inside).
pub trait SignedDistance: Sync {
    fn distance(&self, p: &Vec3) -> f64;
}

/// `inner` rotated by `rotation` about the origin.
#[derive(Debug, Clone, Copy)]
pub struct RotatedSdf<S> {
    pub inner: S,
    pub rotation: nalgebra::Matrix3<f64>,
}

impl<S: SignedDistance> SignedDistance for RotatedSdf<S> {
    fn distance(&self, p: &Vec3) -> f64 {
        self.inner.distance(&(self.rotation.transpose() * p))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SphereSdf {
    pub center: Vec3,
    pub radius: f64,
}

impl SignedDistance for SphereSdf {
    fn distance(&self, p: &Vec3) -> f64 {
        (p - self.center).norm() - self.radius
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BoxSdf {
    pub min: Vec3,
    pub max: Vec3,
}

impl SignedDistance for BoxSdf {
    fn distance(&self, p: &Vec3) -> f64 {
        let c = (self.min + self.max) * 0.5;
        let h = (self.max - self.min) * 0.5;
        let q = (p - c).abs() - h;
        let outside = q.sup(&Vec3::zeros()).norm();
        outside + q.x.max(q.y).max(q.z).min(0.0)
    }
}

/// Convex dihedral wedge whose sharp edge is the x axis. The top face is
/// the half-plane z = 0, y >= 0 (solid below it); the side face leaves the
/// edge in direction (0, cos a, -sin a) where `a` is the interior angle,
/// which must lie in (0, pi).
#[derive(Debug, Clone, Copy)]
pub struct WedgeSdf {
    pub angle: f64,
}

impl WedgeSdf {
    /// Outward unit normals of the top and side faces.
    pub fn normals(&self) -> (Vec3, Vec3) {
        (
            Vec3::z(),
            Vec3::new(0.0, -self.angle.sin(), -self.angle.cos()),
        )
    }
}

impl SignedDistance for WedgeSdf {
    fn distance(&self, p: &Vec3) -> f64 {
        let (n1, n2) = self.normals();
        let s1 = n1.dot(p);
        let s2 = n2.dot(p);
        if s1 <= 0.0 && s2 <= 0.0 {
            return s1.max(s2);
        }
        // Outside: distance to the nearer face half-plane, in the yz plane.
        let q = nalgebra::Vector2::new(p.y, p.z);
        let ray = |dir: nalgebra::Vector2<f64>| {
            let t = q.dot(&dir).max(0.0);
            (q - dir * t).norm()
        };
        let d1 = nalgebra::Vector2::new(1.0, 0.0);
        let d2 = nalgebra::Vector2::new(self.angle.cos(), -self.angle.sin());
        ray(d1).min(ray(d2))
    }
}

/// Vertical cylinder standing on a horizontal slab (union). The feature
/// curve is the circle where the cylinder meets the slab top.
#[derive(Debug, Clone, Copy)]
pub struct CylinderOnSlabSdf {
    pub radius: f64,
    pub height: f64,
    pub slab_half_extent: f64,
    pub slab_thickness: f64,
}

impl SignedDistance for CylinderOnSlabSdf {
    fn distance(&self, p: &Vec3) -> f64 {
        let slab = BoxSdf {
            min: Vec3::new(
                -self.slab_half_extent,
                -self.slab_half_extent,
                -self.slab_thickness,
            ),
            max: Vec3::new(self.slab_half_extent, self.slab_half_extent, 0.0),
        }
        .distance(p);
        // Capped cylinder from z = -thickness/2 up to `height`.
        let r = (p.x * p.x + p.y * p.y).sqrt() - self.radius;
        let z0 = -0.5 * self.slab_thickness;
        let zc = 0.5 * (self.height + z0);
        let hz = 0.5 * (self.height - z0);
        let dz = (p.z - zc).abs() - hz;
        let cyl = r.max(dz).min(0.0) + Vec3::new(r.max(0.0), dz.max(0.0), 0.0).norm();
        slab.min(cyl)
    }
}

impl CylinderOnSlabSdf {
    /// The concave circle at the foot of the cylinder, as a closed
    /// polyline with `segments` segments.
    pub fn foot_circle(&self, segments: usize) -> FeatureCurveSet {
        let pts: Vec<Vec3> = (0..=segments)
            .map(|i| {
                let a = std::f64::consts::TAU * (i % segments) as f64 / segments as f64;
                Vec3::new(self.radius * a.cos(), self.radius * a.sin(), 0.0)
            })
            .collect();
        FeatureCurveSet {
            curves: vec![FeatureCurve::sharp(pts)],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_adjacency;

    #[test]
    fn icosphere_is_closed_and_outward() {
        let m = icosphere(2);
        build_adjacency(&m).unwrap();
        assert_eq!(m.euler_characteristic(), 2);
        for f in 0..m.faces.len() {
            let [a, b, c] = m.face_positions(f);
            assert!(m.face_normal(f).dot(&((a + b + c) / 3.0)) > 0.0);
        }
    }

    #[test]
    fn box_is_closed_and_outward() {
        let m = box_mesh(Vec3::zeros(), Vec3::new(1.0, 2.0, 3.0), 3);
        let adj = build_adjacency(&m).unwrap();
        assert!(adj.edge_faces.iter().all(|f| f.len() == 2));
        assert_eq!(m.euler_characteristic(), 2);
        let c = Vec3::new(0.5, 1.0, 1.5);
        for f in 0..m.faces.len() {
            let [a, b, cc] = m.face_positions(f);
            assert!(m.face_normal(f).dot(&((a + b + cc) / 3.0 - c)) > 0.0);
        }
        assert!((m.total_area() - 22.0).abs() < 1e-12);
        assert_eq!(box_edges(Vec3::zeros(), Vec3::repeat(1.0)).curves.len(), 12);
    }

    #[test]
    fn folded_grid_keeps_the_fold_on_the_line() {
        let (m, c) = folded_grid(5, 1.0, 0.7);
        let idx = crate::fieldgen::CurveIndex::new(&c);
        let on = m
            .vertices
            .iter()
            .filter(|v| idx.distance(v) < 1e-15)
            .count();
        assert_eq!(on, 5);
        build_adjacency(&m).unwrap();
    }

    #[test]
    fn box_sdf_values() {
        let b = BoxSdf {
            min: Vec3::zeros(),
            max: Vec3::repeat(1.0),
        };
        assert!((b.distance(&Vec3::new(2.0, 0.5, 0.5)) - 1.0).abs() < 1e-15);
        assert!((b.distance(&Vec3::repeat(0.5)) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn wedge_edge_is_the_x_axis() {
        let w = WedgeSdf {
            angle: std::f64::consts::FRAC_PI_2,
        };
        assert!(w.distance(&Vec3::new(3.0, 0.0, 0.0)).abs() < 1e-15);
        assert!(w.distance(&Vec3::new(0.0, 0.5, -0.5)) < 0.0);
        assert!(w.distance(&Vec3::new(0.0, -0.5, 0.5)) > 0.0);
    }
}
