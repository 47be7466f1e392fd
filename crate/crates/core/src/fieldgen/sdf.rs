use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Quaternion, UnitQuaternion};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bvh::MeshBvh;
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh::TriMesh;
use crate::shapes::SignedDistance;

const MAGIC: &[u8; 8] = b"FRSDF001";

/// Regular grid of signed distances, x varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct SdfGrid {
    pub origin: Vec3,
    pub spacing: f64,
    pub dims: [usize; 3],
    pub values: Vec<f32>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GridSidecar {
    format: String,
    data: String,
    origin: [f64; 3],
    spacing: f64,
    dims: [usize; 3],
    value_type: String,
    order: String,
    sign: String,
}

impl SdfGrid {
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + Vec3::new(i as f64, j as f64, k as f64) * self.spacing
    }

    fn coords(&self, idx: usize) -> (usize, usize, usize) {
        let i = idx % self.dims[0];
        let j = (idx / self.dims[0]) % self.dims[1];
        let k = idx / (self.dims[0] * self.dims[1]);
        (i, j, k)
    }

    pub fn value(&self, i: usize, j: usize, k: usize) -> f32 {
        self.values[self.index(i, j, k)]
    }

    pub fn validate(&self, max_grid: usize) -> Result<()> {
        if self.dims.iter().any(|&d| d == 0 || d > max_grid) {
            return Err(Error::GridBudgetExceeded {
                dims: self.dims,
                max_grid,
            });
        }
        if !(self.spacing > 0.0) {
            return Err(Error::InvalidParameter(
                "grid spacing must be positive".into(),
            ));
        }
        if self.values.len() != self.len() {
            return Err(Error::Format(format!(
                "grid holds {} values for dims {:?}",
                self.values.len(),
                self.dims
            )));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!("grid value {i} is not finite")));
        }
        Ok(())
    }

    /// Samples an analytic signed distance at every grid point.
    pub fn sample(origin: Vec3, spacing: f64, dims: [usize; 3], sdf: &dyn SignedDistance) -> Self {
        let mut grid = SdfGrid {
            origin,
            spacing,
            dims,
            values: Vec::new(),
        };
        let n = grid.len();
        grid.values = (0..n)
            .into_par_iter()
            .map(|idx| {
                let (i, j, k) = grid.coords(idx);
                sdf.distance(&grid.point(i, j, k)) as f32
            })
            .collect();
        grid
    }

    /// Writes the binary grid to `path` and a JSON description next to it
    /// (same stem, `.json` extension).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::with_capacity(64 + 4 * self.values.len());
        buf.extend_from_slice(MAGIC);
        for c in self.origin.iter() {
            buf.extend_from_slice(&c.to_le_bytes());
        }
        buf.extend_from_slice(&self.spacing.to_le_bytes());
        for d in self.dims {
            buf.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&buf).map_err(|e| Error::io(path, e))?;
        let side = GridSidecar {
            format: "featremesh-sdf-1".into(),
            data: path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            origin: [self.origin.x, self.origin.y, self.origin.z],
            spacing: self.spacing,
            dims: self.dims,
            value_type: "f32-le".into(),
            order: "x-fastest".into(),
            sign: "negative-inside".into(),
        };
        let side_path = sidecar_path(path);
        let text = serde_json::to_string_pretty(&side).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(&side_path, text + "\n").map_err(|e| Error::io(&side_path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        const HEADER: usize = 8 + 8 * 3 + 8 + 8 * 3;
        if bytes.len() < HEADER || &bytes[..8] != MAGIC {
            return Err(Error::parse(path, 0, "not an SDF grid file"));
        }
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let origin = Vec3::new(f64_at(8), f64_at(16), f64_at(24));
        let spacing = f64_at(32);
        let dims = [
            u64_at(40) as usize,
            u64_at(48) as usize,
            u64_at(56) as usize,
        ];
        let expected = dims[0]
            .checked_mul(dims[1])
            .and_then(|x| x.checked_mul(dims[2]))
            .ok_or_else(|| Error::parse(path, 0, "grid dimensions overflow"))?;
        let found = (bytes.len() - HEADER) / 4;
        if (bytes.len() - HEADER) % 4 != 0 || found != expected {
            return Err(Error::ElementCountMismatch {
                path: path.to_path_buf(),
                expected,
                found,
            });
        }
        let values = bytes[HEADER..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(SdfGrid {
            origin,
            spacing,
            dims,
            values,
        })
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SdfReport {
    pub dims: [usize; 3],
    /// Grid points whose sign came from a winding number in [0.4, 0.6].
    pub ambiguous_fraction: f64,
    pub winding_evaluations: usize,
}

/// Generalized winding number of `mesh` around `p`.
pub fn winding_number(mesh: &TriMesh, p: &Vec3) -> f64 {
    let mut total = 0.0;
    for f in &mesh.faces {
        let a = mesh.vertices[f[0]] - p;
        let b = mesh.vertices[f[1]] - p;
        let c = mesh.vertices[f[2]] - p;
        let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
        let num = a.dot(&b.cross(&c));
        let den = la * lb * lc + a.dot(&b) * lc + a.dot(&c) * lb + b.dot(&c) * la;
        total += 2.0 * num.atan2(den);
    }
    total / (4.0 * std::f64::consts::PI)
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi as usize] = lo;
        }
    }
}

/// Signed distance grid of `mesh` (optionally rotated first) with spacing
/// `lambda` and `padding` extra voxels around the bounding box.
///
/// Unsigned distances are exact closest-point distances. Signs come from the
/// generalized winding number; it is evaluated once per region of grid
/// points that can be connected by grid edges lying inside empty balls
/// around their endpoints, since the winding number cannot change there.
pub fn sdf_grid(
    mesh: &TriMesh,
    lambda: f64,
    padding: usize,
    rotation: Option<&Matrix3<f64>>,
    max_grid: usize,
) -> Result<(SdfGrid, SdfReport)> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if mesh.faces.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot build an SDF of an empty mesh".into(),
        ));
    }
    let rotated;
    let mesh = match rotation {
        Some(r) => {
            rotated = mesh.transformed(r);
            &rotated
        }
        None => mesh,
    };
    let bounds = mesh.bounds();
    let pad = padding as f64 * lambda;
    let origin = bounds.min - Vec3::repeat(pad);
    let extent = bounds.extent();
    let dims = [0, 1, 2].map(|a| (extent[a] / lambda).ceil() as usize + 2 * padding + 1);
    if dims.iter().any(|&d| d > max_grid) {
        return Err(Error::GridBudgetExceeded { dims, max_grid });
    }
    let mut grid = SdfGrid {
        origin,
        spacing: lambda,
        dims,
        values: Vec::new(),
    };
    let n = grid.len();
    let bvh = MeshBvh::from_mesh(mesh);
    let unsigned: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|idx| {
            let (i, j, k) = grid.coords(idx);
            bvh.nearest(&grid.point(i, j, k))
                .map_or(f64::INFINITY, |h| h.distance_squared.sqrt())
        })
        .collect();

    let mut uf = UnionFind::new(n);
    let strides = [1, dims[0], dims[0] * dims[1]];
    for idx in 0..n {
        let (i, j, k) = grid.coords(idx);
        let at = [i, j, k];
        for axis in 0..3 {
            if at[axis] + 1 < dims[axis] {
                let other = idx + strides[axis];
                if unsigned[idx].max(unsigned[other]) > lambda {
                    uf.union(idx as u32, other as u32);
                }
            }
        }
    }
    // Representative per component: its farthest point, ties to the lowest index.
    let mut rep: Vec<u32> = vec![u32::MAX; n];
    let mut size: Vec<u32> = vec![0; n];
    let roots: Vec<u32> = (0..n as u32).map(|i| uf.find(i)).collect();
    for idx in 0..n {
        let r = roots[idx] as usize;
        size[r] += 1;
        let cur = rep[r];
        if cur == u32::MAX || unsigned[idx] > unsigned[cur as usize] {
            rep[r] = idx as u32;
        }
    }
    let components: Vec<usize> = (0..n).filter(|&i| rep[i] != u32::MAX).collect();
    let windings: Vec<f64> = components
        .par_iter()
        .map(|&r| {
            let (i, j, k) = grid.coords(rep[r] as usize);
            winding_number(mesh, &grid.point(i, j, k))
        })
        .collect();
    let mut inside = vec![false; n];
    let mut ambiguous = 0usize;
    for (&r, &w) in components.iter().zip(&windings) {
        inside[r] = w >= 0.5;
        if (0.4..=0.6).contains(&w) {
            ambiguous += size[r] as usize;
        }
    }
    grid.values = (0..n)
        .map(|idx| {
            let d = unsigned[idx];
            (if inside[roots[idx] as usize] { -d } else { d }) as f32
        })
        .collect();
    let ambiguous_fraction = ambiguous as f64 / n as f64;
    if ambiguous_fraction > 0.01 {
        log::warn!(
            "{:.1}% of grid points have an ambiguous winding number; the mesh is probably open and signs are best-effort",
            100.0 * ambiguous_fraction
        );
    }
    Ok((
        grid,
        SdfReport {
            dims,
            ambiguous_fraction,
            winding_evaluations: components.len(),
        },
    ))
}

/// Rotation drawn uniformly from SO(3).
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Matrix3<f64> {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    let u3: f64 = rng.random();
    let tau = std::f64::consts::TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let q = Quaternion::new(
        b * (tau * u3).cos(),
        a * (tau * u2).sin(),
        a * (tau * u2).cos(),
        b * (tau * u3).sin(),
    );
    UnitQuaternion::from_quaternion(q)
        .to_rotation_matrix()
        .into_inner()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::closest_point_on_triangle;
    use crate::shapes::{box_mesh, icosphere};
    use rand::SeedableRng;

    #[test]
    fn sphere_distances() {
        let m = icosphere(4);
        let (g, rep) = sdf_grid(&m, 0.25, 8, None, 512).unwrap();
        assert!(rep.ambiguous_fraction < 0.01, "{}", rep.ambiguous_fraction);
        let c = (0..g.dims[0])
            .min_by(|&a, &b| {
                g.point(a, 0, 0)
                    .x
                    .abs()
                    .total_cmp(&g.point(b, 0, 0).x.abs())
            })
            .unwrap();
        let centre = g.point(c, c, c);
        assert!(centre.norm() < 0.25);
        assert!((g.value(c, c, c) as f64 - (centre.norm() - 1.0)).abs() < 5e-3);
        let far = g.point(c + 8, c, c);
        assert!((far.norm() - 2.0).abs() < 0.25);
        assert!((g.value(c + 8, c, c) as f64 - (far.norm() - 1.0)).abs() < 5e-3);
    }

    #[test]
    fn cube_distance_matches_brute_force() {
        let m = box_mesh(Vec3::zeros(), Vec3::repeat(1.0), 2);
        let (g, _) = sdf_grid(&m, 0.125, 8, None, 512).unwrap();
        // (2, 0.5, 0.5) is grid point (24, 12, 12).
        let p = g.point(24, 12, 12);
        assert!((p - Vec3::new(2.0, 0.5, 0.5)).norm() < 1e-12);
        let brute = (0..m.faces.len())
            .map(|f| {
                let [a, b, c] = m.face_positions(f);
                closest_point_on_triangle(&p, &a, &b, &c)
                    .distance_squared
                    .sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        assert_eq!(brute, 1.0);
        assert!((g.value(24, 12, 12) as f64 - brute).abs() < 1e-6);
        assert!(g.value(12, 12, 12) < 0.0);
    }

    #[test]
    fn signs_match_a_direct_winding_evaluation() {
        let m = box_mesh(Vec3::zeros(), Vec3::repeat(1.0), 1);
        let (g, _) = sdf_grid(&m, 0.1, 3, None, 512).unwrap();
        for (idx, v) in g.values.iter().enumerate() {
            let (i, j, k) = g.coords(idx);
            let p = g.point(i, j, k);
            let inside = p.iter().all(|&x| x > 1e-9 && x < 1.0 - 1e-9);
            let outside = p.iter().any(|&x| x < -1e-9 || x > 1.0 + 1e-9);
            if inside {
                assert!(*v < 0.0, "{p:?}");
            }
            if outside {
                assert!(*v > 0.0, "{p:?}");
            }
        }
    }

    #[test]
    fn binary_round_trip() {
        let g = SdfGrid::sample(
            Vec3::new(-1.0, -1.0, -1.0),
            0.5,
            [5, 4, 3],
            &crate::shapes::SphereSdf {
                center: Vec3::zeros(),
                radius: 0.7,
            },
        );
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.sdf");
        g.save(&p).unwrap();
        assert_eq!(SdfGrid::load(&p).unwrap(), g);
        assert!(dir.path().join("g.json").exists());
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 4]).unwrap();
        assert!(SdfGrid::load(&p).is_err());
    }

    #[test]
    fn rotations_are_orthonormal() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let r = random_rotation(&mut rng);
            assert!((r.transpose() * r - Matrix3::identity()).norm() < 1e-12);
            assert!((r.determinant() - 1.0).abs() < 1e-12);
        }
    }
}
