use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geom::Vec3;
use crate::mesh::TriMesh;

/// Point on a mesh face in barycentric form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSample {
    pub face: usize,
    pub bary: [f64; 3],
    pub point: Vec3,
}

pub fn bary_point(mesh: &TriMesh, face: usize, bary: [f64; 3]) -> Vec3 {
    let [a, b, c] = mesh.face_positions(face);
    a * bary[0] + b * bary[1] + c * bary[2]
}

/// `n` area-uniform random samples. Faces are picked through the cumulative
/// area table, points inside a face with the square-root warp.
pub fn sample_surface<R: Rng + ?Sized>(
    mesh: &TriMesh,
    n: usize,
    rng: &mut R,
) -> Vec<SurfaceSample> {
    let mut cdf = Vec::with_capacity(mesh.faces.len());
    let mut acc = 0.0;
    for a in mesh.face_areas() {
        acc += a;
        cdf.push(acc);
    }
    if mesh.faces.is_empty() || !(acc > 0.0) {
        return Vec::new();
    }
    (0..n)
        .map(|_| {
            let x = rng.random::<f64>() * acc;
            let face = cdf.partition_point(|&c| c <= x).min(cdf.len() - 1);
            let r1: f64 = rng.random();
            let r2: f64 = rng.random();
            let s = r1.sqrt();
            let bary = [1.0 - s, s * (1.0 - r2), s * r2];
            SurfaceSample {
                face,
                bary,
                point: bary_point(mesh, face, bary),
            }
        })
        .collect()
}

/// Centroids of the `k * k` congruent sub-triangles of the reference
/// triangle, as barycentric coordinates. Each carries weight `1 / k^2`.
pub fn stratified_barycentrics(k: usize) -> Vec<[f64; 3]> {
    let k = k.max(1);
    let kf = k as f64;
    let mut out = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k - i {
            // Upright cell with corners (i,j), (i+1,j), (i,j+1) in grid units.
            let (u, v) = (
                (3 * i + 1) as f64 / (3.0 * kf),
                (3 * j + 1) as f64 / (3.0 * kf),
            );
            out.push([1.0 - u - v, u, v]);
            if j + 1 < k - i {
                // Inverted cell (i+1,j), (i,j+1), (i+1,j+1).
                let (u, v) = (
                    (3 * i + 2) as f64 / (3.0 * kf),
                    (3 * j + 2) as f64 / (3.0 * kf),
                );
                out.push([1.0 - u - v, u, v]);
            }
        }
    }
    out
}

/// Subdivision level giving about `density` samples per unit area on a
/// face of `area`, at least 1 and at most `max_k`.
pub fn stratified_level(area: f64, density: f64, max_k: usize) -> usize {
    let k = (area * density).sqrt().round();
    if k.is_finite() {
        (k as usize).clamp(1, max_k.max(1))
    } else {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn stratified_pattern_is_balanced() {
        for k in 1..8 {
            let b = stratified_barycentrics(k);
            assert_eq!(b.len(), k * k);
            let mean = b.iter().fold([0.0; 3], |acc, x| {
                [acc[0] + x[0], acc[1] + x[1], acc[2] + x[2]]
            });
            for m in mean {
                assert!((m / b.len() as f64 - 1.0 / 3.0).abs() < 1e-12);
            }
            for x in &b {
                assert!(x.iter().all(|&c| c > 0.0));
                assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
        let c = stratified_barycentrics(1);
        assert!(c[0].iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn random_samples_are_area_uniform() {
        // Two triangles, areas 1 and 3.
        let m = TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(2.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(10.0, 0.0, 0.0),
                Vec3::new(16.0, 0.0, 0.0),
                Vec3::new(10.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [3, 4, 5]],
        )
        .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let s = sample_surface(&m, 40_000, &mut rng);
        let on_second = s.iter().filter(|x| x.face == 1).count() as f64 / s.len() as f64;
        assert!((on_second - 0.75).abs() < 0.01);
        assert!(s.iter().all(|x| x.bary.iter().all(|&c| c >= 0.0)));
    }
}
