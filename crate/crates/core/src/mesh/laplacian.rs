use std::collections::BTreeMap;

use super::{Edge, TriMesh};

/// Cotangents are clamped to this magnitude on degenerate triangles.
pub const MAX_COTANGENT: f64 = 1e4;

#[derive(Debug, Clone)]
pub struct LaplacianResult {
    pub values: Vec<f64>,
    /// Number of cotangents that hit [`MAX_COTANGENT`].
    pub clamped: usize,
}

/// Normalized cotangent Laplacian of a per-vertex scalar field:
/// `(1/Z) * sum_u L_vu f(u) - f(v)` with `Z = sum_u L_vu`.
///
/// `L_vu` is half the sum of the cotangents opposite edge (v, u); boundary
/// edges contribute their single cotangent. Evaluated as
/// `sum_u L_vu (f(u) - f(v)) / Z`, which is the same quantity but exactly
/// zero for constant fields.
pub fn cotangent_laplacian(mesh: &TriMesh, field: &[f64]) -> LaplacianResult {
    assert_eq!(
        field.len(),
        mesh.vertices.len(),
        "field must cover every vertex"
    );
    let mut weights: BTreeMap<Edge, f64> = BTreeMap::new();
    let mut clamped = 0usize;
    for f in &mesh.faces {
        for k in 0..3 {
            let (i, j, o) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
            let u = mesh.vertices[i] - mesh.vertices[o];
            let v = mesh.vertices[j] - mesh.vertices[o];
            let cross = u.cross(&v).norm();
            let dot = u.dot(&v);
            let mut cot = if cross > 0.0 {
                dot / cross
            } else {
                f64::INFINITY.copysign(dot)
            };
            if !cot.is_finite() || cot.abs() > MAX_COTANGENT {
                cot = if cot.is_nan() {
                    MAX_COTANGENT
                } else {
                    MAX_COTANGENT.copysign(cot)
                };
                clamped += 1;
            }
            *weights.entry(Edge::new(i, j)).or_insert(0.0) += 0.5 * cot;
        }
    }
    let n = mesh.vertices.len();
    let mut num = vec![0.0; n];
    let mut z = vec![0.0; n];
    for (e, w) in &weights {
        let d = field[e.1] - field[e.0];
        num[e.0] += w * d;
        num[e.1] -= w * d;
        z[e.0] += w;
        z[e.1] += w;
    }
    let values = num
        .iter()
        .zip(&z)
        .map(|(&s, &zz)| {
            if zz.abs() > f64::MIN_POSITIVE {
                s / zz
            } else {
                0.0
            }
        })
        .collect();
    LaplacianResult { values, clamped }
}
