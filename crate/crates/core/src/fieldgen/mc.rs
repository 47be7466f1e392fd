//! Iso-surface extraction with face-consistent ambiguity resolution.
//!
//! Each cube face contributes oriented segments between the grid-edge
//! crossings on its border; ambiguous faces (alternating corner signs) are
//! resolved with the bilinear asymptotic decider, which depends only on the
//! four face values and so agrees between the two cubes sharing the face.
//! Segments chain into closed loops inside each cube, and every loop is
//! triangulated. The result is closed and manifold away from the grid
//! border, with normals pointing toward positive values.

use std::collections::HashMap;

use super::SdfGrid;
use crate::geom::{triangle_area, Vec3};
use crate::mesh::TriMesh;

/// Corner `c` sits at offset `(c & 1, (c >> 1) & 1, (c >> 2) & 1)`.
const EDGES: [(usize, usize); 12] = [
    (0, 1),
    (2, 3),
    (4, 5),
    (6, 7),
    (0, 2),
    (1, 3),
    (4, 6),
    (5, 7),
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7),
];

/// Corners of each face, counter-clockwise seen from outside the cube.
const FACES: [[usize; 4]; 6] = [
    [0, 4, 6, 2],
    [1, 3, 7, 5],
    [0, 1, 5, 4],
    [2, 6, 7, 3],
    [0, 2, 3, 1],
    [4, 5, 7, 6],
];

/// Interpolation parameter kept this far from the grid corners so that
/// crossings never coincide.
const T_MARGIN: f64 = 1e-6;

const fn edge_table() -> [[u8; 8]; 8] {
    let mut t = [[u8::MAX; 8]; 8];
    let mut e = 0;
    while e < 12 {
        let (a, b) = EDGES[e];
        t[a][b] = e as u8;
        t[b][a] = e as u8;
        e += 1;
    }
    t
}

const EDGE_OF: [[u8; 8]; 8] = edge_table();

/// Bit `f` set when cube edge lies on face `f`.
const fn edge_face_masks() -> [u8; 12] {
    let mut m = [0u8; 12];
    let mut f = 0;
    while f < 6 {
        let mut i = 0;
        while i < 4 {
            let e = EDGE_OF[FACES[f][i]][FACES[f][(i + 1) % 4]];
            m[e as usize] |= 1 << f;
            i += 1;
        }
        f += 1;
    }
    m
}

const EDGE_FACES: [u8; 12] = edge_face_masks();

/// Oriented crossing chains of one cube: `next[e]` is the edge the surface
/// boundary reaches after entering through edge `e`.
fn cube_segments(v: &[f64; 8]) -> [Option<u8>; 12] {
    let neg = v.map(|x| x < 0.0);
    let mut next = [None; 12];
    for q in FACES {
        let changes = (0..4).filter(|&i| neg[q[i]] != neg[q[(i + 1) % 4]]).count();
        if changes == 0 {
            continue;
        }
        let at = |i: usize| q[i % 4];
        let joined = changes == 4 && {
            let (n, p) = if neg[q[0]] {
                ((q[0], q[2]), (q[1], q[3]))
            } else {
                ((q[1], q[3]), (q[0], q[2]))
            };
            v[n.0] * v[n.1] > v[p.0] * v[p.1]
        };
        for i in 0..4 {
            if !(neg[at(i)] && !neg[at(i + 1)]) {
                continue;
            }
            let out = EDGE_OF[at(i)][at(i + 1)];
            let inn = if changes == 2 {
                let j = (0..4)
                    .find(|&j| !neg[at(j)] && neg[at(j + 1)])
                    .expect("two sign changes include a pos-to-neg step");
                EDGE_OF[at(j)][at(j + 1)]
            } else if joined {
                EDGE_OF[at(i + 1)][at(i + 2)]
            } else {
                EDGE_OF[at(i + 3)][at(i)]
            };
            next[out as usize] = Some(inn);
        }
    }
    next
}

/// Closed loops of cube-edge ids, in surface-boundary order.
fn cube_loops(v: &[f64; 8]) -> Vec<Vec<u8>> {
    let next = cube_segments(v);
    let mut seen = [false; 12];
    let mut loops = Vec::new();
    for start in 0..12 {
        if seen[start] || next[start].is_none() {
            continue;
        }
        let mut lp = Vec::new();
        let mut e = start;
        while !seen[e] {
            seen[e] = true;
            lp.push(e as u8);
            e = next[e].expect("crossing chains are closed") as usize;
        }
        debug_assert_eq!(e, start);
        loops.push(lp);
    }
    loops
}

/// Minimum-area triangulation of a closed polygon that avoids diagonals
/// between crossings on a common cube face. `None` when impossible.
fn triangulate(points: &[Vec3], edges: &[u8]) -> Option<Vec<[usize; 3]>> {
    let n = points.len();
    if n == 3 {
        return Some(vec![[0, 1, 2]]);
    }
    let chord_ok = |i: usize, j: usize| {
        j - i == 1
            || (i == 0 && j == n - 1)
            || EDGE_FACES[edges[i] as usize] & EDGE_FACES[edges[j] as usize] == 0
    };
    let mut cost = vec![vec![f64::INFINITY; n]; n];
    let mut split = vec![vec![usize::MAX; n]; n];
    for i in 0..n - 1 {
        cost[i][i + 1] = 0.0;
    }
    for len in 2..n {
        for i in 0..n - len {
            let j = i + len;
            if !chord_ok(i, j) {
                continue;
            }
            for k in i + 1..j {
                let c = cost[i][k] + cost[k][j] + triangle_area(&points[i], &points[k], &points[j]);
                if c < cost[i][j] {
                    cost[i][j] = c;
                    split[i][j] = k;
                }
            }
        }
    }
    if !cost[0][n - 1].is_finite() {
        return None;
    }
    let mut tris = Vec::with_capacity(n - 2);
    let mut stack = vec![(0, n - 1)];
    while let Some((i, j)) = stack.pop() {
        if j - i < 2 {
            continue;
        }
        let k = split[i][j];
        tris.push([i, k, j]);
        stack.push((i, k));
        stack.push((k, j));
    }
    Some(tris)
}

/// Extracts the `iso` level set of `grid`. Grid values equal to `iso` count
/// as positive.
pub fn marching_cubes(grid: &SdfGrid, iso: f64) -> TriMesh {
    let [nx, ny, nz] = grid.dims;
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    if nx < 2 || ny < 2 || nz < 2 {
        return TriMesh { vertices, faces };
    }
    let mut edge_vertex: HashMap<u64, usize> = HashMap::new();
    let offset = |c: usize| [c & 1, (c >> 1) & 1, (c >> 2) & 1];
    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let mut v = [0.0f64; 8];
                for (c, val) in v.iter_mut().enumerate() {
                    let o = offset(c);
                    *val = grid.value(i + o[0], j + o[1], k + o[2]) as f64 - iso;
                }
                let negatives = v.iter().filter(|x| **x < 0.0).count();
                if negatives == 0 || negatives == 8 {
                    continue;
                }
                for lp in cube_loops(&v) {
                    let mut ids = Vec::with_capacity(lp.len());
                    let mut pts = Vec::with_capacity(lp.len());
                    // Reversed so that faces wind counter-clockwise seen from
                    // the positive side.
                    let lp: Vec<u8> = lp.into_iter().rev().collect();
                    for &e in &lp {
                        let (a, b) = EDGES[e as usize];
                        let (oa, ob) = (offset(a), offset(b));
                        let axis = (0..3).find(|&x| oa[x] != ob[x]).unwrap();
                        let ga = grid.index(i + oa[0], j + oa[1], k + oa[2]);
                        let key = ga as u64 * 3 + axis as u64;
                        let id = *edge_vertex.entry(key).or_insert_with(|| {
                            let pa = grid.point(i + oa[0], j + oa[1], k + oa[2]);
                            let pb = grid.point(i + ob[0], j + ob[1], k + ob[2]);
                            let t = (v[a] / (v[a] - v[b])).clamp(T_MARGIN, 1.0 - T_MARGIN);
                            vertices.push(pa + (pb - pa) * t);
                            vertices.len() - 1
                        });
                        ids.push(id);
                        pts.push(vertices[id]);
                    }
                    match triangulate(&pts, &lp) {
                        Some(tris) => faces.extend(tris.into_iter().map(|t| t.map(|x| ids[x]))),
                        None => {
                            let centre = pts.iter().sum::<Vec3>() / pts.len() as f64;
                            vertices.push(centre);
                            let c = vertices.len() - 1;
                            for w in 0..ids.len() {
                                faces.push([ids[w], ids[(w + 1) % ids.len()], c]);
                            }
                        }
                    }
                }
            }
        }
    }
    TriMesh { vertices, faces }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_adjacency;
    use rand::{Rng, SeedableRng};

    fn grid_from(dims: [usize; 3], values: Vec<f32>) -> SdfGrid {
        SdfGrid {
            origin: Vec3::zeros(),
            spacing: 1.0,
            dims,
            values,
        }
    }

    fn signed_volume(m: &TriMesh) -> f64 {
        m.faces
            .iter()
            .map(|f| m.vertices[f[0]].dot(&m.vertices[f[1]].cross(&m.vertices[f[2]])) / 6.0)
            .sum()
    }

    fn assert_closed_oriented(m: &TriMesh) {
        let adj = build_adjacency(m).unwrap();
        assert!(adj.edge_faces.iter().all(|f| f.len() == 2));
        let mut directed = std::collections::HashSet::new();
        for f in &m.faces {
            for i in 0..3 {
                assert!(
                    directed.insert((f[i], f[(i + 1) % 3])),
                    "edge used twice in one direction"
                );
            }
        }
    }

    #[test]
    fn single_corner_gives_one_triangle() {
        let mut values = vec![1.0f32; 8];
        values[0] = -1.0;
        let m = marching_cubes(&grid_from([2, 2, 2], values), 0.0);
        assert_eq!(m.faces.len(), 1);
        for p in &m.vertices {
            let mut sorted = [p.x, p.y, p.z];
            sorted.sort_by(f64::total_cmp);
            assert_eq!(sorted[0], 0.0);
            assert_eq!(sorted[1], 0.0);
            assert!((sorted[2] - 0.5).abs() < 1e-12);
        }
        // Normal points away from the negative corner.
        assert!(m.face_normal(0).dot(&Vec3::repeat(1.0)) > 0.0);
    }

    #[test]
    fn uniform_grids_are_empty() {
        assert!(marching_cubes(&grid_from([3, 3, 3], vec![1.0; 27]), 0.0)
            .faces
            .is_empty());
        assert!(marching_cubes(&grid_from([3, 3, 3], vec![-1.0; 27]), 0.0)
            .faces
            .is_empty());
    }

    #[test]
    fn every_cube_configuration_closes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for config in 1..255u32 {
            for _ in 0..4 {
                let mut values = vec![1.0f32; 64];
                for c in 0..8 {
                    let idx = (1 + (c & 1)) + 4 * ((1 + ((c >> 1) & 1)) + 4 * (1 + ((c >> 2) & 1)));
                    let mag: f32 = rng.random_range(0.05..1.0);
                    values[idx] = if config >> c & 1 == 1 { -mag } else { mag };
                }
                let m = marching_cubes(&grid_from([4, 4, 4], values), 0.0);
                assert_closed_oriented(&m);
                assert!(signed_volume(&m) > 0.0, "config {config}");
            }
        }
    }

    #[test]
    fn random_fields_close() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let n = 7;
            let mut values = vec![1.0f32; n * n * n];
            for k in 1..n - 1 {
                for j in 1..n - 1 {
                    for i in 1..n - 1 {
                        values[i + n * (j + n * k)] = rng.random_range(-1.0..1.0);
                    }
                }
            }
            let m = marching_cubes(&grid_from([n, n, n], values), 0.0);
            assert_closed_oriented(&m);
        }
    }
}
