//! Bounding-volume hierarchy for exact closest-point queries.
//!
//! The tree is built once by median splits along the longest centroid axis
//! and queried best-first. Ties between equidistant primitives resolve to
//! the one visited first, which depends only on the tree and the query
//! point, so results are reproducible across threads.

use crate::geom::{closest_point_on_segment, closest_point_on_triangle, Aabb, Vec3};
use crate::mesh::TriMesh;

const LEAF_SIZE: usize = 4;

/// Something a BVH can hold.
pub trait Primitive {
    fn bounds(&self) -> Aabb;
    fn centroid(&self) -> Vec3;
    /// Closest point on the primitive and its squared distance to `p`.
    fn closest(&self, p: &Vec3) -> (Vec3, f64);
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        bounds: Aabb,
        start: usize,
        end: usize,
    },
    Inner {
        bounds: Aabb,
        left: usize,
        right: usize,
    },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Closest-point hit: primitive index, point, squared distance.
#[derive(Debug, Clone, Copy)]
pub struct Nearest {
    pub index: usize,
    pub point: Vec3,
    pub distance_squared: f64,
}

#[derive(Debug, Clone)]
pub struct Bvh<P> {
    prims: Vec<P>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl<P: Primitive> Bvh<P> {
    pub fn build(prims: Vec<P>) -> Self {
        let mut order: Vec<usize> = (0..prims.len()).collect();
        let centroids: Vec<Vec3> = prims.iter().map(Primitive::centroid).collect();
        let bounds: Vec<Aabb> = prims.iter().map(Primitive::bounds).collect();
        let mut nodes = Vec::new();
        if !prims.is_empty() {
            build_node(&mut nodes, &mut order, 0, prims.len(), &centroids, &bounds);
        }
        Self {
            prims,
            order,
            nodes,
        }
    }

    pub fn primitives(&self) -> &[P] {
        &self.prims
    }

    pub fn is_empty(&self) -> bool {
        self.prims.is_empty()
    }

    pub fn nearest(&self, p: &Vec3) -> Option<Nearest> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = Nearest {
            index: usize::MAX,
            point: *p,
            distance_squared: f64::INFINITY,
        };
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if node.bounds().distance_squared(p) > best.distance_squared {
                continue;
            }
            match *node {
                Node::Leaf { start, end, .. } => {
                    for &pi in &self.order[start..end] {
                        let (q, d2) = self.prims[pi].closest(p);
                        if d2 < best.distance_squared
                            || (d2 == best.distance_squared && pi < best.index)
                        {
                            best = Nearest {
                                index: pi,
                                point: q,
                                distance_squared: d2,
                            };
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[left].bounds().distance_squared(p);
                    let dr = self.nodes[right].bounds().distance_squared(p);
                    // Push the farther child first so the nearer one is popped next.
                    if dl <= dr {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
            }
        }
        Some(best)
    }
}

fn build_node(
    nodes: &mut Vec<Node>,
    order: &mut [usize],
    start: usize,
    end: usize,
    centroids: &[Vec3],
    bounds: &[Aabb],
) -> usize {
    let mut bb = Aabb::empty();
    let mut cb = Aabb::empty();
    for &i in &order[start..end] {
        bb = bb.union(&bounds[i]);
        cb.grow(&centroids[i]);
    }
    let id = nodes.len();
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            bounds: bb,
            start,
            end,
        });
        return id;
    }
    nodes.push(Node::Leaf {
        bounds: bb,
        start,
        end,
    });
    let axis = cb.longest_axis();
    let mid = (start + end) / 2;
    order[start..end].sort_by(|&a, &b| {
        centroids[a][axis]
            .total_cmp(&centroids[b][axis])
            .then(a.cmp(&b))
    });
    let left = build_node(nodes, order, start, mid, centroids, bounds);
    let right = build_node(nodes, order, mid, end, centroids, bounds);
    nodes[id] = Node::Inner {
        bounds: bb,
        left,
        right,
    };
    id
}

/// A mesh face stored by value for BVH queries.
#[derive(Debug, Clone, Copy)]
pub struct TrianglePrim {
    pub v: [Vec3; 3],
}

impl Primitive for TrianglePrim {
    fn bounds(&self) -> Aabb {
        Aabb::from_points(self.v.iter())
    }
    fn centroid(&self) -> Vec3 {
        (self.v[0] + self.v[1] + self.v[2]) / 3.0
    }
    fn closest(&self, p: &Vec3) -> (Vec3, f64) {
        let h = closest_point_on_triangle(p, &self.v[0], &self.v[1], &self.v[2]);
        (h.point, h.distance_squared)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SegmentPrim {
    pub a: Vec3,
    pub b: Vec3,
}

impl Primitive for SegmentPrim {
    fn bounds(&self) -> Aabb {
        Aabb::from_points([self.a, self.b].iter())
    }
    fn centroid(&self) -> Vec3 {
        (self.a + self.b) * 0.5
    }
    fn closest(&self, p: &Vec3) -> (Vec3, f64) {
        let (q, d2, _) = closest_point_on_segment(p, &self.a, &self.b);
        (q, d2)
    }
}

/// Closest-point index over the faces of a mesh. Primitive index equals
/// face index.
pub type MeshBvh = Bvh<TrianglePrim>;

impl MeshBvh {
    pub fn from_mesh(mesh: &TriMesh) -> Self {
        let prims = mesh
            .faces
            .iter()
            .map(|f| TrianglePrim {
                v: [
                    mesh.vertices[f[0]],
                    mesh.vertices[f[1]],
                    mesh.vertices[f[2]],
                ],
            })
            .collect();
        Bvh::build(prims)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn segment_bvh_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let segs: Vec<SegmentPrim> = (0..200)
            .map(|_| {
                let a = Vec3::new(rng.random(), rng.random(), rng.random());
                let b = a + Vec3::new(rng.random(), rng.random(), rng.random()) * 0.1;
                SegmentPrim { a, b }
            })
            .collect();
        let bvh = Bvh::build(segs.clone());
        for _ in 0..500 {
            let p = Vec3::new(rng.random(), rng.random(), rng.random()) * 1.2;
            let hit = bvh.nearest(&p).unwrap();
            let brute = segs
                .iter()
                .map(|s| s.closest(&p).1)
                .fold(f64::INFINITY, f64::min);
            assert_eq!(hit.distance_squared, brute);
        }
    }

    #[test]
    fn empty_tree_has_no_nearest() {
        let bvh: Bvh<SegmentPrim> = Bvh::build(Vec::new());
        assert!(bvh.nearest(&Vec3::zeros()).is_none());
    }
}
