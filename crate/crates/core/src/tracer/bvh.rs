//! Binned-SAH bounding volume hierarchy over triangles.

use crate::math::{Aabb, Vec3};

/// Triangle prepared for Möller-Trumbore intersection.
#[derive(Debug, Clone, Copy)]
pub struct Triangle {
    pub v0: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
}

impl Triangle {
    pub fn new(a: Vec3, b: Vec3, c: Vec3) -> Self {
        Triangle {
            v0: a,
            e1: b - a,
            e2: c - a,
        }
    }

    pub fn corners(&self) -> [Vec3; 3] {
        [self.v0, self.v0 + self.e1, self.v0 + self.e2]
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(&self.corners())
    }

    /// Returns `(t, u, v)` for a hit with `t` in `[t_min, t_max]`. Rays
    /// parallel to the triangle plane never hit.
    #[inline]
    pub fn intersect(&self, origin: Vec3, dir: Vec3, t_min: f64, t_max: f64) -> Option<(f64, f64, f64)> {
        let p = dir.cross(self.e2);
        let det = self.e1.dot(p);
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let inv = 1.0 / det;
        let s = origin - self.v0;
        let u = s.dot(p) * inv;
        if !(0.0..=1.0).contains(&u) {
            return None;
        }
        let q = s.cross(self.e1);
        let v = dir.dot(q) * inv;
        if v < 0.0 || u + v > 1.0 {
            return None;
        }
        let t = self.e2.dot(q) * inv;
        if t < t_min || t > t_max {
            return None;
        }
        Some((t, u, v))
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    bounds: Aabb,
    /// Leaf: first index into `order`; interior: index of the right child
    /// (the left child is always `self + 1`).
    offset: u32,
    /// Number of primitives for leaves, 0 for interior nodes.
    count: u32,
    axis: u8,
}

#[derive(Debug, Clone, Default)]
pub struct Bvh {
    nodes: Vec<Node>,
    /// Primitive indices in leaf order.
    order: Vec<u32>,
}

const BINS: usize = 16;
const MAX_LEAF: usize = 4;
// Keeps traversal within its fixed-size stack.
const MAX_DEPTH: usize = 60;

/// Nearest hit found by traversal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimHit {
    pub prim: usize,
    pub t: f64,
    pub u: f64,
    pub v: f64,
}

fn pad(b: Aabb) -> Aabb {
    let e = b.extent();
    let slack = Vec3::new(1e-9, 1e-9, 1e-9) + e * 1e-9;
    Aabb {
        min: b.min - slack,
        max: b.max + slack,
    }
}

impl Bvh {
    pub fn build(tris: &[Triangle]) -> Bvh {
        let mut bvh = Bvh {
            nodes: Vec::new(),
            order: (0..tris.len() as u32).collect(),
        };
        if tris.is_empty() {
            return bvh;
        }
        let boxes: Vec<Aabb> = tris.iter().map(|t| t.bounds()).collect();
        let centers: Vec<Vec3> = boxes.iter().map(|b| b.center()).collect();
        bvh.nodes.reserve(2 * tris.len());
        bvh.build_node(&boxes, &centers, 0, tris.len(), 0);
        bvh
    }

    fn build_node(&mut self, boxes: &[Aabb], centers: &[Vec3], start: usize, end: usize, depth: usize) -> usize {
        let idx = self.nodes.len();
        let bounds = self.order[start..end]
            .iter()
            .fold(Aabb::EMPTY, |b, &i| b.union(boxes[i as usize]));
        self.nodes.push(Node {
            bounds: pad(bounds),
            offset: start as u32,
            count: (end - start) as u32,
            axis: 0,
        });
        let n = end - start;
        if n <= MAX_LEAF || depth >= MAX_DEPTH {
            return idx;
        }
        let cb = self.order[start..end]
            .iter()
            .fold(Aabb::EMPTY, |b, &i| b.grow(centers[i as usize]));
        let ext = cb.extent();
        let axis = if ext.x >= ext.y && ext.x >= ext.z {
            0
        } else if ext.y >= ext.z {
            1
        } else {
            2
        };
        if ext[axis] <= 0.0 {
            return idx;
        }

        // Binned SAH along the widest centroid axis.
        let lo = cb.min[axis];
        let scale = BINS as f64 / ext[axis];
        let bin_of = |c: f64| (((c - lo) * scale) as usize).min(BINS - 1);
        let mut bin_box = [Aabb::EMPTY; BINS];
        let mut bin_cnt = [0usize; BINS];
        for &i in &self.order[start..end] {
            let b = bin_of(centers[i as usize][axis]);
            bin_cnt[b] += 1;
            bin_box[b] = bin_box[b].union(boxes[i as usize]);
        }
        let mut best = (f64::INFINITY, 0);
        for split in 1..BINS {
            let (mut lb, mut lc) = (Aabb::EMPTY, 0);
            for k in 0..split {
                lb = lb.union(bin_box[k]);
                lc += bin_cnt[k];
            }
            let (mut rb, mut rc) = (Aabb::EMPTY, 0);
            for k in split..BINS {
                rb = rb.union(bin_box[k]);
                rc += bin_cnt[k];
            }
            if lc == 0 || rc == 0 {
                continue;
            }
            let cost = lb.surface_area() * lc as f64 + rb.surface_area() * rc as f64;
            if cost < best.0 {
                best = (cost, split);
            }
        }

        let mid = if best.0.is_finite() {
            let split = best.1;
            let slice = &mut self.order[start..end];
            let mut l = 0;
            for k in 0..slice.len() {
                if bin_of(centers[slice[k] as usize][axis]) < split {
                    slice.swap(l, k);
                    l += 1;
                }
            }
            start + l
        } else {
            start + n / 2
        };
        if mid == start || mid == end {
            return idx;
        }

        self.build_node(boxes, centers, start, mid, depth + 1);
        let right = self.build_node(boxes, centers, mid, end, depth + 1);
        let node = &mut self.nodes[idx];
        node.offset = right as u32;
        node.count = 0;
        node.axis = axis as u8;
        idx
    }

    /// Nearest hit in `[t_min, t_max]`; ties on `t` go to the lowest primitive index.
    pub fn intersect(&self, tris: &[Triangle], origin: Vec3, dir: Vec3, t_min: f64, t_max: f64) -> Option<PrimHit> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let neg = [dir.x < 0.0, dir.y < 0.0, dir.z < 0.0];
        let mut best: Option<PrimHit> = None;
        let mut best_t = t_max;
        let mut stack = [0usize; 64];
        let mut sp = 1;
        while sp > 0 {
            sp -= 1;
            let node = &self.nodes[stack[sp]];
            if node.bounds.hit(origin, inv, t_min, best_t).is_none() {
                continue;
            }
            if node.count > 0 {
                let s = node.offset as usize;
                for &p in &self.order[s..s + node.count as usize] {
                    let p = p as usize;
                    if let Some((t, u, v)) = tris[p].intersect(origin, dir, t_min, best_t) {
                        let better = match best {
                            None => true,
                            Some(b) => t < b.t || (t == b.t && p < b.prim),
                        };
                        if better {
                            best_t = t;
                            best = Some(PrimHit { prim: p, t, u, v });
                        }
                    }
                }
            } else {
                let here = stack[sp];
                let (near, far) = if neg[node.axis as usize] {
                    (node.offset as usize, here + 1)
                } else {
                    (here + 1, node.offset as usize)
                };
                stack[sp] = far;
                stack[sp + 1] = near;
                sp += 2;
            }
        }
        best
    }

    /// True if any primitive is hit in `[t_min, t_max]`.
    pub fn any_hit(&self, tris: &[Triangle], origin: Vec3, dir: Vec3, t_min: f64, t_max: f64) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut stack = [0usize; 64];
        let mut sp = 1;
        while sp > 0 {
            sp -= 1;
            let here = stack[sp];
            let node = &self.nodes[here];
            if node.bounds.hit(origin, inv, t_min, t_max).is_none() {
                continue;
            }
            if node.count > 0 {
                let s = node.offset as usize;
                if self.order[s..s + node.count as usize]
                    .iter()
                    .any(|&p| tris[p as usize].intersect(origin, dir, t_min, t_max).is_some())
                {
                    return true;
                }
            } else {
                stack[sp] = node.offset as usize;
                stack[sp + 1] = here + 1;
                sp += 2;
            }
        }
        false
    }

    pub fn depth(&self) -> usize {
        fn rec(nodes: &[Node], i: usize) -> usize {
            let n = &nodes[i];
            if n.count > 0 {
                1
            } else {
                1 + rec(nodes, i + 1).max(rec(nodes, n.offset as usize))
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            rec(&self.nodes, 0)
        }
    }
}
