//! Exact triangle-mesh intersection queries.
//!
//! Two meshes collide when some pair of their triangles interpenetrates.
//! Touching contact (shared edges or vertices, a face resting on another
//! face) does not count.

use crate::math::{Aabb, Vec3};

/// Minimum penetration depth, in meters, that counts as a collision.
pub const CONTACT_TOLERANCE: f64 = 1e-9;

/// Triangle soup with per-triangle bounds.
#[derive(Debug, Clone)]
pub struct CollisionMesh {
    pub triangles: Vec<[Vec3; 3]>,
    boxes: Vec<Aabb>,
    pub bounds: Aabb,
}

impl CollisionMesh {
    pub fn new(triangles: Vec<[Vec3; 3]>) -> Self {
        let boxes: Vec<Aabb> = triangles.iter().map(|t| Aabb::from_points(t.iter())).collect();
        let bounds = boxes.iter().fold(Aabb::EMPTY, |acc, b| acc.union(*b));
        CollisionMesh { triangles, boxes, bounds }
    }

    pub fn from_indexed(vertices: &[Vec3], triangles: &[[usize; 3]], transform: impl Fn(Vec3) -> Vec3) -> Self {
        let world: Vec<Vec3> = vertices.iter().map(|&v| transform(v)).collect();
        CollisionMesh::new(triangles.iter().map(|t| t.map(|k| world[k])).collect())
    }

    pub fn translated(&self, d: Vec3) -> Self {
        CollisionMesh::new(self.triangles.iter().map(|t| t.map(|v| v + d)).collect())
    }

    pub fn intersects(&self, other: &CollisionMesh) -> bool {
        if !self.bounds.overlaps(&other.bounds, -CONTACT_TOLERANCE) {
            return false;
        }
        for (a, ba) in self.triangles.iter().zip(&self.boxes) {
            if !ba.overlaps(&other.bounds, -CONTACT_TOLERANCE) {
                continue;
            }
            for (b, bb) in other.triangles.iter().zip(&other.boxes) {
                if ba.overlaps(bb, -CONTACT_TOLERANCE) && triangles_intersect(a, b) {
                    return true;
                }
            }
        }
        false
    }
}

fn unit_normal(t: &[Vec3; 3]) -> Option<Vec3> {
    let n = (t[1] - t[0]).cross(t[2] - t[0]);
    let len = n.length();
    (len > 1e-15).then(|| n / len)
}

fn straddles(d: &[f64; 3]) -> bool {
    d.iter().any(|&x| x > CONTACT_TOLERANCE) && d.iter().any(|&x| x < -CONTACT_TOLERANCE)
}

/// Extent of triangle `t` along `axis`, restricted to the line where it
/// meets the other plane. `d` holds its vertices' signed distances to that plane.
fn line_interval(t: &[Vec3; 3], d: &[f64; 3], axis: Vec3) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut push = |p: Vec3| {
        let s = p.dot(axis);
        lo = lo.min(s);
        hi = hi.max(s);
    };
    for i in 0..3 {
        let j = (i + 1) % 3;
        if d[i].abs() <= CONTACT_TOLERANCE {
            push(t[i]);
        }
        if (d[i] > CONTACT_TOLERANCE && d[j] < -CONTACT_TOLERANCE) || (d[i] < -CONTACT_TOLERANCE && d[j] > CONTACT_TOLERANCE) {
            push(t[i] + (t[j] - t[i]) * (d[i] / (d[i] - d[j])));
        }
    }
    (lo, hi)
}

/// Positive-area overlap of two coplanar triangles, by 2D separating axes.
fn coplanar_overlap(a: &[Vec3; 3], b: &[Vec3; 3], normal: Vec3) -> bool {
    let drop = (0..3)
        .max_by(|&i, &j| normal[i].abs().total_cmp(&normal[j].abs()))
        .unwrap_or(2);
    let (u, v) = ((drop + 1) % 3, (drop + 2) % 3);
    let flat = |t: &[Vec3; 3]| t.map(|p| (p[u], p[v]));
    let (a2, b2) = (flat(a), flat(b));
    for tri in [&a2, &b2] {
        for i in 0..3 {
            let (p, q) = (tri[i], tri[(i + 1) % 3]);
            let (ax, ay) = (q.1 - p.1, p.0 - q.0);
            let len = ax.hypot(ay);
            if len < 1e-15 {
                continue;
            }
            let proj = |t: &[(f64, f64); 3]| {
                let s = t.map(|r| (r.0 * ax + r.1 * ay) / len);
                (s[0].min(s[1]).min(s[2]), s[0].max(s[1]).max(s[2]))
            };
            let ((amin, amax), (bmin, bmax)) = (proj(&a2), proj(&b2));
            if amax.min(bmax) - amin.max(bmin) <= CONTACT_TOLERANCE {
                return false;
            }
        }
    }
    true
}

/// Whether two triangles interpenetrate.
///
/// Non-coplanar triangles collide when each has vertices strictly on both
/// sides of the other's plane and their spans along the common line overlap
/// by more than [`CONTACT_TOLERANCE`]. Coplanar triangles collide only when
/// they face the same way and their interiors overlap: coincident surfaces of
/// two overlapping solids. Opposite-facing coplanar triangles are in contact.
pub fn triangles_intersect(a: &[Vec3; 3], b: &[Vec3; 3]) -> bool {
    let (Some(na), Some(nb)) = (unit_normal(a), unit_normal(b)) else {
        return false;
    };
    let da = a.map(|p| nb.dot(p - b[0]));
    let db = b.map(|p| na.dot(p - a[0]));
    if da.iter().all(|x| x.abs() <= CONTACT_TOLERANCE) || db.iter().all(|x| x.abs() <= CONTACT_TOLERANCE) {
        return na.dot(nb) > 0.0 && coplanar_overlap(a, b, na);
    }
    if !straddles(&da) || !straddles(&db) {
        return false;
    }
    let axis = na.cross(nb);
    let len = axis.length();
    if len < 1e-15 {
        return false;
    }
    let axis = axis / len;
    let (amin, amax) = line_interval(a, &da, axis);
    let (bmin, bmax) = line_interval(b, &db, axis);
    amax.min(bmax) - amin.max(bmin) > CONTACT_TOLERANCE
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> [Vec3; 3] {
        [Vec3::new(a[0], a[1], a[2]), Vec3::new(b[0], b[1], b[2]), Vec3::new(c[0], c[1], c[2])]
    }

    #[test]
    fn crossing_triangles_intersect() {
        let a = tri([-1.0, -1.0, 0.0], [1.0, -1.0, 0.0], [0.0, 1.0, 0.0]);
        let b = tri([0.0, 0.0, -1.0], [0.0, 0.0, 1.0], [0.0, 2.0, 0.5]);
        assert!(triangles_intersect(&a, &b));
        assert!(triangles_intersect(&b, &a));
    }

    #[test]
    fn separated_triangles_do_not() {
        let a = tri([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        let b = tri([0.0, 0.0, 0.5], [1.0, 0.0, 0.5], [0.0, 1.0, 0.5]);
        assert!(!triangles_intersect(&a, &b));
    }

    #[test]
    fn touching_contact_is_not_collision() {
        let a = tri([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        let shared_edge = tri([0.0, 0.0, 0.0], [0.0, -1.0, 0.0], [1.0, 0.0, 0.0]);
        let facing = tri([0.1, 0.1, 0.0], [0.1, 0.5, 0.0], [0.5, 0.1, 0.0]);
        let vertex_touch = tri([0.0, 0.0, 0.0], [-1.0, 0.0, 1.0], [0.0, -1.0, 1.0]);
        let edge_on_face = tri([0.1, 0.1, 0.0], [0.6, 0.1, 0.0], [0.3, 0.1, 1.0]);
        for b in [shared_edge, facing, vertex_touch, edge_on_face] {
            assert!(!triangles_intersect(&a, &b));
            assert!(!triangles_intersect(&b, &a));
        }
    }

    #[test]
    fn coincident_same_facing_overlap_collides() {
        let a = tri([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        let b = tri([0.1, 0.1, 0.0], [0.5, 0.1, 0.0], [0.1, 0.5, 0.0]);
        assert!(triangles_intersect(&a, &b));
    }

    #[test]
    fn stacked_boxes_touch_but_overlapping_boxes_collide() {
        let unit = crate::scene::box_mesh(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0));
        let m = |d: Vec3| CollisionMesh::from_indexed(&unit.vertices, &unit.triangles, |v| v + d);
        let base = m(Vec3::ZERO);
        assert!(!base.intersects(&m(Vec3::new(0.0, 0.0, 1.0))));
        assert!(!base.intersects(&m(Vec3::new(1.0, 0.3, 0.0))));
        assert!(base.intersects(&m(Vec3::new(0.9, 0.0, 0.0))));
        assert!(base.intersects(&m(Vec3::new(0.9, 0.2, 0.1))));
        assert!(base.intersects(&m(Vec3::new(0.5, 0.5, 0.5))));
    }
}
