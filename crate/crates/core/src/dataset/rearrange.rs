//! Collision removal by local xy relocation of furniture.
//!
//! Furniture is visited in ascending order of 2D bounding-box area. A
//! colliding item spirals outward from its input position (rings 0.05 m
//! apart, 16 angles per ring, 0.5 m at most) and takes the first free spot.
//! If none exists it stays at the last spot examined and its smallest
//! colliding neighbour gets the same treatment. When the neighbour fails
//! too, the first item is removed and the neighbour returns to its input
//! position. Passes repeat until nothing collides. Once the pass budget is
//! spent, colliding items are removed smallest first.
//!
//! Collisions are tested against other furniture and against wall meshes.
//! Floors and ceilings are excluded: furniture rests on the floor.

use std::f64::consts::TAU;

use crate::dataset::collision::CollisionMesh;
use crate::math::{Rect2, Vec3};
use crate::scene::{LightShape, MeshRole, Pose, Scene};

pub const SPIRAL_STEP: f64 = 0.05;
pub const SPIRAL_ANGLES: usize = 16;
pub const SPIRAL_MAX_RADIUS: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct Rearrangement {
    pub scene: Scene,
    /// Input indices of furniture that was moved, with the xy displacement.
    pub moved: Vec<(usize, f64)>,
    /// Input indices of furniture that was removed.
    pub removed: Vec<usize>,
}

/// xy offsets of the spiral, starting at the input position.
pub fn spiral_offsets() -> Vec<(f64, f64)> {
    let rings = (SPIRAL_MAX_RADIUS / SPIRAL_STEP).round() as usize;
    let mut out = vec![(0.0, 0.0)];
    for ring in 1..=rings {
        let r = ring as f64 * SPIRAL_STEP;
        for a in 0..SPIRAL_ANGLES {
            let theta = TAU * a as f64 / SPIRAL_ANGLES as f64;
            out.push((r * theta.cos(), r * theta.sin()));
        }
    }
    out
}

struct Layout<'s> {
    scene: &'s Scene,
    /// Geometry of each item at its input pose.
    base: Vec<CollisionMesh>,
    walls: Vec<CollisionMesh>,
    initial: Vec<Pose>,
    pose: Vec<Pose>,
    alive: Vec<bool>,
}

impl<'s> Layout<'s> {
    fn new(scene: &'s Scene) -> Self {
        let base = scene
            .furniture
            .iter()
            .map(|f| {
                let m = &scene.meshes[f.mesh];
                CollisionMesh::from_indexed(&m.vertices, &m.triangles, |v| f.pose.apply(v))
            })
            .collect();
        let walls = scene
            .meshes
            .iter()
            .enumerate()
            .filter(|(i, m)| m.role == MeshRole::Wall && !scene.mesh_is_instanced(*i))
            .map(|(_, m)| CollisionMesh::from_indexed(&m.vertices, &m.triangles, |v| v))
            .collect();
        let initial: Vec<Pose> = scene.furniture.iter().map(|f| f.pose).collect();
        Layout {
            scene,
            base,
            walls,
            pose: initial.clone(),
            initial,
            alive: vec![true; scene.furniture.len()],
        }
    }

    fn geometry(&self, i: usize, pose: &Pose) -> CollisionMesh {
        let d = Vec3::new(pose.x - self.initial[i].x, pose.y - self.initial[i].y, 0.0);
        self.base[i].translated(d)
    }

    /// Furniture colliding with item `i` placed at `pose`, plus whether a wall does.
    fn colliders(&self, i: usize, pose: &Pose) -> (Vec<usize>, bool) {
        let g = self.geometry(i, pose);
        let wall = self.walls.iter().any(|w| g.intersects(w));
        let others = (0..self.pose.len())
            .filter(|&j| j != i && self.alive[j])
            .filter(|&j| g.intersects(&self.geometry(j, &self.pose[j])))
            .collect();
        (others, wall)
    }

    fn collides(&self, i: usize, pose: &Pose) -> bool {
        let (others, wall) = self.colliders(i, pose);
        wall || !others.is_empty()
    }

    /// First free spiral position around the input pose; otherwise the last
    /// position examined.
    fn spiral(&self, i: usize, offsets: &[(f64, f64)]) -> Result<Pose, Pose> {
        let mut last = self.initial[i];
        for &(dx, dy) in offsets {
            let candidate = self.initial[i].translated(dx, dy);
            if !self.collides(i, &candidate) {
                return Ok(candidate);
            }
            last = candidate;
        }
        Err(last)
    }

    fn area(&self, i: usize) -> f64 {
        self.scene.furniture[i].bbox2.area()
    }
}

/// Resolves furniture collisions. Collision-free input is returned unchanged.
pub fn rearrange(scene: &Scene) -> Rearrangement {
    let mut layout = Layout::new(scene);
    let n = scene.furniture.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| layout.area(a).total_cmp(&layout.area(b)).then(a.cmp(&b)));
    let offsets = spiral_offsets();
    let max_passes = 2 * n + 4;

    for _ in 0..max_passes {
        let mut any = false;
        for &i in &order {
            if !layout.alive[i] || !layout.collides(i, &layout.pose[i]) {
                continue;
            }
            any = true;
            match layout.spiral(i, &offsets) {
                Ok(p) => layout.pose[i] = p,
                Err(last) => {
                    layout.pose[i] = last;
                    let (others, _) = layout.colliders(i, &last);
                    let Some(j) = others
                        .into_iter()
                        .min_by(|&a, &b| layout.area(a).total_cmp(&layout.area(b)).then(a.cmp(&b)))
                    else {
                        // Only walls are in the way.
                        layout.alive[i] = false;
                        continue;
                    };
                    match layout.spiral(j, &offsets) {
                        Ok(p) => layout.pose[j] = p,
                        Err(_) => {
                            layout.alive[i] = false;
                            layout.pose[j] = layout.initial[j];
                        }
                    }
                }
            }
        }
        if !any {
            break;
        }
    }

    // Budget exhausted: drop whatever still collides, smallest first.
    for &i in &order {
        if layout.alive[i] && layout.collides(i, &layout.pose[i]) {
            layout.alive[i] = false;
        }
    }

    let moved = (0..n)
        .filter(|&i| layout.alive[i] && layout.pose[i] != layout.initial[i])
        .map(|i| {
            let (p, q) = (layout.pose[i], layout.initial[i]);
            (i, (p.x - q.x).hypot(p.y - q.y))
        })
        .collect();
    let removed: Vec<usize> = (0..n).filter(|&i| !layout.alive[i]).collect();

    let mut out = scene.clone();
    for i in 0..n {
        if out.furniture[i].pose != layout.pose[i] {
            out.furniture[i].pose = layout.pose[i];
            out.refresh_furniture_bbox(i);
        }
    }
    remove_furniture(&mut out, &removed);
    Rearrangement { scene: out, moved, removed }
}

/// Removes furniture instances, renumbering room lists. Meshes left without
/// any instance are dropped so they are not placed at their local coordinates.
pub fn remove_furniture(scene: &mut Scene, removed: &[usize]) {
    if removed.is_empty() {
        return;
    }
    let n = scene.furniture.len();
    let mut new_index = vec![None; n];
    let mut next = 0;
    for (i, slot) in new_index.iter_mut().enumerate() {
        if !removed.contains(&i) {
            *slot = Some(next);
            next += 1;
        }
    }
    let was_instanced: Vec<bool> = (0..scene.meshes.len()).map(|m| scene.mesh_is_instanced(m)).collect();
    let mut i = 0;
    scene.furniture.retain(|_| {
        let keep = new_index[i].is_some();
        i += 1;
        keep
    });
    for room in &mut scene.rooms {
        room.furniture = room.furniture.iter().filter_map(|&f| new_index[f]).collect();
    }

    let orphaned: Vec<bool> = (0..scene.meshes.len())
        .map(|m| was_instanced[m] && !scene.mesh_is_instanced(m))
        .collect();
    if !orphaned.iter().any(|&o| o) {
        return;
    }
    let mut mesh_index = vec![0; scene.meshes.len()];
    let mut next = 0;
    for (m, idx) in mesh_index.iter_mut().enumerate() {
        *idx = next;
        if !orphaned[m] {
            next += 1;
        }
    }
    let mut m = 0;
    scene.meshes.retain(|_| {
        let keep = !orphaned[m];
        m += 1;
        keep
    });
    for f in &mut scene.furniture {
        f.mesh = mesh_index[f.mesh];
    }
    for l in &mut scene.lights {
        match &mut l.shape {
            LightShape::Area { mesh, .. } | LightShape::EmissiveMesh { mesh } => *mesh = mesh_index[*mesh],
            _ => {}
        }
    }
}

/// Exhaustive check: every furniture pair and every furniture/wall pair.
pub fn find_collisions(scene: &Scene) -> Vec<(usize, Option<usize>)> {
    let layout = Layout::new(scene);
    let mut out = Vec::new();
    for i in 0..scene.furniture.len() {
        let g = &layout.base[i];
        if layout.walls.iter().any(|w| g.intersects(w)) {
            out.push((i, None));
        }
        for j in i + 1..scene.furniture.len() {
            if g.intersects(&layout.base[j]) {
                out.push((i, Some(j)));
            }
        }
    }
    out
}

/// xy footprint of item `i` in `scene`.
pub fn footprint(scene: &Scene, i: usize) -> Rect2 {
    scene.furniture[i].bbox2
}
