//! Procedural box-furnished rooms, for exercising the dataset pipeline
//! without external scene collections.

use crate::math::{Rgb, Vec3};
use crate::rng::RngStream;
use crate::scene::{box_mesh, quad_mesh, Light, Material, MeshRole, Pose, Room, Scene};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoomLayout {
    pub size: ((f64, f64), (f64, f64)),
    pub ceiling: f64,
    pub furniture: (usize, usize),
    /// Footprint side lengths and height of furniture boxes.
    pub footprint: (f64, f64),
    pub height: (f64, f64),
    /// Reject placements whose footprints overlap another piece.
    pub avoid_overlap: bool,
    pub lamps: (usize, usize),
}

impl Default for RoomLayout {
    fn default() -> Self {
        RoomLayout {
            size: ((4.0, 6.0), (4.0, 6.0)),
            ceiling: 2.8,
            furniture: (5, 9),
            footprint: (0.5, 1.4),
            height: (0.5, 1.8),
            avoid_overlap: true,
            lamps: (1, 2),
        }
    }
}

impl RoomLayout {
    /// One rectangular room with its corner at the origin.
    pub fn generate(&self, rng: &mut RngStream) -> Scene {
        let mut scene = Scene::default();
        let sx = rng.uniform(self.size.0 .0, self.size.0 .1);
        let sy = rng.uniform(self.size.1 .0, self.size.1 .1);
        let h = self.ceiling;
        let shell = scene.push_material(Material::lambertian(Rgb([0.7, 0.68, 0.65])));
        let floor = scene.push_material(Material::lambertian(Rgb([0.45, 0.35, 0.25])));
        let faces = [
            (MeshRole::Floor, floor, Vec3::ZERO, Vec3::new(sx, 0.0, 0.0), Vec3::new(0.0, sy, 0.0)),
            (MeshRole::Ceiling, shell, Vec3::new(0.0, 0.0, h), Vec3::new(0.0, sy, 0.0), Vec3::new(sx, 0.0, 0.0)),
            (MeshRole::Wall, shell, Vec3::ZERO, Vec3::new(0.0, sy, 0.0), Vec3::new(0.0, 0.0, h)),
            (MeshRole::Wall, shell, Vec3::new(sx, 0.0, 0.0), Vec3::new(0.0, 0.0, h), Vec3::new(0.0, sy, 0.0)),
            (MeshRole::Wall, shell, Vec3::ZERO, Vec3::new(0.0, 0.0, h), Vec3::new(sx, 0.0, 0.0)),
            (MeshRole::Wall, shell, Vec3::new(0.0, sy, 0.0), Vec3::new(sx, 0.0, 0.0), Vec3::new(0.0, 0.0, h)),
        ];
        for (role, material, o, eu, ev) in faces {
            let mut m = quad_mesh(o, eu, ev);
            m.role = role;
            m.material = material;
            scene.push_mesh(m);
        }
        scene.rooms.push(Room::rectangle([0.0, 0.0], [sx, sy], 0.0, h));

        let n = rng.range_inclusive(self.furniture.0, self.furniture.1);
        let mut tries = 0;
        while scene.furniture.len() < n && tries < 200 * n {
            tries += 1;
            let (w, d) = (
                rng.uniform(self.footprint.0, self.footprint.1),
                rng.uniform(self.footprint.0, self.footprint.1),
            );
            let ht = rng.uniform(self.height.0, self.height.1);
            let yaw = 90.0 * rng.index(4) as f64;
            let r = 0.5 * w.hypot(d);
            let pose = Pose {
                yaw_deg: yaw,
                x: rng.uniform(r, sx - r),
                y: rng.uniform(r, sy - r),
                z: 0.0,
            };
            let mut mesh = box_mesh(Vec3::new(-w / 2.0, -d / 2.0, 0.0), Vec3::new(w / 2.0, d / 2.0, ht));
            let footprint = {
                let b = crate::math::Aabb::from_points(&mesh.vertices.iter().map(|&v| pose.apply(v)).collect::<Vec<_>>());
                crate::math::Rect2 {
                    min: [b.min.x, b.min.y],
                    max: [b.max.x, b.max.y],
                }
            };
            let overlaps = scene.furniture.iter().any(|f| {
                let o = f.bbox2;
                footprint.min[0] < o.max[0] && o.min[0] < footprint.max[0] && footprint.min[1] < o.max[1] && o.min[1] < footprint.max[1]
            });
            if self.avoid_overlap && overlaps {
                continue;
            }
            mesh.material = scene.push_material(Material::lambertian(Rgb([
                rng.uniform(0.2, 0.8),
                rng.uniform(0.2, 0.8),
                rng.uniform(0.2, 0.8),
            ])));
            let m = scene.push_mesh(mesh);
            let f = scene.add_furniture(m, pose, format!("box{}", scene.furniture.len()));
            scene.rooms[0].furniture.push(f);
        }

        let lamps = rng.range_inclusive(self.lamps.0, self.lamps.1);
        for _ in 0..lamps {
            let s = 0.4;
            let (x, y) = (rng.uniform(0.5, sx - 0.5 - s), rng.uniform(0.5 + s, sy - 0.5));
            let mut m = quad_mesh(Vec3::new(x, y, h - 1e-3), Vec3::new(s, 0.0, 0.0), Vec3::new(0.0, -s, 0.0));
            m.material = shell;
            let mi = scene.push_mesh(m);
            scene.lights.push(Light::area(mi, Rgb([10.0; 3])));
        }
        scene
    }
}
