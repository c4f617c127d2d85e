//! Light activation and insertion around a camera's view center.

use std::f64::consts::TAU;

use crate::camera::CameraPose;
use crate::math::{Rgb, Vec3};
use crate::rng::RngStream;
use crate::scene::{quad_mesh, Light, Material, MeshRole, Room, Scene};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightPlacer {
    /// xy radius around the view center within which lights are switched on.
    pub activation_radius: f64,
    /// xy distance range of the extra point light from the view center.
    pub point_distance: (f64, f64),
    /// Drop of the point light below the ceiling.
    pub point_drop: (f64, f64),
    pub point_power: (f64, f64),
    pub lamp_size: (f64, f64),
    pub lamp_radiance: f64,
    /// Gap between an inserted lamp and the ceiling plane.
    pub lamp_gap: f64,
    pub tries: usize,
}

impl Default for LightPlacer {
    fn default() -> Self {
        LightPlacer {
            activation_radius: 2.5,
            point_distance: (1.0, 4.0),
            point_drop: (0.1, 0.3),
            point_power: (60.0, 160.0),
            lamp_size: (0.3, 0.4),
            lamp_radiance: 12.0,
            lamp_gap: 1e-3,
            tries: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LightPlacement {
    /// Indices of pre-existing lights that were switched on.
    pub activated: Vec<usize>,
    /// Index of the inserted ceiling lamp, if one was needed.
    pub ceiling_lamp: Option<usize>,
    /// Index of the extra point light, if a hidden position was found.
    pub point_light: Option<usize>,
}

fn xy_distance(a: Vec3, b: Vec3) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

impl LightPlacer {
    /// Whether an existing light qualifies for activation.
    pub fn qualifies(&self, scene: &Scene, room: &Room, light: &Light, center: Vec3) -> bool {
        let c = scene.light_centroid(light);
        xy_distance(c, center) <= self.activation_radius && room.contains(c, 1e-6)
    }

    /// Switches all lights off, then on again for those near `center` inside
    /// the room. Inserts a ceiling lamp when none qualifies, and always tries
    /// to add one point light near the ceiling that the camera cannot see.
    pub fn place(
        &self,
        scene: &Scene,
        room_index: usize,
        pose: &CameraPose,
        center: Vec3,
        rng: &mut RngStream,
    ) -> (Scene, LightPlacement) {
        let mut out = scene.clone();
        let room = scene.rooms[room_index].clone();
        let mut report = LightPlacement::default();
        for (i, light) in out.lights.iter_mut().enumerate() {
            light.active = self.qualifies(scene, &room, light, center);
            if light.active {
                report.activated.push(i);
            }
        }

        if report.activated.is_empty() {
            report.ceiling_lamp = Some(self.insert_lamp(&mut out, &room, center, rng));
        }

        report.point_light = self.insert_point_light(&mut out, &room, pose, center, rng);
        if report.point_light.is_none() {
            log::warn!("no hidden point-light position after {} tries", self.tries);
        }
        (out, report)
    }

    fn insert_lamp(&self, scene: &mut Scene, room: &Room, center: Vec3, rng: &mut RngStream) -> usize {
        let size = rng.uniform(self.lamp_size.0, self.lamp_size.1);
        let h = size / 2.0;
        let fits = |x: f64, y: f64| {
            [(-h, -h), (h, -h), (h, h), (-h, h)]
                .iter()
                .all(|(dx, dy)| room.contains_xy(x + dx, y + dy))
        };
        let mut xy = (center.x, center.y);
        for _ in 0..self.tries {
            let r = self.activation_radius * rng.next_f64().sqrt();
            let a = TAU * rng.next_f64();
            let (x, y) = (center.x + r * a.cos(), center.y + r * a.sin());
            if fits(x, y) {
                xy = (x, y);
                break;
            }
        }
        let z = room.z1 - self.lamp_gap;
        // Edges ordered so the emitting face points down.
        let mut mesh = quad_mesh(
            Vec3::new(xy.0 - h, xy.1 + h, z),
            Vec3::new(size, 0.0, 0.0),
            Vec3::new(0.0, -size, 0.0),
        );
        mesh.role = MeshRole::Object;
        mesh.material = scene.push_material(Material::lambertian(Rgb([0.8; 3])));
        let m = scene.push_mesh(mesh);
        scene.lights.push(Light::area(m, Rgb([self.lamp_radiance; 3])));
        scene.lights.len() - 1
    }

    fn insert_point_light(
        &self,
        scene: &mut Scene,
        room: &Room,
        pose: &CameraPose,
        center: Vec3,
        rng: &mut RngStream,
    ) -> Option<usize> {
        for _ in 0..self.tries {
            let r = rng.uniform(self.point_distance.0, self.point_distance.1);
            let a = TAU * rng.next_f64();
            let z = room.z1 - rng.uniform(self.point_drop.0, self.point_drop.1);
            let p = Vec3::new(center.x + r * a.cos(), center.y + r * a.sin(), z);
            if !room.contains_xy(p.x, p.y) || pose.sees(p) {
                continue;
            }
            let power = rng.uniform(self.point_power.0, self.point_power.1);
            scene.lights.push(Light::point(p, Rgb([power; 3])));
            return Some(scene.lights.len() - 1);
        }
        None
    }
}

/// [`LightPlacer::place`] with default settings.
pub fn place_lights(
    scene: &Scene,
    room_index: usize,
    pose: &CameraPose,
    center: Vec3,
    rng: &mut RngStream,
) -> (Scene, LightPlacement) {
    LightPlacer::default().place(scene, room_index, pose, center, rng)
}

