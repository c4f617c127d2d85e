//! Object-composition scenes: a few rescaled assets in a large textured cube.

use crate::camera::CameraPose;
use crate::error::{Error, Result};
use crate::math::{Aabb, Rgb, Vec3};
use crate::rng::{tag, RngStream};
use crate::scene::{quad_mesh, Light, LightShape, Material, MeshRole, MeshSource, Pose, Room, Scene, TriangleMesh};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectSceneConfig {
    /// Edge length of the cubic room; the floor is centered on the origin at z = 0.
    pub room_size: f64,
    pub object_count: (usize, usize),
    /// Range of the largest extent after rescaling.
    pub object_extent: (f64, f64),
    /// Height above the floor.
    pub lift: (f64, f64),
    /// Half-width of the square in which objects are centered.
    pub spread: f64,
    pub area_lights: (usize, usize),
    pub spot_lights: (usize, usize),
    pub max_rejections: usize,
    pub camera_distance: (f64, f64),
    pub camera_height: (f64, f64),
    pub fov_deg: f64,
    pub width: usize,
    pub height: usize,
}

impl Default for ObjectSceneConfig {
    fn default() -> Self {
        ObjectSceneConfig {
            room_size: 10.0,
            object_count: (3, 5),
            object_extent: (0.5, 1.0),
            lift: (0.0, 0.05),
            spread: 1.5,
            area_lights: (1, 2),
            spot_lights: (1, 2),
            max_rejections: 10_000,
            camera_distance: (2.5, 4.0),
            camera_height: (1.2, 1.8),
            fov_deg: 60.0,
            width: 256,
            height: 256,
        }
    }
}

/// Camera pose at `eye` looking at `target` (zero roll).
pub fn look_at(eye: Vec3, target: Vec3, fov_deg: f64, width: usize, height: usize) -> CameraPose {
    let f = (target - eye).normalized();
    CameraPose {
        position: eye,
        pitch: (-f.z).clamp(-1.0, 1.0).acos().to_degrees(),
        yaw: (-f.x).atan2(f.y).to_degrees(),
        roll: 0.0,
        fov_deg,
        width,
        height,
    }
}

fn invisible(points: &[Vec3], cameras: &[CameraPose]) -> bool {
    cameras.iter().all(|c| points.iter().all(|&p| !c.sees(p)))
}

/// Grid of points covering a parallelogram, for visibility tests.
fn patch_points(origin: Vec3, eu: Vec3, ev: Vec3) -> Vec<Vec3> {
    let n = 4;
    let mut pts = Vec::new();
    for i in 0..=n {
        for j in 0..=n {
            pts.push(origin + eu * (i as f64 / n as f64) + ev * (j as f64 / n as f64));
        }
    }
    pts
}

impl ObjectSceneConfig {
    /// Builds a scene from `assets` (at least one mesh) and six face materials
    /// (floor, ceiling, then the walls at -x, +x, -y, +y).
    pub fn generate(&self, assets: &[TriangleMesh], faces: &[Material], rng: &mut RngStream) -> Result<Scene> {
        if assets.is_empty() {
            return Err(Error::EmptyAssets);
        }
        if faces.len() != 6 {
            return Err(Error::Invalid(format!("expected 6 face materials, got {}", faces.len())));
        }
        let mut scene = Scene::default();
        let h = self.room_size / 2.0;
        let s = self.room_size;
        let face_geometry = [
            (MeshRole::Floor, Vec3::new(-h, -h, 0.0), Vec3::new(s, 0.0, 0.0), Vec3::new(0.0, s, 0.0)),
            (MeshRole::Ceiling, Vec3::new(-h, -h, s), Vec3::new(0.0, s, 0.0), Vec3::new(s, 0.0, 0.0)),
            (MeshRole::Wall, Vec3::new(-h, -h, 0.0), Vec3::new(0.0, s, 0.0), Vec3::new(0.0, 0.0, s)),
            (MeshRole::Wall, Vec3::new(h, -h, 0.0), Vec3::new(0.0, 0.0, s), Vec3::new(0.0, s, 0.0)),
            (MeshRole::Wall, Vec3::new(-h, -h, 0.0), Vec3::new(0.0, 0.0, s), Vec3::new(s, 0.0, 0.0)),
            (MeshRole::Wall, Vec3::new(-h, h, 0.0), Vec3::new(s, 0.0, 0.0), Vec3::new(0.0, 0.0, s)),
        ];
        for ((role, o, eu, ev), material) in face_geometry.into_iter().zip(faces) {
            let mut mesh = quad_mesh(o, eu, ev);
            mesh.role = role;
            mesh.material = scene.push_material(material.clone());
            scene.push_mesh(mesh);
        }
        scene.rooms.push(Room::rectangle([-h, -h], [h, h], 0.0, s));

        let target = rng.range_inclusive(self.object_count.0, self.object_count.1);
        let boxes = self.place_objects(&mut scene, assets, target, rng)?;

        let center = boxes.iter().fold(Aabb::EMPTY, |a, b| a.union(*b)).center();
        let camera = self.sample_camera(center, rng);
        let cameras = [camera.clone()];
        self.add_area_lights(&mut scene, &cameras, rng)?;
        self.add_spot_lights(&mut scene, &cameras, &boxes, rng)?;
        scene.render.width = camera.width;
        scene.render.height = camera.height;
        scene.camera = Some(camera);
        Ok(scene)
    }

    fn place_objects(&self, scene: &mut Scene, assets: &[TriangleMesh], target: usize, rng: &mut RngStream) -> Result<Vec<Aabb>> {
        let mut count = target;
        loop {
            let mut attempt = rng.fork(tag::SCENE_GEN);
            if let Some(placed) = self.try_place(assets, count, &mut attempt) {
                let mut boxes = Vec::new();
                for (mesh, pose, bounds) in placed {
                    let material = scene.push_material(Material::lambertian(Rgb([
                        rng.uniform(0.2, 0.9),
                        rng.uniform(0.2, 0.9),
                        rng.uniform(0.2, 0.9),
                    ])));
                    let mut mesh = mesh;
                    mesh.material = material;
                    mesh.role = MeshRole::Object;
                    let m = scene.push_mesh(mesh);
                    let f = scene.add_furniture(m, pose, format!("object{}", scene.furniture.len()));
                    scene.rooms[0].furniture.push(f);
                    boxes.push(bounds);
                }
                return Ok(boxes);
            }
            if count <= self.object_count.0 {
                return Err(Error::Placement(format!(
                    "could not place {count} objects without overlap in {} tries",
                    self.max_rejections
                )));
            }
            log::warn!("retrying object placement with {} objects", count - 1);
            count -= 1;
        }
    }

    #[allow(clippy::type_complexity)]
    fn try_place(&self, assets: &[TriangleMesh], count: usize, rng: &mut RngStream) -> Option<Vec<(TriangleMesh, Pose, Aabb)>> {
        let mut placed: Vec<(TriangleMesh, Pose, Aabb)> = Vec::new();
        let mut rejections = 0;
        while placed.len() < count {
            let asset = &assets[rng.index(assets.len())];
            let local = asset.recentered();
            let extent = local.bounds.extent().max_component();
            let mut mesh = local.scaled(rng.uniform(self.object_extent.0, self.object_extent.1) / extent);
            mesh.source = MeshSource::Inline;
            let pose = Pose {
                yaw_deg: rng.uniform(0.0, 360.0),
                x: rng.uniform(-self.spread, self.spread),
                y: rng.uniform(-self.spread, self.spread),
                z: rng.uniform(self.lift.0, self.lift.1),
            };
            let bounds = Aabb::from_points(&mesh.vertices.iter().map(|&v| pose.apply(v)).collect::<Vec<_>>());
            if placed.iter().all(|(_, _, b)| !b.overlaps(&bounds, -1e-6)) {
                placed.push((mesh, pose, bounds));
            } else {
                rejections += 1;
                if rejections >= self.max_rejections {
                    return None;
                }
            }
        }
        Some(placed)
    }

    fn sample_camera(&self, target: Vec3, rng: &mut RngStream) -> CameraPose {
        let d = rng.uniform(self.camera_distance.0, self.camera_distance.1);
        let a = rng.uniform(0.0, std::f64::consts::TAU);
        let eye = Vec3::new(
            target.x + d * a.cos(),
            target.y + d * a.sin(),
            rng.uniform(self.camera_height.0, self.camera_height.1),
        );
        look_at(eye, Vec3::new(target.x, target.y, target.z.min(0.5)), self.fov_deg, self.width, self.height)
    }

    fn add_area_lights(&self, scene: &mut Scene, cameras: &[CameraPose], rng: &mut RngStream) -> Result<()> {
        let n = rng.range_inclusive(self.area_lights.0, self.area_lights.1);
        let h = self.room_size / 2.0 - 0.5;
        for _ in 0..n {
            let mut placed = false;
            for _ in 0..self.max_rejections {
                let size = rng.uniform(0.5, 1.0);
                let o = Vec3::new(rng.uniform(-h, h - size), rng.uniform(-h + size, h), rng.uniform(3.0, 6.0));
                let (eu, ev) = (Vec3::new(size, 0.0, 0.0), Vec3::new(0.0, -size, 0.0));
                if !invisible(&patch_points(o, eu, ev), cameras) {
                    continue;
                }
                let mut mesh = quad_mesh(o, eu, ev);
                mesh.role = MeshRole::Object;
                mesh.material = scene.push_material(Material::lambertian(Rgb([0.8; 3])));
                let m = scene.push_mesh(mesh);
                let radiance = rng.uniform(8.0, 16.0);
                scene.lights.push(Light::area(m, Rgb([radiance; 3])));
                placed = true;
                break;
            }
            if !placed {
                return Err(Error::Placement("no hidden area-light position".into()));
            }
        }
        Ok(())
    }

    fn add_spot_lights(&self, scene: &mut Scene, cameras: &[CameraPose], targets: &[Aabb], rng: &mut RngStream) -> Result<()> {
        let n = rng.range_inclusive(self.spot_lights.0, self.spot_lights.1);
        let h = self.room_size / 2.0 - 0.5;
        for _ in 0..n {
            let mut placed = false;
            for _ in 0..self.max_rejections {
                let p = Vec3::new(rng.uniform(-h, h), rng.uniform(-h, h), rng.uniform(2.5, 6.0));
                if !invisible(&[p], cameras) {
                    continue;
                }
                let aim = targets[rng.index(targets.len())].center();
                let power = rng.uniform(100.0, 300.0);
                scene.lights.push(Light {
                    shape: LightShape::Spot {
                        position: p,
                        direction: (aim - p).normalized(),
                        cone_deg: rng.uniform(40.0, 80.0),
                        intensity: Rgb([power; 3]),
                    },
                    active: true,
                });
                placed = true;
                break;
            }
            if !placed {
                return Err(Error::Placement("no hidden spot-light position".into()));
            }
        }
        Ok(())
    }
}

/// [`ObjectSceneConfig::generate`] with default settings.
pub fn gen_object_scene(assets: &[TriangleMesh], faces: &[Material], rng: &mut RngStream) -> Result<Scene> {
    ObjectSceneConfig::default().generate(assets, faces, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn look_at_inverts_camera_frame() {
        let eye = Vec3::new(1.0, -2.0, 1.5);
        let target = Vec3::new(-0.5, 1.0, 0.2);
        let pose = look_at(eye, target, 60.0, 64, 64);
        let f = pose.frame().forward;
        assert!((f - (target - eye).normalized()).length() < 1e-12);
        let (u, v) = pose.project(target).unwrap();
        assert!((u - 32.0).abs() < 1e-9 && (v - 32.0).abs() < 1e-9);
    }
}
