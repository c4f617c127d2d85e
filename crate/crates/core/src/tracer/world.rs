use crate::error::{Error, Result};
use crate::math::{Rgb, Vec3};
use crate::rng::RngStream;
use crate::scene::{LightShape, Material, MaterialKind, Scene};

use super::bvh::{Bvh, Triangle};

/// Offset applied along the geometric normal when spawning secondary rays.
pub const EPS_GEOM: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
    pub t_min: f64,
    pub t_max: f64,
}

impl Ray {
    pub fn new(origin: Vec3, direction: Vec3) -> Ray {
        Ray {
            origin,
            direction,
            t_min: 0.0,
            t_max: f64::INFINITY,
        }
    }

    pub fn segment(origin: Vec3, direction: Vec3, t_min: f64, t_max: f64) -> Ray {
        Ray {
            origin,
            direction,
            t_min,
            t_max,
        }
    }
}

/// Per-primitive bookkeeping for the flattened world.
#[derive(Debug, Clone, Copy)]
pub struct PrimInfo {
    pub mesh: usize,
    pub triangle: usize,
    pub furniture: Option<usize>,
    pub material: usize,
    /// Unit face normal in world space.
    pub normal: Vec3,
    pub shell: bool,
    pub watertight: bool,
    /// Index into `World::emitters` when this face emits.
    pub emitter: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub point: Vec3,
    /// Unit geometric normal following the triangle winding.
    pub normal: Vec3,
    pub t: f64,
    pub material: usize,
    pub mesh: usize,
    pub triangle: usize,
    /// Global primitive index in the flattened world.
    pub prim: usize,
    pub furniture: Option<usize>,
    /// The surface belongs to the room shell (wall, floor, ceiling).
    pub is_last_background: bool,
    pub watertight: bool,
    /// Barycentric coordinates of the hit.
    pub uv: (f64, f64),
}

impl Hit {
    /// Geometric normal flipped onto the side of `w`.
    pub fn facing(&self, w: Vec3) -> Vec3 {
        if self.normal.dot(w) >= 0.0 {
            self.normal
        } else {
            -self.normal
        }
    }

    /// Origin for a ray leaving the surface in direction `dir`.
    pub fn spawn_origin(&self, dir: Vec3) -> Vec3 {
        self.point + self.facing(dir) * EPS_GEOM
    }
}

#[derive(Debug, Clone)]
enum LightEntry {
    Point {
        position: Vec3,
        intensity: Rgb,
    },
    Spot {
        position: Vec3,
        direction: Vec3,
        cos_cutoff: f64,
        intensity: Rgb,
    },
    Mesh {
        radiance: Rgb,
        prims: Vec<usize>,
        /// Cumulative triangle areas, last entry is the total.
        cdf: Vec<f64>,
    },
}

/// Result of sampling a light from a shading point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightSample {
    /// Incident radiance (area lights) or irradiance-equivalent `Φ/(4π d²)`
    /// (delta lights) arriving along `direction`.
    pub radiance: Rgb,
    /// Unit direction from the shading point toward the light.
    pub direction: Vec3,
    pub distance: f64,
    /// Solid-angle density including the light-selection probability; for
    /// delta lights the discrete selection probability.
    pub pdf: f64,
    pub is_delta: bool,
}

/// Flattened, read-only world: triangles, BVH, materials and active lights.
#[derive(Debug, Clone)]
pub struct World {
    tris: Vec<Triangle>,
    prims: Vec<PrimInfo>,
    bvh: Bvh,
    materials: Vec<Material>,
    lights: Vec<LightEntry>,
    emitters: Vec<Rgb>,
}

fn delta_radiance(position: Vec3, intensity: Rgb, p: Vec3) -> (Rgb, Vec3, f64) {
    let d = position - p;
    let dist = d.length();
    let dir = d / dist;
    (intensity / (4.0 * std::f64::consts::PI * dist * dist), dir, dist)
}

impl World {
    /// Flattens the scene: meshes that no furniture instances are placed as
    /// they are, then every furniture instance in order. Primitive indices
    /// follow that order.
    pub fn build(scene: &Scene) -> World {
        let mut tris = Vec::new();
        let mut prims = Vec::new();
        let mut emitters = Vec::new();
        let mut mesh_emitter = vec![None; scene.meshes.len()];
        for l in scene.lights.iter().filter(|l| l.active) {
            let (mesh, radiance) = match l.shape {
                LightShape::Area { mesh, radiance } => (mesh, radiance),
                LightShape::EmissiveMesh { mesh } => (mesh, scene.materials[scene.meshes[mesh].material].emission),
                _ => continue,
            };
            emitters.push(radiance);
            mesh_emitter[mesh] = Some(emitters.len() - 1);
        }

        let mut mesh_prims: Vec<Vec<usize>> = vec![Vec::new(); scene.meshes.len()];
        for (mi, mesh) in scene.meshes.iter().enumerate() {
            if scene.mesh_is_instanced(mi) {
                continue;
            }
            for (ti, t) in mesh.triangles.iter().enumerate() {
                mesh_prims[mi].push(prims.len());
                tris.push(Triangle::new(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]));
                prims.push(PrimInfo {
                    mesh: mi,
                    triangle: ti,
                    furniture: None,
                    material: mesh.material,
                    normal: mesh.normals[ti],
                    shell: mesh.role.is_shell(),
                    watertight: mesh.watertight,
                    emitter: mesh_emitter[mi],
                });
            }
        }
        for (fi, f) in scene.furniture.iter().enumerate() {
            let mesh = &scene.meshes[f.mesh];
            for (ti, t) in mesh.triangles.iter().enumerate() {
                let [a, b, c] = t.map(|k| f.pose.apply(mesh.vertices[k]));
                tris.push(Triangle::new(a, b, c));
                prims.push(PrimInfo {
                    mesh: f.mesh,
                    triangle: ti,
                    furniture: Some(fi),
                    material: mesh.material,
                    normal: f.pose.apply_normal(mesh.normals[ti]),
                    shell: mesh.role.is_shell(),
                    watertight: mesh.watertight,
                    emitter: None,
                });
            }
        }

        let mut lights = Vec::new();
        for l in scene.lights.iter().filter(|l| l.active) {
            match l.shape {
                LightShape::Point { position, intensity } => lights.push(LightEntry::Point { position, intensity }),
                LightShape::Spot {
                    position,
                    direction,
                    cone_deg,
                    intensity,
                } => lights.push(LightEntry::Spot {
                    position,
                    direction: direction.normalized(),
                    cos_cutoff: (0.5 * cone_deg).to_radians().cos(),
                    intensity,
                }),
                LightShape::Area { mesh, .. } | LightShape::EmissiveMesh { mesh } => {
                    let radiance = emitters[mesh_emitter[mesh].expect("active mesh light registered")];
                    let ps = mesh_prims[mesh].clone();
                    let mut acc = 0.0;
                    let cdf = ps
                        .iter()
                        .map(|&p| {
                            let t = &tris[p];
                            acc += 0.5 * t.e1.cross(t.e2).length();
                            acc
                        })
                        .collect();
                    lights.push(LightEntry::Mesh {
                        radiance,
                        prims: ps,
                        cdf,
                    });
                }
            }
        }

        let bvh = Bvh::build(&tris);
        World {
            tris,
            prims,
            bvh,
            materials: scene.materials.clone(),
            lights,
            emitters,
        }
    }

    pub fn triangle_count(&self) -> usize {
        self.tris.len()
    }

    pub fn triangle(&self, prim: usize) -> &Triangle {
        &self.tris[prim]
    }

    pub fn prim(&self, prim: usize) -> &PrimInfo {
        &self.prims[prim]
    }

    pub fn material(&self, idx: usize) -> &Material {
        &self.materials[idx]
    }

    pub fn light_count(&self) -> usize {
        self.lights.len()
    }

    pub fn has_lights(&self) -> bool {
        !self.lights.is_empty()
    }

    pub fn bvh_depth(&self) -> usize {
        self.bvh.depth()
    }

    fn make_hit(&self, ray: &Ray, prim: usize, t: f64, u: f64, v: f64) -> Hit {
        let info = &self.prims[prim];
        Hit {
            point: ray.origin + ray.direction * t,
            normal: info.normal,
            t,
            material: info.material,
            mesh: info.mesh,
            triangle: info.triangle,
            prim,
            furniture: info.furniture,
            is_last_background: info.shell,
            watertight: info.watertight,
            uv: (u, v),
        }
    }

    /// Nearest hit with `t` in `[t_min, t_max]`, ties broken by lowest primitive index.
    pub fn intersect(&self, ray: &Ray) -> Option<Hit> {
        self.bvh
            .intersect(&self.tris, ray.origin, ray.direction, ray.t_min, ray.t_max)
            .map(|h| self.make_hit(ray, h.prim, h.t, h.u, h.v))
    }

    /// Nearest hit by testing every triangle; reference for the BVH.
    pub fn intersect_brute_force(&self, ray: &Ray) -> Option<Hit> {
        let mut best: Option<(usize, f64, f64, f64)> = None;
        for (i, tri) in self.tris.iter().enumerate() {
            if let Some((t, u, v)) = tri.intersect(ray.origin, ray.direction, ray.t_min, ray.t_max) {
                if best.map_or(true, |b| t < b.1) {
                    best = Some((i, t, u, v));
                }
            }
        }
        best.map(|(i, t, u, v)| self.make_hit(ray, i, t, u, v))
    }

    /// True if any surface lies along `dir` from `p` within `(EPS_GEOM, t_max)`.
    pub fn occluded(&self, p: Vec3, dir: Vec3, t_max: f64) -> bool {
        t_max > EPS_GEOM && self.bvh.any_hit(&self.tris, p, dir, EPS_GEOM, t_max)
    }

    /// Whether the segment from `hit` toward the point `distance` away along
    /// `dir` is blocked. The ray is re-aimed from the offset origin at the
    /// target and stops `EPS_GEOM` short of it, so neither end surface counts
    /// even at grazing angles.
    pub fn shadowed(&self, hit: &Hit, dir: Vec3, distance: f64) -> bool {
        let origin = hit.spawn_origin(dir);
        let to_target = hit.point + dir * distance - origin;
        let len = to_target.length();
        if len <= EPS_GEOM {
            return false;
        }
        self.occluded(origin, to_target / len, len - EPS_GEOM)
    }

    /// Radiance emitted by the hit surface toward `wo` (front faces only).
    pub fn emitted(&self, hit: &Hit, wo: Vec3) -> Rgb {
        match self.prims[hit.prim].emitter {
            Some(e) if hit.normal.dot(wo) > 0.0 => self.emitters[e],
            _ => Rgb::BLACK,
        }
    }

    /// Picks one active light uniformly and samples a direction toward it.
    pub fn sample_light(&self, p: Vec3, rng: &mut RngStream) -> Result<LightSample> {
        if self.lights.is_empty() {
            return Err(Error::NoActiveLight);
        }
        let n = self.lights.len();
        let pick = ((rng.next_f64() * n as f64) as usize).min(n - 1);
        let select_pdf = 1.0 / n as f64;
        Ok(match &self.lights[pick] {
            LightEntry::Point { position, intensity } => {
                let (radiance, direction, distance) = delta_radiance(*position, *intensity, p);
                LightSample {
                    radiance,
                    direction,
                    distance,
                    pdf: select_pdf,
                    is_delta: true,
                }
            }
            LightEntry::Spot {
                position,
                direction: axis,
                cos_cutoff,
                intensity,
            } => {
                let (radiance, direction, distance) = delta_radiance(*position, *intensity, p);
                let inside = (-direction).dot(*axis) >= *cos_cutoff;
                LightSample {
                    radiance: if inside { radiance } else { Rgb::BLACK },
                    direction,
                    distance,
                    pdf: select_pdf,
                    is_delta: true,
                }
            }
            LightEntry::Mesh { radiance, prims, cdf } => {
                let total = *cdf.last().unwrap_or(&0.0);
                let target = rng.next_f64() * total;
                let k = cdf.partition_point(|&c| c <= target).min(prims.len() - 1);
                let tri = &self.tris[prims[k]];
                let (mut a, mut b) = (rng.next_f64(), rng.next_f64());
                if a + b > 1.0 {
                    a = 1.0 - a;
                    b = 1.0 - b;
                }
                let q = tri.v0 + tri.e1 * a + tri.e2 * b;
                let d = q - p;
                let dist2 = d.length_squared();
                let distance = dist2.sqrt();
                let direction = d / distance;
                let n = self.prims[prims[k]].normal;
                let cos_l = n.dot(-direction);
                if cos_l <= 0.0 || total <= 0.0 {
                    LightSample {
                        radiance: Rgb::BLACK,
                        direction,
                        distance,
                        pdf: 0.0,
                        is_delta: false,
                    }
                } else {
                    LightSample {
                        radiance: *radiance,
                        direction,
                        distance,
                        pdf: select_pdf * dist2 / (total * cos_l),
                        is_delta: false,
                    }
                }
            }
        })
    }

    /// Sums the unoccluded contributions of every active delta light at `hit`
    /// for a Lambertian surface of albedo `albedo` viewed from `wo`.
    pub fn delta_lights_at(&self, hit: &Hit, wo: Vec3, albedo: Rgb) -> Rgb {
        let n = hit.facing(wo);
        let mut acc = Rgb::BLACK;
        for l in &self.lights {
            let (radiance, dir, dist) = match l {
                LightEntry::Point { position, intensity } => delta_radiance(*position, *intensity, hit.point),
                LightEntry::Spot {
                    position,
                    direction,
                    cos_cutoff,
                    intensity,
                } => {
                    let (r, d, dist) = delta_radiance(*position, *intensity, hit.point);
                    if (-d).dot(*direction) < *cos_cutoff {
                        continue;
                    }
                    (r, d, dist)
                }
                LightEntry::Mesh { .. } => continue,
            };
            let cos = n.dot(dir);
            if cos <= 0.0 {
                continue;
            }
            if self.shadowed(hit, dir, dist) {
                continue;
            }
            acc += radiance * albedo * (cos / std::f64::consts::PI);
        }
        acc
    }

    pub fn material_is_emissive(&self, idx: usize) -> bool {
        self.materials[idx].kind == MaterialKind::Emissive
    }
}
