//! World description: meshes, materials, lights, rooms and furniture.
//!
//! A [`Scene`] is plain data. It is built by [`parse_scene`] (or by the
//! dataset generators), checked by [`validate_scene`], and never mutated by
//! the renderer, so a single instance can be shared by any number of threads.

mod document;
mod obj;
mod validate;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::camera::CameraPose;
use crate::image::Image;
use crate::math::{Aabb, Rect2, Rgb, Vec3};

pub use document::{load_scene, parse_scene, parse_scene_with_base, serialize_scene};
pub use obj::{load_mesh, parse_obj};
pub use validate::{validate_scene, Violation};

/// Triangles smaller than this are dropped at load time.
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeshRole {
    /// Furniture, lamps, props: anything that may occlude.
    #[default]
    Object,
    Wall,
    Floor,
    Ceiling,
}

impl MeshRole {
    /// Walls, floors and ceilings form the room shell.
    pub fn is_shell(self) -> bool {
        !matches!(self, MeshRole::Object)
    }
}

/// Where a mesh's geometry came from; preserved so the scene serializes back
/// to the same document.
#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Inline,
    File(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    /// Unit face normals, one per triangle, following the winding order.
    pub normals: Vec<Vec3>,
    pub material: usize,
    pub role: MeshRole,
    /// Closed two-manifold; required for the parity pass-through rule.
    pub watertight: bool,
    pub source: MeshSource,
    pub bounds: Aabb,
}

impl TriangleMesh {
    /// Builds a mesh, dropping triangles with area below [`MIN_TRIANGLE_AREA`].
    /// Returns the mesh and the number of dropped triangles.
    pub fn from_triangles(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> (TriangleMesh, usize) {
        let n_in = triangles.len();
        let triangles: Vec<[usize; 3]> = triangles
            .into_iter()
            .filter(|t| {
                t.iter().all(|&i| i < vertices.len())
                    && crate::math::triangle_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]) >= MIN_TRIANGLE_AREA
            })
            .collect();
        let dropped = n_in - triangles.len();
        let mut mesh = TriangleMesh {
            vertices,
            triangles,
            normals: Vec::new(),
            material: 0,
            role: MeshRole::Object,
            watertight: false,
            source: MeshSource::Inline,
            bounds: Aabb::EMPTY,
        };
        mesh.refresh();
        (mesh, dropped)
    }

    /// Recomputes face normals and cached bounds from the geometry.
    pub fn refresh(&mut self) {
        self.normals = self
            .triangles
            .iter()
            .map(|t| {
                let [a, b, c] = self.corners_of(t);
                (b - a).cross(c - a).normalized()
            })
            .collect();
        self.bounds = Aabb::from_points(&self.vertices);
    }

    fn corners_of(&self, t: &[usize; 3]) -> [Vec3; 3] {
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn corners(&self, tri: usize) -> [Vec3; 3] {
        self.corners_of(&self.triangles[tri])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|i| {
                let [a, b, c] = self.corners(i);
                crate::math::triangle_area(a, b, c)
            })
            .sum()
    }

    /// Area-weighted centroid of the surface.
    pub fn centroid(&self) -> Vec3 {
        let mut acc = Vec3::ZERO;
        let mut total = 0.0;
        for i in 0..self.triangles.len() {
            let [a, b, c] = self.corners(i);
            let w = crate::math::triangle_area(a, b, c);
            acc += (a + b + c) * (w / 3.0);
            total += w;
        }
        if total > 0.0 {
            acc / total
        } else {
            self.bounds.center()
        }
    }

    /// True if every undirected edge is shared by exactly two triangles.
    pub fn is_closed(&self) -> bool {
        use std::collections::HashMap;
        if self.triangles.is_empty() {
            return false;
        }
        let mut edges: HashMap<(usize, usize), u32> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        edges.values().all(|&c| c == 2)
    }

    /// Uniformly scales about the origin.
    pub fn scaled(&self, s: f64) -> TriangleMesh {
        let mut m = self.clone();
        for v in &mut m.vertices {
            *v = *v * s;
        }
        m.refresh();
        m
    }

    /// Translates vertices so the bounding box is centered in xy and rests on z = 0.
    pub fn recentered(&self) -> TriangleMesh {
        let c = self.bounds.center();
        let shift = Vec3::new(-c.x, -c.y, -self.bounds.min.z);
        let mut m = self.clone();
        for v in &mut m.vertices {
            *v += shift;
        }
        m.refresh();
        m
    }
}

/// Albedo texture sampled by barycentric coordinates, nearest neighbour.
#[derive(Debug, Clone, PartialEq)]
pub struct Texture {
    pub path: String,
    pub image: Arc<Image>,
}

impl Texture {
    pub fn lookup(&self, u: f64, v: f64) -> Rgb {
        let img = &self.image;
        let x = ((u.clamp(0.0, 1.0) * img.width as f64) as usize).min(img.width - 1);
        let y = ((v.clamp(0.0, 1.0) * img.height as f64) as usize).min(img.height - 1);
        img.rgb(y * img.width + x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaterialKind {
    #[default]
    Lambertian,
    Emissive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    pub albedo: Rgb,
    pub emission: Rgb,
    pub kind: MaterialKind,
    pub texture: Option<Texture>,
}

impl Material {
    pub fn lambertian(albedo: Rgb) -> Material {
        Material {
            albedo,
            emission: Rgb::BLACK,
            kind: MaterialKind::Lambertian,
            texture: None,
        }
    }

    pub fn emissive(emission: Rgb) -> Material {
        Material {
            albedo: Rgb::BLACK,
            emission,
            kind: MaterialKind::Emissive,
            texture: None,
        }
    }

    /// Albedo at barycentric coordinates `(u, v)` of a hit.
    pub fn albedo_at(&self, u: f64, v: f64) -> Rgb {
        match &self.texture {
            Some(t) => t.lookup(u, v),
            None => self.albedo,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LightShape {
    /// Isotropic point light; `intensity` is total power Φ per channel.
    Point { position: Vec3, intensity: Rgb },
    /// Point light restricted to a cone; same power normalisation as `Point`
    /// inside the cone and dark outside it.
    Spot {
        position: Vec3,
        direction: Vec3,
        cone_deg: f64,
        intensity: Rgb,
    },
    /// One-sided emitter on the front faces of `mesh` with constant radiance.
    Area { mesh: usize, radiance: Rgb },
    /// Emitter whose radiance is the emission of the mesh's material.
    EmissiveMesh { mesh: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Light {
    pub shape: LightShape,
    pub active: bool,
}

impl Light {
    pub fn point(position: Vec3, intensity: Rgb) -> Light {
        Light {
            shape: LightShape::Point { position, intensity },
            active: true,
        }
    }

    pub fn area(mesh: usize, radiance: Rgb) -> Light {
        Light {
            shape: LightShape::Area { mesh, radiance },
            active: true,
        }
    }

    pub fn mesh(&self) -> Option<usize> {
        match self.shape {
            LightShape::Area { mesh, .. } | LightShape::EmissiveMesh { mesh } => Some(mesh),
            _ => None,
        }
    }

    pub fn is_delta(&self) -> bool {
        matches!(self.shape, LightShape::Point { .. } | LightShape::Spot { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Room {
    /// Floor polygon in the xy plane, meters.
    pub boundary: Vec<[f64; 2]>,
    pub z0: f64,
    pub z1: f64,
    #[serde(default)]
    pub furniture: Vec<usize>,
}

impl Room {
    pub fn rectangle(min: [f64; 2], max: [f64; 2], z0: f64, z1: f64) -> Room {
        Room {
            boundary: vec![min, [max[0], min[1]], max, [min[0], max[1]]],
            z0,
            z1,
            furniture: Vec::new(),
        }
    }

    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        crate::math::point_in_polygon(&self.boundary, x, y)
    }

    /// Inside the floor polygon and between floor and ceiling, or within
    /// `tol` of the boundary. Points on the walls belong to the room.
    pub fn contains(&self, p: Vec3, tol: f64) -> bool {
        p.z >= self.z0 - tol
            && p.z <= self.z1 + tol
            && (self.contains_xy(p.x, p.y) || crate::math::polygon_distance(&self.boundary, p.x, p.y) <= tol)
    }

    pub fn bounds_xy(&self) -> Rect2 {
        let mut r = Rect2 {
            min: [f64::INFINITY; 2],
            max: [f64::NEG_INFINITY; 2],
        };
        for p in &self.boundary {
            for i in 0..2 {
                r.min[i] = r.min[i].min(p[i]);
                r.max[i] = r.max[i].max(p[i]);
            }
        }
        r
    }
}

/// Rigid placement: rotation about +z, then translation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pose {
    #[serde(default)]
    pub yaw_deg: f64,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub z: f64,
}

impl Pose {
    #[inline]
    pub fn apply(&self, p: Vec3) -> Vec3 {
        p.rotate_z(self.yaw_deg.to_radians()) + Vec3::new(self.x, self.y, self.z)
    }

    pub fn apply_normal(&self, n: Vec3) -> Vec3 {
        n.rotate_z(self.yaw_deg.to_radians())
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Pose {
        Pose {
            x: self.x + dx,
            y: self.y + dy,
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FurnitureInstance {
    pub mesh: usize,
    pub pose: Pose,
    pub label: String,
    /// xy bounds of the transformed mesh.
    pub bbox2: Rect2,
}

/// What happens to the indirect max between the shadow-free and shadowed
/// estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndirectMax {
    /// Accumulate both estimates; take the max per pixel in the compositor.
    #[default]
    PerPixel,
    /// Take the max per sample before accumulation.
    PerSample,
}

/// Distance compared against the occlusion radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadiusDistance {
    /// Total distance from the first-bounce origin through every pass-through.
    #[default]
    Accumulated,
    /// Length of the last segment only.
    Segment,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderSettings {
    pub width: usize,
    pub height: usize,
    pub spp: usize,
    pub max_bounce: usize,
    /// Occlusion radius in meters.
    pub r: f64,
    pub rr_start_bounce: usize,
    /// Denominator floor of the shadow mask.
    pub clip: f64,
    pub seed: u64,
    pub indirect_max: IndirectMax,
    pub radius_distance: RadiusDistance,
}

impl Default for RenderSettings {
    fn default() -> Self {
        RenderSettings {
            width: 256,
            height: 256,
            spp: 64,
            max_bounce: 8,
            r: 1.0,
            rr_start_bounce: 3,
            clip: 0.1,
            seed: 0,
            indirect_max: IndirectMax::PerPixel,
            radius_distance: RadiusDistance::Accumulated,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scene {
    pub meshes: Vec<TriangleMesh>,
    pub materials: Vec<Material>,
    pub lights: Vec<Light>,
    pub rooms: Vec<Room>,
    pub furniture: Vec<FurnitureInstance>,
    pub camera: Option<CameraPose>,
    pub render: RenderSettings,
}

impl Scene {
    /// Meshes referenced by furniture are only placed through their instances.
    pub fn mesh_is_instanced(&self, mesh: usize) -> bool {
        self.furniture.iter().any(|f| f.mesh == mesh)
    }

    /// World-space vertices of a furniture instance.
    pub fn furniture_vertices(&self, idx: usize) -> Vec<Vec3> {
        self.furniture_vertices_at(idx, &self.furniture[idx].pose)
    }

    /// World-space vertices of furniture `idx` if it were placed at `pose`.
    pub fn furniture_vertices_at(&self, idx: usize, pose: &Pose) -> Vec<Vec3> {
        self.meshes[self.furniture[idx].mesh]
            .vertices
            .iter()
            .map(|&v| pose.apply(v))
            .collect()
    }

    pub fn compute_bbox2(&self, mesh: usize, pose: &Pose) -> Rect2 {
        let b = Aabb::from_points(&self.meshes[mesh].vertices.iter().map(|&v| pose.apply(v)).collect::<Vec<_>>());
        Rect2 {
            min: [b.min.x, b.min.y],
            max: [b.max.x, b.max.y],
        }
    }

    pub fn refresh_furniture_bbox(&mut self, idx: usize) {
        let f = &self.furniture[idx];
        self.furniture[idx].bbox2 = self.compute_bbox2(f.mesh, &f.pose);
    }

    pub fn add_furniture(&mut self, mesh: usize, pose: Pose, label: impl Into<String>) -> usize {
        let bbox2 = self.compute_bbox2(mesh, &pose);
        self.furniture.push(FurnitureInstance {
            mesh,
            pose,
            label: label.into(),
            bbox2,
        });
        self.furniture.len() - 1
    }

    /// Light position for point/spot lights; surface centroid for mesh lights.
    pub fn light_centroid(&self, light: &Light) -> Vec3 {
        match &light.shape {
            LightShape::Point { position, .. } | LightShape::Spot { position, .. } => *position,
            LightShape::Area { mesh, .. } | LightShape::EmissiveMesh { mesh } => self.meshes[*mesh].centroid(),
        }
    }

    /// Index of the room whose furniture list contains `furniture`.
    pub fn room_of_furniture(&self, furniture: usize) -> Option<usize> {
        self.rooms.iter().position(|r| r.furniture.contains(&furniture))
    }

    pub fn active_light_count(&self) -> usize {
        self.lights.iter().filter(|l| l.active).count()
    }

    pub fn push_material(&mut self, m: Material) -> usize {
        self.materials.push(m);
        self.materials.len() - 1
    }

    pub fn push_mesh(&mut self, m: TriangleMesh) -> usize {
        self.meshes.push(m);
        self.meshes.len() - 1
    }
}

/// Axis-aligned box mesh with outward-facing triangles.
pub fn box_mesh(min: Vec3, max: Vec3) -> TriangleMesh {
    let v = vec![
        Vec3::new(min.x, min.y, min.z),
        Vec3::new(max.x, min.y, min.z),
        Vec3::new(max.x, max.y, min.z),
        Vec3::new(min.x, max.y, min.z),
        Vec3::new(min.x, min.y, max.z),
        Vec3::new(max.x, min.y, max.z),
        Vec3::new(max.x, max.y, max.z),
        Vec3::new(min.x, max.y, max.z),
    ];
    let t = vec![
        [0, 2, 1], [0, 3, 2], // bottom (-z)
        [4, 5, 6], [4, 6, 7], // top (+z)
        [0, 1, 5], [0, 5, 4], // -y
        [2, 3, 7], [2, 7, 6], // +y
        [1, 2, 6], [1, 6, 5], // +x
        [0, 4, 7], [0, 7, 3], // -x
    ];
    let (mut m, _) = TriangleMesh::from_triangles(v, t);
    m.watertight = true;
    m
}

/// Parallelogram `origin + s*edge_u + t*edge_v`, facing `edge_u × edge_v`.
pub fn quad_mesh(origin: Vec3, edge_u: Vec3, edge_v: Vec3) -> TriangleMesh {
    let v = vec![origin, origin + edge_u, origin + edge_u + edge_v, origin + edge_v];
    TriangleMesh::from_triangles(v, vec![[0, 1, 2], [0, 2, 3]]).0
}
