//! Scenes and independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shadowsynth::dataset::gen_object_scene;
use shadowsynth::rng::tag;
use shadowsynth::scene::{box_mesh, quad_mesh, Light, LightShape, Material, MeshRole, RenderSettings};
use shadowsynth::{load_scene, CameraPose, Rgb, RngStream, Scene, Vec3};

pub fn asset(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/assets").join(name)
}

pub fn cornell() -> Scene {
    load_scene(asset("cornell.toml")).expect("bundled scene loads")
}

/// Camera at `position` looking straight down.
pub fn camera_down(position: Vec3, fov_deg: f64, width: usize, height: usize) -> CameraPose {
    CameraPose {
        position,
        pitch: 0.0,
        yaw: 0.0,
        roll: 0.0,
        fov_deg,
        width,
        height,
    }
}

pub fn settings_for(camera: &CameraPose, spp: usize, seed: u64) -> RenderSettings {
    RenderSettings {
        width: camera.width,
        height: camera.height,
        spp,
        seed,
        ..RenderSettings::default()
    }
}

fn add_quad(s: &mut Scene, material: usize, origin: Vec3, u: Vec3, v: Vec3, role: MeshRole) -> usize {
    let mut m = quad_mesh(origin, u, v);
    m.material = material;
    m.role = role;
    s.push_mesh(m)
}

/// Floor with a plate hanging 0.5 m above it, a point light beside the plate
/// and a ceiling the light brightens. The camera is 3 m above the floor.
pub fn two_plane_scene(width: usize) -> Scene {
    let mut s = Scene::default();
    let gray = s.push_material(Material::lambertian(Rgb::gray(0.7)));
    add_quad(&mut s, gray, Vec3::new(-4.0, -4.0, 0.0), Vec3::X * 8.0, Vec3::Y * 8.0, MeshRole::Floor);
    add_quad(&mut s, gray, Vec3::new(-4.0, -4.0, 3.5), Vec3::Y * 8.0, Vec3::X * 8.0, MeshRole::Ceiling);
    add_quad(&mut s, gray, Vec3::new(-0.4, -0.4, 0.5), Vec3::X * 0.8, Vec3::Y * 0.8, MeshRole::Object);
    s.lights.push(Light::point(Vec3::new(1.5, 0.0, 2.0), Rgb::gray(40.0)));
    s.camera = Some(camera_down(Vec3::new(0.0, 0.0, 3.0), 60.0, width, width));
    s
}

pub const POINT_POWER: f64 = 4.0 * PI;
pub const FLOOR_ALBEDO: f64 = 0.5;

/// Infinite-looking Lambertian floor under a point light 2 m above the origin.
pub fn point_floor_scene() -> Scene {
    let mut s = Scene::default();
    let m = s.push_material(Material::lambertian(Rgb::gray(FLOOR_ALBEDO)));
    add_quad(&mut s, m, Vec3::new(-50.0, -50.0, 0.0), Vec3::X * 100.0, Vec3::Y * 100.0, MeshRole::Floor);
    s.lights.push(Light::point(Vec3::new(0.0, 0.0, 2.0), Rgb::gray(POINT_POWER)));
    s.camera = Some(camera_down(Vec3::new(0.0, 0.0, 3.0), 2.0, 9, 9));
    s
}

pub const UMBRA_PLATE_EDGE: f64 = 0.1;
pub const UMBRA_PLATE_HEIGHT: f64 = 1.0;
pub const UMBRA_LIGHT: Vec3 = Vec3::new(0.0, 0.0, 2.0);

/// Point light above an opaque plate covering x < 0.1 at z = 1; the camera
/// sits under the plate and sees the floor on both sides of the umbra edge.
pub fn umbra_scene() -> Scene {
    let mut s = Scene::default();
    let m = s.push_material(Material::lambertian(Rgb::gray(FLOOR_ALBEDO)));
    add_quad(&mut s, m, Vec3::new(-20.0, -20.0, 0.0), Vec3::X * 40.0, Vec3::Y * 40.0, MeshRole::Floor);
    add_quad(
        &mut s,
        m,
        Vec3::new(-3.0, -3.0, UMBRA_PLATE_HEIGHT),
        Vec3::X * (3.0 + UMBRA_PLATE_EDGE),
        Vec3::Y * 6.0,
        MeshRole::Object,
    );
    s.lights.push(Light::point(UMBRA_LIGHT, Rgb::gray(POINT_POWER)));
    s.camera = Some(camera_down(Vec3::new(0.0, 0.0, 0.5), 60.0, 32, 32));
    s
}

/// Unoccluded direct radiance from a point light at `light` reflected by a
/// horizontal Lambertian floor point `p`.
pub fn analytic_floor_radiance(light: Vec3, power: f64, albedo: f64, p: Vec3) -> f64 {
    let d = light - p;
    let dist2 = d.length_squared();
    let cos = d.z / dist2.sqrt();
    power / (4.0 * PI * dist2) * cos * albedo / PI
}

/// A randomized object scene built from boxes; small enough for brute-force
/// reference rendering.
pub fn object_scene(seed: u64) -> Scene {
    let assets = vec![
        box_mesh(Vec3::ZERO, Vec3::new(0.6, 0.6, 0.6)),
        box_mesh(Vec3::ZERO, Vec3::new(1.0, 0.5, 0.2)),
        box_mesh(Vec3::ZERO, Vec3::new(0.25, 0.25, 0.9)),
    ];
    let faces: Vec<Material> = (0..6)
        .map(|i| Material::lambertian(Rgb([0.5 + 0.05 * i as f64, 0.6, 0.7 - 0.05 * i as f64])))
        .collect();
    gen_object_scene(&assets, &faces, &mut RngStream::new(seed, 0, 0, tag::SCENE_GEN)).expect("object scene")
}

// Reference renderer ------------------------------------------------------

#[derive(Clone, Copy)]
struct RefTri {
    a: Vec3,
    e1: Vec3,
    e2: Vec3,
    n: Vec3,
    albedo: Rgb,
    emission: Option<Rgb>,
}

enum RefLight {
    Point { p: Vec3, power: Rgb, axis: Option<(Vec3, f64)> },
    Area { tris: Vec<usize>, areas: Vec<f64>, total: f64, radiance: Rgb },
}

/// Plain path tracer with next-event estimation over every light at every
/// vertex, written against the scene description only. Paths are truncated
/// so that lights are reached through at most `max_bounce` segments after
/// the camera hit; a front-facing emitter ends the path.
pub struct ReferenceTracer {
    tris: Vec<RefTri>,
    lights: Vec<RefLight>,
    max_bounce: usize,
}

const REF_EPS: f64 = 1e-4;

impl ReferenceTracer {
    pub fn new(scene: &Scene, max_bounce: usize) -> Self {
        let mut emission = vec![None; scene.meshes.len()];
        for l in scene.lights.iter().filter(|l| l.active) {
            match l.shape {
                LightShape::Area { mesh, radiance } => emission[mesh] = Some(radiance),
                LightShape::EmissiveMesh { mesh } => {
                    emission[mesh] = Some(scene.materials[scene.meshes[mesh].material].emission)
                }
                _ => {}
            }
        }
        let mut tris = Vec::new();
        let mut mesh_tris = vec![Vec::new(); scene.meshes.len()];
        let push = |verts: &[Vec3], mesh: usize, tris: &mut Vec<RefTri>, emit: Option<Rgb>| {
            let m = &scene.meshes[mesh];
            let mut ids = Vec::new();
            for t in &m.triangles {
                let (a, b, c) = (verts[t[0]], verts[t[1]], verts[t[2]]);
                let n = (b - a).cross(c - a).normalized();
                ids.push(tris.len());
                tris.push(RefTri {
                    a,
                    e1: b - a,
                    e2: c - a,
                    n,
                    albedo: scene.materials[m.material].albedo,
                    emission: emit,
                });
            }
            ids
        };
        for (mi, m) in scene.meshes.iter().enumerate() {
            if scene.furniture.iter().any(|f| f.mesh == mi) {
                continue;
            }
            mesh_tris[mi] = push(&m.vertices, mi, &mut tris, emission[mi]);
        }
        for fi in 0..scene.furniture.len() {
            let verts = scene.furniture_vertices(fi);
            push(&verts, scene.furniture[fi].mesh, &mut tris, None);
        }
        let mut lights = Vec::new();
        for l in scene.lights.iter().filter(|l| l.active) {
            lights.push(match l.shape {
                LightShape::Point { position, intensity } => RefLight::Point {
                    p: position,
                    power: intensity,
                    axis: None,
                },
                LightShape::Spot {
                    position,
                    direction,
                    cone_deg,
                    intensity,
                } => RefLight::Point {
                    p: position,
                    power: intensity,
                    axis: Some((direction.normalized(), (cone_deg / 2.0).to_radians().cos())),
                },
                LightShape::Area { mesh, radiance } => area_light(&tris, &mesh_tris[mesh], radiance),
                LightShape::EmissiveMesh { mesh } => area_light(
                    &tris,
                    &mesh_tris[mesh],
                    scene.materials[scene.meshes[mesh].material].emission,
                ),
            });
        }
        ReferenceTracer { tris, lights, max_bounce }
    }

    fn hit(&self, o: Vec3, d: Vec3, t_max: f64) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for (i, tri) in self.tris.iter().enumerate() {
            let p = d.cross(tri.e2);
            let det = tri.e1.dot(p);
            if det.abs() < 1e-14 {
                continue;
            }
            let inv = 1.0 / det;
            let s = o - tri.a;
            let u = s.dot(p) * inv;
            if !(0.0..=1.0).contains(&u) {
                continue;
            }
            let q = s.cross(tri.e1);
            let v = d.dot(q) * inv;
            if v < 0.0 || u + v > 1.0 {
                continue;
            }
            let t = tri.e2.dot(q) * inv;
            if t > 1e-9 && t < t_max && best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, i));
            }
        }
        best
    }

    fn visible(&self, from: Vec3, n: Vec3, to: Vec3) -> bool {
        let o = from + n * REF_EPS;
        let d = to - o;
        let len = d.length();
        if len <= REF_EPS {
            return true;
        }
        self.hit(o, d / len, len - REF_EPS).is_none()
    }

    /// Light reflected at `p` (facing normal `n`, albedo `albedo`) from every light.
    fn next_event(&self, p: Vec3, n: Vec3, albedo: Rgb, rng: &mut ChaCha8Rng) -> Rgb {
        let mut acc = Rgb::BLACK;
        for l in &self.lights {
            match l {
                RefLight::Point { p: lp, power, axis } => {
                    let d = *lp - p;
                    let dist2 = d.length_squared();
                    let dir = d / dist2.sqrt();
                    if let Some((a, cut)) = axis {
                        if (-dir).dot(*a) < *cut {
                            continue;
                        }
                    }
                    let cos = n.dot(dir);
                    if cos > 0.0 && self.visible(p, n, *lp) {
                        acc += *power / (4.0 * PI * dist2) * albedo * (cos / PI);
                    }
                }
                RefLight::Area {
                    tris,
                    areas,
                    total,
                    radiance,
                } => {
                    let mut pick = rng.gen::<f64>() * total;
                    let mut k = 0;
                    while k + 1 < tris.len() && pick >= areas[k] {
                        pick -= areas[k];
                        k += 1;
                    }
                    let t = &self.tris[tris[k]];
                    let (mut u, mut v) = (rng.gen::<f64>(), rng.gen::<f64>());
                    if u + v > 1.0 {
                        u = 1.0 - u;
                        v = 1.0 - v;
                    }
                    let q = t.a + t.e1 * u + t.e2 * v;
                    let d = q - p;
                    let dist2 = d.length_squared();
                    let dir = d / dist2.sqrt();
                    let cos = n.dot(dir);
                    let cos_l = t.n.dot(-dir);
                    if cos > 0.0 && cos_l > 0.0 && self.visible(p, n, q) {
                        acc += *radiance * albedo * (cos * cos_l * total / (PI * dist2));
                    }
                }
            }
        }
        acc
    }

    /// One radiance estimate along a camera ray.
    pub fn radiance(&self, origin: Vec3, dir: Vec3, rng: &mut ChaCha8Rng) -> Rgb {
        let mut throughput = Rgb::WHITE;
        let mut acc = Rgb::BLACK;
        let (mut o, mut d) = (origin, dir);
        for depth in 0..self.max_bounce {
            let Some((t, i)) = self.hit(o, d, f64::INFINITY) else {
                break;
            };
            let tri = self.tris[i];
            let p = o + d * t;
            let n = if tri.n.dot(-d) >= 0.0 { tri.n } else { -tri.n };
            if let Some(e) = tri.emission {
                if tri.n.dot(-d) > 0.0 {
                    if depth == 0 {
                        acc += e + self.next_event(p, n, tri.albedo, rng);
                    }
                    break;
                }
            }
            acc += throughput * self.next_event(p, n, tri.albedo, rng);
            // Cosine-weighted sampling: throughput gains exactly the albedo.
            let (r1, r2) = (rng.gen::<f64>(), rng.gen::<f64>());
            let phi = 2.0 * PI * r1;
            let (s, c) = (r2.sqrt(), (1.0 - r2).sqrt());
            let (b1, b2) = n.orthonormal_basis();
            d = (b1 * (phi.cos() * s) + b2 * (phi.sin() * s) + n * c).normalized();
            o = p + n * REF_EPS;
            throughput = throughput * tri.albedo;
        }
        acc
    }

    /// Per-channel mean over the image and its standard error, from `spp`
    /// jittered samples per pixel.
    pub fn render_mean(&self, camera: &CameraPose, spp: usize, seed: u64) -> ([f64; 3], [f64; 3]) {
        let (w, h) = (camera.width, camera.height);
        let mut mean = [0.0; 3];
        let mut var = [0.0; 3];
        for pix in 0..w * h {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (pix as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let (x, y) = ((pix % w) as f64, (pix / w) as f64);
            let mut s = [0.0; 3];
            let mut s2 = [0.0; 3];
            for _ in 0..spp {
                let dir = camera.direction(x + rng.gen::<f64>(), y + rng.gen::<f64>());
                let l = self.radiance(camera.position, dir, &mut rng);
                for c in 0..3 {
                    s[c] += l.0[c];
                    s2[c] += l.0[c] * l.0[c];
                }
            }
            let n = spp as f64;
            for c in 0..3 {
                let m = s[c] / n;
                mean[c] += m;
                var[c] += (s2[c] - n * m * m) / (n * (n - 1.0));
            }
        }
        let np = (w * h) as f64;
        (mean.map(|m| m / np), var.map(|v| v.sqrt() / np))
    }
}

fn area_light(tris: &[RefTri], ids: &[usize], radiance: Rgb) -> RefLight {
    let areas: Vec<f64> = ids.iter().map(|&i| 0.5 * tris[i].e1.cross(tris[i].e2).length()).collect();
    RefLight::Area {
        tris: ids.to_vec(),
        total: areas.iter().sum(),
        areas,
        radiance,
    }
}

// Collision oracle ---------------------------------------------------------

const ORACLE_TOL: f64 = 1e-9;

/// Whether segment `p -> q` passes strictly through the interior of triangle `t`.
fn edge_pierces(p: Vec3, q: Vec3, t: &[Vec3; 3]) -> bool {
    let n = (t[1] - t[0]).cross(t[2] - t[0]);
    let len = n.length();
    if len < 1e-15 {
        return false;
    }
    let n = n / len;
    let (dp, dq) = (n.dot(p - t[0]), n.dot(q - t[0]));
    if !((dp > ORACLE_TOL && dq < -ORACLE_TOL) || (dp < -ORACLE_TOL && dq > ORACLE_TOL)) {
        return false;
    }
    let x = p + (q - p) * (dp / (dp - dq));
    // Signed sub-triangle areas all positive means strictly inside.
    (0..3).all(|i| (t[(i + 1) % 3] - t[i]).cross(x - t[i]).dot(n) > ORACLE_TOL)
}

fn project(p: Vec3, drop: usize) -> (f64, f64) {
    match drop {
        0 => (p.y, p.z),
        1 => (p.z, p.x),
        _ => (p.x, p.y),
    }
}

fn inside_2d(x: (f64, f64), t: &[(f64, f64); 3]) -> bool {
    let side = |a: (f64, f64), b: (f64, f64)| (b.0 - a.0) * (x.1 - a.1) - (b.1 - a.1) * (x.0 - a.0);
    let s: Vec<f64> = (0..3).map(|i| side(t[i], t[(i + 1) % 3])).collect();
    s.iter().all(|&v| v > ORACLE_TOL) || s.iter().all(|&v| v < -ORACLE_TOL)
}

fn segments_cross_2d(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
    let orient = |p: (f64, f64), q: (f64, f64), r: (f64, f64)| (q.0 - p.0) * (r.1 - p.1) - (q.1 - p.1) * (r.0 - p.0);
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    o1 * o2 < -ORACLE_TOL && o3 * o4 < -ORACLE_TOL
}

/// Independent triangle pair test: an edge of one triangle strictly pierces
/// the other, or the two are coplanar, face the same way and share interior
/// area.
pub fn oracle_triangles_collide(a: &[Vec3; 3], b: &[Vec3; 3]) -> bool {
    for (s, t) in [(a, b), (b, a)] {
        for i in 0..3 {
            if edge_pierces(s[i], s[(i + 1) % 3], t) {
                return true;
            }
        }
    }
    let na = (a[1] - a[0]).cross(a[2] - a[0]).normalized();
    let nb = (b[1] - b[0]).cross(b[2] - b[0]).normalized();
    let coplanar = na.cross(nb).length() < 1e-9 && b.iter().all(|&p| na.dot(p - a[0]).abs() < ORACLE_TOL);
    if !coplanar || na.dot(nb) <= 0.0 {
        return false;
    }
    let drop = [na.x.abs(), na.y.abs(), na.z.abs()]
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .map(|(i, _)| i)
        .unwrap();
    let pa = a.map(|p| project(p, drop));
    let pb = b.map(|p| project(p, drop));
    let centroid = |t: &[(f64, f64); 3]| ((t[0].0 + t[1].0 + t[2].0) / 3.0, (t[0].1 + t[1].1 + t[2].1) / 3.0);
    if inside_2d(centroid(&pa), &pb) || inside_2d(centroid(&pb), &pa) {
        return true;
    }
    if pa.iter().any(|&p| inside_2d(p, &pb)) || pb.iter().any(|&p| inside_2d(p, &pa)) {
        return true;
    }
    (0..3).any(|i| (0..3).any(|j| segments_cross_2d(pa[i], pa[(i + 1) % 3], pb[j], pb[(j + 1) % 3])))
}

fn mesh_triangles(scene: &Scene, verts: &[Vec3], mesh: usize) -> Vec<[Vec3; 3]> {
    scene.meshes[mesh].triangles.iter().map(|t| t.map(|k| verts[k])).collect()
}

/// Exhaustive pairwise check of furniture against furniture and walls.
/// Returns the colliding pairs (`None` marks a wall).
pub fn oracle_collisions(scene: &Scene) -> Vec<(usize, Option<usize>)> {
    let furniture: Vec<Vec<[Vec3; 3]>> = (0..scene.furniture.len())
        .map(|i| mesh_triangles(scene, &scene.furniture_vertices(i), scene.furniture[i].mesh))
        .collect();
    let walls: Vec<[Vec3; 3]> = scene
        .meshes
        .iter()
        .enumerate()
        .filter(|(i, m)| m.role == MeshRole::Wall && !scene.furniture.iter().any(|f| f.mesh == *i))
        .flat_map(|(i, m)| mesh_triangles(scene, &m.vertices, i))
        .collect();
    let hit = |a: &[[Vec3; 3]], b: &[[Vec3; 3]]| a.iter().any(|x| b.iter().any(|y| oracle_triangles_collide(x, y)));
    let mut out = Vec::new();
    for i in 0..furniture.len() {
        for j in i + 1..furniture.len() {
            if hit(&furniture[i], &furniture[j]) {
                out.push((i, Some(j)));
            }
        }
        if hit(&furniture[i], &walls) {
            out.push((i, None));
        }
    }
    out
}
