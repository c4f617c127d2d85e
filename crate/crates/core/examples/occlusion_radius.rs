//! How the occlusion radius controls which occluders the shadow-free
//! indirect pass sees through.
//!
//! A floor is lit by a point light beside a plate hanging 0.5 m above it; the
//! light also brightens the ceiling, which lights the floor indirectly. Floor
//! pixels in the plate's shadow lose that bounce light unless the plate is
//! within the occlusion radius.

use shadowsynth::scene::{quad_mesh, Light, Material, MeshRole, RenderSettings};
use shadowsynth::{render_passes, CameraPose, Rgb, Scene, Vec3};

fn scene() -> Scene {
    let mut s = Scene::default();
    let gray = s.push_material(Material::lambertian(Rgb::gray(0.7)));
    let mut add = |origin: Vec3, u: Vec3, v: Vec3, role: MeshRole| {
        let mut m = quad_mesh(origin, u, v);
        m.material = gray;
        m.role = role;
        s.push_mesh(m);
    };
    add(Vec3::new(-4.0, -4.0, 0.0), Vec3::X * 8.0, Vec3::Y * 8.0, MeshRole::Floor);
    add(Vec3::new(-4.0, -4.0, 3.5), Vec3::Y * 8.0, Vec3::X * 8.0, MeshRole::Ceiling);
    add(Vec3::new(-0.4, -0.4, 0.5), Vec3::X * 0.8, Vec3::Y * 0.8, MeshRole::Object);
    s.lights.push(Light::point(Vec3::new(1.5, 0.0, 2.0), Rgb::gray(40.0)));
    s.camera = Some(CameraPose {
        position: Vec3::new(0.0, 0.0, 3.0),
        pitch: 0.0,
        yaw: 0.0,
        roll: 0.0,
        fov_deg: 60.0,
        width: 32,
        height: 32,
    });
    s
}

fn main() -> shadowsynth::Result<()> {
    let scene = scene();
    let camera = scene.camera.unwrap();
    for r in [0.1, 0.5, 1.0, 2.0] {
        let settings = RenderSettings {
            width: camera.width,
            height: camera.height,
            spp: 256,
            r,
            ..RenderSettings::default()
        };
        let b = render_passes(&scene, &camera, &settings)?;
        let shadowed: Vec<usize> = (0..b.pixel_count())
            .filter(|&i| b.dr_f[i].luminance() - b.dr_s[i].luminance() > 1e-3 && b.dr_s[i].is_black())
            .collect();
        let mean = |v: &[Rgb]| shadowed.iter().map(|&i| v[i].luminance()).sum::<f64>() / shadowed.len().max(1) as f64;
        let (s, f) = (mean(&b.idr_s), mean(&b.idr_f));
        println!("r = {r:.1} m: {} umbra pixels, indirect {s:.4} -> {f:.4} (x{:.2})", shadowed.len(), f / s);
    }
    Ok(())
}
