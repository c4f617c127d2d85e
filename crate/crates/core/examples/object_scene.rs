//! Builds a randomized object-centric scene and renders a quick preview of
//! its shadow mask.
//!
//! ```text
//! cargo run --release --example object_scene -- [seed]
//! ```

use std::path::Path;

use shadowsynth::compositor::{compose_pair, shadow_mask, MASK_CLIP_FLOOR};
use shadowsynth::dataset::gen_object_scene;
use shadowsynth::rng::tag;
use shadowsynth::scene::{box_mesh, load_mesh, Material};
use shadowsynth::{render_passes, RngStream, Rgb, Vec3};

fn main() -> shadowsynth::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let cube = load_mesh(Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/assets/cube.obj"))?;
    let slab = box_mesh(Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.6, 0.15));
    let pillar = box_mesh(Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.2, 0.2, 0.9));
    let faces: Vec<Material> = [0.8, 0.7, 0.6, 0.75, 0.65, 0.7]
        .iter()
        .map(|&g| Material::lambertian(Rgb([g, g * 0.95, g * 0.9])))
        .collect();

    let mut rng = RngStream::new(seed, 0, 0, tag::SCENE_GEN);
    let scene = gen_object_scene(&[cube, slab, pillar], &faces, &mut rng)?;
    println!("{} meshes, {} lights", scene.meshes.len(), scene.lights.len());

    let mut camera = scene.camera.expect("generated scenes carry a camera");
    camera.width = 48;
    camera.height = 48;
    let settings = shadowsynth::scene::RenderSettings {
        width: 48,
        height: 48,
        spp: 32,
        ..scene.render
    };
    let buffers = render_passes(&scene, &camera, &settings)?;
    let pair = compose_pair(&buffers)?;
    let mask = shadow_mask(&pair.shadowed_image(), &pair.shadow_free_image(), MASK_CLIP_FLOOR)?;
    for y in (0..48).step_by(3) {
        let row: String = (0..48)
            .map(|x| match mask.get(x, y, 0) {
                v if v > 0.6 => '#',
                v if v > 0.25 => '+',
                v if v > 0.05 => '.',
                _ => ' ',
            })
            .collect();
        println!("|{row}|");
    }
    Ok(())
}
