//! Renders the bundled box scene and writes the shadowed / shadow-free pair,
//! the soft shadow mask, and the four linear passes.
//!
//! ```text
//! cargo run --release --example render_cornell -- [out_dir] [spp]
//! ```

use std::path::{Path, PathBuf};

use shadowsynth::compositor::{compose_pair, pass_images, shadow_mask, MASK_CLIP_FLOOR};
use shadowsynth::image::{write_image, write_mask_png};
use shadowsynth::{load_scene, render_passes, Encoding};

fn main() -> shadowsynth::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "target/cornell".into()));
    let spp: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(64);

    let asset = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/assets/cornell.toml");
    let scene = load_scene(&asset)?;
    let camera = scene.camera.expect("scene has a camera");
    let mut settings = scene.render;
    settings.spp = spp;

    let buffers = render_passes(&scene, &camera, &settings)?;
    let pair = compose_pair(&buffers)?;
    let (shadowed, free) = (pair.shadowed_image(), pair.shadow_free_image());
    let mask = shadow_mask(&shadowed, &free, MASK_CLIP_FLOOR)?;

    std::fs::create_dir_all(&out).map_err(|e| shadowsynth::Error::io(&out, e))?;
    write_image(&shadowed, out.join("shadowed.png"), Encoding::Srgb8)?;
    write_image(&free, out.join("shadow_free.png"), Encoding::Srgb8)?;
    write_mask_png(&mask, out.join("mask.png"))?;
    for (name, img) in ["dr_s", "idr_s", "dr_f", "idr_f"].iter().zip(pass_images(&buffers)) {
        write_image(&img, out.join(format!("{name}.pfm")), Encoding::LinearFloat)?;
    }

    let mean = |v: &[f32]| v.iter().map(|&x| x as f64).sum::<f64>() / v.len() as f64;
    println!(
        "{}x{} at {spp} spp: mean shadowed {:.4}, shadow-free {:.4}, mask {:.4}",
        camera.width,
        camera.height,
        mean(&shadowed.data),
        mean(&free.data),
        mean(&mask.data)
    );
    println!("wrote {}", out.display());
    Ok(())
}
