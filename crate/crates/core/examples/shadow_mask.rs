//! Soft shadow masks from a synthetic image pair, and the image metrics used
//! to compare pairs.

use shadowsynth::compositor::{psnr, shadow_mask, shadow_mask_with, ssim, MaskMode, MASK_CLIP_FLOOR};
use shadowsynth::{Image, Rgb};

fn main() -> shadowsynth::Result<()> {
    let (w, h) = (48, 32);
    // A lit gradient floor with a soft-edged disc of shadow.
    let mut free = Vec::with_capacity(w * h);
    let mut shadowed = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let base = 0.05 + 0.6 * x as f64 / w as f64;
            let lit = Rgb([base, base * 0.9, base * 0.8]);
            let r = ((x as f64 - 24.0).powi(2) + (y as f64 - 16.0).powi(2)).sqrt();
            let occlusion = ((12.0 - r) / 4.0).clamp(0.0, 1.0) * 0.8;
            free.push(lit);
            shadowed.push(lit.map(|c| c * (1.0 - occlusion)));
        }
    }
    let free = Image::from_rgb(w, h, &free);
    let shadowed = Image::from_rgb(w, h, &shadowed);

    let mask = shadow_mask(&shadowed, &free, MASK_CLIP_FLOOR)?;
    let per_channel = shadow_mask_with(&shadowed, &free, MASK_CLIP_FLOOR, MaskMode::PerChannelMean)?;

    for y in (0..h).step_by(4) {
        let row: String = (0..w)
            .step_by(2)
            .map(|x| match mask.get(x, y, 0) {
                v if v > 0.6 => '#',
                v if v > 0.3 => '+',
                v if v > 0.05 => '.',
                _ => ' ',
            })
            .collect();
        println!("|{row}|");
    }
    println!("peak mask {:.3}", mask.data.iter().cloned().fold(0.0f32, f32::max));
    println!("luminance vs per-channel mask PSNR {:.2} dB", psnr(&mask, &per_channel)?);
    println!("pair PSNR {:.2} dB, SSIM {:.4}", psnr(&shadowed, &free)?, ssim(&shadowed, &free)?);
    Ok(())
}
