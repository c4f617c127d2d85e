//! Image-pair composition, soft shadow masks and image-quality metrics.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::integrator::RadianceBuffers;
use crate::math::Rgb;

/// Default lower bound on the shadow-free luminance in the mask denominator.
pub const MASK_CLIP_FLOOR: f64 = 0.1;

/// How the brighter of the shadow-free and shadowed indirect estimates is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaxRule {
    /// Channel-wise maximum. Guarantees per-channel dominance.
    #[default]
    PerChannel,
    /// Whole RGB triple of whichever estimate has the larger luminance.
    Luminance,
}

/// How the shadow mask reduces colour to a scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaskMode {
    #[default]
    Luminance,
    /// Mask each channel separately, then average.
    PerChannelMean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImagePair {
    pub width: usize,
    pub height: usize,
    /// `direct_shadowed + indirect_shadowed`.
    pub shadowed: Vec<Rgb>,
    /// `direct_free + max(indirect_free, indirect_shadowed)`.
    pub shadow_free: Vec<Rgb>,
    /// The composed shadow-free indirect component.
    pub indirect_free: Vec<Rgb>,
}

impl ImagePair {
    pub fn shadowed_image(&self) -> Image {
        Image::from_rgb(self.width, self.height, &self.shadowed)
    }

    pub fn shadow_free_image(&self) -> Image {
        Image::from_rgb(self.width, self.height, &self.shadow_free)
    }
}

pub fn brighter(free: Rgb, shadowed: Rgb, rule: MaxRule) -> Rgb {
    match rule {
        MaxRule::PerChannel => free.zip(shadowed, f64::max),
        MaxRule::Luminance => {
            if shadowed.luminance() > free.luminance() {
                shadowed
            } else {
                free
            }
        }
    }
}

/// Composes with the default [`MaxRule::PerChannel`].
pub fn compose_pair(buffers: &RadianceBuffers) -> Result<ImagePair> {
    compose_pair_with(buffers, MaxRule::default())
}

pub fn compose_pair_with(buffers: &RadianceBuffers, rule: MaxRule) -> Result<ImagePair> {
    let n = buffers.width * buffers.height;
    for (name, len) in [
        ("dr_s", buffers.dr_s.len()),
        ("idr_s", buffers.idr_s.len()),
        ("dr_f", buffers.dr_f.len()),
        ("idr_f", buffers.idr_f.len()),
    ] {
        if len != n {
            return Err(Error::DimensionMismatch(format!(
                "{name} has {len} pixels, expected {}x{}",
                buffers.width, buffers.height
            )));
        }
    }
    let indirect_free: Vec<Rgb> = buffers
        .idr_f
        .iter()
        .zip(&buffers.idr_s)
        .map(|(&f, &s)| brighter(f, s, rule))
        .collect();
    let shadowed = buffers.dr_s.iter().zip(&buffers.idr_s).map(|(&d, &i)| d + i).collect();
    let shadow_free = buffers.dr_f.iter().zip(&indirect_free).map(|(&d, &i)| d + i).collect();
    Ok(ImagePair {
        width: buffers.width,
        height: buffers.height,
        shadowed,
        shadow_free,
        indirect_free,
    })
}

/// Scalar mask for one value pair: `clip01((free - shadowed) / max(free, floor))`.
#[inline]
pub fn mask_value(free: f64, shadowed: f64, clip_floor: f64) -> f64 {
    ((free - shadowed) / free.max(clip_floor)).clamp(0.0, 1.0)
}

/// Soft shadow mask (one channel) from a shadowed / shadow-free image pair.
pub fn shadow_mask(shadowed: &Image, shadow_free: &Image, clip_floor: f64) -> Result<Image> {
    shadow_mask_with(shadowed, shadow_free, clip_floor, MaskMode::default())
}

pub fn shadow_mask_with(shadowed: &Image, shadow_free: &Image, clip_floor: f64, mode: MaskMode) -> Result<Image> {
    check_shape(shadowed, shadow_free)?;
    let values: Vec<f64> = (0..shadowed.pixel_count())
        .map(|i| match mode {
            MaskMode::Luminance => mask_value(shadow_free.luminance(i), shadowed.luminance(i), clip_floor),
            MaskMode::PerChannelMean => {
                let (f, s) = (shadow_free.rgb(i), shadowed.rgb(i));
                (0..3).map(|c| mask_value(f.0[c], s.0[c], clip_floor)).sum::<f64>() / 3.0
            }
        })
        .collect();
    Ok(Image::from_gray(shadowed.width, shadowed.height, &values))
}

fn check_shape(a: &Image, b: &Image) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width, a.height, a.channels, b.width, b.height, b.channels
        )))
    }
}

/// Clamps to `[0, 1]` at exposure 1, the range shared by every exported preview.
pub fn tonemap(img: &Image) -> Image {
    img.map(|v| v.clamp(0.0, 1.0))
}

/// Peak signal-to-noise ratio in dB for signals in `[0, 1]`.
/// Identical inputs give `f64::INFINITY`.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    check_shape(a, b)?;
    if a.data.is_empty() {
        return Err(Error::DimensionMismatch("empty image".into()));
    }
    let mse = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum::<f64>()
        / a.data.len() as f64;
    Ok(if mse == 0.0 { f64::INFINITY } else { 10.0 * (1.0 / mse).log10() })
}

const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;
const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;

fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    let half = (size / 2) as f64;
    let k: Vec<f64> = (0..size)
        .map(|i| {
            let x = i as f64 - half;
            (-(x * x) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

/// Separable "valid" filtering of a single plane.
fn filter_valid(plane: &[f64], w: usize, h: usize, k: &[f64]) -> (Vec<f64>, usize, usize) {
    let n = k.len();
    let (ow, oh) = (w + 1 - n, h + 1 - n);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = (0..n).map(|i| k[i] * plane[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..n).map(|i| k[i] * rows[(y + i) * ow + x]).sum();
        }
    }
    (out, ow, oh)
}

/// Mean structural similarity for data range 1, Gaussian window 11x11 with
/// sigma 1.5 over the valid region, averaged over channels. Images smaller
/// than the window use the largest odd window that fits.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    check_shape(a, b)?;
    let (w, h, ch) = (a.width, a.height, a.channels);
    if w == 0 || h == 0 {
        return Err(Error::DimensionMismatch("empty image".into()));
    }
    let mut size = SSIM_WINDOW.min(w).min(h);
    if size % 2 == 0 {
        size -= 1;
    }
    let kernel = gaussian_kernel(size, SSIM_SIGMA);
    let c1 = (SSIM_K1 * 1.0).powi(2);
    let c2 = (SSIM_K2 * 1.0).powi(2);
    let mut total = 0.0;
    for c in 0..ch {
        let pa: Vec<f64> = (0..w * h).map(|i| a.data[i * ch + c] as f64).collect();
        let pb: Vec<f64> = (0..w * h).map(|i| b.data[i * ch + c] as f64).collect();
        let prod = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(x, y)| x * y).collect::<Vec<f64>>();
        let (mu_a, ow, oh) = filter_valid(&pa, w, h, &kernel);
        let (mu_b, ..) = filter_valid(&pb, w, h, &kernel);
        let (aa, ..) = filter_valid(&prod(&pa, &pa), w, h, &kernel);
        let (bb, ..) = filter_valid(&prod(&pb, &pb), w, h, &kernel);
        let (ab, ..) = filter_valid(&prod(&pa, &pb), w, h, &kernel);
        let mut sum = 0.0;
        for i in 0..ow * oh {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = aa[i] - ma * ma;
            let vb = bb[i] - mb * mb;
            let cov = ab[i] - ma * mb;
            sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        }
        total += sum / (ow * oh) as f64;
    }
    Ok(total / ch as f64)
}

/// The four radiance passes as linear RGB images, in the order
/// `dr_s, idr_s, dr_f, idr_f`.
pub fn pass_images(buffers: &RadianceBuffers) -> [Image; 4] {
    let (w, h) = (buffers.width, buffers.height);
    [
        Image::from_rgb(w, h, &buffers.dr_s),
        Image::from_rgb(w, h, &buffers.idr_s),
        Image::from_rgb(w, h, &buffers.dr_f),
        Image::from_rgb(w, h, &buffers.idr_f),
    ]
}
