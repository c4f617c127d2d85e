//! Float image buffers and their file encodings.
//!
//! * Portable float map (`.pfm`), little-endian (scale `-1.0`), 1 or 3 channels.
//!   Rows are stored bottom-to-top as the format requires.
//! * Planar float file (`.pfn`) for C-channel feature maps:
//!   `PFN\n<width> <height> <channels>\n-1.0\n` followed by `channels` planes of
//!   `width * height` little-endian `f32`, each plane row-major top-to-bottom.
//! * 8-bit sRGB PNG for previews and 8-bit grayscale PNG for masks.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::math::Rgb;

/// Row-major, top-to-bottom, channel-interleaved `f32` image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Image {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    pub fn from_rgb(width: usize, height: usize, pixels: &[Rgb]) -> Self {
        assert_eq!(pixels.len(), width * height);
        let data = pixels
            .iter()
            .flat_map(|c| c.0.iter().map(|&v| v as f32))
            .collect();
        Image {
            width,
            height,
            channels: 3,
            data,
        }
    }

    pub fn from_gray(width: usize, height: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), width * height);
        Image {
            width,
            height,
            channels: 1,
            data: values.iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn same_shape(&self, o: &Image) -> bool {
        self.width == o.width && self.height == o.height && self.channels == o.channels
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Pixel as RGB; single-channel images are broadcast.
    pub fn rgb(&self, i: usize) -> Rgb {
        match self.channels {
            1 => Rgb::gray(self.data[i] as f64),
            _ => {
                let p = &self.data[i * self.channels..];
                Rgb([p[0] as f64, p[1] as f64, p[2] as f64])
            }
        }
    }

    pub fn luminance(&self, i: usize) -> f64 {
        self.rgb(i).luminance()
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Image {
        Image {
            data: self.data.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    pub fn is_finite_nonnegative(&self) -> bool {
        self.data.iter().all(|v| v.is_finite() && *v >= 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    /// Portable float map, bit-exact.
    LinearFloat,
    /// 8-bit sRGB, clamped.
    Srgb8,
}

impl FromStr for Encoding {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pfm" | "linear" | "linear-float" => Ok(Encoding::LinearFloat),
            "png" | "srgb" | "srgb8" => Ok(Encoding::Srgb8),
            other => Err(Error::UnknownEncoding(other.to_string())),
        }
    }
}

/// Standard sRGB opto-electronic transfer function on a clamped value.
pub fn linear_to_srgb(v: f64) -> f64 {
    let v = v.clamp(0.0, 1.0);
    if v <= 0.003_130_8 {
        12.92 * v
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

pub fn srgb_to_linear(v: f64) -> f64 {
    if v <= 0.040_45 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

/// Linear value to an 8-bit sRGB code, rounding half up.
pub fn srgb_byte(linear: f64) -> u8 {
    (linear_to_srgb(linear) * 255.0 + 0.5).floor() as u8
}

/// Unit-interval value to an 8-bit code (`v * 255`, rounded half up).
pub fn unit_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

/// Writes via a temporary sibling file and rename so readers never see a
/// partially written image.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn encode_pfm(img: &Image) -> Result<Vec<u8>> {
    let magic = match img.channels {
        1 => "Pf",
        3 => "PF",
        c => return Err(Error::Format(format!("PFM supports 1 or 3 channels, got {c}"))),
    };
    let mut out = format!("{magic}\n{} {}\n-1.0\n", img.width, img.height).into_bytes();
    let row = img.width * img.channels;
    out.reserve(img.data.len() * 4);
    for y in (0..img.height).rev() {
        for v in &img.data[y * row..(y + 1) * row] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

/// Splits `count` whitespace-separated header tokens off the front of `bytes`.
/// Returns the tokens and the offset of the payload (one whitespace byte after
/// the last token).
fn header_tokens(bytes: &[u8], count: usize) -> Result<(Vec<String>, usize)> {
    let mut tokens = Vec::with_capacity(count);
    let mut i = 0;
    while tokens.len() < count {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(Error::Format("truncated header".into()));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
    }
    if i >= bytes.len() {
        return Err(Error::Format("missing payload".into()));
    }
    Ok((tokens, i + 1))
}

fn parse_num<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Format(format!("bad {what} in header: {s:?}")))
}

fn read_f32s(payload: &[u8], n: usize, little: bool) -> Result<Vec<f32>> {
    if payload.len() < n * 4 {
        return Err(Error::Format(format!(
            "payload has {} bytes, expected {}",
            payload.len(),
            n * 4
        )));
    }
    Ok(payload[..n * 4]
        .chunks_exact(4)
        .map(|b| {
            let a = [b[0], b[1], b[2], b[3]];
            if little {
                f32::from_le_bytes(a)
            } else {
                f32::from_be_bytes(a)
            }
        })
        .collect())
}

pub fn decode_pfm(bytes: &[u8]) -> Result<Image> {
    let (tok, off) = header_tokens(bytes, 4)?;
    let channels = match tok[0].as_str() {
        "PF" => 3,
        "Pf" => 1,
        m => return Err(Error::Format(format!("not a PFM file (magic {m:?})"))),
    };
    let width: usize = parse_num(&tok[1], "width")?;
    let height: usize = parse_num(&tok[2], "height")?;
    let scale: f64 = parse_num(&tok[3], "scale")?;
    let rows = read_f32s(&bytes[off..], width * height * channels, scale < 0.0)?;
    let row = width * channels;
    let mut data = Vec::with_capacity(rows.len());
    for y in (0..height).rev() {
        data.extend_from_slice(&rows[y * row..(y + 1) * row]);
    }
    Ok(Image {
        width,
        height,
        channels,
        data,
    })
}

pub fn encode_planar(img: &Image) -> Vec<u8> {
    let mut out = format!("PFN\n{} {} {}\n-1.0\n", img.width, img.height, img.channels).into_bytes();
    let n = img.pixel_count();
    out.reserve(img.data.len() * 4);
    for c in 0..img.channels {
        for i in 0..n {
            out.extend_from_slice(&img.data[i * img.channels + c].to_le_bytes());
        }
    }
    out
}

pub fn decode_planar(bytes: &[u8]) -> Result<Image> {
    let (tok, off) = header_tokens(bytes, 5)?;
    if tok[0] != "PFN" {
        return Err(Error::Format(format!("not a planar float file (magic {:?})", tok[0])));
    }
    let width: usize = parse_num(&tok[1], "width")?;
    let height: usize = parse_num(&tok[2], "height")?;
    let channels: usize = parse_num(&tok[3], "channels")?;
    let scale: f64 = parse_num(&tok[4], "scale")?;
    let n = width * height;
    let planes = read_f32s(&bytes[off..], n * channels, scale < 0.0)?;
    let mut data = vec![0.0; n * channels];
    for c in 0..channels {
        for i in 0..n {
            data[i * channels + c] = planes[c * n + i];
        }
    }
    Ok(Image {
        width,
        height,
        channels,
        data,
    })
}

fn encode_png(img: &Image, to_byte: impl Fn(f64) -> u8) -> Result<Vec<u8>> {
    let (color, channels) = match img.channels {
        1 => (image::ExtendedColorType::L8, 1),
        3 => (image::ExtendedColorType::Rgb8, 3),
        c => return Err(Error::Format(format!("PNG export supports 1 or 3 channels, got {c}"))),
    };
    let bytes: Vec<u8> = img.data.iter().map(|&v| to_byte(v as f64)).collect();
    let mut out = Vec::new();
    let enc = image::codecs::png::PngEncoder::new(&mut out);
    image::ImageEncoder::write_image(enc, &bytes, img.width as u32, img.height as u32, color)
        .map_err(|e| Error::Format(e.to_string()))?;
    debug_assert_eq!(bytes.len(), img.pixel_count() * channels);
    Ok(out)
}

/// Tonemaps a linear image to 8-bit sRGB PNG bytes (exposure 1.0, clamp).
pub fn encode_srgb_png(img: &Image) -> Result<Vec<u8>> {
    encode_png(img, srgb_byte)
}

/// Single-channel unit-interval image (e.g. a shadow mask) to 8-bit gray PNG.
pub fn encode_gray_png(img: &Image) -> Result<Vec<u8>> {
    if img.channels != 1 {
        return Err(Error::Format("grayscale export needs one channel".into()));
    }
    encode_png(img, unit_byte)
}

pub fn write_image(img: &Image, path: impl AsRef<Path>, encoding: Encoding) -> Result<()> {
    let path = path.as_ref();
    let bytes = match encoding {
        Encoding::LinearFloat => encode_pfm(img)?,
        Encoding::Srgb8 => encode_srgb_png(img)?,
    };
    write_atomic(path, &bytes)
}

pub fn write_planar(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_planar(img))
}

pub fn write_mask_png(mask: &Image, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_gray_png(mask)?)
}

/// Reads `.pfm`, `.pfn` or 8-bit PNG (decoded back to linear) by extension.
pub fn read_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    match ext.as_str() {
        "pfm" => decode_pfm(&bytes),
        "pfn" => decode_planar(&bytes),
        "png" => {
            let dynimg = image::load_from_memory(&bytes).map_err(|e| Error::Format(e.to_string()))?;
            let rgb = dynimg.to_rgb8();
            let data = rgb
                .as_raw()
                .iter()
                .map(|&b| srgb_to_linear(b as f64 / 255.0) as f32)
                .collect();
            Ok(Image {
                width: rgb.width() as usize,
                height: rgb.height() as usize,
                channels: 3,
                data,
            })
        }
        other => Err(Error::UnknownEncoding(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn srgb_reference_points() {
        // 1.055 * 0.5^(1/2.4) - 0.055 = 0.735357; * 255 = 187.52 -> 188
        assert_eq!(srgb_byte(0.5), 188);
        assert_eq!(srgb_byte(1.5), 255);
        assert_eq!(srgb_byte(-0.2), 0);
        assert_eq!(srgb_byte(1.0), 255);
        assert!((srgb_to_linear(linear_to_srgb(0.3)) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn mask_byte_rounds_half_up() {
        // 0.5 * 255 = 127.5 -> 128
        assert_eq!(unit_byte(0.5), 128);
        assert_eq!(unit_byte(1.0), 255);
        assert_eq!(unit_byte(0.0), 0);
    }

    #[test]
    fn pfm_round_trip_bit_exact() {
        let mut img = Image::new(5, 3, 3);
        for (i, v) in img.data.iter_mut().enumerate() {
            *v = (i as f32 * 0.137).sin() * 1e3 + f32::MIN_POSITIVE;
        }
        let back = decode_pfm(&encode_pfm(&img).unwrap()).unwrap();
        assert_eq!(back.data.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                   img.data.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        assert!(back.same_shape(&img));
    }

    #[test]
    fn pfm_rows_bottom_to_top() {
        let img = Image {
            width: 1,
            height: 2,
            channels: 1,
            data: vec![1.0, 2.0],
        };
        let bytes = encode_pfm(&img).unwrap();
        let payload = &bytes[bytes.len() - 8..];
        assert_eq!(f32::from_le_bytes(payload[..4].try_into().unwrap()), 2.0);
    }

    #[test]
    fn planar_round_trip() {
        let mut img = Image::new(4, 2, 5);
        for (i, v) in img.data.iter_mut().enumerate() {
            *v = i as f32;
        }
        assert_eq!(decode_planar(&encode_planar(&img)).unwrap(), img);
    }

    #[test]
    fn unknown_encoding() {
        assert!(matches!("exr".parse::<Encoding>(), Err(Error::UnknownEncoding(_))));
    }
}
