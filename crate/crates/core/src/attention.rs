//! Geometry- and semantics-modulated window attention.
//!
//! Scores of a standard scaled dot-product attention are multiplied by a
//! pairwise weight before the softmax:
//!
//! ```text
//! softmax((Q Kᵀ / √d) ⊙ W + B) V
//! ```
//!
//! `W` combines a semantic term (clamped feature correlation) with a
//! geometric term `exp(-pdist / σ)`, where `pdist` is the mean distance of
//! each pixel's 3D point to the other's tangent plane. Depth maps are turned
//! into points with a pinhole back-projection and normals come from central
//! differences of those points.

use ndarray::{Array2, Axis};

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::math::Vec3;

pub const DEFAULT_SIGMA_G: f64 = 0.5;
pub const CHARBONNIER_EPS: f64 = 1e-3;

/// Pinhole back-projection of pixel coordinates `(u, v)` at `depth`.
#[inline]
pub fn backproject_pixel(u: f64, v: f64, depth: f64, k: &CameraIntrinsics) -> Vec3 {
    Vec3::new(depth * (u - k.cx) / k.fx, depth * (v - k.cy) / k.fy, depth)
}

/// Camera-space points of a depth map.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMap {
    pub width: usize,
    pub height: usize,
    pub points: Vec<Vec3>,
    /// False where the depth was nonpositive or not finite.
    pub valid: Vec<bool>,
}

/// Back-projects a row-major depth map, sampling each pixel at its center
/// `(x + 0.5, y + 0.5)` to match the renderer's camera rays.
pub fn backproject(depth: &[f64], width: usize, height: usize, k: &CameraIntrinsics) -> Result<PointMap> {
    if depth.len() != width * height {
        return Err(Error::DimensionMismatch(format!(
            "depth has {} values for {width}x{height}",
            depth.len()
        )));
    }
    let mut points = Vec::with_capacity(depth.len());
    let mut valid = Vec::with_capacity(depth.len());
    for y in 0..height {
        for x in 0..width {
            let d = depth[y * width + x];
            let ok = d > 0.0 && d.is_finite();
            valid.push(ok);
            points.push(if ok {
                backproject_pixel(x as f64 + 0.5, y as f64 + 0.5, d, k)
            } else {
                Vec3::ZERO
            });
        }
    }
    Ok(PointMap {
        width,
        height,
        points,
        valid,
    })
}

/// Unit normals facing the camera (negative z). Interior pixels use central
/// differences, borders and pixels next to invalid ones fall back to one-sided
/// differences. Pixels without a usable normal copy the nearest pixel that
/// has one; if none has, they get `(0, 0, -1)`.
pub fn normals_from_depth(map: &PointMap) -> Vec<Vec3> {
    let (w, h) = (map.width, map.height);
    let at = |x: usize, y: usize| -> Option<Vec3> {
        let i = y * w + x;
        map.valid[i].then_some(map.points[i])
    };
    let tangent = |x: usize, y: usize, horizontal: bool| -> Option<Vec3> {
        let (prev, next) = if horizontal {
            (x.checked_sub(1).and_then(|px| at(px, y)), (x + 1 < w).then(|| at(x + 1, y)).flatten())
        } else {
            (y.checked_sub(1).and_then(|py| at(x, py)), (y + 1 < h).then(|| at(x, y + 1)).flatten())
        };
        let here = at(x, y)?;
        match (prev, next) {
            (Some(a), Some(b)) => Some(b - a),
            (None, Some(b)) => Some(b - here),
            (Some(a), None) => Some(here - a),
            (None, None) => None,
        }
    };

    let mut normals: Vec<Option<Vec3>> = vec![None; w * h];
    for y in 0..h {
        for x in 0..w {
            let (Some(tu), Some(tv)) = (tangent(x, y, true), tangent(x, y, false)) else {
                continue;
            };
            let n = tu.cross(tv);
            let len = n.length();
            if len > 1e-300 && len.is_finite() {
                let n = n / len;
                normals[y * w + x] = Some(if n.z > 0.0 { -n } else { n });
            }
        }
    }

    let fallback = Vec3::new(0.0, 0.0, -1.0);
    let known: Vec<(usize, usize, Vec3)> = (0..w * h)
        .filter_map(|i| normals[i].map(|n| (i % w, i / w, n)))
        .collect();
    (0..w * h)
        .map(|i| {
            normals[i].unwrap_or_else(|| {
                let (x, y) = ((i % w) as i64, (i / w) as i64);
                known
                    .iter()
                    .min_by_key(|(kx, ky, _)| (*kx as i64 - x).pow(2) + (*ky as i64 - y).pow(2))
                    .map_or(fallback, |k| k.2)
            })
        })
        .collect()
}

/// Mean of the two point-to-tangent-plane distances.
#[inline]
pub fn planar_distance(p_i: Vec3, n_i: Vec3, p_j: Vec3, n_j: Vec3) -> f64 {
    let d = p_i - p_j;
    0.5 * n_i.dot(d).abs() + 0.5 * n_j.dot(d).abs()
}

/// [`planar_distance`] for two pixels given their depths and pixel coordinates.
pub fn pdist(
    (u_i, v_i, depth_i): (f64, f64, f64),
    n_i: Vec3,
    (u_j, v_j, depth_j): (f64, f64, f64),
    n_j: Vec3,
    k: &CameraIntrinsics,
) -> f64 {
    planar_distance(backproject_pixel(u_i, v_i, depth_i, k), n_i, backproject_pixel(u_j, v_j, depth_j, k), n_j)
}

pub fn pdist_matrix(points: &[Vec3], normals: &[Vec3]) -> Array2<f64> {
    let n = points.len();
    Array2::from_shape_fn((n, n), |(i, j)| planar_distance(points[i], normals[i], points[j], normals[j]))
}

/// Clamped cosine similarity of feature rows. A zero feature row gets weight
/// `1/n` against every pixel, so the matrix stays symmetric; its indices are
/// returned alongside.
pub fn semantic_weights(features: &Array2<f64>) -> (Array2<f64>, Vec<usize>) {
    let n = features.nrows();
    let mut unit = features.clone();
    let mut zero = Vec::new();
    for (i, mut row) in unit.axis_iter_mut(Axis(0)).enumerate() {
        let len = row.dot(&row).sqrt();
        if len > 0.0 && len.is_finite() {
            row /= len;
        } else {
            zero.push(i);
        }
    }
    let mut w = unit.dot(&unit.t()).mapv(|v| v.clamp(0.0, 1.0));
    for &i in &zero {
        w.row_mut(i).fill(1.0 / n as f64);
        w.column_mut(i).fill(1.0 / n as f64);
    }
    (w, zero)
}

pub fn geometric_weights(pdist: &Array2<f64>, sigma: f64) -> Array2<f64> {
    pdist.mapv(|d| (-d / sigma).exp())
}

/// How the semantic and geometric weights are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Combine {
    #[default]
    Elementwise,
    MatrixProduct,
}

pub fn combine_weights(semantic: &Array2<f64>, geometric: &Array2<f64>, mode: Combine) -> Result<Array2<f64>> {
    if semantic.dim() != geometric.dim() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", semantic.dim(), geometric.dim())));
    }
    Ok(match mode {
        Combine::Elementwise => semantic * geometric,
        Combine::MatrixProduct => semantic.dot(geometric),
    })
}

/// Tensors of one attention window with `n` tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionWindow {
    pub queries: Array2<f64>,
    pub keys: Array2<f64>,
    pub values: Array2<f64>,
    /// `n x n` additive bias.
    pub bias: Array2<f64>,
}

impl AttentionWindow {
    /// Self-attention over `tokens` with no bias.
    pub fn self_attention(tokens: Array2<f64>) -> Self {
        let n = tokens.nrows();
        AttentionWindow {
            queries: tokens.clone(),
            keys: tokens.clone(),
            values: tokens,
            bias: Array2::zeros((n, n)),
        }
    }

    fn check(&self, weights: &Array2<f64>) -> Result<()> {
        let n = self.queries.nrows();
        let ok = self.keys.nrows() == n
            && self.values.nrows() == n
            && self.keys.ncols() == self.queries.ncols()
            && self.bias.dim() == (n, n)
            && weights.dim() == (n, n);
        if ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "q {:?}, k {:?}, v {:?}, bias {:?}, weights {:?}",
                self.queries.dim(),
                self.keys.dim(),
                self.values.dim(),
                self.bias.dim(),
                weights.dim()
            )))
        }
    }
}

/// Numerically stable softmax of each row, in place.
pub fn softmax_rows(scores: &mut Array2<f64>) {
    for mut row in scores.axis_iter_mut(Axis(0)) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
}

/// Row-stochastic attention matrix `softmax((Q Kᵀ / √d) ⊙ W + B)`.
pub fn attention_matrix(window: &AttentionWindow, weights: &Array2<f64>) -> Result<Array2<f64>> {
    window.check(weights)?;
    let scale = 1.0 / (window.queries.ncols() as f64).sqrt();
    let mut scores = window.queries.dot(&window.keys.t()) * scale * weights + &window.bias;
    softmax_rows(&mut scores);
    Ok(scores)
}

pub fn modulated_attention(window: &AttentionWindow, weights: &Array2<f64>) -> Result<Array2<f64>> {
    Ok(attention_matrix(window, weights)?.dot(&window.values))
}

/// Weights of a window from its points, normals and features.
pub fn window_weights(
    points: &[Vec3],
    normals: &[Vec3],
    features: &Array2<f64>,
    sigma_g: f64,
    mode: Combine,
) -> Result<Array2<f64>> {
    if points.len() != normals.len() || points.len() != features.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} points, {} normals, {} feature rows",
            points.len(),
            normals.len(),
            features.nrows()
        )));
    }
    let (semantic, _) = semantic_weights(features);
    let geometric = geometric_weights(&pdist_matrix(points, normals), sigma_g);
    combine_weights(&semantic, &geometric, mode)
}

/// Pixel indices of non-overlapping `size x size` windows in row-major
/// window order. Windows on the right and bottom edges are truncated.
pub fn partition_windows(width: usize, height: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if size == 0 {
        return out;
    }
    for wy in (0..height).step_by(size) {
        for wx in (0..width).step_by(size) {
            let mut idx = Vec::with_capacity(size * size);
            for y in wy..(wy + size).min(height) {
                for x in wx..(wx + size).min(width) {
                    idx.push(y * width + x);
                }
            }
            out.push(idx);
        }
    }
    out
}

/// Bilinear resampling of a `channels x height x width` planar map to a new
/// resolution, aligning pixel centers.
pub fn resample_bilinear(
    planes: &[f32],
    channels: usize,
    width: usize,
    height: usize,
    new_width: usize,
    new_height: usize,
) -> Result<Vec<f32>> {
    if planes.len() != channels * width * height || width == 0 || height == 0 {
        return Err(Error::DimensionMismatch(format!(
            "{} values for {channels}x{height}x{width}",
            planes.len()
        )));
    }
    let sx = width as f64 / new_width as f64;
    let sy = height as f64 / new_height as f64;
    let mut out = Vec::with_capacity(channels * new_width * new_height);
    for c in 0..channels {
        let plane = &planes[c * width * height..(c + 1) * width * height];
        for y in 0..new_height {
            let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (height - 1) as f64);
            let (y0, ty) = (fy.floor() as usize, fy.fract());
            let y1 = (y0 + 1).min(height - 1);
            for x in 0..new_width {
                let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (width - 1) as f64);
                let (x0, tx) = (fx.floor() as usize, fx.fract());
                let x1 = (x0 + 1).min(width - 1);
                let p = |xx: usize, yy: usize| plane[yy * width + xx] as f64;
                let top = p(x0, y0) * (1.0 - tx) + p(x1, y0) * tx;
                let bottom = p(x0, y1) * (1.0 - tx) + p(x1, y1) * tx;
                out.push((top * (1.0 - ty) + bottom * ty) as f32);
            }
        }
    }
    Ok(out)
}

/// Reduction used by [`charbonnier`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    /// `sqrt(Σ (a - b)² + ε²)` over all values.
    #[default]
    Global,
    /// `mean(sqrt((a - b)² + ε²))`.
    PerValueMean,
}

fn check_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() == b.len() && !a.is_empty() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!("{} vs {} values", a.len(), b.len())))
    }
}

pub fn charbonnier(a: &[f64], b: &[f64], eps: f64, reduction: Reduction) -> Result<f64> {
    check_len(a, b)?;
    let eps2 = eps * eps;
    Ok(match reduction {
        Reduction::Global => (a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() + eps2).sqrt(),
        Reduction::PerValueMean => {
            a.iter().zip(b).map(|(x, y)| ((x - y) * (x - y) + eps2).sqrt()).sum::<f64>() / a.len() as f64
        }
    })
}

/// Gradient of [`charbonnier`] with respect to `a`.
pub fn charbonnier_grad(a: &[f64], b: &[f64], eps: f64, reduction: Reduction) -> Result<Vec<f64>> {
    check_len(a, b)?;
    let eps2 = eps * eps;
    Ok(match reduction {
        Reduction::Global => {
            let norm = charbonnier(a, b, eps, reduction)?;
            a.iter().zip(b).map(|(x, y)| (x - y) / norm).collect()
        }
        Reduction::PerValueMean => {
            let n = a.len() as f64;
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y) / ((x - y) * (x - y) + eps2).sqrt() / n)
                .collect()
        }
    })
}
