//! Geometry-modulated attention on one window of a synthetic depth map: a
//! tilted floor with a box standing on it.

use ndarray::Array2;
use shadowsynth::attention::{
    backproject, modulated_attention, normals_from_depth, partition_windows, window_weights, AttentionWindow,
    Combine, DEFAULT_SIGMA_G,
};
use shadowsynth::CameraPose;

fn main() -> shadowsynth::Result<()> {
    let (w, h, m) = (16, 16, 8);
    let camera = CameraPose {
        position: shadowsynth::Vec3::ZERO,
        pitch: 90.0,
        yaw: 0.0,
        roll: 0.0,
        fov_deg: 60.0,
        width: w,
        height: h,
    };
    let depth: Vec<f64> = (0..w * h)
        .map(|i| {
            let (x, y) = (i % w, i / w);
            if (5..11).contains(&x) && (4..9).contains(&y) {
                2.0
            } else {
                3.0 + 0.1 * y as f64
            }
        })
        .collect();
    // Two feature clusters: box and floor.
    let features = Array2::from_shape_fn((w * h, 4), |(i, c)| {
        let on_box = depth[i] == 2.0;
        match (on_box, c) {
            (true, 0) | (false, 1) => 1.0,
            (_, 2) => 0.1 * ((i * 7 + c) % 5) as f64,
            _ => 0.0,
        }
    });

    let map = backproject(&depth, w, h, &camera.intrinsics())?;
    let normals = normals_from_depth(&map);
    let window = &partition_windows(w, h, m)[0];
    let points: Vec<_> = window.iter().map(|&i| map.points[i]).collect();
    let win_normals: Vec<_> = window.iter().map(|&i| normals[i]).collect();
    let tokens = Array2::from_shape_fn((window.len(), 4), |(r, c)| features[[window[r], c]]);

    let weights = window_weights(&points, &win_normals, &tokens, DEFAULT_SIGMA_G, Combine::Elementwise)?;
    let out = modulated_attention(&AttentionWindow::self_attention(tokens.clone()), &weights)?;
    let plain = modulated_attention(&AttentionWindow::self_attention(tokens), &Array2::ones(weights.dim()))?;

    let n = window.len();
    let mean_w = weights.sum() / (n * n) as f64;
    let drift = (&out - &plain).mapv(f64::abs).fold(0.0f64, |a, &b| a.max(b));
    println!("window of {n} pixels: mean weight {mean_w:.3}, max change vs unmodulated attention {drift:.4}");
    println!("first row of weights: {:.2}", weights.row(0));
    Ok(())
}
