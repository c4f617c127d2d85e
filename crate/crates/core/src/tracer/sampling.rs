use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math::{Rgb, Vec3};
use crate::rng::RngStream;
use crate::scene::{Material, MaterialKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrdfSample {
    pub direction: Vec3,
    /// Solid-angle density, `cos θ / π`.
    pub pdf: f64,
    /// BRDF value, `albedo / π`.
    pub brdf: Rgb,
    pub cos_theta: f64,
}

/// Cosine-weighted direction about `normal` (Malley's method).
#[inline]
pub fn cosine_hemisphere(normal: Vec3, rng: &mut RngStream) -> (Vec3, f64) {
    let u1 = rng.next_f64();
    let u2 = rng.next_f64();
    let r = u1.sqrt();
    let phi = 2.0 * PI * u2;
    let cos_theta = (1.0 - u1).sqrt();
    let (t, b) = normal.orthonormal_basis();
    let dir = t * (r * phi.cos()) + b * (r * phi.sin()) + normal * cos_theta;
    (dir.normalized(), cos_theta)
}

/// Lambertian sample on the side of `normal` that faces `wo`.
pub fn sample_lambert(albedo: Rgb, normal: Vec3, wo: Vec3, rng: &mut RngStream) -> BrdfSample {
    let n = if normal.dot(wo) >= 0.0 { normal } else { -normal };
    let (direction, cos_theta) = cosine_hemisphere(n, rng);
    BrdfSample {
        direction,
        pdf: cos_theta / PI,
        brdf: albedo / PI,
        cos_theta,
    }
}

/// Samples the material's BRDF. Only Lambertian materials have one.
pub fn sample_brdf(material: &Material, material_index: usize, normal: Vec3, wo: Vec3, rng: &mut RngStream) -> Result<BrdfSample> {
    match material.kind {
        MaterialKind::Lambertian => Ok(sample_lambert(material.albedo, normal, wo, rng)),
        MaterialKind::Emissive => Err(Error::EmissiveOnlyMaterial(material_index)),
    }
}

/// Lambertian BRDF for a pair of directions on the same side of the surface.
pub fn eval_lambert(albedo: Rgb, normal: Vec3, wo: Vec3, wi: Vec3) -> Rgb {
    if normal.dot(wo) * normal.dot(wi) > 0.0 {
        albedo / PI
    } else {
        Rgb::BLACK
    }
}
