//! Ray-scene queries and Monte Carlo sampling primitives.

mod bvh;
mod sampling;
mod world;

pub use bvh::{Bvh, PrimHit, Triangle};
pub use sampling::{cosine_hemisphere, eval_lambert, sample_brdf, sample_lambert, BrdfSample};
pub use world::{Hit, LightSample, PrimInfo, Ray, World, EPS_GEOM};

use crate::scene::Scene;

/// Builds the acceleration structure for a validated scene.
pub fn build_accel(scene: &Scene) -> World {
    World::build(scene)
}
