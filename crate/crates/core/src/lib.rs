//! Physically based rendering of shadow / shadow-free image pairs.
//!
//! A scene is rendered into four linear radiance passes (direct and indirect
//! lighting, each with and without shadows). The shadow-free indirect pass
//! treats nearby first-bounce occluders as transparent, which removes cast
//! shadows and occlusion-induced darkening while keeping inter-reflections.
//! The [`compositor`] turns the passes into image pairs and soft shadow masks.
//!
//! Supporting modules generate randomized training scenes ([`dataset`]) and
//! implement a geometry-modulated attention operator ([`attention`]).

pub mod attention;
pub mod camera;
pub mod cli;
pub mod compositor;
pub mod dataset;
pub mod error;
pub mod image;
pub mod integrator;
pub mod math;
pub mod rng;
pub mod scene;
pub mod tracer;

pub use camera::{CameraIntrinsics, CameraPose};
pub use error::{Error, Result};
pub use image::{Encoding, Image};
pub use integrator::{render_passes, render_world, Integrator, PathState, RadianceBuffers};
pub use math::{Rgb, Vec3};
pub use rng::RngStream;
pub use scene::{load_scene, parse_scene, Scene};
pub use tracer::{build_accel, World};
