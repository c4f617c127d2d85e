//! Pinhole camera with Blender-style Euler angles.
//!
//! With all angles zero the camera looks down `-z`. Pitch rotates about the
//! world x axis (90° looks horizontally along `+y`, 60° tilts 30° downward,
//! 120° tilts 30° upward); yaw then rotates about world `+z`; roll spins
//! about the optical axis. Angles are in degrees. The horizontal field of view
//! is `fov_deg`, pixels are square, and image rows grow downward.

use serde::{Deserialize, Serialize};

use crate::math::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraPose {
    pub position: Vec3,
    pub pitch: f64,
    pub yaw: f64,
    #[serde(default)]
    pub roll: f64,
    pub fov_deg: f64,
    pub width: usize,
    pub height: usize,
}

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn is_valid(&self) -> bool {
        self.fx > 0.0 && self.fy > 0.0 && self.fx.is_finite() && self.fy.is_finite()
    }
}

/// Orthonormal camera frame in world space.
#[derive(Debug, Clone, Copy)]
pub struct CameraFrame {
    pub forward: Vec3,
    pub right: Vec3,
    pub up: Vec3,
}

impl CameraPose {
    pub fn frame(&self) -> CameraFrame {
        let (sp, cp) = self.pitch.to_radians().sin_cos();
        let yaw = self.yaw.to_radians();
        let forward = Vec3::new(0.0, sp, -cp).rotate_z(yaw);
        let up0 = Vec3::new(0.0, cp, sp).rotate_z(yaw);
        let right0 = forward.cross(up0);
        let (sr, cr) = self.roll.to_radians().sin_cos();
        CameraFrame {
            forward,
            right: right0 * cr + up0 * sr,
            up: up0 * cr - right0 * sr,
        }
    }

    pub fn intrinsics(&self) -> CameraIntrinsics {
        let fx = 0.5 * self.width as f64 / (0.5 * self.fov_deg.to_radians()).tan();
        CameraIntrinsics {
            fx,
            fy: fx,
            cx: 0.5 * self.width as f64,
            cy: 0.5 * self.height as f64,
        }
    }

    /// Unit direction through continuous pixel coordinates (`(0.5, 0.5)` is the
    /// center of the top-left pixel).
    pub fn direction(&self, px: f64, py: f64) -> Vec3 {
        self.direction_with(&self.frame(), &self.intrinsics(), px, py)
    }

    #[inline]
    pub fn direction_with(&self, f: &CameraFrame, k: &CameraIntrinsics, px: f64, py: f64) -> Vec3 {
        (f.forward + f.right * ((px - k.cx) / k.fx) - f.up * ((py - k.cy) / k.fy)).normalized()
    }

    /// Projects a world point to continuous pixel coordinates; `None` when the
    /// point is not strictly in front of the camera.
    pub fn project(&self, p: Vec3) -> Option<(f64, f64)> {
        let f = self.frame();
        let k = self.intrinsics();
        let d = p - self.position;
        let z = d.dot(f.forward);
        if z <= 1e-9 {
            return None;
        }
        Some((k.cx + k.fx * d.dot(f.right) / z, k.cy - k.fy * d.dot(f.up) / z))
    }

    /// True when `p` projects inside the image rectangle.
    pub fn sees(&self, p: Vec3) -> bool {
        match self.project(p) {
            Some((u, v)) => u >= 0.0 && v >= 0.0 && u <= self.width as f64 && v <= self.height as f64,
            None => false,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.width == 0 || self.height == 0 {
            return Err(format!("zero resolution {}x{}", self.width, self.height));
        }
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return Err(format!("fov_deg {} outside (0, 180)", self.fov_deg));
        }
        if !self.position.is_finite() || !self.pitch.is_finite() || !self.yaw.is_finite() || !self.roll.is_finite() {
            return Err("non-finite pose".into());
        }
        Ok(())
    }
}
