//! Four-pass radiance estimator: direct and indirect lighting, each with and
//! without shadows.
//!
//! * Direct lighting is emission seen at the camera hit plus one next-event
//!   light sample. The shadow-free variant keeps the light sample even when
//!   the shadow ray is blocked.
//! * Indirect lighting follows BRDF-sampled paths. Emitters reached at the
//!   first bounce are ignored (that light is already in the direct term).
//!   Delta lights cannot be hit by sampled rays, so they are gathered with a
//!   shadow ray at every vertex from the first bounce on.
//! * The shadow-free indirect variant treats first-bounce hits closer than the
//!   occlusion radius as transparent: the ray continues in the same direction
//!   with unit weight and the bounce count does not advance. Room-shell
//!   surfaces are never skipped by distance. After an odd number of
//!   pass-throughs of watertight surfaces the path is inside an object, so
//!   the next hit (its inner face) is skipped as well.
//!
//! All four passes for a `(pixel, sample)` pair share their random streams,
//! so shadow-free and shadowed estimates differ only through the branches
//! above.

use rayon::prelude::*;

use crate::camera::CameraPose;
use crate::error::{Error, Result};
use crate::math::{Rgb, Vec3};
use crate::rng::{tag, RngStream};
use crate::scene::{IndirectMax, MaterialKind, RadiusDistance, RenderSettings, Scene};
use crate::tracer::{sample_lambert, Hit, Ray, World, EPS_GEOM};

/// Upper bound on consecutive transparent pass-throughs along one ray.
const MAX_PASS_THROUGH: usize = 64;

pub const TILE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathState {
    /// Scattering events so far; the camera hit is bounce 0.
    pub bounce: usize,
    /// Pass-throughs of watertight surfaces at the first bounce.
    pub trans_depth: usize,
    /// Distance travelled since leaving the bounce-0 surface, through every
    /// pass-through.
    pub accumulated_first_bounce_distance: f64,
    /// Length of the segment that reached the current hit.
    pub segment_length: f64,
    pub with_shadow: bool,
}

impl PathState {
    /// State at the primary (camera) hit, reached by a ray of length `t`.
    pub fn camera(with_shadow: bool, t: f64) -> PathState {
        PathState {
            bounce: 0,
            trans_depth: 0,
            accumulated_first_bounce_distance: t,
            segment_length: t,
            with_shadow,
        }
    }
}

/// One camera-ray estimate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RadianceSample {
    pub direct: Rgb,
    /// Indirect estimate for the requested shadow mode.
    pub indirect: Rgb,
    /// Shadowed indirect estimate from the same random stream. Equal to
    /// `indirect` when the shadowed mode was requested.
    pub indirect_shadowed: Rgb,
}

pub struct Integrator<'w> {
    world: &'w World,
    settings: RenderSettings,
}

impl<'w> Integrator<'w> {
    pub fn new(world: &'w World, settings: RenderSettings) -> Self {
        Integrator { world, settings }
    }

    pub fn world(&self) -> &World {
        self.world
    }

    pub fn settings(&self) -> &RenderSettings {
        &self.settings
    }

    /// Direct lighting at `hit` toward `wo`.
    pub fn est_direct(&self, hit: &Hit, wo: Vec3, with_shadow: bool, rng: &mut RngStream) -> Rgb {
        let (shadowed, free) = self.direct_pair(hit, wo, rng);
        if with_shadow {
            shadowed
        } else {
            free
        }
    }

    /// `(shadowed, shadow_free)` direct lighting from a single light sample.
    pub fn direct_pair(&self, hit: &Hit, wo: Vec3, rng: &mut RngStream) -> (Rgb, Rgb) {
        let emitted = self.world.emitted(hit, wo);
        let material = self.world.material(hit.material);
        if material.kind == MaterialKind::Emissive {
            return (emitted, emitted);
        }
        let Ok(ls) = self.world.sample_light(hit.point, rng) else {
            return (emitted, emitted);
        };
        let n = hit.facing(wo);
        let cos = n.dot(ls.direction);
        if ls.pdf <= 0.0 || ls.radiance.is_black() || cos <= 0.0 {
            return (emitted, emitted);
        }
        let brdf = material.albedo_at(hit.uv.0, hit.uv.1) / std::f64::consts::PI;
        let free = emitted + ls.radiance * brdf * (cos / ls.pdf);
        let blocked = self.world.shadowed(hit, ls.direction, ls.distance);
        (if blocked { emitted } else { free }, free)
    }

    /// Indirect lighting arriving at the camera via `hit`.
    pub fn est_indirect(&self, hit: &Hit, wo: Vec3, state: PathState, rng: &mut RngStream) -> Rgb {
        self.indirect(hit, wo, state, rng, 0)
    }

    fn indirect(&self, hit: &Hit, wo: Vec3, state: PathState, rng: &mut RngStream, passes: usize) -> Rgb {
        let s = &self.settings;
        if state.bounce > s.max_bounce {
            return Rgb::BLACK;
        }
        let emitted = self.world.emitted(hit, wo);
        if !emitted.is_black() {
            return if state.bounce > 1 { emitted } else { Rgb::BLACK };
        }

        if !state.with_shadow && state.bounce == 1 {
            let dist = match s.radius_distance {
                RadiusDistance::Accumulated => state.accumulated_first_bounce_distance,
                RadiusDistance::Segment => state.segment_length,
            };
            let inside_object = state.trans_depth % 2 == 1;
            if inside_object || (dist <= s.r && !hit.is_last_background) {
                return self.pass_through(hit, wo, state, rng, passes);
            }
        }

        let material = self.world.material(hit.material);
        if material.kind == MaterialKind::Emissive {
            return Rgb::BLACK;
        }
        let albedo = material.albedo_at(hit.uv.0, hit.uv.1);
        let mut radiance = Rgb::BLACK;
        if state.bounce + 1 > s.max_bounce {
            return radiance;
        }
        if state.bounce >= 1 {
            radiance += self.world.delta_lights_at(hit, wo, albedo);
        }

        let bs = sample_lambert(albedo, hit.normal, wo, rng);
        let continuation = if state.bounce >= s.rr_start_bounce {
            albedo.max_channel().clamp(0.05, 0.95)
        } else {
            1.0
        };
        if continuation < 1.0 && rng.next_f64() > continuation {
            return radiance;
        }
        let ray = Ray::new(hit.spawn_origin(bs.direction), bs.direction);
        if let Some(next) = self.world.intersect(&ray) {
            let next_state = PathState {
                bounce: state.bounce + 1,
                trans_depth: state.trans_depth,
                accumulated_first_bounce_distance: next.t,
                segment_length: next.t,
                with_shadow: state.with_shadow,
            };
            let li = self.indirect(&next, -bs.direction, next_state, rng, 0);
            radiance += li * bs.brdf * (bs.cos_theta / (bs.pdf * continuation));
        }
        radiance
    }

    fn pass_through(&self, hit: &Hit, wo: Vec3, state: PathState, rng: &mut RngStream, passes: usize) -> Rgb {
        if passes >= MAX_PASS_THROUGH {
            return Rgb::BLACK;
        }
        let dir = -wo;
        let mut next_state = state;
        if hit.watertight {
            next_state.trans_depth += 1;
        }
        let ray = Ray::new(hit.spawn_origin(dir), dir);
        match self.world.intersect(&ray) {
            None => Rgb::BLACK,
            Some(next) => {
                next_state.accumulated_first_bounce_distance += next.t + EPS_GEOM;
                next_state.segment_length = next.t;
                self.indirect(&next, wo, next_state, rng, passes + 1)
            }
        }
    }

    /// Radiance along a camera ray. Direct and indirect parts use independent
    /// sub-streams of `rng` (tags [`tag::DIRECT`] and [`tag::INDIRECT`]); the
    /// shadow-free and shadowed indirect estimates share one.
    pub fn est_radiance(&self, origin: Vec3, dir: Vec3, with_shadow: bool, rng: &RngStream) -> RadianceSample {
        let Some(hit) = self.world.intersect(&Ray::new(origin, dir)) else {
            return RadianceSample::default();
        };
        let wo = -dir;
        let direct = self.est_direct(&hit, wo, with_shadow, &mut rng.with_tag(tag::DIRECT));
        let shadowed = self.est_indirect(&hit, wo, PathState::camera(true, hit.t), &mut rng.with_tag(tag::INDIRECT));
        let indirect = if with_shadow {
            shadowed
        } else {
            self.est_indirect(&hit, wo, PathState::camera(false, hit.t), &mut rng.with_tag(tag::INDIRECT))
        };
        RadianceSample {
            direct,
            indirect,
            indirect_shadowed: shadowed,
        }
    }
}

/// Per-pixel linear radiance passes plus auxiliary geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct RadianceBuffers {
    pub width: usize,
    pub height: usize,
    pub spp: usize,
    pub dr_s: Vec<Rgb>,
    pub idr_s: Vec<Rgb>,
    pub dr_f: Vec<Rgb>,
    /// Raw shadow-free indirect estimate (already max-composed when
    /// `indirect_max` is per-sample).
    pub idr_f: Vec<Rgb>,
    /// Camera-space depth (distance along the optical axis) of the pixel-center hit; 0 on miss.
    pub depth: Vec<f64>,
    /// World-space unit normal of the pixel-center hit, facing the camera; zero on miss.
    pub normal: Vec<Vec3>,
    /// Variance of the per-pixel mean of `dr_s + idr_s`.
    pub shadow_var: Vec<Rgb>,
    pub indirect_max: IndirectMax,
}

impl RadianceBuffers {
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }
}

#[derive(Default, Clone, Copy)]
struct PixelAccum {
    dr_s: Rgb,
    idr_s: Rgb,
    dr_f: Rgb,
    idr_f: Rgb,
    sum: Rgb,
    sum_sq: Rgb,
    depth: f64,
    normal: Vec3,
}

/// Renders all passes for `camera`, building the acceleration structure first.
pub fn render_passes(scene: &Scene, camera: &CameraPose, settings: &RenderSettings) -> Result<RadianceBuffers> {
    camera.validate().map_err(Error::InvalidCamera)?;
    let world = World::build(scene);
    render_world(&world, camera, settings)
}

/// Renders on the current rayon pool; results do not depend on its size.
pub fn render_world(world: &World, camera: &CameraPose, settings: &RenderSettings) -> Result<RadianceBuffers> {
    camera.validate().map_err(Error::InvalidCamera)?;
    if settings.spp == 0 {
        return Err(Error::Invalid("spp must be at least 1".into()));
    }
    let (w, h) = (camera.width, camera.height);
    let integ = Integrator::new(world, *settings);
    let frame = camera.frame();
    let k = camera.intrinsics();

    let tiles_x = w.div_ceil(TILE);
    let tiles_y = h.div_ceil(TILE);
    let tiles: Vec<(usize, usize)> = (0..tiles_y).flat_map(|ty| (0..tiles_x).map(move |tx| (tx, ty))).collect();

    let results: Vec<Vec<(usize, PixelAccum)>> = tiles
        .par_iter()
        .map(|&(tx, ty)| {
            let mut out = Vec::with_capacity(TILE * TILE);
            for y in ty * TILE..((ty + 1) * TILE).min(h) {
                for x in tx * TILE..((tx + 1) * TILE).min(w) {
                    let pidx = y * w + x;
                    let mut acc = PixelAccum::default();

                    let center = camera.direction_with(&frame, &k, x as f64 + 0.5, y as f64 + 0.5);
                    if let Some(hit) = world.intersect(&Ray::new(camera.position, center)) {
                        acc.depth = hit.t * center.dot(frame.forward);
                        acc.normal = hit.facing(-center);
                    }

                    for s in 0..settings.spp {
                        let key = RngStream::new(settings.seed, pidx as u64, s as u64, tag::CAMERA);
                        let mut cam_rng = key.clone();
                        let px = x as f64 + cam_rng.next_f64();
                        let py = y as f64 + cam_rng.next_f64();
                        let dir = camera.direction_with(&frame, &k, px, py);
                        let Some(hit) = world.intersect(&Ray::new(camera.position, dir)) else {
                            continue;
                        };
                        let wo = -dir;
                        let (ds, df) = integ.direct_pair(&hit, wo, &mut key.with_tag(tag::DIRECT));
                        let is = integ.est_indirect(&hit, wo, PathState::camera(true, hit.t), &mut key.with_tag(tag::INDIRECT));
                        let mut if_ = integ.est_indirect(&hit, wo, PathState::camera(false, hit.t), &mut key.with_tag(tag::INDIRECT));
                        if settings.indirect_max == IndirectMax::PerSample {
                            if_ = if_.zip(is, f64::max);
                        }
                        acc.dr_s += ds;
                        acc.dr_f += df;
                        acc.idr_s += is;
                        acc.idr_f += if_;
                        let total = ds + is;
                        acc.sum += total;
                        acc.sum_sq += total * total;
                    }
                    out.push((pidx, acc));
                }
            }
            out
        })
        .collect();

    let n = w * h;
    let inv = 1.0 / settings.spp as f64;
    let mut buf = RadianceBuffers {
        width: w,
        height: h,
        spp: settings.spp,
        dr_s: vec![Rgb::BLACK; n],
        idr_s: vec![Rgb::BLACK; n],
        dr_f: vec![Rgb::BLACK; n],
        idr_f: vec![Rgb::BLACK; n],
        depth: vec![0.0; n],
        normal: vec![Vec3::ZERO; n],
        shadow_var: vec![Rgb::BLACK; n],
        indirect_max: settings.indirect_max,
    };
    let spp = settings.spp as f64;
    for (pidx, a) in results.into_iter().flatten() {
        buf.dr_s[pidx] = a.dr_s * inv;
        buf.dr_f[pidx] = a.dr_f * inv;
        buf.idr_s[pidx] = a.idr_s * inv;
        buf.idr_f[pidx] = a.idr_f * inv;
        buf.depth[pidx] = a.depth;
        buf.normal[pidx] = a.normal;
        buf.shadow_var[pidx] = if settings.spp > 1 {
            let mean = a.sum * inv;
            (a.sum_sq - mean * mean * spp).map(|v| v.max(0.0)) / (spp * (spp - 1.0))
        } else {
            Rgb::BLACK
        };
    }
    Ok(buf)
}
