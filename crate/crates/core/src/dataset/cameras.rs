//! Camera pose sampling with viewport-occupancy constraints.
//!
//! A pose is accepted when the optical axis meets the scene inside the room
//! at a distance in `[1, 5]` m, furniture covers between 35% and 80% of a
//! set of random viewport rays, and no single piece covers more than 30%.

use crate::camera::CameraPose;
use crate::math::Vec3;
use crate::rng::{tag, RngStream};
use crate::scene::{Room, Scene};
use crate::tracer::{Ray, World};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraSampler {
    pub min_furniture: usize,
    pub attempts: usize,
    pub poses_per_room: usize,
    pub height: (f64, f64),
    pub pitch: (f64, f64),
    pub yaw: (f64, f64),
    pub center_distance: (f64, f64),
    pub occupancy: (f64, f64),
    pub max_single: f64,
    pub rays: usize,
    pub fov_deg: f64,
    pub width: usize,
    pub image_height: usize,
}

impl Default for CameraSampler {
    fn default() -> Self {
        CameraSampler {
            min_furniture: 5,
            attempts: 2000,
            poses_per_room: 2,
            height: (1.2, 1.8),
            pitch: (60.0, 120.0),
            yaw: (0.0, 180.0),
            center_distance: (1.0, 5.0),
            occupancy: (0.35, 0.8),
            max_single: 0.3,
            rays: 1024,
            fov_deg: 60.0,
            width: 256,
            image_height: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyStats {
    /// Hits per furniture piece of the room, in the room's furniture order.
    pub counts: Vec<usize>,
    pub rays: usize,
    /// Where the optical axis first meets the scene.
    pub center: Option<Vec3>,
    pub distance: Option<f64>,
}

impl OccupancyStats {
    pub fn total_fraction(&self) -> f64 {
        self.counts.iter().sum::<usize>() as f64 / self.rays as f64
    }

    pub fn max_fraction(&self) -> f64 {
        self.counts.iter().copied().max().unwrap_or(0) as f64 / self.rays as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    PoseRange,
    NoCenterHit,
    CenterOutsideRoom,
    CenterDistance,
    Occupancy,
    SingleFurniture,
}

/// Occupancy random stream for a pose. Identical poses give identical rays,
/// so a pose can be re-validated after the fact.
pub fn occupancy_stream(seed: u64, pose: &CameraPose) -> RngStream {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in [pose.position.x, pose.position.y, pose.position.z, pose.pitch, pose.yaw, pose.roll] {
        h ^= v.to_bits();
        h = h.wrapping_mul(0x0000_0100_0000_01b3).rotate_left(17);
    }
    RngStream::new(seed, h, 0, tag::OCCUPANCY)
}

/// Casts `rays` camera rays through uniformly random viewport points and
/// counts nearest hits per furniture piece of `room`.
pub fn occupancy(world: &World, room: &Room, pose: &CameraPose, rays: usize, rng: &mut RngStream) -> OccupancyStats {
    let frame = pose.frame();
    let k = pose.intrinsics();
    let mut counts = vec![0; room.furniture.len()];
    for _ in 0..rays {
        let px = rng.next_f64() * pose.width as f64;
        let py = rng.next_f64() * pose.height as f64;
        let dir = pose.direction_with(&frame, &k, px, py);
        if let Some(hit) = world.intersect(&Ray::new(pose.position, dir)) {
            if let Some(slot) = hit.furniture.and_then(|f| room.furniture.iter().position(|&g| g == f)) {
                counts[slot] += 1;
            }
        }
    }
    let center = world.intersect(&Ray::new(pose.position, frame.forward));
    OccupancyStats {
        counts,
        rays,
        center: center.as_ref().map(|h| h.point),
        distance: center.map(|h| h.t),
    }
}

impl CameraSampler {
    /// Angle ranges, zero roll, and camera height above the room floor.
    pub fn pose_in_range(&self, room: &Room, pose: &CameraPose) -> bool {
        let within = |v: f64, (lo, hi): (f64, f64)| (lo..=hi).contains(&v);
        pose.roll == 0.0
            && within(pose.pitch, self.pitch)
            && within(pose.yaw, self.yaw)
            && within(pose.position.z - room.z0, self.height)
    }

    /// Checks every acceptance condition for `pose` in `room`.
    pub fn check(&self, world: &World, room: &Room, pose: &CameraPose, seed: u64) -> Result<OccupancyStats, Rejection> {
        if !self.pose_in_range(room, pose) || !room.contains_xy(pose.position.x, pose.position.y) {
            return Err(Rejection::PoseRange);
        }
        let frame = pose.frame();
        let center = world.intersect(&Ray::new(pose.position, frame.forward)).ok_or(Rejection::NoCenterHit)?;
        if !room.contains(center.point, 1e-6) {
            return Err(Rejection::CenterOutsideRoom);
        }
        if !(self.center_distance.0..=self.center_distance.1).contains(&center.t) {
            return Err(Rejection::CenterDistance);
        }
        let stats = occupancy(world, room, pose, self.rays, &mut occupancy_stream(seed, pose));
        if stats.max_fraction() > self.max_single {
            return Err(Rejection::SingleFurniture);
        }
        let total = stats.total_fraction();
        if !(self.occupancy.0..=self.occupancy.1).contains(&total) {
            return Err(Rejection::Occupancy);
        }
        Ok(stats)
    }

    fn propose(&self, room: &Room, rng: &mut RngStream) -> CameraPose {
        let b = room.bounds_xy();
        CameraPose {
            position: Vec3::new(
                rng.uniform(b.min[0], b.max[0]),
                rng.uniform(b.min[1], b.max[1]),
                room.z0 + rng.uniform(self.height.0, self.height.1),
            ),
            pitch: rng.uniform(self.pitch.0, self.pitch.1),
            yaw: rng.uniform(self.yaw.0, self.yaw.1),
            roll: 0.0,
            fov_deg: self.fov_deg,
            width: self.width,
            height: self.image_height,
        }
    }

    /// Up to `poses_per_room` accepted poses for room `room_index`. Rooms
    /// with too little furniture yield none.
    pub fn sample(&self, scene: &Scene, world: &World, room_index: usize, seed: u64) -> Vec<CameraPose> {
        let room = &scene.rooms[room_index];
        if room.furniture.len() < self.min_furniture {
            return Vec::new();
        }
        let mut rng = RngStream::new(seed, room_index as u64, 0, tag::CAMERA_SEARCH);
        let mut poses = Vec::new();
        for _ in 0..self.poses_per_room {
            for _ in 0..self.attempts {
                let pose = self.propose(room, &mut rng);
                if self.check(world, room, &pose, seed).is_ok() {
                    poses.push(pose);
                    break;
                }
            }
        }
        poses
    }
}

/// Samples poses with default settings.
pub fn sample_cameras(scene: &Scene, world: &World, room_index: usize, seed: u64) -> Vec<CameraPose> {
    CameraSampler::default().sample(scene, world, room_index, seed)
}
