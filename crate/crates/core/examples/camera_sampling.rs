//! Samples camera poses in procedurally furnished rooms and reports the
//! occupancy statistics that made each pose acceptable.

use shadowsynth::dataset::{occupancy, occupancy_stream, CameraSampler, RoomLayout};
use shadowsynth::rng::tag;
use shadowsynth::{build_accel, RngStream};

fn main() {
    let seed = 7;
    let layout = RoomLayout::default();
    let sampler = CameraSampler::default();

    for room_seed in 0..4u64 {
        let mut rng = RngStream::new(seed, room_seed, 0, tag::TEST);
        let scene = layout.generate(&mut rng);
        let world = build_accel(&scene);
        let room = &scene.rooms[0];
        let poses = sampler.sample(&scene, &world, 0, seed ^ room_seed);
        println!("room {room_seed}: {} pieces, {} poses", room.furniture.len(), poses.len());
        for pose in &poses {
            let stats = occupancy(&world, room, pose, sampler.rays, &mut occupancy_stream(seed ^ room_seed, pose));
            println!(
                "  at ({:.2}, {:.2}, {:.2}) pitch {:5.1} yaw {:5.1}: center {:.2} m, occupancy {:.1}%, largest {:.1}%",
                pose.position.x,
                pose.position.y,
                pose.position.z,
                pose.pitch,
                pose.yaw,
                stats.distance.unwrap_or(f64::NAN),
                100.0 * stats.total_fraction(),
                100.0 * stats.max_fraction()
            );
        }
    }
}
