//! Pushes apart colliding furniture in a cluttered room.

use shadowsynth::dataset::{find_collisions, rearrange, RoomLayout};
use shadowsynth::rng::tag;
use shadowsynth::RngStream;

fn main() {
    let layout = RoomLayout {
        furniture: (8, 12),
        avoid_overlap: false,
        ..RoomLayout::default()
    };
    for seed in 0..5u64 {
        let scene = layout.generate(&mut RngStream::new(seed, 0, 0, tag::TEST));
        let before = find_collisions(&scene);
        let start = std::time::Instant::now();
        let result = rearrange(&scene);
        let after = find_collisions(&result.scene);
        let furthest = result.moved.iter().map(|m| m.1).fold(0.0, f64::max);
        println!(
            "room {seed}: {} pieces, {} colliding before, {} after; moved {} (max {:.2} m), removed {:?} in {:.0?}",
            scene.furniture.len(),
            before.len(),
            after.len(),
            result.moved.len(),
            furthest,
            result.removed,
            start.elapsed()
        );
    }
}
