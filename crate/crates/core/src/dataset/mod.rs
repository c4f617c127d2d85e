//! Scene preparation for dataset generation.

pub mod cameras;
pub mod collision;
pub mod layout;
pub mod lights;
pub mod manifest;
pub mod objects;
pub mod rearrange;

pub use cameras::{occupancy, occupancy_stream, sample_cameras, CameraSampler, OccupancyStats, Rejection};
pub use collision::{triangles_intersect, CollisionMesh};
pub use layout::RoomLayout;
pub use lights::{place_lights, LightPlacement, LightPlacer};
pub use manifest::{content_hash, Manifest, ManifestItem};
pub use objects::{gen_object_scene, look_at, ObjectSceneConfig};
pub use rearrange::{find_collisions, rearrange, remove_furniture, Rearrangement};
