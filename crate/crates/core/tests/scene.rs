mod common;

use common::{asset, cornell, object_scene, two_plane_scene};
use shadowsynth::dataset::RoomLayout;
use shadowsynth::rng::tag;
use shadowsynth::scene::{parse_scene_with_base, serialize_scene, validate_scene};
use shadowsynth::{parse_scene, Error, RngStream, Scene};

fn round_trip(scene: &Scene) -> Scene {
    let text = serialize_scene(scene).expect("serializes");
    parse_scene_with_base(&text, Some(&asset(""))).unwrap_or_else(|e| panic!("{e}\n{text}"))
}

#[test]
fn bundled_scene_is_valid() {
    let scene = cornell();
    assert!(validate_scene(&scene).is_empty(), "{:?}", validate_scene(&scene));
    assert_eq!(scene.furniture.len(), 2);
    assert_eq!(scene.active_light_count(), 1);
}

#[test]
fn serialize_then_parse_is_identity() {
    let mut scenes = vec![cornell(), object_scene(4)];
    for seed in 0..3 {
        scenes.push(RoomLayout::default().generate(&mut RngStream::new(seed, 0, 0, tag::SCENE_GEN)));
    }
    for scene in &scenes {
        let back = round_trip(scene);
        assert_eq!(&back, scene);
        assert_eq!(serialize_scene(&back).unwrap(), serialize_scene(scene).unwrap());
    }
}

#[test]
fn hand_built_scene_reaches_a_fixed_point() {
    // Image size follows the camera once parsed.
    let once = round_trip(&two_plane_scene(8));
    assert_eq!((once.render.width, once.render.height), (8, 8));
    assert_eq!(round_trip(&once), once);
}

#[test]
fn generated_scenes_satisfy_invariants() {
    for seed in 0..5 {
        let s = RoomLayout::default().generate(&mut RngStream::new(seed, 0, 0, tag::SCENE_GEN));
        assert!(validate_scene(&s).is_empty(), "room {seed}: {:?}", validate_scene(&s));
        let o = object_scene(seed);
        assert!(validate_scene(&o).is_empty(), "objects {seed}: {:?}", validate_scene(&o));
    }
}

#[test]
fn syntax_errors_carry_a_position() {
    let err = parse_scene("[[materials]]\nalbedo = [0.5, 0.5\n").unwrap_err();
    assert!(matches!(err, Error::Syntax { line: 2, .. }), "{err:?}");
}

#[test]
fn dangling_light_mesh_is_unresolved() {
    let text = r#"
[[materials]]
albedo = [0.5, 0.5, 0.5]

[[meshes]]
material = 0
inline = { vertices = [[0, 0, 0], [1, 0, 0], [0, 1, 0]], triangles = [[0, 1, 2]] }

[[lights]]
kind = "area"
mesh = 3
intensity = [1.0, 1.0, 1.0]
"#;
    let err = parse_scene(text).unwrap_err();
    assert!(matches!(err, Error::UnresolvedReference { index: 3, .. }), "{err:?}");
}

#[test]
fn missing_mesh_file_is_reported() {
    let text = "[[materials]]\n\n[[meshes]]\npath = \"nowhere.obj\"\nmaterial = 0\n";
    let err = parse_scene_with_base(text, Some(std::path::Path::new("/nonexistent"))).unwrap_err();
    assert!(matches!(err, Error::Io { .. } | Error::Mesh { .. }), "{err:?}");
}
