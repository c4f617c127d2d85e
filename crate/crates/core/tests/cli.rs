mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::asset;
use shadowsynth::dataset::RoomLayout;
use shadowsynth::image::{read_image, write_image};
use shadowsynth::rng::tag;
use shadowsynth::scene::serialize_scene;
use shadowsynth::{Encoding, Image, RngStream};
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shadowsynth")).args(args).output().expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn render_into(out: &Path, threads: &str) -> Output {
    let scene = asset("cornell.toml");
    run(&[
        "render",
        path(&scene),
        "--seed",
        "3",
        "--spp",
        "2",
        "--width",
        "16",
        "--height",
        "12",
        "--threads",
        threads,
        "--out",
        path(out),
    ])
}

fn read(p: PathBuf) -> Vec<u8> {
    std::fs::read(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

const PASSES: [&str; 9] = [
    "dr_s.pfm", "idr_s.pfm", "dr_f.pfm", "idr_f.pfm", "depth.pfm", "normal.pfm", "I_s.pfm", "I_f.pfm", "mask.pfm",
];

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["paint"]), 1);
    assert_eq!(code(&["render"]), 1);
    assert_eq!(code(&["render", path(&asset("cornell.toml"))]), 1, "missing --seed");
    assert_eq!(code(&["genscenes", "."]), 1, "missing --seed");
    assert_eq!(code(&["render", "x.toml", "--seed", "abc"]), 1);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn invalid_inputs_exit_two() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    assert_eq!(code(&["render", "/no/such/scene.toml", "--seed", "1", "--out", path(&out)]), 2);

    let broken = dir.path().join("broken.toml");
    std::fs::write(&broken, "[[materials]]\nalbedo = [0.5, 0.5\n").unwrap();
    assert_eq!(code(&["render", path(&broken), "--seed", "1", "--out", path(&out)]), 2);

    let config = dir.path().join("job.toml");
    std::fs::write(&config, "sead = 3\n").unwrap();
    assert_eq!(code(&["--config", path(&config), "render", path(&asset("cornell.toml")), "--out", path(&out)]), 2);

    let empty = dir.path().join("no_assets");
    std::fs::create_dir(&empty).unwrap();
    assert_eq!(code(&["genscenes", path(&empty), "--seed", "1", "--out", path(&out)]), 2);
}

#[test]
fn unwritable_output_exits_three() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("occupied");
    std::fs::write(&file, "x").unwrap();
    let out = render_into(&file.join("sub"), "1");
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn render_is_deterministic_across_runs_and_threads() {
    let dir = TempDir::new().unwrap();
    let runs: Vec<PathBuf> = ["1", "1", "3"]
        .iter()
        .enumerate()
        .map(|(i, threads)| {
            let out = dir.path().join(format!("run{i}"));
            let o = render_into(&out, threads);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            out
        })
        .collect();
    for name in PASSES.iter().chain(&["I_s.png", "I_f.png", "mask.png"]) {
        let first = read(runs[0].join(name));
        for other in &runs[1..] {
            assert_eq!(first, read(other.join(name)), "{name}");
        }
    }
    let mask = read_image(runs[0].join("mask.pfm")).unwrap();
    assert_eq!((mask.width, mask.height, mask.channels), (16, 12, 1));
    assert!(mask.data.iter().all(|v| (0.0..=1.0).contains(v)));
    let manifest = std::fs::read_to_string(runs[0].join("manifest.toml")).unwrap();
    assert!(manifest.contains("command = \"render\""));
    assert!(manifest.contains("I_s.pfm"));
}

#[test]
fn seed_can_come_from_config() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("job.toml");
    std::fs::write(&config, "seed = 3\n[render]\nspp = 2\nwidth = 16\nheight = 12\n").unwrap();
    let a = dir.path().join("a");
    let o = run(&["--config", path(&config), "render", path(&asset("cornell.toml")), "--out", path(&a)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let b = dir.path().join("b");
    assert!(render_into(&b, "1").status.success());
    assert_eq!(read(a.join("I_s.pfm")), read(b.join("I_s.pfm")));
}

#[test]
fn mask_and_metrics_on_rendered_pair() {
    let dir = TempDir::new().unwrap();
    let r = dir.path().join("r");
    assert!(render_into(&r, "1").status.success());

    let m = dir.path().join("m");
    let o = run(&["mask", path(&r.join("I_s.pfm")), path(&r.join("I_f.pfm")), "--out", path(&m)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(m.join("mask.pfm")), read(r.join("mask.pfm")));

    let small = dir.path().join("small.pfm");
    write_image(&Image::new(4, 4, 3), &small, Encoding::LinearFloat).unwrap();
    assert_eq!(code(&["mask", path(&r.join("I_s.pfm")), path(&small), "--out", path(&m)]), 2);
    assert_eq!(code(&["mask", path(&r.join("I_s.pfm")), path(&r.join("I_f.pfm")), "--clip", "0", "--out", path(&m)]), 2);

    let o = run(&["metrics", path(&r.join("I_s.pfm")), path(&r.join("I_s.pfm")), "--out", path(&m)]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("psnr = inf") && text.contains("ssim = 1"), "{text}");
    assert_eq!(code(&["metrics", path(&r.join("I_s.pfm")), path(&small), "--out", path(&m)]), 2);
}

#[test]
fn genscenes_writes_valid_reproducible_scenes() {
    let dir = TempDir::new().unwrap();
    let assets = dir.path().join("assets");
    std::fs::create_dir(&assets).unwrap();
    std::fs::copy(asset("cube.obj"), assets.join("cube.obj")).unwrap();
    let outs: Vec<PathBuf> = (0..2)
        .map(|i| {
            let out = dir.path().join(format!("g{i}"));
            let o = run(&["genscenes", path(&assets), "--seed", "5", "--count", "3", "--out", path(&out)]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            out
        })
        .collect();
    for i in 0..3 {
        let name = format!("scene_{i:04}.toml");
        let text = read(outs[0].join(&name));
        assert_eq!(text, read(outs[1].join(&name)));
        let scene = shadowsynth::parse_scene(std::str::from_utf8(&text).unwrap()).unwrap();
        assert!(shadowsynth::scene::validate_scene(&scene).is_empty());
        assert!((3..=5).contains(&scene.furniture.len()));
    }
}

#[test]
fn prepare_emits_scenes_with_cameras() {
    let dir = TempDir::new().unwrap();
    let room = RoomLayout::default().generate(&mut RngStream::new(2, 0, 0, tag::SCENE_GEN));
    let input = dir.path().join("room.toml");
    std::fs::write(&input, serialize_scene(&room).unwrap()).unwrap();
    let outs: Vec<PathBuf> = (0..2)
        .map(|i| {
            let out = dir.path().join(format!("p{i}"));
            let o = run(&["prepare", path(&input), "--seed", "8", "--out", path(&out)]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            out
        })
        .collect();
    let manifest = std::fs::read_to_string(outs[0].join("manifest.toml")).unwrap();
    assert_eq!(manifest, std::fs::read_to_string(outs[1].join("manifest.toml")).unwrap());
    let mut names: Vec<_> = std::fs::read_dir(&outs[0])
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("prepared_"))
        .collect();
    names.sort();
    assert!(!names.is_empty(), "no prepared scene emitted");
    for name in &names {
        let scene = shadowsynth::load_scene(outs[0].join(name)).unwrap();
        assert!(scene.camera.is_some());
        assert!(scene.active_light_count() > 0);
    }

    let no_rooms = dir.path().join("bare.toml");
    std::fs::write(&no_rooms, "[[materials]]\n").unwrap();
    assert_eq!(code(&["prepare", path(&no_rooms), "--seed", "8", "--out", path(&outs[0])]), 2);
}

#[test]
fn attn_checks_window_divisibility() {
    let dir = TempDir::new().unwrap();
    let (w, h) = (8, 8);
    let depth = Image::from_gray(w, h, &(0..w * h).map(|i| 2.0 + 0.01 * i as f64).collect::<Vec<_>>());
    let features = Image::from_rgb(
        w,
        h,
        &(0..w * h).map(|i| shadowsynth::Rgb([1.0, (i % 5) as f64, (i % 3) as f64])).collect::<Vec<_>>(),
    );
    let dp = dir.path().join("depth.pfm");
    let fp = dir.path().join("features.pfm");
    write_image(&depth, &dp, Encoding::LinearFloat).unwrap();
    write_image(&features, &fp, Encoding::LinearFloat).unwrap();
    let out = dir.path().join("a");
    let o = run(&["attn", path(&dp), path(&fp), "--window", "4", "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["w_s.pfn", "w_g.pfn", "w.pfn", "attention.pfn"] {
        assert!(out.join(name).is_file(), "{name}");
    }
    assert_eq!(code(&["attn", path(&dp), path(&fp), "--window", "3", "--out", path(&out)]), 2);
    assert_eq!(code(&["attn", path(&fp), path(&fp), "--window", "4", "--out", path(&out)]), 2);
}
