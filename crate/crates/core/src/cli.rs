//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid input, 3 runtime failure.
//! Every randomized command requires `--seed`. Options given on the command
//! line override those from `--config`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array2;
use rayon::prelude::*;
use serde::Deserialize;

use crate::attention::{self, AttentionWindow, Combine};
use crate::camera::CameraIntrinsics;
use crate::compositor::{self, MaskMode, MaxRule};
use crate::dataset::manifest::{file_hash, OutputFile};
use crate::dataset::{self, CameraSampler, LightPlacer, Manifest, ManifestItem, ObjectSceneConfig};
use crate::error::Error;
use crate::image::{self, Encoding, Image};
use crate::integrator::render_passes;
use crate::math::{Rgb, Vec3};
use crate::rng::{tag, RngStream};
use crate::scene::{self, IndirectMax, Material, MeshSource, Scene};
use crate::tracer::World;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(Error),
    Runtime(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Input(e) => write!(f, "invalid input: {e}"),
            CliError::Runtime(e) => write!(f, "runtime failure: {e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn input<T>(r: crate::Result<T>) -> CliResult<T> {
    r.map_err(CliError::Input)
}

fn runtime<T>(r: crate::Result<T>) -> CliResult<T> {
    r.map_err(CliError::Runtime)
}

#[derive(Debug, Parser)]
#[command(name = "shadowsynth", version, about = "Render shadow / shadow-free image pairs and masks")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct CommonArgs {
    /// Seed for every random stream; required by randomized commands.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML job configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MaxRuleArg {
    PerChannel,
    Luminance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IndirectMaxArg {
    PerPixel,
    PerSample,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render the four radiance passes, the image pair and the shadow mask.
    Render(RenderArgs),
    /// Generate object-composition scenes from a directory of OBJ meshes.
    Genscenes(GenscenesArgs),
    /// Rearrange furniture, sample cameras and place lights for each room.
    Prepare(PrepareArgs),
    /// Shadow mask from a shadowed / shadow-free image pair.
    Mask(MaskArgs),
    /// PSNR and SSIM between two images.
    Metrics(MetricsArgs),
    /// Attention weights and outputs for depth and feature maps.
    Attn(AttnArgs),
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Scene description (TOML).
    pub scene: PathBuf,
    /// Samples per pixel; overrides the scene.
    #[arg(long)]
    pub spp: Option<usize>,
    /// Image width; overrides the camera.
    #[arg(long)]
    pub width: Option<usize>,
    /// Image height; overrides the camera.
    #[arg(long)]
    pub height: Option<usize>,
    /// Path length limit.
    #[arg(long)]
    pub max_bounce: Option<usize>,
    /// Occlusion radius in meters.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Where the shadow-free indirect maximum is taken.
    #[arg(long, value_enum)]
    pub indirect_max: Option<IndirectMaxArg>,
    /// How the brighter of two indirect values is chosen.
    #[arg(long, value_enum)]
    pub max_rule: Option<MaxRuleArg>,
    /// Compute the mask per channel, then average.
    #[arg(long)]
    pub per_channel_mask: bool,
}

#[derive(Debug, Args)]
pub struct GenscenesArgs {
    /// Directory of OBJ meshes.
    pub assets: PathBuf,
    /// Number of scenes [default: 1].
    #[arg(long)]
    pub count: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// Scene with furniture and room shells.
    pub scene: PathBuf,
    /// Camera poses kept per room [default: 2].
    #[arg(long)]
    pub poses_per_room: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    /// Shadowed image.
    pub shadowed: PathBuf,
    /// Shadow-free image.
    pub shadow_free: PathBuf,
    /// Lower clamp on the shadow-free luminance.
    #[arg(long)]
    pub clip: Option<f64>,
    /// Compute the mask per channel, then average.
    #[arg(long)]
    pub per_channel: bool,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Reference image.
    pub a: PathBuf,
    /// Image under test.
    pub b: PathBuf,
}

#[derive(Debug, Args)]
pub struct AttnArgs {
    /// Single-channel depth map (meters).
    pub depth: PathBuf,
    /// Feature map; resampled bilinearly to the depth resolution if needed.
    pub features: PathBuf,
    /// Three-channel camera-space normals; derived from depth when absent.
    #[arg(long)]
    pub normals: Option<PathBuf>,
    /// Window side in pixels; must divide both image dimensions [default: 16].
    #[arg(long)]
    pub window: Option<usize>,
    /// Bandwidth of the geometric weight.
    #[arg(long)]
    pub sigma_g: Option<f64>,
    /// Horizontal field of view of the depth camera, in degrees.
    #[arg(long)]
    pub fov: Option<f64>,
    /// Multiply the weight matrices instead of combining them elementwise.
    #[arg(long)]
    pub matrix_product: bool,
}

/// Settings read from `--config`. Command-line flags take precedence.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub render: RenderOverrides,
    pub count: Option<usize>,
    pub poses_per_room: Option<usize>,
    pub clip: Option<f64>,
    pub window: Option<usize>,
    pub sigma_g: Option<f64>,
    pub fov: Option<f64>,
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderOverrides {
    pub spp: Option<usize>,
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub max_bounce: Option<usize>,
    pub r: Option<f64>,
    pub rr_start_bounce: Option<usize>,
    pub indirect_max: Option<IndirectMax>,
}

impl JobConfig {
    pub fn load(path: &Path) -> CliResult<JobConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(Error::io(path, e)))?;
        toml::from_str(&text).map_err(|e| CliError::Input(Error::Format(format!("{}: {e}", path.display()))))
    }
}

struct Job {
    seed: Option<u64>,
    out: PathBuf,
    config: JobConfig,
}

impl Job {
    fn seed(&self, command: &str) -> CliResult<u64> {
        self.seed
            .ok_or_else(|| CliError::Usage(format!("`{command}` is randomized and requires --seed")))
    }

    fn out_dir(&self) -> CliResult<&Path> {
        std::fs::create_dir_all(&self.out).map_err(|e| CliError::Runtime(Error::io(&self.out, e)))?;
        Ok(&self.out)
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    let config = match &cli.common.config {
        Some(p) => JobConfig::load(p)?,
        None => JobConfig::default(),
    };
    let job = Job {
        seed: cli.common.seed.or(config.seed),
        out: cli.common.out.clone().or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from("out")),
        config: config.clone(),
    };
    let threads = cli.common.threads.or(config.threads).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Runtime(Error::Invalid(e.to_string())))?;
    pool.install(|| match &cli.command {
        Command::Render(a) => cmd_render(&job, a),
        Command::Genscenes(a) => cmd_genscenes(&job, a),
        Command::Prepare(a) => cmd_prepare(&job, a),
        Command::Mask(a) => cmd_mask(&job, a),
        Command::Metrics(a) => cmd_metrics(&job, a),
        Command::Attn(a) => cmd_attn(&job, a),
    })
}

fn record(dir: &Path, name: &str) -> CliResult<OutputFile> {
    Ok(OutputFile {
        path: name.to_string(),
        sha256: runtime(file_hash(dir.join(name)))?,
    })
}

/// Writes the manifest to the configured path, or `manifest.toml` in `dir`.
fn write_manifest(job: &Job, dir: &Path, manifest: &Manifest) -> CliResult<()> {
    let text = runtime(manifest.to_toml())?;
    let path = job.config.manifest.clone().unwrap_or_else(|| dir.join("manifest.toml"));
    runtime(image::write_atomic(&path, text.as_bytes()))
}

fn cmd_render(job: &Job, a: &RenderArgs) -> CliResult<()> {
    let seed = job.seed("render")?;
    let mut scene = input(scene::load_scene(&a.scene))?;
    let ov = &job.config.render;
    let mut settings = scene.render;
    settings.seed = seed;
    if let Some(v) = a.spp.or(ov.spp) {
        settings.spp = v;
    }
    if let Some(v) = a.max_bounce.or(ov.max_bounce) {
        settings.max_bounce = v;
    }
    if let Some(v) = a.radius.or(ov.r) {
        settings.r = v;
    }
    if let Some(v) = ov.rr_start_bounce {
        settings.rr_start_bounce = v;
    }
    if let Some(v) = a.indirect_max.map(|m| match m {
        IndirectMaxArg::PerPixel => IndirectMax::PerPixel,
        IndirectMaxArg::PerSample => IndirectMax::PerSample,
    }) {
        settings.indirect_max = v;
    } else if let Some(v) = ov.indirect_max {
        settings.indirect_max = v;
    }
    let mut camera = scene
        .camera
        .clone()
        .ok_or_else(|| CliError::Input(Error::InvalidCamera("scene has no camera".into())))?;
    if let Some(w) = a.width.or(ov.width) {
        camera.width = w;
    }
    if let Some(h) = a.height.or(ov.height) {
        camera.height = h;
    }
    settings.width = camera.width;
    settings.height = camera.height;
    if settings.spp == 0 || settings.max_bounce == 0 || !(settings.r > 0.0) {
        return Err(CliError::Input(Error::Invalid("spp, max_bounce and radius must be positive".into())));
    }
    input(camera.validate().map_err(Error::InvalidCamera))?;
    scene.render = settings;
    if scene.active_light_count() == 0 {
        log::warn!("scene has no active light; radiance buffers will be black");
    }

    let buffers = runtime(render_passes(&scene, &camera, &settings))?;
    let rule = match a.max_rule {
        Some(MaxRuleArg::Luminance) => MaxRule::Luminance,
        _ => MaxRule::PerChannel,
    };
    let pair = runtime(compositor::compose_pair_with(&buffers, rule))?;
    let (shadowed, free) = (pair.shadowed_image(), pair.shadow_free_image());
    let mode = if a.per_channel_mask {
        MaskMode::PerChannelMean
    } else {
        MaskMode::Luminance
    };
    let mask = runtime(compositor::shadow_mask_with(&shadowed, &free, settings.clip, mode))?;
    let (w, h) = (buffers.width, buffers.height);
    let depth = Image::from_gray(w, h, &buffers.depth);
    let normal = Image::from_rgb(w, h, &buffers.normal.iter().map(|n| Rgb([n.x, n.y, n.z])).collect::<Vec<_>>());

    let dir = job.out_dir()?;
    let [dr_s, idr_s, dr_f, idr_f] = compositor::pass_images(&buffers);
    let linear = [
        ("dr_s.pfm", &dr_s),
        ("idr_s.pfm", &idr_s),
        ("dr_f.pfm", &dr_f),
        ("idr_f.pfm", &idr_f),
        ("depth.pfm", &depth),
        ("normal.pfm", &normal),
        ("I_s.pfm", &shadowed),
        ("I_f.pfm", &free),
        ("mask.pfm", &mask),
    ];
    let mut outputs = Vec::new();
    for (name, img) in linear {
        runtime(image::write_image(img, dir.join(name), Encoding::LinearFloat))?;
        outputs.push(record(dir, name)?);
    }
    runtime(image::write_image(&compositor::tonemap(&shadowed), dir.join("I_s.png"), Encoding::Srgb8))?;
    runtime(image::write_image(&compositor::tonemap(&free), dir.join("I_f.png"), Encoding::Srgb8))?;
    runtime(image::write_mask_png(&mask, dir.join("mask.png")))?;
    for name in ["I_s.png", "I_f.png", "mask.png"] {
        outputs.push(record(dir, name)?);
    }
    write_manifest(
        job,
        dir,
        &Manifest {
            command: "render".into(),
            seed: Some(seed),
            settings: Some(settings),
            items: vec![ManifestItem {
                scene: a.scene.display().to_string(),
                seed,
                room: None,
                objects: None,
                camera: Some(camera),
                lights: (0..scene.lights.len()).filter(|&i| scene.lights[i].active).collect(),
                removed_furniture: Vec::new(),
                outputs: Vec::new(),
            }],
            outputs,
        },
    )
}

fn load_assets(dir: &Path) -> CliResult<Vec<scene::TriangleMesh>> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Input(Error::io(dir, e)))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("obj")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Input(Error::EmptyAssets));
    }
    paths.iter().map(|p| input(scene::load_mesh(p))).collect()
}

/// Six diffuse face materials drawn from `rng`.
pub fn face_materials(rng: &mut RngStream) -> Vec<Material> {
    (0..6)
        .map(|_| Material::lambertian(Rgb([rng.uniform(0.3, 0.9), rng.uniform(0.3, 0.9), rng.uniform(0.3, 0.9)])))
        .collect()
}

fn cmd_genscenes(job: &Job, a: &GenscenesArgs) -> CliResult<()> {
    let seed = job.seed("genscenes")?;
    let count = a.count.or(job.config.count).unwrap_or(1);
    let assets = load_assets(&a.assets)?;
    let cfg = ObjectSceneConfig::default();
    let scenes: Vec<CliResult<(String, usize)>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, i as u64, 0, tag::SCENE_GEN);
            let faces = face_materials(&mut rng);
            let mut s = runtime(cfg.generate(&assets, &faces, &mut rng))?;
            s.render.seed = seed;
            let violations = scene::validate_scene(&s);
            if !violations.is_empty() {
                let joined = violations.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ");
                return Err(CliError::Runtime(Error::Invalid(joined)));
            }
            Ok((runtime(scene::serialize_scene(&s))?, s.furniture.len()))
        })
        .collect();
    let dir = job.out_dir()?;
    let mut items = Vec::new();
    for (i, s) in scenes.into_iter().enumerate() {
        let (text, objects) = s?;
        let name = format!("scene_{i:04}.toml");
        runtime(image::write_atomic(&dir.join(&name), text.as_bytes()))?;
        items.push(ManifestItem {
            outputs: vec![record(dir, &name)?],
            scene: name,
            seed,
            room: None,
            objects: Some(objects),
            camera: None,
            lights: Vec::new(),
            removed_furniture: Vec::new(),
        });
    }
    write_manifest(
        job,
        dir,
        &Manifest {
            command: "genscenes".into(),
            seed: Some(seed),
            settings: None,
            items,
            outputs: Vec::new(),
        },
    )
}

/// Makes file references absolute so the document can be written elsewhere.
fn absolutize(scene: &mut Scene, base: &Path) {
    let fix = |p: &mut String| {
        let path = Path::new(p.as_str());
        if path.is_relative() {
            let joined = base.join(path);
            *p = joined.canonicalize().unwrap_or(joined).display().to_string();
        }
    };
    for m in &mut scene.meshes {
        if let MeshSource::File(p) = &mut m.source {
            fix(p);
        }
    }
    for m in &mut scene.materials {
        if let Some(t) = &mut m.texture {
            fix(&mut t.path);
        }
    }
}

fn cmd_prepare(job: &Job, a: &PrepareArgs) -> CliResult<()> {
    let seed = job.seed("prepare")?;
    let mut scene = input(scene::load_scene(&a.scene))?;
    if scene.rooms.is_empty() {
        return Err(CliError::Input(Error::Invalid("scene has no rooms".into())));
    }
    absolutize(&mut scene, a.scene.parent().unwrap_or(Path::new(".")));
    let arranged = dataset::rearrange(&scene);
    if !arranged.removed.is_empty() {
        log::info!("removed furniture {:?}", arranged.removed);
    }
    let scene = arranged.scene;
    let world = World::build(&scene);
    let sampler = CameraSampler {
        poses_per_room: a.poses_per_room.or(job.config.poses_per_room).unwrap_or(2),
        width: scene.render.width,
        image_height: scene.render.height,
        ..CameraSampler::default()
    };
    let placer = LightPlacer::default();
    let per_room: Vec<Vec<(usize, usize, Scene, ManifestItem)>> = (0..scene.rooms.len())
        .into_par_iter()
        .map(|room| {
            let poses = sampler.sample(&scene, &world, room, seed);
            poses
                .into_iter()
                .enumerate()
                .filter_map(|(k, pose)| {
                    let stats = sampler.check(&world, &scene.rooms[room], &pose, seed).ok()?;
                    let center = stats.center?;
                    let mut rng = RngStream::new(seed, room as u64, k as u64, tag::LIGHTS);
                    let (mut s, placement) = placer.place(&scene, room, &pose, center, &mut rng);
                    s.camera = Some(pose.clone());
                    s.render.seed = seed;
                    let lights = (0..s.lights.len()).filter(|&i| s.lights[i].active).collect();
                    log::debug!("room {room} camera {k}: {placement:?}");
                    Some((
                        room,
                        k,
                        s,
                        ManifestItem {
                            scene: String::new(),
                            seed,
                            room: Some(room),
                            objects: None,
                            camera: Some(pose),
                            lights,
                            removed_furniture: arranged.removed.clone(),
                            outputs: Vec::new(),
                        },
                    ))
                })
                .collect()
        })
        .collect();

    let dir = job.out_dir()?;
    let mut items = Vec::new();
    for (room, k, s, mut item) in per_room.into_iter().flatten() {
        let name = format!("prepared_r{room:02}_c{k}.toml");
        let text = runtime(scene::serialize_scene(&s))?;
        runtime(image::write_atomic(&dir.join(&name), text.as_bytes()))?;
        item.outputs.push(record(dir, &name)?);
        item.scene = name;
        items.push(item);
    }
    if items.is_empty() {
        eprintln!("notice: no valid camera in any room; nothing emitted");
    }
    write_manifest(
        job,
        dir,
        &Manifest {
            command: "prepare".into(),
            seed: Some(seed),
            settings: None,
            items,
            outputs: Vec::new(),
        },
    )
}

fn cmd_mask(job: &Job, a: &MaskArgs) -> CliResult<()> {
    let shadowed = input(image::read_image(&a.shadowed))?;
    let free = input(image::read_image(&a.shadow_free))?;
    let clip = a.clip.or(job.config.clip).unwrap_or(compositor::MASK_CLIP_FLOOR);
    if !(clip > 0.0) {
        return Err(CliError::Input(Error::Invalid("clip must be positive".into())));
    }
    let mode = if a.per_channel {
        MaskMode::PerChannelMean
    } else {
        MaskMode::Luminance
    };
    let mask = input(compositor::shadow_mask_with(&shadowed, &free, clip, mode))?;
    let dir = job.out_dir()?;
    runtime(image::write_image(&mask, dir.join("mask.pfm"), Encoding::LinearFloat))?;
    runtime(image::write_mask_png(&mask, dir.join("mask.png")))?;
    let outputs = vec![record(dir, "mask.pfm")?, record(dir, "mask.png")?];
    write_manifest(
        job,
        dir,
        &Manifest {
            command: "mask".into(),
            seed: None,
            settings: None,
            items: Vec::new(),
            outputs,
        },
    )
}

fn cmd_metrics(job: &Job, a: &MetricsArgs) -> CliResult<()> {
    let x = compositor::tonemap(&input(image::read_image(&a.a))?);
    let y = compositor::tonemap(&input(image::read_image(&a.b))?);
    let psnr = input(compositor::psnr(&x, &y))?;
    let ssim = input(compositor::ssim(&x, &y))?;
    let line = format!("psnr = {}\nssim = {ssim}\n", if psnr.is_finite() { psnr.to_string() } else { "inf".into() });
    print!("{line}");
    let dir = job.out_dir()?;
    runtime(image::write_atomic(&dir.join("metrics.toml"), line.as_bytes()))
}

fn cmd_attn(job: &Job, a: &AttnArgs) -> CliResult<()> {
    let depth_img = input(image::read_image(&a.depth))?;
    if depth_img.channels != 1 {
        return Err(CliError::Input(Error::DimensionMismatch(format!(
            "depth must have 1 channel, found {}",
            depth_img.channels
        ))));
    }
    let (w, h) = (depth_img.width, depth_img.height);
    let m = a.window.or(job.config.window).unwrap_or(16);
    if m == 0 || w % m != 0 || h % m != 0 {
        return Err(CliError::Input(Error::DimensionMismatch(format!(
            "{w}x{h} is not divisible into {m}x{m} windows"
        ))));
    }
    let fov = a.fov.or(job.config.fov).unwrap_or(60.0);
    let sigma = a.sigma_g.or(job.config.sigma_g).unwrap_or(attention::DEFAULT_SIGMA_G);
    let fx = 0.5 * w as f64 / (0.5 * fov.to_radians()).tan();
    let k = CameraIntrinsics {
        fx,
        fy: fx,
        cx: 0.5 * w as f64,
        cy: 0.5 * h as f64,
    };
    let depth: Vec<f64> = depth_img.data.iter().map(|&v| v as f64).collect();
    let points = input(attention::backproject(&depth, w, h, &k))?;
    let normals = match &a.normals {
        Some(p) => {
            let n = input(image::read_image(p))?;
            if n.width != w || n.height != h || n.channels != 3 {
                return Err(CliError::Input(Error::DimensionMismatch("normal map must be 3 channels at depth resolution".into())));
            }
            (0..w * h)
                .map(|i| {
                    let c = n.rgb(i);
                    Vec3::new(c.0[0], c.0[1], c.0[2]).normalized()
                })
                .collect()
        }
        None => attention::normals_from_depth(&points),
    };

    let feat_img = input(image::read_image(&a.features))?;
    let c = feat_img.channels;
    let mut planes = vec![0f32; c * feat_img.width * feat_img.height];
    for (i, v) in feat_img.data.iter().enumerate() {
        let (px, ch) = (i / c, i % c);
        planes[ch * feat_img.width * feat_img.height + px] = *v;
    }
    let planes = if feat_img.width != w || feat_img.height != h {
        input(attention::resample_bilinear(&planes, c, feat_img.width, feat_img.height, w, h))?
    } else {
        planes
    };
    let mode = if a.matrix_product {
        Combine::MatrixProduct
    } else {
        Combine::Elementwise
    };

    let windows = attention::partition_windows(w, h, m);
    let n = m * m;
    let results: Vec<CliResult<[Vec<f64>; 4]>> = windows
        .par_iter()
        .map(|idx| {
            let feats = Array2::from_shape_fn((idx.len(), c), |(r, ch)| planes[ch * w * h + idx[r]] as f64);
            let pts: Vec<Vec3> = idx.iter().map(|&i| points.points[i]).collect();
            let nrm: Vec<Vec3> = idx.iter().map(|&i| normals[i]).collect();
            let (ws, _) = attention::semantic_weights(&feats);
            let wg = attention::geometric_weights(&attention::pdist_matrix(&pts, &nrm), sigma);
            let wgt = input(attention::combine_weights(&ws, &wg, mode))?;
            let out = input(attention::modulated_attention(&AttentionWindow::self_attention(feats), &wgt))?;
            Ok([ws, wg, wgt, out].map(|a| a.iter().copied().collect()))
        })
        .collect();

    let mut stacks = [Vec::new(), Vec::new(), Vec::new()];
    let mut output = vec![0f32; c * w * h];
    for (idx, r) in windows.iter().zip(results) {
        let [ws, wg, wgt, out] = r?;
        for (stack, mat) in stacks.iter_mut().zip([ws, wg, wgt]) {
            stack.push(mat);
        }
        for (row, &pixel) in idx.iter().enumerate() {
            for ch in 0..c {
                output[ch * w * h + pixel] = out[row * c + ch] as f32;
            }
        }
    }

    let dir = job.out_dir()?;
    let mut outputs = Vec::new();
    for (name, stack) in ["w_s.pfn", "w_g.pfn", "w.pfn"].into_iter().zip(stacks) {
        let img = planar_stack(n, &stack);
        runtime(image::write_planar(&img, dir.join(name)))?;
        outputs.push(record(dir, name)?);
    }
    let mut out_img = Image::new(w, h, c);
    for ch in 0..c {
        for p in 0..w * h {
            out_img.data[p * c + ch] = output[ch * w * h + p];
        }
    }
    runtime(image::write_planar(&out_img, dir.join("attention.pfn")))?;
    outputs.push(record(dir, "attention.pfn")?);
    write_manifest(
        job,
        dir,
        &Manifest {
            command: "attn".into(),
            seed: None,
            settings: None,
            items: Vec::new(),
            outputs,
        },
    )
}

/// One `n x n` plane per window, stored as channels.
fn planar_stack(n: usize, mats: &[Vec<f64>]) -> Image {
    let c = mats.len();
    let mut img = Image::new(n, n, c);
    for (ch, mat) in mats.iter().enumerate() {
        for (p, v) in mat.iter().enumerate() {
            img.data[p * c + ch] = *v as f32;
        }
    }
    img
}
