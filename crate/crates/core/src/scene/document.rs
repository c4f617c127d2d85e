//! Scene-description documents.
//!
//! The document is TOML. Top-level tables:
//!
//! ```toml
//! [[materials]]            # albedo | texture, emission, kind
//! albedo = [0.8, 0.8, 0.8]
//!
//! [[meshes]]               # path | inline, material, role, watertight
//! material = 0
//! role = "floor"
//! inline = { vertices = [[0,0,0],[1,0,0],[0,1,0]], triangles = [[0,1,2]] }
//!
//! [[lights]]               # kind, position | mesh, intensity, active
//! kind = "point"
//! position = [0, 0, 2]
//! intensity = [12.0, 12.0, 12.0]
//!
//! [[rooms]]                # boundary, z0, z1, furniture
//! [[furniture]]            # mesh, pose, label
//! [camera]                 # position, pitch, yaw, roll, fov_deg, width, height
//! [render]                 # spp, max_bounce, r, seed, clip, ...
//! ```
//!
//! Mesh and texture paths are resolved relative to the document's directory.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    load_mesh, validate_scene, FurnitureInstance, Light, LightShape, Material, MaterialKind, MeshRole, MeshSource,
    Pose, RenderSettings, Room, Scene, Texture, TriangleMesh,
};
use crate::camera::CameraPose;
use crate::error::{Error, Result};
use crate::math::{Rgb, Vec3};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneDoc {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    materials: Vec<MaterialDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    meshes: Vec<MeshDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    lights: Vec<LightDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    rooms: Vec<Room>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    furniture: Vec<FurnitureDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    camera: Option<CameraPose>,
    #[serde(default)]
    render: RenderSettings,
}

fn default_albedo() -> Rgb {
    Rgb::gray(0.8)
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialDoc {
    #[serde(default = "default_albedo")]
    albedo: Rgb,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    texture: Option<String>,
    #[serde(default)]
    emission: Rgb,
    #[serde(default)]
    kind: MaterialKind,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InlineMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    path: Option<String>,
    material: usize,
    #[serde(default)]
    role: MeshRole,
    #[serde(default)]
    watertight: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    inline: Option<InlineMesh>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum LightKindDoc {
    Point,
    Spot,
    Area,
    EmissiveMesh,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LightDoc {
    kind: LightKindDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    position: Option<Vec3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    direction: Option<Vec3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cone_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mesh: Option<usize>,
    /// Power for point/spot lights, radiance for area lights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    intensity: Option<Rgb>,
    #[serde(default = "default_true")]
    active: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FurnitureDoc {
    mesh: usize,
    pose: Pose,
    #[serde(default)]
    label: String,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |p| before.len() - p - 1) + 1;
    (line, column)
}

/// Parses a document whose relative paths resolve against the current directory.
pub fn parse_scene(text: &str) -> Result<Scene> {
    parse_scene_with_base(text, None)
}

/// Reads and parses a scene file; relative paths resolve against its directory.
pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scene_with_base(&text, path.parent())
}

fn check_ref(entity: String, field: &'static str, target: &'static str, index: usize, len: usize) -> Result<()> {
    if index < len {
        Ok(())
    } else {
        Err(Error::UnresolvedReference {
            entity,
            field,
            target,
            index,
        })
    }
}

fn required<T>(v: Option<T>, entity: &str, field: &str) -> Result<T> {
    v.ok_or_else(|| Error::Invalid(format!("{entity}: missing field `{field}`")))
}

pub fn parse_scene_with_base(text: &str, base: Option<&Path>) -> Result<Scene> {
    let doc: SceneDoc = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
        Error::Syntax {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    let resolve = |p: &str| -> PathBuf {
        match base {
            Some(b) if Path::new(p).is_relative() => b.join(p),
            _ => PathBuf::from(p),
        }
    };

    let mut materials = Vec::with_capacity(doc.materials.len());
    for m in doc.materials {
        let texture = match m.texture {
            Some(p) => Some(Texture {
                image: Arc::new(crate::image::read_image(resolve(&p))?),
                path: p,
            }),
            None => None,
        };
        materials.push(Material {
            albedo: m.albedo,
            emission: m.emission,
            kind: m.kind,
            texture,
        });
    }

    let mut meshes = Vec::with_capacity(doc.meshes.len());
    for (i, m) in doc.meshes.into_iter().enumerate() {
        check_ref(format!("meshes[{i}]"), "material", "material", m.material, materials.len())?;
        let mut mesh = match (m.path, m.inline) {
            (Some(p), None) => {
                let mut mesh = load_mesh(resolve(&p))?;
                mesh.source = MeshSource::File(p);
                mesh
            }
            (None, Some(inline)) => {
                if let Some(bad) = inline.triangles.iter().flatten().find(|&&k| k >= inline.vertices.len()) {
                    return Err(Error::Invalid(format!(
                        "meshes[{i}]: triangle index {bad} out of range ({} vertices)",
                        inline.vertices.len()
                    )));
                }
                let (mesh, dropped) = TriangleMesh::from_triangles(inline.vertices, inline.triangles);
                if dropped > 0 {
                    log::warn!("meshes[{i}]: dropped {dropped} degenerate triangle(s)");
                }
                if mesh.triangles.is_empty() {
                    return Err(Error::EmptyMesh(format!("meshes[{i}]")));
                }
                mesh
            }
            _ => {
                return Err(Error::Invalid(format!(
                    "meshes[{i}]: exactly one of `path` or `inline` is required"
                )))
            }
        };
        mesh.material = m.material;
        mesh.role = m.role;
        mesh.watertight = m.watertight;
        meshes.push(mesh);
    }

    let mut lights = Vec::with_capacity(doc.lights.len());
    for (i, l) in doc.lights.into_iter().enumerate() {
        let entity = format!("lights[{i}]");
        let shape = match l.kind {
            LightKindDoc::Point => LightShape::Point {
                position: required(l.position, &entity, "position")?,
                intensity: required(l.intensity, &entity, "intensity")?,
            },
            LightKindDoc::Spot => LightShape::Spot {
                position: required(l.position, &entity, "position")?,
                direction: required(l.direction, &entity, "direction")?,
                cone_deg: required(l.cone_deg, &entity, "cone_deg")?,
                intensity: required(l.intensity, &entity, "intensity")?,
            },
            LightKindDoc::Area => {
                let mesh = required(l.mesh, &entity, "mesh")?;
                check_ref(entity.clone(), "mesh", "mesh", mesh, meshes.len())?;
                LightShape::Area {
                    mesh,
                    radiance: required(l.intensity, &entity, "intensity")?,
                }
            }
            LightKindDoc::EmissiveMesh => {
                let mesh = required(l.mesh, &entity, "mesh")?;
                check_ref(entity.clone(), "mesh", "mesh", mesh, meshes.len())?;
                LightShape::EmissiveMesh { mesh }
            }
        };
        lights.push(Light {
            shape,
            active: l.active,
        });
    }

    let mut scene = Scene {
        meshes,
        materials,
        lights,
        rooms: doc.rooms,
        furniture: Vec::new(),
        camera: doc.camera,
        render: doc.render,
    };
    for (i, f) in doc.furniture.into_iter().enumerate() {
        check_ref(format!("furniture[{i}]"), "mesh", "mesh", f.mesh, scene.meshes.len())?;
        scene.add_furniture(f.mesh, f.pose, f.label);
    }
    for (i, r) in scene.rooms.iter().enumerate() {
        for &k in &r.furniture {
            check_ref(format!("rooms[{i}]"), "furniture", "furniture", k, scene.furniture.len())?;
        }
    }
    if let Some(cam) = scene.camera {
        scene.render.width = cam.width;
        scene.render.height = cam.height;
    }

    let violations = validate_scene(&scene);
    if !violations.is_empty() {
        let msg: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::Invalid(msg.join("; ")));
    }
    Ok(scene)
}

/// Serializes a scene back into a document. File-backed meshes and textures
/// are written as their original paths.
pub fn serialize_scene(scene: &Scene) -> Result<String> {
    let doc = SceneDoc {
        materials: scene
            .materials
            .iter()
            .map(|m| MaterialDoc {
                albedo: m.albedo,
                texture: m.texture.as_ref().map(|t| t.path.clone()),
                emission: m.emission,
                kind: m.kind,
            })
            .collect(),
        meshes: scene
            .meshes
            .iter()
            .map(|m| {
                let (path, inline) = match &m.source {
                    MeshSource::File(p) => (Some(p.clone()), None),
                    MeshSource::Inline => (
                        None,
                        Some(InlineMesh {
                            vertices: m.vertices.clone(),
                            triangles: m.triangles.clone(),
                        }),
                    ),
                };
                MeshDoc {
                    path,
                    material: m.material,
                    role: m.role,
                    watertight: m.watertight,
                    inline,
                }
            })
            .collect(),
        lights: scene
            .lights
            .iter()
            .map(|l| {
                let mut d = LightDoc {
                    kind: LightKindDoc::Point,
                    position: None,
                    direction: None,
                    cone_deg: None,
                    mesh: None,
                    intensity: None,
                    active: l.active,
                };
                match l.shape {
                    LightShape::Point { position, intensity } => {
                        d.position = Some(position);
                        d.intensity = Some(intensity);
                    }
                    LightShape::Spot {
                        position,
                        direction,
                        cone_deg,
                        intensity,
                    } => {
                        d.kind = LightKindDoc::Spot;
                        d.position = Some(position);
                        d.direction = Some(direction);
                        d.cone_deg = Some(cone_deg);
                        d.intensity = Some(intensity);
                    }
                    LightShape::Area { mesh, radiance } => {
                        d.kind = LightKindDoc::Area;
                        d.mesh = Some(mesh);
                        d.intensity = Some(radiance);
                    }
                    LightShape::EmissiveMesh { mesh } => {
                        d.kind = LightKindDoc::EmissiveMesh;
                        d.mesh = Some(mesh);
                    }
                }
                d
            })
            .collect(),
        rooms: scene.rooms.clone(),
        furniture: scene
            .furniture
            .iter()
            .map(|f: &FurnitureInstance| FurnitureDoc {
                mesh: f.mesh,
                pose: f.pose,
                label: f.label.clone(),
            })
            .collect(),
        camera: scene.camera,
        render: scene.render,
    };
    toml::to_string(&doc).map_err(|e| Error::Format(e.to_string()))
}
