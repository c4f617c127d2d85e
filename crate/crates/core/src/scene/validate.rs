use std::fmt;

use super::{LightShape, MaterialKind, Scene, MIN_TRIANGLE_AREA};
use crate::math::{polygon_is_simple, triangle_area};

/// One broken invariant: which entity, and which rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub entity: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.rule)
    }
}

/// Checks every scene invariant. An empty list means the scene is valid.
pub fn validate_scene(scene: &Scene) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut report = |entity: String, rule: String| out.push(Violation { entity, rule });

    for (i, m) in scene.materials.iter().enumerate() {
        let e = format!("materials[{i}]");
        if !m.albedo.0.iter().all(|c| (0.0..=1.0).contains(c)) {
            report(e.clone(), format!("albedo {:?} outside [0, 1]", m.albedo.0));
        }
        if !m.emission.0.iter().all(|c| c.is_finite() && *c >= 0.0) {
            report(e.clone(), format!("emission {:?} must be finite and nonnegative", m.emission.0));
        }
        if m.kind == MaterialKind::Emissive && m.emission.is_black() {
            report(e, "emissive material with zero emission".into());
        }
    }

    for (i, m) in scene.meshes.iter().enumerate() {
        let e = format!("meshes[{i}]");
        if m.material >= scene.materials.len() {
            report(e.clone(), format!("material index {} out of range", m.material));
        }
        if m.triangles.is_empty() {
            report(e.clone(), "mesh has no triangles".into());
        }
        if let Some(v) = m.vertices.iter().position(|v| !v.is_finite()) {
            report(e.clone(), format!("vertex {v} is not finite"));
        }
        for (t, tri) in m.triangles.iter().enumerate() {
            if tri.iter().any(|&k| k >= m.vertices.len()) {
                report(format!("{e}.triangles[{t}]"), "vertex index out of range".into());
                continue;
            }
            let [a, b, c] = m.corners(t);
            let area = triangle_area(a, b, c);
            if !(area >= MIN_TRIANGLE_AREA) {
                report(format!("{e}.triangles[{t}]"), format!("degenerate triangle (area {area:e})"));
            }
        }
        if m.normals.len() != m.triangles.len() {
            report(e.clone(), "face normal count differs from triangle count".into());
        }
        if !m.vertices.iter().all(|&v| m.bounds.contains(v, 1e-9)) {
            report(e.clone(), "cached bounds do not contain all vertices".into());
        }
        if m.watertight && !m.is_closed() {
            report(e, "flagged watertight but has boundary or non-manifold edges".into());
        }
    }

    for (i, l) in scene.lights.iter().enumerate() {
        let e = format!("lights[{i}]");
        match &l.shape {
            LightShape::Point { position, intensity } | LightShape::Spot { position, intensity, .. } => {
                if !position.is_finite() {
                    report(e.clone(), "position is not finite".into());
                }
                if !intensity.0.iter().all(|c| c.is_finite() && *c >= 0.0) {
                    report(e.clone(), "intensity must be finite and nonnegative".into());
                }
            }
            LightShape::Area { mesh, radiance } => {
                if !radiance.0.iter().all(|c| c.is_finite() && *c >= 0.0) {
                    report(e.clone(), "radiance must be finite and nonnegative".into());
                }
                if *mesh >= scene.meshes.len() {
                    report(e.clone(), format!("mesh index {mesh} out of range"));
                }
            }
            LightShape::EmissiveMesh { mesh } => {
                if *mesh >= scene.meshes.len() {
                    report(e.clone(), format!("mesh index {mesh} out of range"));
                } else {
                    let mat = scene.meshes[*mesh].material;
                    if scene.materials.get(mat).is_some_and(|m| m.emission.is_black()) {
                        report(e.clone(), "emissive-mesh light on a material without emission".into());
                    }
                }
            }
        }
        if let LightShape::Spot { direction, cone_deg, .. } = &l.shape {
            if !(direction.length() > 0.0) {
                report(e.clone(), "spot direction is zero".into());
            }
            if !(*cone_deg > 0.0 && *cone_deg <= 180.0) {
                report(e.clone(), format!("cone_deg {cone_deg} outside (0, 180]"));
            }
        }
        if let Some(mesh) = l.mesh().filter(|&m| m < scene.meshes.len()) {
            if scene.meshes[mesh].area() < MIN_TRIANGLE_AREA {
                report(e.clone(), "area light geometry is degenerate".into());
            }
            if scene.mesh_is_instanced(mesh) {
                report(e, "light mesh must not be instanced as furniture".into());
            }
        }
    }

    // Emission has to be reachable by light sampling, otherwise the
    // direct/indirect split is biased.
    for (i, m) in scene.meshes.iter().enumerate() {
        let emissive = scene
            .materials
            .get(m.material)
            .is_some_and(|mat| mat.kind == MaterialKind::Emissive);
        let has_light = scene.lights.iter().any(|l| matches!(l.shape, LightShape::EmissiveMesh { mesh } if mesh == i));
        if emissive && !has_light {
            report(format!("meshes[{i}]"), "emissive material without an emissive-mesh light".into());
        }
    }

    for (i, r) in scene.rooms.iter().enumerate() {
        let e = format!("rooms[{i}]");
        if !(r.z1 > r.z0) {
            report(e.clone(), format!("ceiling z1={} must exceed floor z0={}", r.z1, r.z0));
        }
        if !polygon_is_simple(&r.boundary) {
            report(e.clone(), "boundary is not a simple polygon".into());
        }
        for &k in &r.furniture {
            if k >= scene.furniture.len() {
                report(e.clone(), format!("furniture index {k} out of range"));
            }
        }
    }

    for (i, f) in scene.furniture.iter().enumerate() {
        let e = format!("furniture[{i}]");
        if f.mesh >= scene.meshes.len() {
            report(e, format!("mesh index {} out of range", f.mesh));
            continue;
        }
        let expect = scene.compute_bbox2(f.mesh, &f.pose);
        if !f.bbox2.approx_eq(&expect, 1e-9) {
            report(e, "cached 2D bounding box does not match the transformed mesh".into());
        }
    }

    let rs = &scene.render;
    if !(rs.r > 0.0) {
        report("render".into(), format!("occlusion radius r={} must be positive", rs.r));
    }
    if rs.spp < 1 {
        report("render".into(), "spp must be at least 1".into());
    }
    if rs.max_bounce < 1 {
        report("render".into(), "max_bounce must be at least 1".into());
    }
    if !(rs.clip > 0.0) {
        report("render".into(), format!("clip threshold {} must be positive", rs.clip));
    }
    if let Some(c) = &scene.camera {
        if let Err(msg) = c.validate() {
            report("camera".into(), msg);
        }
    }
    out
}
