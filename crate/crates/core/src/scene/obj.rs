//! Wavefront-style mesh reader (`v`, `vn`, `f`; everything else ignored).

use std::path::Path;

use log::warn;

use super::{MeshSource, TriangleMesh};
use crate::error::{Error, Result};
use crate::math::Vec3;

pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut mesh = parse_obj(&text, &path.display().to_string())?;
    mesh.source = MeshSource::File(path.display().to_string());
    Ok(mesh)
}

fn resolve(idx: &str, len: usize, name: &str, line: usize) -> Result<usize> {
    let err = |m: String| Error::Mesh {
        path: name.to_string(),
        message: format!("line {line}: {m}"),
    };
    let i: i64 = idx.parse().map_err(|_| err(format!("bad index {idx:?}")))?;
    let r = if i > 0 {
        i - 1
    } else if i < 0 {
        len as i64 + i
    } else {
        return Err(err("index 0 is invalid".into()));
    };
    if r < 0 || r as usize >= len {
        return Err(err(format!("index {i} out of range ({len} entries)")));
    }
    Ok(r as usize)
}

/// Parses OBJ text. Polygons are fan-triangulated; when a face carries vertex
/// normals, triangles are wound to agree with them. Degenerate triangles are
/// dropped with a warning.
pub fn parse_obj(text: &str, name: &str) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut vnormals = Vec::new();
    let mut triangles = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut it = content.split_whitespace();
        let Some(kw) = it.next() else { continue };
        let bad = |m: &str| Error::Mesh {
            path: name.to_string(),
            message: format!("line {line}: {m}"),
        };
        match kw {
            "v" | "vn" => {
                let c: Vec<f64> = it
                    .take(3)
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("malformed coordinate"))?;
                if c.len() != 3 {
                    return Err(bad("expected three coordinates"));
                }
                let p = Vec3::new(c[0], c[1], c[2]);
                if kw == "v" {
                    vertices.push(p);
                } else {
                    vnormals.push(p);
                }
            }
            "f" => {
                let mut corners = Vec::new();
                let mut normals = Vec::new();
                for tok in it {
                    let mut parts = tok.split('/');
                    let vi = resolve(parts.next().unwrap_or(""), vertices.len(), name, line)?;
                    corners.push(vi);
                    let _uv = parts.next();
                    if let Some(n) = parts.next().filter(|s| !s.is_empty()) {
                        normals.push(vnormals[resolve(n, vnormals.len(), name, line)?]);
                    }
                }
                if corners.len() < 3 {
                    return Err(bad(&format!("face with {} vertices cannot be triangulated", corners.len())));
                }
                let avg_n = if normals.len() == corners.len() {
                    Some(normals.iter().fold(Vec3::ZERO, |a, &n| a + n))
                } else {
                    None
                };
                for k in 1..corners.len() - 1 {
                    let mut t = [corners[0], corners[k], corners[k + 1]];
                    if let Some(n) = avg_n {
                        let g = (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]);
                        if g.dot(n) < 0.0 {
                            t.swap(1, 2);
                        }
                    }
                    triangles.push(t);
                }
            }
            _ => {}
        }
    }

    if triangles.is_empty() {
        return Err(Error::EmptyMesh(name.to_string()));
    }
    let (mesh, dropped) = TriangleMesh::from_triangles(vertices, triangles);
    if dropped > 0 {
        warn!("{name}: dropped {dropped} degenerate triangle(s)");
    }
    if mesh.triangles.is_empty() {
        return Err(Error::EmptyMesh(name.to_string()));
    }
    Ok(mesh)
}
