//! On-disk formats for point clouds (`APC1` binary) and meshes (OBJ).

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::Point3;

use super::TriMesh;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"APC1";

/// Little-endian: magic `APC1`, `u32` count, then `count × 3` `f32`.
pub fn write_point_cloud<W: Write>(mut w: W, points: &[Point3<f64>]) -> Result<()> {
    w.write_all(MAGIC)?;
    let n = u32::try_from(points.len())
        .map_err(|_| Error::InvalidArgument("point cloud too large".into()))?;
    w.write_all(&n.to_le_bytes())?;
    for p in points {
        for c in p.iter() {
            w.write_all(&(*c as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_point_cloud<R: Read>(mut r: R) -> Result<Vec<Point3<f64>>> {
    let mut head = [0u8; 8];
    r.read_exact(&mut head).map_err(|_| parse("header", "truncated header"))?;
    if &head[..4] != MAGIC {
        return Err(parse("offset 0", "bad magic, expected APC1"));
    }
    let n = u32::from_le_bytes(head[4..8].try_into().unwrap()) as usize;
    let mut buf = vec![0u8; n * 12];
    r.read_exact(&mut buf)
        .map_err(|_| parse("offset 8", &format!("truncated payload for {n} points")))?;
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(parse(&format!("offset {}", 8 + n * 12), "trailing bytes"));
    }
    Ok(buf
        .chunks_exact(12)
        .map(|c| {
            let f = |i: usize| f32::from_le_bytes(c[i * 4..i * 4 + 4].try_into().unwrap()) as f64;
            Point3::new(f(0), f(1), f(2))
        })
        .collect())
}

pub fn save_point_cloud(path: &Path, points: &[Point3<f64>]) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_point_cloud(f, points)
}

pub fn load_point_cloud(path: &Path) -> Result<Vec<Point3<f64>>> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    read_point_cloud(f).map_err(|e| with_file(e, path))
}

/// Rounds every coordinate to the nearest `f32` so that the cloud survives
/// an `APC1` round trip unchanged.
pub fn quantize_f32(points: &mut [Point3<f64>]) {
    for p in points {
        for c in p.iter_mut() {
            *c = *c as f32 as f64;
        }
    }
}

pub fn write_obj<W: Write>(mut w: W, mesh: &TriMesh) -> Result<()> {
    for v in &mesh.vertices {
        writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for t in &mesh.triangles {
        writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}

/// Triangles only; `v`/`f` records are read, other records ignored.
pub fn read_obj(text: &str) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let loc = format!("line {}", i + 1);
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let coords: Vec<f64> = it
                    .take(3)
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| parse(&loc, &format!("bad vertex: {e}")))?;
                if coords.len() != 3 {
                    return Err(parse(&loc, "vertex needs three coordinates"));
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let idx: Vec<&str> = it.collect();
                if idx.len() != 3 {
                    return Err(parse(&loc, "only triangular faces are supported"));
                }
                let mut tri = [0u32; 3];
                for (slot, s) in tri.iter_mut().zip(idx) {
                    let head = s.split('/').next().unwrap_or("");
                    let k: i64 = head
                        .parse()
                        .map_err(|e| parse(&loc, &format!("bad face index: {e}")))?;
                    let k = if k < 0 { vertices.len() as i64 + k } else { k - 1 };
                    if k < 0 || k as usize >= vertices.len() {
                        return Err(parse(&loc, "face index out of range"));
                    }
                    *slot = k as u32;
                }
                triangles.push(tri);
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, triangles)
}

pub fn save_obj(path: &Path, mesh: &TriMesh) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_obj(f, mesh)
}

pub fn load_obj(path: &Path) -> Result<TriMesh> {
    let text = std::fs::read_to_string(path)?;
    read_obj(&text).map_err(|e| with_file(e, path))
}

fn parse(location: &str, message: &str) -> Error {
    Error::Parse {
        location: location.to_string(),
        message: message.to_string(),
    }
}

fn with_file(e: Error, path: &Path) -> Error {
    match e {
        Error::Parse { location, message } => Error::Parse {
            location: format!("{}:{location}", path.display()),
            message,
        },
        other => other,
    }
}
