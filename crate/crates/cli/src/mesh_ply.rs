//! ASCII PLY dump of the scene mesh with per-face albedo, emission, and
//! light-category properties.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use solo_core::mesh::TriangleMesh;

use crate::error::FormatError;

pub fn write_ply(path: &Path, mesh: &TriangleMesh) -> Result<(), FormatError> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "ply")?;
    writeln!(out, "format ascii 1.0")?;
    writeln!(out, "element vertex {}", mesh.vertices.len())?;
    writeln!(out, "property float x")?;
    writeln!(out, "property float y")?;
    writeln!(out, "property float z")?;
    writeln!(out, "element face {}", mesh.faces.len())?;
    writeln!(out, "property list uchar int vertex_indices")?;
    writeln!(out, "property float albedo_r")?;
    writeln!(out, "property float albedo_g")?;
    writeln!(out, "property float albedo_b")?;
    writeln!(out, "property uchar emissive")?;
    writeln!(out, "property float emit_x")?;
    writeln!(out, "property float emit_y")?;
    writeln!(out, "property float emit_z")?;
    writeln!(out, "property ushort category")?;
    writeln!(out, "end_header")?;
    for v in &mesh.vertices {
        writeln!(out, "{} {} {}", v.x as f32, v.y as f32, v.z as f32)?;
    }
    for (f, attrs) in mesh.faces.iter().zip(&mesh.attributes) {
        let a = attrs.albedo_rgb;
        let (emissive, emit) = match &attrs.emission {
            Some(e) => (1, e.radiance),
            None => (0, solo_core::math::Vec3::ZERO),
        };
        let category = attrs.light.map(|t| t.category.id()).unwrap_or(0);
        writeln!(
            out,
            "3 {} {} {} {} {} {} {} {} {} {} {}",
            f[0],
            f[1],
            f[2],
            a.x as f32,
            a.y as f32,
            a.z as f32,
            emissive,
            emit.x as f32,
            emit.y as f32,
            emit.z as f32,
            category
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use solo_core::camera::Intrinsics;
    use solo_core::raster::Raster;

    #[test]
    fn dump_is_well_formed() {
        let k = Intrinsics::new(8.0, 8.0, 1.5, 1.5);
        let depth = Raster::constant(4, 4, 1, 2.0);
        let grid = solo_core::mesh::backproject(&depth, &k).unwrap();
        let mesh = solo_core::mesh::triangulate_grid(&grid);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mesh.ply");
        write_ply(&path, &mesh).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("ply"));
        assert!(text.contains("element vertex 16"));
        assert!(text.contains("element face 18"));
        let body: Vec<&str> = text.split("end_header\n").nth(1).unwrap().lines().collect();
        assert_eq!(body.len(), 16 + 18);
        for face_line in &body[16..] {
            let fields: Vec<&str> = face_line.split_whitespace().collect();
            assert_eq!(fields.len(), 12);
            assert_eq!(fields[0], "3");
        }
    }
}
