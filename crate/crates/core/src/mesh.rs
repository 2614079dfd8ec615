//! Metric triangle mesh construction from a refined depth map, removal of
//! spurious faces at depth discontinuities, and restoration of a closed surface.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::camera::Intrinsics;
use crate::depth::UncertainMask;
use crate::error::CoreError;
use crate::lights::{LightCategory, LightMask};
use crate::math::Vec3;
use crate::raster::{IdMask, Raster};

/// Camera-frame vertex positions laid out on the pixel grid.
#[derive(Clone, Debug)]
pub struct VertexGrid {
    pub width: usize,
    pub height: usize,
    pub points: Vec<Vec3>,
}

impl VertexGrid {
    #[inline]
    pub fn point(&self, u: usize, v: usize) -> Vec3 {
        self.points[v * self.width + u]
    }
}

/// Lifts every pixel of the depth map through the inverse calibration matrix.
pub fn backproject(depth: &Raster, intrinsics: &Intrinsics) -> Result<VertexGrid, CoreError> {
    assert_eq!(depth.channels(), 1);
    let (w, h) = (depth.width(), depth.height());
    let mut points = Vec::with_capacity(w * h);
    for v in 0..h {
        for u in 0..w {
            let d = depth.get(u, v, 0);
            if !(d > 0.0) {
                return Err(CoreError::NonPositiveDepth);
            }
            points.push(intrinsics.backproject(u as f64, v as f64, d));
        }
    }
    Ok(VertexGrid { width: w, height: h, points })
}

/// Distinguishes reconstructed surface from the synthetic closure geometry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceKind {
    Surface,
    Backdrop,
}

/// Light-source tag inherited from the light mask.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LightFaceTag {
    pub category: LightCategory,
    pub instance: u16,
}

/// Emission attached to an active light face (or the sky).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Emission {
    /// Emitted radiance in XYZ at normal incidence.
    pub radiance: Vec3,
    /// Light-surface normal the directionality falloff is measured against.
    pub normal: Vec3,
}

#[derive(Clone, Debug)]
pub struct FaceAttributes {
    pub albedo_rgb: Vec3,
    pub normal: Vec3,
    pub kind: FaceKind,
    pub light: Option<LightFaceTag>,
    pub emission: Option<Emission>,
    pub sky: bool,
    /// Grid pixels this face was triangulated from; None for closure geometry.
    pub source_pixels: Option<[[u32; 2]; 3]>,
}

impl FaceAttributes {
    fn surface(normal: Vec3, source: [[u32; 2]; 3]) -> Self {
        FaceAttributes {
            albedo_rgb: Vec3::splat(0.5),
            normal,
            kind: FaceKind::Surface,
            light: None,
            emission: None,
            sky: false,
            source_pixels: Some(source),
        }
    }

    fn backdrop(normal: Vec3, albedo: f64) -> Self {
        FaceAttributes {
            albedo_rgb: Vec3::splat(albedo),
            normal,
            kind: FaceKind::Backdrop,
            light: None,
            emission: None,
            sky: false,
            source_pixels: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[u32; 3]>,
    pub attributes: Vec<FaceAttributes>,
}

impl TriangleMesh {
    pub fn face_normal(vertices: &[Vec3], face: [u32; 3]) -> Vec3 {
        let a = vertices[face[0] as usize];
        let b = vertices[face[1] as usize];
        let c = vertices[face[2] as usize];
        (b - a).cross(c - a).normalized()
    }

    pub fn face_area(&self, i: usize) -> f64 {
        let f = self.faces[i];
        let a = self.vertices[f[0] as usize];
        let b = self.vertices[f[1] as usize];
        let c = self.vertices[f[2] as usize];
        0.5 * (b - a).cross(c - a).length()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|i| self.face_area(i)).sum()
    }

    pub fn area_of_kind(&self, kind: FaceKind) -> f64 {
        (0..self.faces.len())
            .filter(|&i| self.attributes[i].kind == kind)
            .map(|i| self.face_area(i))
            .sum()
    }

    /// Appends a standalone emissive quad (two triangles). Used for the
    /// ego-vehicle head lights, which are not part of the reconstructed surface.
    pub fn push_emissive_quad(&mut self, corners: [Vec3; 4], normal: Vec3, radiance: Vec3) {
        let base = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&corners);
        for tri in [[base, base + 1, base + 2], [base, base + 2, base + 3]] {
            self.faces.push(tri);
            self.attributes.push(FaceAttributes {
                albedo_rgb: Vec3::ZERO,
                normal,
                kind: FaceKind::Surface,
                light: None,
                emission: Some(Emission { radiance, normal }),
                sky: false,
                source_pixels: None,
            });
        }
    }
}

const DEGENERATE_AREA: f64 = 1e-12;

/// Splits every pixel quad into two triangles along the diagonal with the
/// smaller depth disparity. Faces wind so their normals point toward the camera.
pub fn triangulate_grid(grid: &VertexGrid) -> TriangleMesh {
    assert!(grid.width >= 2 && grid.height >= 2, "grid must be at least 2x2");
    let w = grid.width;
    let mut faces = Vec::new();
    let mut attributes = Vec::new();
    let idx = |u: usize, v: usize| (v * w + u) as u32;

    for v in 0..grid.height - 1 {
        for u in 0..w - 1 {
            let p00 = grid.point(u, v);
            let p10 = grid.point(u, v + 1);
            let p01 = grid.point(u + 1, v);
            let p11 = grid.point(u + 1, v + 1);
            let main_disparity = (p00.z - p11.z).abs();
            let anti_disparity = (p01.z - p10.z).abs();

            let (tris, sources): ([[u32; 3]; 2], [[[u32; 2]; 3]; 2]) =
                if main_disparity <= anti_disparity {
                    (
                        [
                            [idx(u, v), idx(u, v + 1), idx(u + 1, v + 1)],
                            [idx(u, v), idx(u + 1, v + 1), idx(u + 1, v)],
                        ],
                        [
                            [[u as u32, v as u32], [u as u32, v as u32 + 1], [u as u32 + 1, v as u32 + 1]],
                            [[u as u32, v as u32], [u as u32 + 1, v as u32 + 1], [u as u32 + 1, v as u32]],
                        ],
                    )
                } else {
                    (
                        [
                            [idx(u, v), idx(u, v + 1), idx(u + 1, v)],
                            [idx(u + 1, v), idx(u, v + 1), idx(u + 1, v + 1)],
                        ],
                        [
                            [[u as u32, v as u32], [u as u32, v as u32 + 1], [u as u32 + 1, v as u32]],
                            [[u as u32 + 1, v as u32], [u as u32, v as u32 + 1], [u as u32 + 1, v as u32 + 1]],
                        ],
                    )
                };

            for (tri, src) in tris.iter().zip(sources.iter()) {
                let a = grid.points[tri[0] as usize];
                let b = grid.points[tri[1] as usize];
                let c = grid.points[tri[2] as usize];
                let cross = (b - a).cross(c - a);
                if 0.5 * cross.length() < DEGENERATE_AREA {
                    continue;
                }
                faces.push(*tri);
                attributes.push(FaceAttributes::surface(cross.normalized(), *src));
            }
        }
    }

    TriangleMesh { vertices: grid.points.clone(), faces, attributes }
}

/// Drops faces straddling a depth discontinuity (max vertex-depth ratio above
/// 1 + tau) and faces whose source pixels are all uncertain.
pub fn remove_spurious_faces(mesh: &TriangleMesh, uncertain: &UncertainMask, tau: f64) -> TriangleMesh {
    let keep = |i: usize| -> bool {
        let f = mesh.faces[i];
        let zs = [
            mesh.vertices[f[0] as usize].z,
            mesh.vertices[f[1] as usize].z,
            mesh.vertices[f[2] as usize].z,
        ];
        let z_min = zs.iter().copied().fold(f64::INFINITY, f64::min);
        let z_max = zs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if tau.is_finite() && z_max / z_min > 1.0 + tau {
            return false;
        }
        if let Some(src) = mesh.attributes[i].source_pixels {
            let all_uncertain = src
                .iter()
                .all(|p| uncertain.uncertain.get(p[0] as usize, p[1] as usize));
            if all_uncertain {
                return false;
            }
        }
        true
    };

    let mut faces = Vec::new();
    let mut attributes = Vec::new();
    for i in 0..mesh.faces.len() {
        if keep(i) {
            faces.push(mesh.faces[i]);
            attributes.push(mesh.attributes[i].clone());
        }
    }
    TriangleMesh { vertices: mesh.vertices.clone(), faces, attributes }
}

/// Result of walking every edge of a mesh.
#[derive(Clone, Debug, Default)]
pub struct EdgeAudit {
    pub boundary_edges: usize,
    pub interior_edges: usize,
    pub nonmanifold_edges: usize,
    /// True when every interior edge is traversed once in each direction.
    pub consistently_oriented: bool,
}

impl EdgeAudit {
    pub fn is_closed(&self) -> bool {
        self.boundary_edges == 0 && self.nonmanifold_edges == 0
    }
}

fn edge_map(mesh: &TriangleMesh) -> BTreeMap<(u32, u32), (u32, i32)> {
    let mut edges: BTreeMap<(u32, u32), (u32, i32)> = BTreeMap::new();
    for f in &mesh.faces {
        for k in 0..3 {
            let a = f[k];
            let b = f[(k + 1) % 3];
            let key = (a.min(b), a.max(b));
            let dir = if a < b { 1 } else { -1 };
            let e = edges.entry(key).or_insert((0, 0));
            e.0 += 1;
            e.1 += dir;
        }
    }
    edges
}

/// Counts how many faces share each edge.
pub fn edge_incidence_audit(mesh: &TriangleMesh) -> EdgeAudit {
    let mut audit = EdgeAudit { consistently_oriented: true, ..EdgeAudit::default() };
    for (count, dir_sum) in edge_map(mesh).values() {
        match count {
            1 => audit.boundary_edges += 1,
            2 => {
                audit.interior_edges += 1;
                if *dir_sum != 0 {
                    audit.consistently_oriented = false;
                }
            }
            _ => audit.nonmanifold_edges += 1,
        }
    }
    audit
}

/// V - E + F over the faces actually referenced by the mesh.
pub fn euler_characteristic(mesh: &TriangleMesh) -> i64 {
    let mut used = alloc::collections::BTreeSet::new();
    for f in &mesh.faces {
        used.extend(f.iter().copied());
    }
    let e = edge_map(mesh).len() as i64;
    used.len() as i64 - e + mesh.faces.len() as i64
}

/// Closes the surface left open by face removal and the image border.
///
/// A mirrored copy of the kept surface is pushed to `far_depth` along the
/// camera rays with reversed winding, and every boundary edge is connected to
/// its mirrored counterpart by a quad. Vertices whose incident face fan is
/// split by removals are duplicated per fan first, so the result is a closed
/// 2-manifold: every edge is shared by exactly two faces. Closure faces carry
/// the backdrop albedo and no emission.
pub fn restore_watertight(
    mesh: &TriangleMesh,
    far_depth: f64,
    backdrop_albedo: f64,
) -> Result<TriangleMesh, CoreError> {
    // Reject non-manifold input.
    for ((a, b), (count, _)) in edge_map(mesh) {
        if count > 2 {
            return Err(CoreError::NonManifoldEdge { a, b, count: count as usize });
        }
    }
    let audit = edge_incidence_audit(mesh);
    if audit.boundary_edges == 0 {
        return Ok(mesh.clone());
    }

    let mut mesh = split_pinched_vertices(mesh);

    // Boundary edges oriented as traversed by their single kept face.
    let mut oriented_boundary: Vec<(u32, u32)> = Vec::new();
    {
        let edges = edge_map(&mesh);
        for f in &mesh.faces {
            for k in 0..3 {
                let a = f[k];
                let b = f[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                if edges[&key].0 == 1 {
                    oriented_boundary.push((a, b));
                }
            }
        }
    }

    // Mirror every referenced vertex onto the far plane along its camera ray.
    let mut far_index: BTreeMap<u32, u32> = BTreeMap::new();
    let mut used: alloc::collections::BTreeSet<u32> = alloc::collections::BTreeSet::new();
    for f in &mesh.faces {
        used.extend(f.iter().copied());
    }
    for &v in &used {
        let p = mesh.vertices[v as usize];
        let far = p * (far_depth / p.z);
        far_index.insert(v, mesh.vertices.len() as u32);
        mesh.vertices.push(far);
    }

    let surface_count = mesh.faces.len();
    // Far sheet: same faces, reversed winding.
    for i in 0..surface_count {
        let f = mesh.faces[i];
        let tri = [far_index[&f[0]], far_index[&f[2]], far_index[&f[1]]];
        let n = TriangleMesh::face_normal(&mesh.vertices, tri);
        mesh.faces.push(tri);
        mesh.attributes.push(FaceAttributes::backdrop(n, backdrop_albedo));
    }

    // Tube quads: the kept face traverses the boundary edge a->b, so the tube
    // traverses b->a to keep the closed mesh consistently oriented.
    for (a, b) in oriented_boundary {
        let (a_far, b_far) = (far_index[&a], far_index[&b]);
        for tri in [[b, a, a_far], [b, a_far, b_far]] {
            let n = TriangleMesh::face_normal(&mesh.vertices, tri);
            mesh.faces.push(tri);
            mesh.attributes.push(FaceAttributes::backdrop(n, backdrop_albedo));
        }
    }

    Ok(mesh)
}

/// Duplicates vertices whose incident faces form more than one fan, so that
/// every vertex touches at most one boundary chain.
fn split_pinched_vertices(mesh: &TriangleMesh) -> TriangleMesh {
    let mut out = mesh.clone();
    let vertex_count = out.vertices.len();
    let mut incident: Vec<Vec<usize>> = alloc::vec![Vec::new(); vertex_count];
    for (fi, f) in out.faces.iter().enumerate() {
        for &v in f {
            incident[v as usize].push(fi);
        }
    }

    for v in 0..vertex_count {
        let faces = &incident[v];
        if faces.len() < 2 {
            continue;
        }
        // Union incident faces that share an edge through v.
        let mut parent: Vec<usize> = (0..faces.len()).collect();
        fn find(parent: &mut Vec<usize>, i: usize) -> usize {
            if parent[i] != i {
                let root = find(parent, parent[i]);
                parent[i] = root;
            }
            parent[i]
        }
        for i in 0..faces.len() {
            for j in i + 1..faces.len() {
                let fa = out.faces[faces[i]];
                let fb = out.faces[faces[j]];
                let shared = fa
                    .iter()
                    .filter(|x| **x != v as u32 && fb.contains(x))
                    .count();
                if shared > 0 {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri] = rj;
                    }
                }
            }
        }
        let mut component_vertex: BTreeMap<usize, u32> = BTreeMap::new();
        for i in 0..faces.len() {
            let root = find(&mut parent, i);
            let target = match component_vertex.get(&root) {
                Some(&t) => t,
                None => {
                    // The first fan keeps the original vertex; later fans get copies.
                    let t = if component_vertex.is_empty() {
                        v as u32
                    } else {
                        let id = out.vertices.len() as u32;
                        let p = out.vertices[v];
                        out.vertices.push(p);
                        id
                    };
                    component_vertex.insert(root, t);
                    t
                }
            };
            if target != v as u32 {
                let face = &mut out.faces[faces[i]];
                for slot in face.iter_mut() {
                    if *slot == v as u32 {
                        *slot = target;
                    }
                }
            }
        }
    }
    out
}

/// Per-face material and light-source assignment from the full-resolution rasters.
///
/// Face albedo is the mean of its source pixels' albedo. A face inherits a
/// light tag when more than half of its source pixels agree on one
/// (category, instance) pair, and its geometric normal is recorded as the
/// light-surface normal. Faces lying on the sky instance are flagged.
pub fn attach_materials(
    mesh: &mut TriangleMesh,
    albedo: &Raster,
    light_mask: &LightMask,
    instance_mask: &IdMask,
    sky_instance: Option<u16>,
) {
    assert_eq!(albedo.channels(), 3);
    for i in 0..mesh.faces.len() {
        let Some(src) = mesh.attributes[i].source_pixels else {
            continue;
        };
        let mut mean = Vec3::ZERO;
        for p in &src {
            mean += albedo.get_vec3(p[0] as usize, p[1] as usize);
        }
        mean = mean / src.len() as f64;

        // Majority vote over the source pixels' light labels.
        let mut tags: Vec<(LightFaceTag, usize)> = Vec::new();
        let mut sky_votes = 0;
        for p in &src {
            let (x, y) = (p[0] as usize, p[1] as usize);
            if let Some(category) = LightCategory::from_id(light_mask.categories.get(x, y)) {
                let tag = LightFaceTag { category, instance: light_mask.instances.get(x, y) };
                match tags.iter_mut().find(|(t, _)| *t == tag) {
                    Some((_, n)) => *n += 1,
                    None => tags.push((tag, 1)),
                }
            }
            if Some(instance_mask.get(x, y)) == sky_instance {
                sky_votes += 1;
            }
        }
        let majority = tags
            .into_iter()
            .filter(|(_, n)| 2 * n > src.len())
            .max_by_key(|(_, n)| *n)
            .map(|(t, _)| t);

        let attrs = &mut mesh.attributes[i];
        attrs.albedo_rgb = mean;
        attrs.light = majority;
        attrs.sky = 2 * sky_votes > src.len();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    use crate::rng::RngStream;

    fn intr(fx: f64, w: usize, h: usize) -> Intrinsics {
        Intrinsics::new(fx, fx, (w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0)
    }

    fn no_lights(w: usize, h: usize) -> LightMask {
        LightMask { categories: IdMask::new(w, h), instances: IdMask::new(w, h) }
    }

    #[test]
    fn backprojection_examples() {
        let k = Intrinsics::new(1780.0, 1780.0, 959.5, 539.5);
        let depth = Raster::constant(2, 2, 1, 1.0);
        let grid = backproject(&depth, &k).unwrap();
        assert_eq!(grid.points.len(), 4);

        let p = k.backproject(959.5, 539.5, 10.0);
        assert_eq!(p, Vec3::new(0.0, 0.0, 10.0));
    }

    #[test]
    fn backprojection_rejects_nonpositive_depth() {
        let k = intr(10.0, 2, 2);
        let mut depth = Raster::constant(2, 2, 1, 1.0);
        depth.set(1, 1, 0, 0.0);
        assert!(matches!(backproject(&depth, &k), Err(CoreError::NonPositiveDepth)));
    }

    #[test]
    fn roundtrip_through_projection() {
        let k = Intrinsics::new(1780.0, 1780.0, 959.5, 539.5);
        let mut rng = RngStream::new(3, 0);
        let mut depth = Raster::new(16, 16, 1);
        for v in depth.data_mut() {
            *v = rng.uniform(0.5, 80.0);
        }
        let grid = backproject(&depth, &k).unwrap();
        for v in 0..16 {
            for u in 0..16 {
                let (pu, pv) = k.project(grid.point(u, v));
                assert!((pu - u as f64).abs() < 1e-6);
                assert!((pv - v as f64).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn single_quad_gives_two_triangles() {
        let k = intr(10.0, 2, 2);
        let depth = Raster::constant(2, 2, 1, 2.0);
        let mesh = triangulate_grid(&backproject(&depth, &k).unwrap());
        assert_eq!(mesh.faces.len(), 2);
    }

    #[test]
    fn grid_triangle_count() {
        let k = intr(20.0, 7, 5);
        let depth = Raster::constant(7, 5, 1, 2.0);
        let mesh = triangulate_grid(&backproject(&depth, &k).unwrap());
        assert_eq!(mesh.faces.len(), 2 * 6 * 4);
    }

    #[test]
    fn faces_wind_toward_camera() {
        let k = intr(16.0, 4, 4);
        let depth = Raster::constant(4, 4, 1, 3.0);
        let mesh = triangulate_grid(&backproject(&depth, &k).unwrap());
        for attrs in &mesh.attributes {
            assert!(attrs.normal.z < 0.0, "normal {:?}", attrs.normal);
        }
    }

    /// The split must isolate the odd-depth vertex on the low-disparity diagonal.
    #[test]
    fn split_isolates_deep_vertex() {
        let k = intr(10.0, 2, 2);
        let mut depth = Raster::constant(2, 2, 1, 1.0);
        depth.set(1, 1, 0, 5.0); // deep vertex at (u=1, v=1)
        let mesh = triangulate_grid(&backproject(&depth, &k).unwrap());
        // Expected cut along the anti-diagonal (disparity 0 vs 4): the deep
        // vertex index 3 appears in exactly one face.
        let containing = mesh.faces.iter().filter(|f| f.contains(&3)).count();
        assert_eq!(containing, 1);

        // Enumerate both splits: the chosen one has the smaller diagonal disparity.
        let g = backproject(&depth, &k).unwrap();
        let main = (g.point(0, 0).z - g.point(1, 1).z).abs();
        let anti = (g.point(1, 0).z - g.point(0, 1).z).abs();
        assert!(anti < main);
    }

    #[test]
    fn smooth_plane_loses_nothing() {
        let k = intr(32.0, 8, 8);
        let depth = Raster::constant(8, 8, 1, 4.0);
        let mesh = triangulate_grid(&backproject(&depth, &k).unwrap());
        let kept = remove_spurious_faces(&mesh, &UncertainMask::none(8, 8), 0.01);
        assert_eq!(kept.faces.len(), mesh.faces.len());
    }

    #[test]
    fn infinite_tau_removes_only_uncertain_faces() {
        let k = intr(32.0, 4, 4);
        let mut depth = Raster::constant(4, 4, 1, 1.0);
        depth.set(3, 3, 0, 50.0);
        let mesh = triangulate_grid(&backproject(&depth, &k).unwrap());
        let mut uncertain = UncertainMask::none(4, 4);
        for y in 0..2 {
            for x in 0..2 {
                uncertain.uncertain.set(x, y, true);
            }
        }
        let kept = remove_spurious_faces(&mesh, &uncertain, f64::INFINITY);
        // Faces entirely inside the uncertain 2x2 block: both triangles of quad (0,0).
        assert_eq!(mesh.faces.len() - kept.faces.len(), 2);
    }

    #[test]
    fn step_edge_faces_are_removed() {
        let k = intr(64.0, 8, 8);
        let mut depth = Raster::new(8, 8, 1);
        for y in 0..8 {
            for x in 0..8 {
                depth.set(x, y, 0, if x < 4 { 1.0 } else { 5.0 });
            }
        }
        let mesh = triangulate_grid(&backproject(&depth, &k).unwrap());
        let kept = remove_spurious_faces(&mesh, &UncertainMask::none(8, 8), 0.5);
        // Oracle: enumerate faces and their vertex depth ratios.
        let mut expected = 0;
        for (i, f) in mesh.faces.iter().enumerate() {
            let zs: Vec<f64> = f.iter().map(|&v| mesh.vertices[v as usize].z).collect();
            let ratio = zs.iter().cloned().fold(f64::MIN, f64::max)
                / zs.iter().cloned().fold(f64::MAX, f64::min);
            if ratio <= 1.5 {
                expected += 1;
            }
            // Every face straddling the step must mix depths 1 and 5.
            let _ = i;
        }
        assert_eq!(kept.faces.len(), expected);
        assert!(kept.faces.len() < mesh.faces.len());
        for f in &kept.faces {
            let zs: Vec<f64> = f.iter().map(|&v| kept.vertices[v as usize].z).collect();
            let ratio = zs.iter().cloned().fold(f64::MIN, f64::max)
                / zs.iter().cloned().fold(f64::MAX, f64::min);
            assert!(ratio <= 1.5);
        }
    }

    #[test]
    fn closed_mesh_is_returned_unchanged() {
        // Tetrahedron.
        let vertices = alloc::vec![
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(1.0, 0.0, 1.0),
            Vec3::new(0.0, 1.0, 1.0),
            Vec3::new(0.0, 0.0, 2.0),
        ];
        let faces = alloc::vec![[0u32, 2, 1], [0, 1, 3], [1, 2, 3], [2, 0, 3]];
        let attributes = faces
            .iter()
            .map(|f| FaceAttributes::backdrop(TriangleMesh::face_normal(&vertices, *f), 0.5))
            .collect();
        let mesh = TriangleMesh { vertices, faces, attributes };
        assert!(edge_incidence_audit(&mesh).is_closed());
        let out = restore_watertight(&mesh, 10.0, 0.05).unwrap();
        assert_eq!(out.faces.len(), mesh.faces.len());
    }

    #[test]
    fn nonmanifold_input_is_rejected() {
        let vertices = alloc::vec![
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(1.0, 0.0, 1.0),
            Vec3::new(0.0, 1.0, 1.0),
            Vec3::new(1.0, 1.0, 2.0),
            Vec3::new(-1.0, -1.0, 2.0),
        ];
        let faces = alloc::vec![[0u32, 1, 2], [0, 2, 1], [0, 1, 2]];
        let attributes = faces
            .iter()
            .map(|f| FaceAttributes::backdrop(TriangleMesh::face_normal(&vertices, *f), 0.5))
            .collect();
        let mesh = TriangleMesh { vertices, faces, attributes };
        assert!(matches!(
            restore_watertight(&mesh, 10.0, 0.05),
            Err(CoreError::NonManifoldEdge { .. })
        ));
    }

    #[test]
    fn square_with_hole_becomes_closed() {
        let k = intr(24.0, 6, 6);
        let depth = Raster::constant(6, 6, 1, 2.0);
        let mesh = triangulate_grid(&backproject(&depth, &k).unwrap());
        // Remove the two faces of the center quad.
        let mut uncertain = UncertainMask::none(6, 6);
        for y in 2..4 {
            for x in 2..4 {
                uncertain.uncertain.set(x, y, true);
            }
        }
        let holey = remove_spurious_faces(&mesh, &uncertain, f64::INFINITY);
        assert!(holey.faces.len() < mesh.faces.len());
        let closed = restore_watertight(&holey, 6.0, 0.05).unwrap();
        let audit = edge_incidence_audit(&closed);
        assert!(audit.is_closed(), "audit {audit:?}");
        assert!(audit.consistently_oriented);
        assert_eq!(euler_characteristic(&closed) % 2, 0);
    }

    /// Two removed quads touching only at a corner produce a pinched vertex.
    #[test]
    fn pinched_vertex_is_split_and_closed() {
        let k = intr(32.0, 8, 8);
        let depth = Raster::constant(8, 8, 1, 2.0);
        let mesh = triangulate_grid(&backproject(&depth, &k).unwrap());
        let mut uncertain = UncertainMask::none(8, 8);
        for (x, y) in [(2, 2), (2, 3), (3, 2), (3, 3)] {
            uncertain.uncertain.set(x, y, true);
        }
        for (x, y) in [(4, 4), (4, 5), (5, 4), (5, 5)] {
            uncertain.uncertain.set(x, y, true);
        }
        let holey = remove_spurious_faces(&mesh, &uncertain, f64::INFINITY);
        let closed = restore_watertight(&holey, 6.0, 0.05).unwrap();
        let audit = edge_incidence_audit(&closed);
        assert!(audit.is_closed(), "audit {audit:?}");
        assert!(audit.consistently_oriented);
    }

    #[test]
    fn watertight_preserves_surface_area() {
        let k = intr(32.0, 8, 8);
        let mut rng = RngStream::new(17, 0);
        let mut depth = Raster::new(8, 8, 1);
        for v in depth.data_mut() {
            *v = rng.uniform(2.0, 2.5);
        }
        let mesh = triangulate_grid(&backproject(&depth, &k).unwrap());
        let area_before = mesh.area_of_kind(FaceKind::Surface);
        let closed = restore_watertight(&mesh, 10.0, 0.05).unwrap();
        let area_after = closed.area_of_kind(FaceKind::Surface);
        assert!((area_before - area_after).abs() < 1e-12);
        assert!(closed.total_area() > area_after);
    }

    #[test]
    fn full_grid_scene_audits_closed() {
        let k = intr(48.0, 16, 16);
        let mut rng = RngStream::new(23, 0);
        let mut depth = Raster::new(16, 16, 1);
        for y in 0..16 {
            for x in 0..16 {
                let base = if x > 5 && x < 10 && y > 4 && y < 12 { 1.5 } else { 4.0 };
                depth.set(x, y, 0, base + rng.uniform(0.0, 0.05));
            }
        }
        let mesh = triangulate_grid(&backproject(&depth, &k).unwrap());
        let kept = remove_spurious_faces(&mesh, &UncertainMask::none(16, 16), 0.3);
        let closed = restore_watertight(&kept, 10.0, 0.05).unwrap();
        let audit = edge_incidence_audit(&closed);
        assert!(audit.is_closed(), "audit {audit:?}");
        assert!(audit.consistently_oriented);
    }

    #[test]
    fn uniform_albedo_reaches_every_face() {
        let k = intr(16.0, 4, 4);
        let depth = Raster::constant(4, 4, 1, 2.0);
        let mut mesh = triangulate_grid(&backproject(&depth, &k).unwrap());
        let albedo = Raster::constant(4, 4, 3, 0.37);
        attach_materials(&mut mesh, &albedo, &no_lights(4, 4), &IdMask::new(4, 4), None);
        for attrs in &mesh.attributes {
            assert!((attrs.albedo_rgb.x - 0.37).abs() < 1e-12);
        }
    }

    #[test]
    fn face_inside_light_region_is_tagged() {
        let k = intr(16.0, 4, 4);
        let depth = Raster::constant(4, 4, 1, 2.0);
        let mut mesh = triangulate_grid(&backproject(&depth, &k).unwrap());
        let mut lights = no_lights(4, 4);
        for y in 0..4 {
            for x in 0..4 {
                lights.categories.set(x, y, LightCategory::StreetLightHt.id());
                lights.instances.set(x, y, 7);
            }
        }
        let albedo = Raster::constant(4, 4, 3, 0.2);
        attach_materials(&mut mesh, &albedo, &lights, &IdMask::new(4, 4), None);
        for attrs in &mesh.attributes {
            let tag = attrs.light.expect("tagged");
            assert_eq!(tag.category, LightCategory::StreetLightHt);
            assert_eq!(tag.instance, 7);
        }
    }

    /// Majority vote: a face is tagged iff >1/2 of its source pixels carry the label.
    #[test]
    fn half_covered_face_follows_majority() {
        let k = intr(16.0, 2, 2);
        let depth = Raster::constant(2, 2, 1, 2.0);
        let mut mesh = triangulate_grid(&backproject(&depth, &k).unwrap());
        let mut lights = no_lights(2, 2);
        // Pixel-count oracle per face: count source pixels carrying the label.
        lights.categories.set(0, 0, LightCategory::RearLight.id());
        lights.categories.set(0, 1, LightCategory::RearLight.id());
        let albedo = Raster::constant(2, 2, 3, 0.2);
        attach_materials(&mut mesh, &albedo, &lights, &IdMask::new(2, 2), None);
        for (f, attrs) in mesh.attributes.iter().enumerate() {
            let src = attrs.source_pixels.unwrap();
            let covered = src
                .iter()
                .filter(|p| lights.categories.get(p[0] as usize, p[1] as usize) != 0)
                .count();
            assert_eq!(attrs.light.is_some(), 2 * covered > 3, "face {f}: covered {covered}");
        }
    }

    #[test]
    fn sky_faces_are_flagged() {
        let k = intr(16.0, 4, 4);
        let depth = Raster::constant(4, 4, 1, 2.0);
        let mut mesh = triangulate_grid(&backproject(&depth, &k).unwrap());
        let mut instances = IdMask::new(4, 4);
        for x in 0..4 {
            instances.set(x, 0, 9);
            instances.set(x, 1, 9);
        }
        let albedo = Raster::constant(4, 4, 3, 0.2);
        attach_materials(&mut mesh, &albedo, &no_lights(4, 4), &instances, Some(9));
        assert!(mesh.attributes.iter().any(|a| a.sky));
        for attrs in &mesh.attributes {
            let src = attrs.source_pixels.unwrap();
            let votes = src.iter().filter(|p| instances.get(p[0] as usize, p[1] as usize) == 9).count();
            assert_eq!(attrs.sky, 2 * votes > 3);
        }
    }
}
