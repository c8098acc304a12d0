mod common;

use std::path::PathBuf;

use common::*;
use rand::Rng;
use smplpix::mesh::{
    read_obj, read_ply, sample_vertex_colors, sample_vertex_colors_wedged, subdivide_midpoint,
    tetrahedron, TexCoords,
};
use smplpix::{ColoredVertexSet, Error, Mesh, TextureImage};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn colored(pos: Vec<V3>, r: &mut rand_chacha::ChaCha8Rng) -> ColoredVertexSet {
    let col = (0..pos.len()).map(|_| [r.gen(), r.gen(), r.gen()]).collect();
    ColoredVertexSet::new(pos, col).unwrap()
}

#[test]
fn single_triangle_and_tetrahedron_counts() {
    let tri = Mesh::new(
        ColoredVertexSet::with_uniform_color(vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], [0.5; 3]).unwrap(),
        vec![[0, 1, 2]],
    )
    .unwrap();
    let s = subdivide_midpoint(&tri).unwrap();
    assert_eq!((s.mesh.vertices.len(), s.mesh.faces.len()), (6, 4));

    let tet = tetrahedron::<f64>();
    let s = subdivide_midpoint(&tet).unwrap();
    assert_eq!((s.mesh.vertices.len(), s.mesh.faces.len()), (10, 16));
}

#[test]
fn random_closed_meshes_bookkeeping() {
    let mut r = rng(50);
    for _ in 0..100 {
        let (pos, faces) = random_closed_mesh(&mut r);
        let mesh = Mesh::new(colored(pos, &mut r), faces.clone()).unwrap();
        let edges = edge_table(&faces);
        assert!(edges.values().all(|&c| c == 2));
        let (v, e, f) = (mesh.vertices.len(), edges.len(), faces.len());
        let s = subdivide_midpoint(&mesh).unwrap();
        let out = &s.mesh;
        assert_eq!(out.vertices.len(), v + e);
        assert_eq!(out.faces.len(), 4 * f);

        // Closed output with unchanged Euler characteristic.
        let out_edges = edge_table(&out.faces);
        assert!(out_edges.values().all(|&c| c == 2));
        let chi = v as i64 - e as i64 + f as i64;
        assert_eq!(out.vertices.len() as i64 - out_edges.len() as i64 + out.faces.len() as i64, chi);

        // Original vertices untouched; each new vertex is an input edge midpoint.
        assert_eq!(&out.vertices.positions()[..v], mesh.vertices.positions());
        assert_eq!(s.edges.len(), e);
        for (k, &[a, b]) in s.edges.iter().enumerate() {
            assert!(edges.contains_key(&(a.min(b), a.max(b))));
            let (pa, pb) = (mesh.vertices.positions()[a as usize], mesh.vertices.positions()[b as usize]);
            let mid = [0, 1, 2].map(|i| 0.5 * (pa[i] + pb[i]));
            assert!(dist(out.vertices.positions()[v + k], mid) < 1e-15);
            let (ca, cb) = (mesh.vertices.colors()[a as usize], mesh.vertices.colors()[b as usize]);
            let cm = out.vertices.colors()[v + k];
            for i in 0..3 {
                assert!((cm[i] - 0.5 * (ca[i] + cb[i])).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn planar_area_is_preserved() {
    let mut r = rng(51);
    for _ in 0..20 {
        let n = r.gen_range(2..8);
        let mut pos = Vec::new();
        for i in 0..=n {
            for j in 0..=n {
                pos.push([i as f64 + r.gen_range(-0.3..0.3), j as f64 + r.gen_range(-0.3..0.3), 0.0]);
            }
        }
        // Rotate the plane out of axis alignment.
        let rot = exp_so3(random_axis_angle(&mut r, 3.0));
        let pos = pos.into_iter().map(|p| matvec3(&rot, p)).collect();
        let id = |i: usize, j: usize| (i * (n + 1) + j) as u32;
        let mut faces = Vec::new();
        for i in 0..n {
            for j in 0..n {
                faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        let mesh = Mesh::new(colored(pos, &mut r), faces).unwrap();
        let out = subdivide_midpoint(&mesh).unwrap().mesh;
        let (a0, a1) = (mesh.area(), out.area());
        assert!((a1 - a0).abs() / a0 < 1e-12);
    }
}

#[test]
fn non_manifold_edge_is_topology_error() {
    let pos = vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]];
    let mesh = Mesh::new(
        ColoredVertexSet::with_uniform_color(pos, [0.0; 3]).unwrap(),
        vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]],
    )
    .unwrap();
    assert!(matches!(subdivide_midpoint(&mesh), Err(Error::Topology(_))));
}

#[test]
fn per_vertex_uv_is_averaged() {
    let mut tet = tetrahedron::<f64>();
    tet.uv = Some(TexCoords::PerVertex(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]));
    let s = subdivide_midpoint(&tet).unwrap();
    let Some(TexCoords::PerVertex(uv)) = &s.mesh.uv else { panic!("uv lost") };
    assert_eq!(uv.len(), 10);
    for (k, &[a, b]) in s.edges.iter().enumerate() {
        let (ua, ub) = (uv[a as usize], uv[b as usize]);
        assert_eq!(uv[4 + k], [0.5 * (ua[0] + ub[0]), 0.5 * (ua[1] + ub[1])]);
    }
}

fn texel_center(i: u32, j: u32, w: u32, h: u32) -> [f64; 2] {
    [(i as f64 + 0.5) / w as f64, 1.0 - (j as f64 + 0.5) / h as f64]
}

#[test]
fn texture_sampling_examples() {
    let tex = TextureImage::filled(5, 3, [0.2, 0.4, 0.6]);
    let uv: Vec<[f64; 2]> = vec![[0.0, 0.0], [0.3, 0.9], [1.0, 1.0], [0.5, 0.5]];
    let s = sample_vertex_colors(&tex, &uv).unwrap();
    assert!(s.colors.iter().all(|c| *c == [0.2, 0.4, 0.6]));
    assert_eq!(s.clamped, 0);

    let mut checker = TextureImage::filled(2, 2, [0.0f64; 3]);
    checker.set_pixel(1, 0, [1.0; 3]);
    checker.set_pixel(0, 1, [1.0; 3]);
    for (i, j) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
        let s = sample_vertex_colors(&checker, &[texel_center(i, j, 2, 2)]).unwrap();
        assert_eq!(s.colors[0], checker.pixel(i, j));
    }

    let s = sample_vertex_colors(&tex, &[[-0.5, 0.5], [0.5, 1.5], [0.5, 0.5]]).unwrap();
    assert_eq!(s.clamped, 2);
}

#[test]
fn texel_centers_match_nearest_neighbour_and_samples_stay_in_hull() {
    let mut r = rng(52);
    for _ in 0..20 {
        let (w, h) = (r.gen_range(1..20), r.gen_range(1..20));
        let data = (0..w * h * 3).map(|_| r.gen()).collect();
        let tex = TextureImage::<f64>::from_data(w, h, data).unwrap();
        let idx: Vec<(u32, u32)> = (0..50).map(|_| (r.gen_range(0..w), r.gen_range(0..h))).collect();
        let uv: Vec<[f64; 2]> = idx.iter().map(|&(i, j)| texel_center(i, j, w, h)).collect();
        let s = sample_vertex_colors(&tex, &uv).unwrap();
        for (c, &(i, j)) in s.colors.iter().zip(&idx) {
            let want = tex.pixel(i, j);
            for k in 0..3 {
                assert!((c[k] - want[k]).abs() < 1e-6);
            }
        }

        let uv: Vec<[f64; 2]> = (0..50).map(|_| [r.gen(), r.gen()]).collect();
        let s = sample_vertex_colors(&tex, &uv).unwrap();
        for (c, t) in s.colors.iter().zip(&uv) {
            let fx = (t[0] * w as f64 - 0.5).clamp(0.0, (w - 1) as f64);
            let fy = ((1.0 - t[1]) * h as f64 - 0.5).clamp(0.0, (h - 1) as f64);
            let (x0, y0) = (fx.floor() as u32, fy.floor() as u32);
            let corners = [
                tex.pixel(x0, y0),
                tex.pixel((x0 + 1).min(w - 1), y0),
                tex.pixel(x0, (y0 + 1).min(h - 1)),
                tex.pixel((x0 + 1).min(w - 1), (y0 + 1).min(h - 1)),
            ];
            for k in 0..3 {
                let lo = corners.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
                let hi = corners.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
                assert!(c[k] >= lo - 1e-12 && c[k] <= hi + 1e-12);
            }
        }
    }
}

#[test]
fn wedge_uvs_average_across_seams() {
    let mut tex = TextureImage::filled(2, 1, [0.0f64; 3]);
    tex.set_pixel(1, 0, [1.0; 3]);
    // Vertex 0 appears with uv on both texels; vertices 1 and 2 on one each.
    let faces = vec![[0, 1, 2], [0, 2, 1]];
    let uvs = vec![[0.25, 0.5], [0.75, 0.5]];
    let uv_faces = vec![[0, 0, 1], [1, 1, 0]];
    let s = sample_vertex_colors_wedged(&tex, 4, &faces, &uvs, &uv_faces).unwrap();
    assert_eq!(s.colors[0], [0.5; 3]);
    assert_eq!(s.colors[3], [0.5; 3]);
}

#[test]
fn tetrahedron_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let tet = tetrahedron::<f64>();
    for ext in ["obj", "ply"] {
        let path = dir.path().join(format!("t.{ext}"));
        tet.save(&path).unwrap();
        let back = Mesh::load(&path).unwrap();
        assert_eq!(back.vertices, tet.vertices, "{ext}");
        assert_eq!(back.faces, tet.faces, "{ext}");
    }
}

#[test]
fn random_meshes_round_trip_at_f32_precision() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(53);
    for i in 0..10 {
        let (pos, faces) = random_closed_mesh(&mut r);
        let n = pos.len();
        let mut mesh = Mesh::new(colored(pos, &mut r), faces).unwrap();
        mesh.uv = Some(TexCoords::PerVertex((0..n).map(|_| [r.gen(), r.gen()]).collect()));
        for ext in ["obj", "ply"] {
            let path = dir.path().join(format!("m{i}.{ext}"));
            mesh.save(&path).unwrap();
            let back = Mesh::load(&path).unwrap();
            assert_eq!(back.faces, mesh.faces);
            let f32s = |x: f64| x as f32;
            for (a, b) in back.vertices.positions().iter().zip(mesh.vertices.positions()) {
                assert_eq!(a.map(f32s), b.map(f32s));
            }
            for (a, b) in back.vertices.colors().iter().zip(mesh.vertices.colors()) {
                assert_eq!(a.map(f32s), b.map(f32s));
            }
            let Some(TexCoords::PerVertex(uv)) = &back.uv else { panic!("{ext}: uv lost") };
            let Some(TexCoords::PerVertex(orig)) = &mesh.uv else { unreachable!() };
            for (a, b) in uv.iter().zip(orig) {
                assert_eq!(a.map(f32s), b.map(f32s));
            }
        }
    }
}

/// Minimal reading of `v x y z r g b` lines, used as a reference.
fn reference_obj_vertices(text: &str) -> Vec<[f64; 6]> {
    text.lines()
        .filter_map(|l| l.strip_prefix("v "))
        .map(|rest| {
            let v: Vec<f64> = rest.split_whitespace().map(|t| t.parse().unwrap()).collect();
            [v[0], v[1], v[2], v[3], v[4], v[5]]
        })
        .collect()
}

#[test]
fn obj_fixture_with_colors() {
    let path = fixture("colored_quad.obj");
    let mesh = Mesh::load(&path).unwrap();
    let reference = reference_obj_vertices(&std::fs::read_to_string(&path).unwrap());
    assert_eq!(mesh.vertices.len(), reference.len());
    for (i, r) in reference.iter().enumerate() {
        assert_eq!(mesh.vertices.positions()[i], [r[0], r[1], r[2]]);
        assert_eq!(mesh.vertices.colors()[i], [r[3], r[4], r[5]]);
    }
    // Quad fan-triangulated into two, plus four sides; `-3/-2/-1` is face 2 3 5.
    assert_eq!(mesh.faces.len(), 6);
    assert_eq!(mesh.faces[0], [0, 3, 2]);
    assert_eq!(mesh.faces[1], [0, 2, 1]);
    assert_eq!(mesh.faces[4], [2, 3, 4]);
    assert!(matches!(mesh.uv, Some(TexCoords::PerVertex(_))));
}

#[test]
fn binary_ply_fixture_with_uchar_colors() {
    let mesh = Mesh::load(&fixture("cube_uchar.ply")).unwrap();
    assert_eq!(mesh.vertices.len(), 8);
    assert_eq!(mesh.faces.len(), 12);
    for i in 0..8u32 {
        let bytes = [(i * 40 % 256) as f64, (255 - i * 30) as f64, (i * 17) as f64];
        assert_eq!(mesh.vertices.colors()[i as usize], bytes.map(|b| b / 255.0));
        let (x, y, z) = ((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64);
        assert_eq!(mesh.vertices.positions()[i as usize], [x, y, z]);
    }
    assert!(edge_table(&mesh.faces).values().all(|&c| c == 2));
}

#[test]
fn malformed_files_report_location() {
    let err = read_obj::<f64>(b"v 0 0 0\nv 1 0 0\nv 0 x 0\n", "bad.obj").unwrap_err();
    assert!(err.to_string().contains("line 3"), "{err}");
    let err = read_obj::<f64>(b"v 0 0 0\nf 1 2 3\n", "bad.obj").unwrap_err();
    assert!(err.to_string().contains("line 2"), "{err}");

    let mut ply = std::fs::read(fixture("cube_uchar.ply")).unwrap();
    ply.truncate(ply.len() - 5);
    let err = read_ply::<f64>(&ply, "cut.ply").unwrap_err();
    assert!(err.to_string().contains("byte offset"), "{err}");
    let err = read_ply::<f64>(b"ply\nformat binary_big_endian 1.0\nend_header\n", "be.ply").unwrap_err();
    assert!(err.to_string().contains("line 2"), "{err}");
}
