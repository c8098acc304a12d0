//! Shared generators and independent reference implementations for the
//! integration tests. Nothing here calls into the code under test except to
//! construct inputs.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smplpix::body_model::BodyModelParts;
use smplpix::{BodyModel, ColoredVertexSet, PoseParams, ShapeParams};
use smplpix::Camera;

pub type V3 = [f64; 3];
pub type M3 = [[f64; 3]; 3];
pub type M4 = [[f64; 4]; 4];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dist(a: V3, b: V3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

pub fn max_dist(a: &[V3], b: &[V3]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(p, q)| dist(*p, *q)).fold(0.0, f64::max)
}

pub fn matmul3(a: &M3, b: &M3) -> M3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

pub fn matvec3(a: &M3, x: V3) -> V3 {
    let mut y = [0.0; 3];
    for i in 0..3 {
        for k in 0..3 {
            y[i] += a[i][k] * x[k];
        }
    }
    y
}

/// Rotation matrix as the exponential of the skew matrix of `w`, summed as
/// a power series.
pub fn exp_so3(w: V3) -> M3 {
    let k = [[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]];
    let mut result = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut term = result;
    for n in 1..40 {
        term = matmul3(&term, &k);
        for row in &mut term {
            for x in row.iter_mut() {
                *x /= n as f64;
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                result[i][j] += term[i][j];
            }
        }
    }
    result
}

pub fn random_axis_angle(rng: &mut ChaCha8Rng, max_angle: f64) -> V3 {
    loop {
        let v: V3 = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            let a = rng.gen_range(0.0..max_angle);
            return v.map(|x| x / n * a);
        }
    }
}

pub fn random_camera(rng: &mut ChaCha8Rng, w: u32, h: u32) -> Camera {
    let r = exp_so3(random_axis_angle(rng, std::f64::consts::PI));
    let t = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
    let side = w.max(h) as f64;
    let fx = rng.gen_range(0.3..2.0) * side;
    let fy = fx * rng.gen_range(0.8..1.25);
    let k = [
        [fx, 0.0, rng.gen_range(0.0..w as f64)],
        [0.0, fy, rng.gen_range(0.0..h as f64)],
        [0.0, 0.0, 1.0],
    ];
    Camera::new(k, r, t, w, h).expect("valid random camera")
}

/// World point whose camera-space coordinates are `c`.
pub fn from_camera(cam: &Camera, c: V3) -> V3 {
    let r = cam.rotation();
    let t = cam.translation();
    let d = [c[0] - t[0], c[1] - t[1], c[2] - t[2]];
    let mut x = [0.0; 3];
    for i in 0..3 {
        for k in 0..3 {
            x[i] += r[k][i] * d[k];
        }
    }
    x
}

/// Homogeneous projection `K (R x + t)` followed by the divide.
pub fn project_homogeneous(cam: &Camera, x: V3) -> Option<(f64, f64, f64)> {
    let r = cam.rotation();
    let t = cam.translation();
    let k = cam.intrinsics_matrix();
    let mut c = [0.0; 3];
    for i in 0..3 {
        c[i] = r[i][0] * x[0] + r[i][1] * x[1] + r[i][2] * x[2] + t[i];
    }
    if c[2] <= 1e-6 {
        return None;
    }
    let mut hmg = [0.0; 3];
    for i in 0..3 {
        hmg[i] = k[i][0] * c[0] + k[i][1] * c[1] + k[i][2] * c[2];
    }
    Some((hmg[0] / hmg[2], hmg[1] / hmg[2], c[2]))
}

/// Random splat input: points mostly inside the frustum, some behind the
/// camera or outside the image, and some exact duplicates with different
/// colors to exercise the tie-break.
pub fn random_splat_case(
    rng: &mut ChaCha8Rng,
    max_n: usize,
    max_side: u32,
) -> (ColoredVertexSet, Camera) {
    let w = rng.gen_range(1..=max_side);
    let h = rng.gen_range(1..=max_side);
    let cam = random_camera(rng, w, h);
    let n = rng.gen_range(0..=max_n);
    let k = *cam.intrinsics_matrix();
    let mut pos: Vec<V3> = Vec::with_capacity(n);
    let mut col: Vec<V3> = Vec::with_capacity(n);
    for i in 0..n {
        let c = [rng.gen(), rng.gen(), rng.gen()];
        if i > 0 && rng.gen_bool(0.1) {
            pos.push(pos[rng.gen_range(0..i)]);
        } else if rng.gen_bool(0.05) {
            let z = rng.gen_range(-1.0..1e-6);
            pos.push(from_camera(&cam, [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), z]));
        } else {
            // Few distinct depths so collisions are common.
            let z = if rng.gen_bool(0.3) { 1.5 } else { rng.gen_range(0.1..5.0) };
            let u = rng.gen_range(-0.2..1.2) * w as f64;
            let v = rng.gen_range(-0.2..1.2) * h as f64;
            let y = (v - k[1][2]) / k[1][1] * z;
            let x = (u - k[0][2]) / k[0][0] * z;
            pos.push(from_camera(&cam, [x, y, z]));
        }
        col.push(c);
    }
    (ColoredVertexSet::new(pos, col).unwrap(), cam)
}

/// Brute-force splat: for every pixel, scan every vertex and keep the
/// minimum-depth hit, lowest index on ties.
pub fn brute_force_splat(verts: &ColoredVertexSet, cam: &Camera) -> Vec<f32> {
    let (w, h) = (cam.width() as i64, cam.height() as i64);
    let proj: Vec<Option<(i64, i64, f64)>> = verts
        .positions()
        .iter()
        .map(|&x| project_homogeneous(cam, x).map(|(u, v, d)| (u.floor() as i64, v.floor() as i64, d)))
        .collect();
    let mut out = vec![1.0f32; (w * h * 4) as usize];
    for py in 0..h {
        for px in 0..w {
            let mut best: Option<(f64, usize)> = None;
            for (i, p) in proj.iter().enumerate() {
                let Some((u, v, d)) = *p else { continue };
                if u == px && v == py && best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, i));
                }
            }
            if let Some((d, i)) = best {
                let c = verts.colors()[i];
                let o = ((py * w + px) * 4) as usize;
                out[o..o + 4].copy_from_slice(&[c[0] as f32, c[1] as f32, c[2] as f32, d as f32]);
            }
        }
    }
    out
}

/// Latitude-longitude sphere: two poles plus `lat − 1` rings of `lon`.
pub fn uv_sphere(lat: usize, lon: usize) -> (Vec<V3>, Vec<[u32; 3]>) {
    let mut pos = vec![[0.0, 1.0, 0.0]];
    for i in 1..lat {
        let th = std::f64::consts::PI * i as f64 / lat as f64;
        for j in 0..lon {
            let ph = std::f64::consts::TAU * j as f64 / lon as f64;
            pos.push([th.sin() * ph.cos(), th.cos(), th.sin() * ph.sin()]);
        }
    }
    pos.push([0.0, -1.0, 0.0]);
    let bottom = (pos.len() - 1) as u32;
    let ring = |i: usize, j: usize| (1 + (i - 1) * lon + j % lon) as u32;
    let mut faces = Vec::new();
    for j in 0..lon {
        faces.push([0, ring(1, j + 1), ring(1, j)]);
        faces.push([bottom, ring(lat - 1, j), ring(lat - 1, j + 1)]);
    }
    for i in 1..lat - 1 {
        for j in 0..lon {
            faces.push([ring(i, j), ring(i, j + 1), ring(i + 1, j + 1)]);
            faces.push([ring(i, j), ring(i + 1, j + 1), ring(i + 1, j)]);
        }
    }
    (pos, faces)
}

pub fn torus(n: usize, m: usize) -> (Vec<V3>, Vec<[u32; 3]>) {
    let mut pos = Vec::new();
    for i in 0..n {
        let a = std::f64::consts::TAU * i as f64 / n as f64;
        for j in 0..m {
            let b = std::f64::consts::TAU * j as f64 / m as f64;
            let r = 1.0 + 0.4 * b.cos();
            pos.push([r * a.cos(), 0.4 * b.sin(), r * a.sin()]);
        }
    }
    let id = |i: usize, j: usize| ((i % n) * m + j % m) as u32;
    let mut faces = Vec::new();
    for i in 0..n {
        for j in 0..m {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    (pos, faces)
}

/// A random closed triangle mesh (sphere or torus topology), with shuffled
/// vertex labels, face order and corner rotation, and jittered positions.
pub fn random_closed_mesh(rng: &mut ChaCha8Rng) -> (Vec<V3>, Vec<[u32; 3]>) {
    let (pos, faces) = if rng.gen_bool(0.6) {
        uv_sphere(rng.gen_range(2..9), rng.gen_range(3..11))
    } else {
        torus(rng.gen_range(3..9), rng.gen_range(3..9))
    };
    let mut perm: Vec<u32> = (0..pos.len() as u32).collect();
    perm.shuffle(rng);
    let mut new_pos = vec![[0.0; 3]; pos.len()];
    for (old, &new) in perm.iter().enumerate() {
        new_pos[new as usize] = pos[old].map(|x| x + rng.gen_range(-0.05..0.05));
    }
    let mut new_faces: Vec<[u32; 3]> = faces
        .into_iter()
        .map(|f| {
            let f = f.map(|i| perm[i as usize]);
            let r = rng.gen_range(0..3);
            [f[r], f[(r + 1) % 3], f[(r + 2) % 3]]
        })
        .collect();
    new_faces.shuffle(rng);
    (new_pos, new_faces)
}

/// Unique undirected edges with the number of faces using each.
pub fn edge_table(faces: &[[u32; 3]]) -> BTreeMap<(u32, u32), usize> {
    let mut map = BTreeMap::new();
    for f in faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            *map.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    map
}

/// Random small body model on a random kinematic tree.
pub fn random_body_model(rng: &mut ChaCha8Rng) -> BodyModel {
    let nj = rng.gen_range(2..8);
    let n = rng.gen_range(8..60);
    let s = rng.gen_range(1..6);
    let parents: Vec<Option<usize>> = (0..nj).map(|j| (j > 0).then(|| rng.gen_range(0..j))).collect();
    let template: Vec<V3> = (0..n)
        .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
        .collect();
    let shape_basis = (0..n * 3 * s).map(|_| rng.gen_range(-0.05..0.05)).collect();
    let p = 9 * (nj - 1);
    let pose_basis = (0..n * 3 * p).map(|_| rng.gen_range(-0.01..0.01)).collect();
    let mut joint_regressor = vec![0.0; nj * n];
    for j in 0..nj {
        let picks: Vec<usize> = (0..rng.gen_range(1..5)).map(|_| rng.gen_range(0..n)).collect();
        let ws: Vec<f64> = picks.iter().map(|_| rng.gen_range(0.1..1.0)).collect();
        let total: f64 = ws.iter().sum();
        for (v, w) in picks.into_iter().zip(ws) {
            joint_regressor[j * n + v] += w / total;
        }
    }
    let mut skin_weights = vec![0.0; n * nj];
    for v in 0..n {
        let k = rng.gen_range(1..=nj.min(3));
        let mut js: Vec<usize> = (0..nj).collect();
        js.shuffle(rng);
        let ws: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = ws.iter().sum();
        for (&j, w) in js.iter().zip(ws) {
            skin_weights[v * nj + j] = w / total;
        }
    }
    let faces = (0..n / 3).map(|i| [3 * i as u32, 3 * i as u32 + 1, 3 * i as u32 + 2]).collect();
    BodyModel::new(BodyModelParts {
        template,
        num_shape: s,
        shape_basis,
        pose_basis,
        joint_regressor,
        skin_weights,
        parents,
        faces,
        uv: None,
        colors: None,
    })
    .expect("valid random model")
}

pub fn random_beta(rng: &mut ChaCha8Rng, s: usize, spread: f64) -> ShapeParams<f64> {
    ShapeParams::new((0..s).map(|_| rng.gen_range(-spread..spread)).collect()).unwrap()
}

/// Random pose with every joint rotated by less than `max_angle`.
pub fn random_theta(rng: &mut ChaCha8Rng, nj: usize, max_angle: f64) -> PoseParams<f64> {
    PoseParams::new((0..nj).flat_map(|_| random_axis_angle(rng, max_angle)).collect()).unwrap()
}

/// Element-by-element `Σ_s β_s S[v, axis, s]`.
pub fn naive_shape_offsets(model: &BodyModel, beta: &[f64]) -> Vec<V3> {
    let s = model.num_shape();
    let basis = model.shape_basis();
    let mut out = vec![[0.0; 3]; model.num_vertices()];
    for (v, o) in out.iter_mut().enumerate() {
        for (axis, x) in o.iter_mut().enumerate() {
            for (k, b) in beta.iter().enumerate() {
                *x += b * basis[(v * 3 + axis) * s + k];
            }
        }
    }
    out
}

/// Pose features from the power-series rotation, non-root joints in order.
pub fn naive_pose_features(model: &BodyModel, theta: &[f64]) -> Vec<f64> {
    let mut feats = Vec::new();
    for j in 0..model.num_joints() {
        if model.parents()[j].is_none() {
            continue;
        }
        let r = exp_so3([theta[3 * j], theta[3 * j + 1], theta[3 * j + 2]]);
        for a in 0..3 {
            for b in 0..3 {
                feats.push(r[a][b] - if a == b { 1.0 } else { 0.0 });
            }
        }
    }
    feats
}

pub fn naive_pose_offsets(model: &BodyModel, theta: &[f64]) -> Vec<V3> {
    let feats = naive_pose_features(model, theta);
    let p = feats.len();
    let basis = model.pose_basis();
    let mut out = vec![[0.0; 3]; model.num_vertices()];
    for (v, o) in out.iter_mut().enumerate() {
        for (axis, x) in o.iter_mut().enumerate() {
            for (k, f) in feats.iter().enumerate() {
                *x += f * basis[(v * 3 + axis) * p + k];
            }
        }
    }
    out
}

pub fn naive_regress(model: &BodyModel, verts: &[V3]) -> Vec<V3> {
    let n = model.num_vertices();
    let reg = model.joint_regressor();
    (0..model.num_joints())
        .map(|j| {
            let mut acc = [0.0; 3];
            for v in 0..n {
                for k in 0..3 {
                    acc[k] += reg[j * n + v] * verts[v][k];
                }
            }
            acc
        })
        .collect()
}

fn mul4(a: &M4, b: &M4) -> M4 {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

fn homogeneous(r: &M3, t: V3) -> M4 {
    let mut m = [[0.0; 4]; 4];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = r[i][j];
        }
        m[i][3] = t[i];
    }
    m[3][3] = 1.0;
    m
}

/// Linear blend skinning with 4×4 homogeneous matrices, recursing up the
/// tree for each joint.
pub fn naive_pose_mesh(model: &BodyModel, beta: &[f64], theta: &[f64]) -> Vec<V3> {
    let shape = naive_shape_offsets(model, beta);
    let pose = naive_pose_offsets(model, theta);
    let rest: Vec<V3> = model
        .template()
        .iter()
        .zip(&shape)
        .map(|(t, s)| [t[0] + s[0], t[1] + s[1], t[2] + s[2]])
        .collect();
    let joints = naive_regress(model, &rest);
    let parents = model.parents();
    fn global(j: usize, parents: &[Option<usize>], joints: &[V3], theta: &[f64]) -> M4 {
        let r = exp_so3([theta[3 * j], theta[3 * j + 1], theta[3 * j + 2]]);
        match parents[j] {
            None => homogeneous(&r, joints[j]),
            Some(p) => {
                let rel = [0, 1, 2].map(|k| joints[j][k] - joints[p][k]);
                mul4(&global(p, parents, joints, theta), &homogeneous(&r, rel))
            }
        }
    }
    let a: Vec<M4> = (0..model.num_joints())
        .map(|j| {
            let g = global(j, parents, &joints, theta);
            let unshift = homogeneous(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], joints[j].map(|x| -x));
            mul4(&g, &unshift)
        })
        .collect();
    let nj = model.num_joints();
    let w = model.skin_weights();
    (0..model.num_vertices())
        .map(|v| {
            let tp = [rest[v][0] + pose[v][0], rest[v][1] + pose[v][1], rest[v][2] + pose[v][2], 1.0];
            let mut out = [0.0; 3];
            for j in 0..nj {
                let wj = w[v * nj + j];
                for i in 0..3 {
                    out[i] += wj * (0..4).map(|k| a[j][i][k] * tp[k]).sum::<f64>();
                }
            }
            out
        })
        .collect()
}
