//! Procedural "capsule person": a deterministic humanoid body model built
//! from tapered tubes on a 17-joint kinematic tree.
//!
//! Rest pose is a T-pose standing on `y = 0`, facing `−z`, about 1.8 m tall.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::body_model::{BodyModel, BodyModelParts, ColoredVertexSet, PoseParams};
use crate::error::Result;
use crate::linalg::{self, Vec3};

pub const JOINT_NAMES: [&str; 17] = [
    "pelvis",
    "spine",
    "chest",
    "neck",
    "head",
    "left_shoulder",
    "left_elbow",
    "left_wrist",
    "right_shoulder",
    "right_elbow",
    "right_wrist",
    "left_hip",
    "left_knee",
    "left_ankle",
    "right_hip",
    "right_knee",
    "right_ankle",
];

pub const PARENTS: [Option<usize>; 17] = [
    None,
    Some(0),
    Some(1),
    Some(2),
    Some(3),
    Some(2),
    Some(5),
    Some(6),
    Some(2),
    Some(8),
    Some(9),
    Some(0),
    Some(11),
    Some(12),
    Some(0),
    Some(14),
    Some(15),
];

pub const NUM_SHAPE: usize = 4;
const RINGS: usize = 6;
const AROUND: usize = 10;
/// Fraction of a segment over which skinning weights blend into the
/// neighbouring joint.
const BLEND_SPAN: f64 = 0.25;

pub mod joint {
    pub const PELVIS: usize = 0;
    pub const CHEST: usize = 2;
    pub const HEAD: usize = 4;
    pub const LEFT_SHOULDER: usize = 5;
    pub const RIGHT_SHOULDER: usize = 8;
    pub const LEFT_HIP: usize = 11;
    pub const RIGHT_HIP: usize = 14;
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Region {
    Skin,
    Hair,
    Shirt,
    Pants,
    Shoes,
}

struct Segment {
    joint: usize,
    start: Vec3<f64>,
    end: Vec3<f64>,
    end_joint: Option<usize>,
    radius: f64,
    region: Region,
    /// Joint whose regressor row is this segment's first ring.
    regresses: Option<usize>,
}

/// A generated subject: the body model (its `colors` carry the subject's
/// appearance) and the rest-pose colored vertices.
#[derive(Clone, Debug)]
pub struct SyntheticSubject {
    pub model: BodyModel<f64>,
    pub template: ColoredVertexSet<f64>,
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(-1.0..=1.0)
}

fn perpendicular_basis(dir: Vec3<f64>) -> (Vec3<f64>, Vec3<f64>) {
    let helper = if dir[1].abs() < 0.9 {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let e1 = linalg::normalize(linalg::cross(helper, dir)).expect("non-parallel helper");
    let e2 = linalg::cross(dir, e1);
    (e1, e2)
}

fn rest_joints(rng: &mut ChaCha8Rng) -> (Vec<Vec3<f64>>, f64) {
    let stature = 1.0 + 0.06 * uniform(rng);
    let arm = 1.0 + 0.08 * uniform(rng);
    let leg = 1.0 + 0.06 * uniform(rng);
    let shoulder = 1.0 + 0.1 * uniform(rng);
    let s = stature;
    let knee_y = 0.08 + 0.42 * leg;
    let hip_y = knee_y + 0.40 * leg;
    let pelvis_y = hip_y + 0.05;
    let mut j = vec![[0.0; 3]; 17];
    j[0] = [0.0, pelvis_y, 0.0];
    j[1] = [0.0, pelvis_y + 0.2, 0.0];
    j[2] = [0.0, pelvis_y + 0.4, 0.0];
    j[3] = [0.0, pelvis_y + 0.57, 0.0];
    j[4] = [0.0, pelvis_y + 0.67, 0.0];
    let sh_y = pelvis_y + 0.5;
    for (side, base) in [(1.0, 5), (-1.0, 8)] {
        let x0 = side * 0.18 * shoulder;
        j[base] = [x0, sh_y, 0.0];
        j[base + 1] = [x0 + side * 0.27 * arm, sh_y, 0.0];
        j[base + 2] = [x0 + side * 0.52 * arm, sh_y, 0.0];
    }
    for (side, base) in [(1.0, 11), (-1.0, 14)] {
        j[base] = [side * 0.1, hip_y, 0.0];
        j[base + 1] = [side * 0.1, knee_y, 0.0];
        j[base + 2] = [side * 0.1, 0.08, 0.0];
    }
    for p in &mut j {
        *p = p.map(|x| x * s);
    }
    (j, s)
}

fn segments(j: &[Vec3<f64>], scale: f64, girth: f64) -> Vec<Segment> {
    let seg =
        |joint, end_joint: Option<usize>, end: Vec3<f64>, radius: f64, region, regresses| Segment {
            joint,
            start: j[joint],
            end: end_joint.map_or(end, |e| j[e]),
            end_joint,
            radius: radius * scale * girth,
            region,
            regresses,
        };
    let up = |p: Vec3<f64>, dy: f64| [p[0], p[1] + dy * scale, p[2]];
    let mut out = vec![
        seg(0, Some(1), [0.0; 3], 0.13, Region::Pants, Some(0)),
        seg(1, Some(2), [0.0; 3], 0.14, Region::Shirt, Some(1)),
        seg(2, Some(3), [0.0; 3], 0.15, Region::Shirt, Some(2)),
        seg(3, Some(4), [0.0; 3], 0.05, Region::Skin, Some(3)),
        seg(4, None, up(j[4], 0.2), 0.1, Region::Hair, Some(4)),
    ];
    for base in [5, 8] {
        let side = j[base][0].signum();
        let hand_end = [j[base + 2][0] + side * 0.15 * scale, j[base + 2][1], 0.0];
        out.push(seg(2, Some(base), [0.0; 3], 0.06, Region::Shirt, None));
        out.push(seg(
            base,
            Some(base + 1),
            [0.0; 3],
            0.045,
            Region::Shirt,
            Some(base),
        ));
        out.push(seg(
            base + 1,
            Some(base + 2),
            [0.0; 3],
            0.04,
            Region::Skin,
            Some(base + 1),
        ));
        out.push(seg(
            base + 2,
            None,
            hand_end,
            0.035,
            Region::Skin,
            Some(base + 2),
        ));
    }
    for base in [11, 14] {
        let ankle = j[base + 2];
        let toe = [ankle[0], 0.03 * scale, ankle[2] - 0.16 * scale];
        out.push(seg(0, Some(base), [0.0; 3], 0.08, Region::Pants, None));
        out.push(seg(
            base,
            Some(base + 1),
            [0.0; 3],
            0.07,
            Region::Pants,
            Some(base),
        ));
        out.push(seg(
            base + 1,
            Some(base + 2),
            [0.0; 3],
            0.055,
            Region::Pants,
            Some(base + 1),
        ));
        out.push(seg(
            base + 2,
            None,
            toe,
            0.04,
            Region::Shoes,
            Some(base + 2),
        ));
    }
    out
}

/// Deterministic procedural subject; equal seeds give bit-identical output.
pub fn synth_subject(seed: u64) -> Result<SyntheticSubject> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (joints, scale) = rest_joints(&mut rng);
    let girth = 1.0 + 0.15 * uniform(&mut rng);
    let segs = segments(&joints, scale, girth);
    let num_joints = joints.len();

    let skin_tone = {
        let r = rng.gen_range(0.45..0.95);
        [
            r,
            r * rng.gen_range(0.65..0.85),
            r * rng.gen_range(0.5..0.7),
        ]
    };
    let pick = |rng: &mut ChaCha8Rng| {
        [
            rng.gen_range(0.05..0.95),
            rng.gen_range(0.05..0.95),
            rng.gen_range(0.05..0.95),
        ]
    };
    let shirt = pick(&mut rng);
    let stripe = pick(&mut rng);
    let pants = pick(&mut rng);
    let hair = [
        rng.gen_range(0.05..0.5),
        rng.gen_range(0.03..0.35),
        rng.gen_range(0.0..0.2),
    ];
    let shoes = [rng.gen_range(0.0..0.3); 3];

    let mut positions: Vec<Vec3<f64>> = Vec::new();
    let mut colors: Vec<Vec3<f64>> = Vec::new();
    let mut uvs: Vec<[f64; 2]> = Vec::new();
    let mut radial: Vec<Vec3<f64>> = Vec::new();
    let mut is_torso: Vec<bool> = Vec::new();
    let mut weights: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    let mut regress_rows: Vec<(usize, Vec<usize>)> = Vec::new();

    for (k, s) in segs.iter().enumerate() {
        let axis = linalg::sub(s.end, s.start);
        let len = linalg::norm(axis);
        let dir = linalg::scale(axis, 1.0 / len);
        let (e1, e2) = perpendicular_basis(dir);
        let parent = PARENTS[s.joint];
        let cell = [(k % 5) as f64 * 0.2, (k / 5) as f64 * 0.2];
        let weight_at = |t: f64| -> Vec<(usize, f64)> {
            let mut w = vec![(s.joint, 1.0)];
            if let (Some(p), true) = (parent, t < BLEND_SPAN) {
                let wp = 0.5 * (1.0 - t / BLEND_SPAN);
                w[0].1 -= wp;
                w.push((p, wp));
            } else if let (Some(e), true) = (s.end_joint, t > 1.0 - BLEND_SPAN) {
                let we = 0.5 * (t - (1.0 - BLEND_SPAN)) / BLEND_SPAN;
                w[0].1 -= we;
                w.push((e, we));
            }
            w.retain(|&(_, x)| x > 0.0);
            w
        };
        let color_for = |t: f64, ring: usize, rng: &mut ChaCha8Rng| -> Vec3<f64> {
            let base = match s.region {
                Region::Skin => skin_tone,
                Region::Hair if t < 0.35 => skin_tone,
                Region::Hair => hair,
                Region::Shirt if ring % 2 == 1 => stripe,
                Region::Shirt => shirt,
                Region::Pants => pants,
                Region::Shoes => shoes,
            };
            base.map(|c: f64| (c + 0.03 * uniform(rng)).clamp(0.0, 1.0))
        };
        let first = positions.len();
        let mut first_ring = Vec::with_capacity(AROUND);
        for ring in 0..RINGS {
            let t = ring as f64 / (RINGS - 1) as f64;
            let r = s.radius * (1.0 - 0.15 * t);
            let center = linalg::add(s.start, linalg::scale(dir, len * t));
            for a in 0..AROUND {
                let phi = std::f64::consts::TAU * a as f64 / AROUND as f64;
                let out = linalg::add(linalg::scale(e1, phi.cos()), linalg::scale(e2, phi.sin()));
                if ring == 0 {
                    first_ring.push(positions.len());
                }
                positions.push(linalg::add(center, linalg::scale(out, r)));
                radial.push(out);
                colors.push(color_for(t, ring, &mut rng));
                uvs.push([
                    cell[0] + 0.02 + 0.16 * a as f64 / AROUND as f64,
                    cell[1] + 0.02 + 0.16 * t,
                ]);
                is_torso.push(s.joint <= 2 && s.end_joint.is_some_and(|e| e <= 3));
                weights.push(weight_at(t));
            }
        }
        let caps = [
            (
                linalg::sub(s.start, linalg::scale(dir, 0.8 * s.radius)),
                0.0,
                linalg::scale(dir, -1.0),
            ),
            (
                linalg::add(s.end, linalg::scale(dir, 0.8 * 0.85 * s.radius)),
                1.0,
                dir,
            ),
        ];
        for (p, t, out) in caps {
            positions.push(p);
            radial.push(out);
            colors.push(color_for(t, if t == 0.0 { 0 } else { RINGS - 1 }, &mut rng));
            uvs.push([cell[0] + 0.1, cell[1] + 0.01 + 0.18 * t]);
            is_torso.push(false);
            weights.push(weight_at(t));
        }
        let idx = |ring: usize, a: usize| (first + ring * AROUND + a % AROUND) as u32;
        for ring in 0..RINGS - 1 {
            for a in 0..AROUND {
                let (p00, p01) = (idx(ring, a), idx(ring, a + 1));
                let (p10, p11) = (idx(ring + 1, a), idx(ring + 1, a + 1));
                faces.push([p00, p10, p11]);
                faces.push([p00, p11, p01]);
            }
        }
        let apex0 = (first + RINGS * AROUND) as u32;
        let apex1 = apex0 + 1;
        for a in 0..AROUND {
            faces.push([apex0, idx(0, a + 1), idx(0, a)]);
            faces.push([apex1, idx(RINGS - 1, a), idx(RINGS - 1, a + 1)]);
        }
        if let Some(j) = s.regresses {
            regress_rows.push((j, first_ring));
        }
    }

    let n = positions.len();
    let mut joint_regressor = vec![0.0; num_joints * n];
    for (j, ring) in &regress_rows {
        for &v in ring {
            joint_regressor[j * n + v] = 1.0 / ring.len() as f64;
        }
    }
    let mut skin_weights = vec![0.0; n * num_joints];
    for (v, w) in weights.iter().enumerate() {
        for &(j, x) in w {
            skin_weights[v * num_joints + j] += x;
        }
    }

    // Shape directions: stature, girth, leg length, shoulder width.
    let hip_y = joints[joint::LEFT_HIP][1];
    let shoulder_y = joints[joint::LEFT_SHOULDER][1];
    let amp: Vec<f64> = (0..NUM_SHAPE)
        .map(|_| 1.0 + 0.2 * uniform(&mut rng))
        .collect();
    let mut shape_basis = vec![0.0; n * 3 * NUM_SHAPE];
    for v in 0..n {
        let p = positions[v];
        let girth_scale = if is_torso[v] { 0.018 } else { 0.01 };
        let leg = if p[1] < hip_y {
            0.05 * (p[1] - hip_y)
        } else {
            0.0
        };
        let arm_gate = ((p[1] - (shoulder_y - 0.25 * scale)) / (0.1 * scale)).clamp(0.0, 1.0);
        let arm_reach = ((p[0].abs() - 0.1 * scale) / (0.1 * scale)).clamp(0.0, 1.0);
        let dirs: [Vec3<f64>; NUM_SHAPE] = [
            linalg::scale(p, 0.06),
            linalg::scale(radial[v], girth_scale),
            [0.0, leg, 0.0],
            [0.03 * p[0].signum() * arm_gate * arm_reach, 0.0, 0.0],
        ];
        for axis in 0..3 {
            for s in 0..NUM_SHAPE {
                shape_basis[(v * 3 + axis) * NUM_SHAPE + s] = amp[s] * dirs[s][axis];
            }
        }
    }

    let num_features = 9 * (num_joints - 1);
    let mut pose_basis = vec![0.0; n * 3 * num_features];
    for j in 1..num_joints {
        for v in 0..n {
            let w = skin_weights[v * num_joints + j];
            if w == 0.0 {
                continue;
            }
            for axis in 0..3 {
                for m in 0..9 {
                    pose_basis[(v * 3 + axis) * num_features + 9 * (j - 1) + m] =
                        0.003 * scale * w * uniform(&mut rng);
                }
            }
        }
    }

    let model = BodyModel::new(BodyModelParts {
        template: positions.clone(),
        num_shape: NUM_SHAPE,
        shape_basis,
        pose_basis,
        joint_regressor,
        skin_weights,
        parents: PARENTS.to_vec(),
        faces,
        uv: Some(uvs),
        colors: Some(colors.clone()),
    })?;
    let template = ColoredVertexSet::new(positions, colors)?;
    Ok(SyntheticSubject { model, template })
}

/// Neutral standing pose with the arms lowered; zeros for models that do
/// not use the capsule-person joint layout.
pub fn a_pose(num_joints: usize) -> PoseParams<f64> {
    let mut theta = PoseParams::zeros(num_joints);
    if num_joints == JOINT_NAMES.len() {
        theta.set_joint(joint::LEFT_SHOULDER, [0.0, 0.0, -0.75]);
        theta.set_joint(joint::RIGHT_SHOULDER, [0.0, 0.0, 0.75]);
    }
    theta
}

/// A-pose plus a uniform perturbation of `±noise` radians on every
/// non-root joint angle.
pub fn perturbed_a_pose(num_joints: usize, noise: f64, rng: &mut ChaCha8Rng) -> PoseParams<f64> {
    let base = a_pose(num_joints);
    let theta = base
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, &x)| if i < 3 { x } else { x + noise * uniform(rng) })
        .collect();
    PoseParams::new(theta).expect("finite pose")
}
