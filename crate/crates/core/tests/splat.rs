mod common;

use common::{brute_force_splat, random_splat_case, rng};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use smplpix::{normalize_depth, splat, splat_with_ids, ColoredVertexSet, Intrinsics, ProjectionImage};

fn frontal(w: u32, h: u32) -> smplpix::Camera {
    let intr = Intrinsics { fx: 100.0, fy: 100.0, cx: w as f64 / 2.0, cy: h as f64 / 2.0 };
    let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    smplpix::Camera::from_intrinsics(intr, id, [0.0; 3], w, h).unwrap()
}

#[test]
fn empty_set_gives_background() {
    let img = splat(&ColoredVertexSet::empty(), &frontal(7, 5));
    assert!(img.data().iter().all(|&x| x == 1.0));
    assert_eq!(img.occupancy(), 0);
}

#[test]
fn nearer_vertex_wins_collision() {
    let verts = ColoredVertexSet::new(
        vec![[0.0, 0.0, 0.4], [0.0, 0.0, 0.3]],
        vec![[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]],
    )
    .unwrap();
    let img = splat(&verts, &frontal(8, 8));
    assert_eq!(img.pixel(4, 4), [1.0, 0.0, 0.0, 0.3]);
    assert_eq!(img.occupancy(), 1);
}

#[test]
fn thousand_vertices_match_oracle_on_64x64() {
    let mut r = rng(64);
    let cam = frontal(64, 64);
    let pos = (0..1000)
        .map(|_| [r.gen_range(-0.4..0.4), r.gen_range(-0.4..0.4), r.gen_range(0.2..1.0)])
        .collect();
    let col = (0..1000).map(|_| [r.gen(), r.gen(), r.gen()]).collect();
    let verts = ColoredVertexSet::new(pos, col).unwrap();
    assert_eq!(splat(&verts, &cam).data(), brute_force_splat(&verts, &cam).as_slice());
}

#[test]
fn randomized_oracle_equivalence() {
    let mut r = rng(1);
    for _ in 0..200 {
        let (verts, cam) = random_splat_case(&mut r, 600, 48);
        let img = splat(&verts, &cam);
        assert_eq!((img.width(), img.height()), (cam.width(), cam.height()));
        assert_eq!(img.data(), brute_force_splat(&verts, &cam).as_slice());
    }
}

#[test]
fn shuffling_with_original_ids_is_invariant() {
    let mut r = rng(2);
    for _ in 0..50 {
        let (verts, cam) = random_splat_case(&mut r, 400, 32);
        let mut order: Vec<u32> = (0..verts.len() as u32).collect();
        order.shuffle(&mut r);
        let pos = order.iter().map(|&i| verts.positions()[i as usize]).collect();
        let col = order.iter().map(|&i| verts.colors()[i as usize]).collect();
        let shuffled = ColoredVertexSet::new(pos, col).unwrap();
        let a = splat(&verts, &cam);
        let b = splat_with_ids(&shuffled, &order, &cam).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn occupancy_and_monotonicity() {
    let mut r = rng(3);
    for _ in 0..50 {
        let (verts, cam) = random_splat_case(&mut r, 300, 32);
        let img = splat(&verts, &cam);
        let bound = verts.len().min((cam.width() * cam.height()) as usize);
        assert!(img.occupancy() <= bound);

        let extra = [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)];
        let (mut pos, mut col) = verts.clone().into_parts();
        pos.push(extra);
        col.push([0.5; 3]);
        let more = splat(&ColoredVertexSet::new(pos, col).unwrap(), &cam);
        for y in 0..cam.height() {
            for x in 0..cam.width() {
                let (before, after) = (img.pixel(x, y), more.pixel(x, y));
                if !img.is_background(x, y) {
                    assert!(after[3] <= before[3]);
                }
            }
        }
    }
}

#[test]
fn large_input_is_thread_count_independent() {
    let mut r = rng(4);
    let cam = frontal(100, 100);
    let n = 100_000;
    let pos = (0..n)
        .map(|_| [r.gen_range(-0.5..0.5), r.gen_range(-0.5..0.5), *[0.5, 0.7].choose(&mut r).unwrap()])
        .collect();
    let col = (0..n).map(|_| [r.gen(), r.gen(), r.gen()]).collect();
    let verts = ColoredVertexSet::new(pos, col).unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| splat(&verts, &cam));
    let b = four.install(|| splat(&verts, &cam));
    assert_eq!(a.encode(), b.encode());
}

#[test]
fn normalize_depth_examples() {
    let verts = ColoredVertexSet::new(
        vec![[-0.002, 0.0, 0.1], [0.008, 0.0, 0.4]],
        vec![[0.2, 0.3, 0.4], [0.5, 0.6, 0.7]],
    )
    .unwrap();
    let cam = frontal(8, 8);
    let raw = splat(&verts, &cam);
    let n = normalize_depth(&raw, 0.1, 0.7).unwrap();
    assert!(n.is_depth_normalized());
    assert_eq!(n.pixel(2, 4)[3], 0.0);
    assert!((n.pixel(6, 4)[3] - 0.5).abs() < 1e-6);
    assert_eq!(n.pixel(0, 0), [1.0; 4]);
    assert!(normalize_depth(&raw, 0.7, 0.1).is_err());
    assert!(normalize_depth(&raw, 0.5, 0.5).is_err());
}

#[test]
fn rgbd_round_trip_through_file() {
    let mut r = rng(5);
    let (verts, cam) = random_splat_case(&mut r, 200, 20);
    let img = splat(&verts, &cam);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.rgbd");
    img.save(&path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], b"RGBD");
    assert_eq!(bytes.len(), 14 + 16 * (cam.width() * cam.height()) as usize);
    assert_eq!(ProjectionImage::load(&path).unwrap(), img);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn prop_oracle_equivalence(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (verts, cam) = random_splat_case(&mut r, 120, 24);
        let img = splat(&verts, &cam);
        let expected = brute_force_splat(&verts, &cam);
        prop_assert_eq!(img.data(), expected.as_slice());
    }

    #[test]
    fn prop_normalized_depth_in_unit_interval(seed in any::<u64>(), lo in 0.05f64..1.0, span in 0.01f64..3.0) {
        let mut r = rng(seed);
        let (verts, cam) = random_splat_case(&mut r, 120, 24);
        let img = normalize_depth(&splat(&verts, &cam), lo, lo + span).unwrap();
        for y in 0..img.height() {
            for x in 0..img.width() {
                if !img.is_background(x, y) {
                    let d = img.pixel(x, y)[3];
                    prop_assert!((0.0..1.0).contains(&d));
                }
            }
        }
    }
}
