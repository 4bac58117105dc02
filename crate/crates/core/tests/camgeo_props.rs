use proptest::prelude::*;
use rovervision::camgeo::{make_parallel_rig, CahvCamera, Pixel, StereoRig, Vec3};
use rovervision::synthgen::{generate_dataset, SceneConfig};

fn default_rig() -> StereoRig {
    StereoRig::default()
}

/// Point in the default rig's shared frustum at forward depth `z`.
fn frustum_point(u: f64, v: f64, z: f64) -> Vec3 {
    let rig = default_rig();
    let f = rig.focal_px();
    let d = f * rig.baseline / z;
    // left x in [d, 1023] keeps the right projection x - d inside the image
    let x = d + u * (1023.0 - d);
    let y = v * 1023.0;
    Vec3::new((x - 512.0) * z / f, (y - 512.0) * z / f, z)
}

/// Camera with an arbitrary orientation, focal lengths and principal point.
fn rotated_camera(q: [f64; 4], c: [f64; 3], fx: f64, fy: f64, cx: f64, cy: f64) -> CahvCamera {
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|v| v / n);
    let r = [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ];
    let col = |k: usize| Vec3::new(r[0][k], r[1][k], r[2][k]);
    let (hh, vv, a) = (col(0), col(1), col(2));
    CahvCamera::new(c.into(), a, hh * fx + a * cx, vv * fy + a * cy).unwrap()
}

proptest! {
    #[test]
    fn project_triangulate_round_trip(u in 0.0f64..1.0, v in 0.0f64..1.0, z in 1.0f64..10.0) {
        let rig = default_rig();
        let p = frustum_point(u, v, z);
        let l = rig.left.project(&p).unwrap();
        let r = rig.right.project(&p).unwrap();
        let back = rig.triangulate(&l, &r).unwrap();
        prop_assert!((back - p).norm() <= 1e-9, "error {:e}", (back - p).norm());
    }

    #[test]
    fn pixel_ray_inverts_project(
        q in prop::array::uniform4(-1.0f64..1.0),
        c in prop::array::uniform3(-5.0f64..5.0),
        fx in 200.0f64..3000.0, fy in 200.0f64..3000.0,
        cx in 0.0f64..2000.0, cy in 0.0f64..2000.0,
        px in 0.0f64..2000.0, py in 0.0f64..2000.0, t in 0.1f64..50.0,
    ) {
        prop_assume!(q.iter().map(|v| v * v).sum::<f64>() > 1e-3);
        let cam = rotated_camera(q, c, fx, fy, cx, cy);
        let (o, dir) = cam.pixel_ray(&Pixel::new(px, py)).unwrap();
        prop_assert!((dir.norm() - 1.0).abs() < 1e-12);
        prop_assert!(dir.dot(&cam.a) > 0.0);
        let back = cam.project(&(o + dir * t)).unwrap();
        prop_assert!((back.x - px).abs() < 1e-6 && (back.y - py).abs() < 1e-6, "{:?} vs ({}, {})", back, px, py);
    }

    #[test]
    fn disparity_times_depth_is_constant(z in 1.0f64..10.0, x in 0.2f64..0.8, y in 0.0f64..1.0) {
        let rig = default_rig();
        let p = frustum_point(x, y, z);
        let d = rig.left.project(&p).unwrap().x - rig.right.project(&p).unwrap().x;
        let fb = rig.focal_px() * rig.baseline;
        prop_assert!((z * d - fb).abs() / fb <= 1e-9);
    }

    #[test]
    fn single_precision_rig_round_trip(u in 0.0f64..1.0, v in 0.0f64..1.0, z in 1.0f64..10.0) {
        let rig = make_parallel_rig(0.24f32, 1024, 1024, 39.0).unwrap();
        let p = frustum_point(u, v, z);
        let pf = Vec3::new(p.x as f32, p.y as f32, p.z as f32);
        let back = rig.triangulate(&rig.left.project(&pf).unwrap(), &rig.right.project(&pf).unwrap()).unwrap();
        // float32 pixels resolve about 1e-4 px, i.e. millimetres at 10 m
        prop_assert!((back - pf).norm() <= 2e-3 * z as f32, "error {}", (back - pf).norm());
    }

    #[test]
    fn noiseless_samples_are_consistent(seed in any::<u64>()) {
        let rig = default_rig();
        let cfg = SceneConfig { n: 50, seed, ..SceneConfig::default() };
        let samples = generate_dataset(&rig, &cfg).unwrap();
        prop_assert_eq!(samples.len(), 50);
        for s in &samples {
            prop_assert!((1.0 - 1e-9..=10.0 + 1e-9).contains(&s.truth.z));
            prop_assert!(rig.contains(&s.left_px()) && rig.contains(&s.right_px()));
            let back = rig.triangulate(&s.left_px(), &s.right_px()).unwrap();
            prop_assert!((back - s.truth).norm() <= 1e-9);
        }
        prop_assert_eq!(generate_dataset(&rig, &cfg).unwrap(), samples);
    }
}
