use proptest::prelude::*;
use rovervision::camgeo::Pixel;
use rovervision::features::Keypoint;
use rovervision::objpipe::{
    associate_keypoints, median, summarize_distances, write_table, AssociateConfig, BBox, RangedObject, MIN_MATCHES,
};

fn bx(x: f64, y: f64, w: f64, h: f64) -> BBox {
    BBox { class_id: 1, label: "rock".into(), x_min: x, y_min: y, x_max: x + w, y_max: y + h, confidence: 1.0 }
}

proptest! {
    #[test]
    fn clamp_rule(d in prop::collection::vec(10.0f64..3000.0, 1..40), thr in 1.0f64..25.0) {
        let (raw, reported, far) = summarize_distances(&d, thr).unwrap();
        prop_assert!(reported <= thr * 100.0);
        prop_assert_eq!(far, raw > thr * 100.0);
        prop_assert_eq!(raw, median(&d).unwrap());
        if !far {
            prop_assert_eq!(reported, raw);
        }
    }

    #[test]
    fn median_splits_the_sample(d in prop::collection::vec(-1e3f64..1e3, 1..40)) {
        let m = median(&d).unwrap();
        let below = d.iter().filter(|v| **v < m).count();
        let above = d.iter().filter(|v| **v > m).count();
        prop_assert!(below <= d.len() / 2 && above <= d.len() / 2);
    }

    /// Objects seen in both images with a horizontal shift. Descriptors come
    /// from a small shared pool, so several box pairs compete for matches.
    #[test]
    fn association_is_injective_and_filtered(
        objects in prop::collection::vec(
            (
                (0.0f64..400.0, 0.0f64..400.0, 30.0f64..120.0, 30.0f64..120.0, 0.0f64..60.0),
                prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0usize..10, prop::bool::weighted(0.8)), 0..10),
            ),
            0..6,
        ),
        pool in prop::collection::vec(prop::array::uniform6(-1.0f64..1.0), 10),
    ) {
        let mut lb = Vec::new();
        let mut rb = Vec::new();
        let mut lk = Vec::new();
        let mut rk = Vec::new();
        for ((x, y, w, h, d), pts) in &objects {
            lb.push(bx(*x, *y, *w, *h));
            rb.push(bx(x - d, *y, *w, *h));
            for (u, v, code, seen) in pts {
                let (px, py) = (x + u * (w - 1.0), y + v * (h - 1.0));
                let desc = pool[*code].to_vec();
                lk.push(Keypoint { px: Pixel::new(px, py), response: 0.0, descriptor: desc.clone() });
                if *seen {
                    rk.push(Keypoint { px: Pixel::new(px - d, py), response: 0.0, descriptor: desc });
                }
            }
        }
        let res = associate_keypoints(&lb, &rb, &lk, &rk, &AssociateConfig::default()).unwrap();
        let mut li: Vec<_> = res.associations.iter().map(|a| a.left_index).collect();
        let mut ri: Vec<_> = res.associations.iter().map(|a| a.right_index).collect();
        li.sort();
        li.dedup();
        ri.sort();
        ri.dedup();
        prop_assert_eq!(li.len(), res.associations.len());
        prop_assert_eq!(ri.len(), res.associations.len());
        prop_assert!(res.associations.iter().all(|a| a.n_matches() >= MIN_MATCHES));
        prop_assert_eq!(res.associations.len() * 2 + res.skipped.len(), lb.len() + rb.len());
        prop_assert_eq!(associate_keypoints(&lb, &rb, &lk, &rk, &AssociateConfig::default()).unwrap(), res);
    }

    #[test]
    fn table_is_sorted_and_deterministic(ds in prop::collection::vec(50.0f64..2000.0, 0..20)) {
        let objs: Vec<RangedObject> = ds
            .iter()
            .enumerate()
            .map(|(k, d)| {
                let (raw, rep, far) = summarize_distances(&[*d; 4], 10.0).unwrap();
                RangedObject {
                    object_id: k,
                    label: "rock".into(),
                    left_box: bx(1.0, 2.0, 3.0, 4.0),
                    right_box: bx(0.0, 2.0, 3.0, 4.0),
                    n_matches: 4,
                    per_feature_distance_cm: vec![*d; 4],
                    raw_median_cm: raw,
                    median_distance_cm: rep,
                    far_flag: far,
                }
            })
            .collect();
        let render = |o: &[RangedObject]| {
            let mut b = Vec::new();
            write_table(o, &mut b).unwrap();
            String::from_utf8(b).unwrap()
        };
        let s = render(&objs);
        prop_assert_eq!(&render(&objs), &s);
        let col: Vec<f64> = s.lines().skip(1).map(|l| l.split(',').nth(7).unwrap().parse().unwrap()).collect();
        prop_assert_eq!(col.len(), objs.len());
        prop_assert!(col.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(col.iter().all(|v| *v <= 1000.0));
    }
}
