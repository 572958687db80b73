use fracperim::cover::{bounded_overlap_cover, discrete_convolution, partition_of_unity};
use fracperim::geometry::build_grid_space;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

fn config(cases: u32) -> Config {
    Config { cases, rng_seed: RngSeed::Fixed(0x5eed), failure_persistence: None, ..Config::default() }
}

fn grid() -> impl Strategy<Value = (usize, usize)> {
    prop_oneof![(Just(1usize), 16usize..160), (Just(2usize), 6usize..20)]
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn ball_measure_is_monotone((dim, n) in grid(), c in any::<prop::sample::Index>(), mut radii in prop::collection::vec(0.0f64..1.5, 2..12)) {
        let sp = build_grid_space(dim, n, 0.0, 1.0).unwrap();
        let x = c.index(sp.len());
        radii.sort_by(f64::total_cmp);
        let masses: Vec<f64> = radii.iter().map(|&r| sp.ball_measure(x, r.max(1e-9)).unwrap()).collect();
        prop_assert!(masses.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn cover_is_separated_and_covering((dim, n) in grid(), k in 4.0f64..12.0) {
        let sp = build_grid_space(dim, n, 0.0, 1.0).unwrap();
        let eps = k * sp.resolution_h();
        let cover = bounded_overlap_cover(&sp, eps).unwrap();
        for x in 0..sp.len() {
            prop_assert!(cover.centers.iter().any(|&c| sp.distance(x, c) < eps));
        }
        for (i, &a) in cover.centers.iter().enumerate() {
            for &b in &cover.centers[i + 1..] {
                prop_assert!(sp.distance(a, b) >= eps);
            }
        }
        let limit = if dim == 1 { 25 } else { 81 };
        prop_assert!(cover.overlap_bound <= limit);
    }

    #[test]
    fn partition_of_unity_sums_to_one((dim, n) in grid(), k in 2.0f64..10.0) {
        let sp = build_grid_space(dim, n, 0.0, 1.0).unwrap();
        let cover = bounded_overlap_cover(&sp, k * sp.resolution_h()).unwrap();
        let pou = partition_of_unity(&sp, &cover).unwrap();
        for (x, row) in pou.rows.iter().enumerate() {
            let total: f64 = row.iter().map(|e| e.1).sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
            for &(c, _) in row {
                prop_assert!(sp.distance(x, cover.centers[c]) < 2.0 * cover.eps);
            }
        }
    }

    #[test]
    fn convolution_keeps_constants_and_range((dim, n) in grid(), k in 2.0f64..8.0, c in -5.0f64..5.0, f in prop::collection::vec(-3.0f64..3.0, 400)) {
        let sp = build_grid_space(dim, n, 0.0, 1.0).unwrap();
        let cover = bounded_overlap_cover(&sp, k * sp.resolution_h()).unwrap();
        let pou = partition_of_unity(&sp, &cover).unwrap();
        let constant = discrete_convolution(&sp, &vec![c; sp.len()], &cover, &pou).unwrap();
        prop_assert!(constant.iter().all(|&v| (v - c).abs() <= 1e-12 * c.abs().max(1.0)));
        let f: Vec<f64> = (0..sp.len()).map(|i| f[i % f.len()]).collect();
        let (lo, hi) = f.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let g = discrete_convolution(&sp, &f, &cover, &pou).unwrap();
        prop_assert!(g.iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12));
    }
}
