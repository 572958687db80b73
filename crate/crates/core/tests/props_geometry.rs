use fracperim::geometry::{cantor_piece_length, fat_cantor, parse_rational};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

fn config(cases: u32) -> Config {
    Config { cases, rng_seed: RngSeed::Fixed(0x6765), failure_persistence: None, ..Config::default() }
}

fn small_a() -> impl Strategy<Value = BigRational> {
    (1i64..40, 4i64..120)
        .prop_filter("a < 1/3", |(p, q)| 3 * p < *q)
        .prop_map(|(p, q)| BigRational::new(p.into(), q.into()))
}

proptest! {
    #![proptest_config(config(40))]

    #[test]
    fn piece_lengths_match_construction(a in small_a(), depth in 0u32..9) {
        let c = fat_cantor(&a, depth).unwrap();
        prop_assert_eq!(c.remaining.len(), 1usize << depth);
        let want = cantor_piece_length(&a, depth);
        for r in &c.remaining {
            prop_assert_eq!(r.len(), want.clone());
        }
    }

    #[test]
    fn tiling_covers_the_unit_interval(a in small_a(), depth in 0u32..9) {
        let c = fat_cantor(&a, depth).unwrap();
        let mut all: Vec<_> = c.removed.iter().chain(&c.remaining).cloned().collect();
        all.sort();
        prop_assert_eq!(all[0].lo.clone(), BigRational::zero());
        prop_assert_eq!(all.last().unwrap().hi.clone(), BigRational::one());
        for w in all.windows(2) {
            prop_assert_eq!(w[0].hi.clone(), w[1].lo.clone());
        }
    }

    #[test]
    fn raster_mass_error_is_bounded(a in small_a(), depth in 0u32..7, k in 8u32..13) {
        let n = 1usize << k;
        let c = fat_cantor(&a, depth).unwrap();
        let (sp, set) = c.raster(n).unwrap();
        let exact = c.remaining_length().to_f64().unwrap();
        let endpoints = 2 * (c.removed.len() + c.remaining.len());
        prop_assert!((sp.set_measure(&set) - exact).abs() <= endpoints as f64 / n as f64);
    }
}

#[test]
fn rational_parsing() {
    assert_eq!(parse_rational("1/4").unwrap(), BigRational::new(1.into(), 4.into()));
    assert_eq!(parse_rational(" 2/6 ").unwrap(), BigRational::new(1.into(), 3.into()));
    assert!(parse_rational("1/0").is_err());
    assert!(parse_rational("x").is_err());
    assert!(fat_cantor(&parse_rational("1/3").unwrap(), 2).is_err());
}
