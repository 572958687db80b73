use fracperim::filling::{boundary_trace_check, mu_beta_doubling, Endpoint, FillingParams, HyperbolicFilling};
use fracperim::geometry::build_grid_space;
use fracperim::DiscreteSpace;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

fn config(cases: u32) -> Config {
    Config { cases, rng_seed: RngSeed::Fixed(0x6866), failure_persistence: None, ..Config::default() }
}

/// Deepest admissible level for a grid base, capped.
fn max_levels(base: &DiscreteSpace, alpha: f64, cap: usize) -> usize {
    let diam = base.diameter();
    let scale = if diam < 1.0 { 1.0 } else { 0.5 / diam };
    let n = ((1.0 / (2.0 * scale * base.resolution_h())).ln() / alpha.ln()).floor() as usize;
    n.min(cap)
}

#[derive(Debug, Clone)]
struct Setup {
    dim: usize,
    n: usize,
    alpha: f64,
    tau: f64,
    ratio: f64,
}

fn setup() -> impl Strategy<Value = Setup> {
    (prop_oneof![(Just(1usize), 32usize..160), (Just(2usize), 6usize..14)], prop_oneof![Just(2.0f64), Just(3.0)], 1.2f64..3.0, 0.1f64..=1.0)
        .prop_map(|((dim, n), alpha, tau, ratio)| Setup { dim, n, alpha, tau, ratio })
}

fn build(s: &Setup, cap: usize) -> (DiscreteSpace, HyperbolicFilling) {
    let base = build_grid_space(s.dim, s.n, 0.0, 1.0).unwrap();
    let levels = max_levels(&base, s.alpha, cap);
    let f = HyperbolicFilling::build(&base, FillingParams::with_beta_ratio(s.alpha, s.tau, levels, s.ratio)).unwrap();
    (base, f)
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn level_nets_are_separated_and_maximal(s in setup()) {
        let (base, f) = build(&s, 6);
        prop_assert_eq!(&f.nets[0], &vec![0]);
        for (n, net) in f.nets.iter().enumerate().skip(1) {
            let sep = s.alpha.powi(-(n as i32));
            for (i, &x) in net.iter().enumerate() {
                for &y in &net[i + 1..] {
                    prop_assert!(f.scale * base.distance(x, y) >= sep);
                }
            }
            for p in 0..base.len() {
                prop_assert!(net.iter().any(|&q| f.scale * base.distance(p, q) < sep));
            }
        }
    }

    #[test]
    fn filling_is_a_connected_metric(s in setup()) {
        let (base, f) = build(&s, 3);
        prop_assert!(f.is_connected());
        if f.vertices.len() <= 300 {
            prop_assert!(f.triangle_violation().unwrap() <= 1e-12);
        }
        let pts = [0, base.len() / 3, base.len() - 1];
        for &p in &pts {
            for &q in &pts {
                let a = f.uniformized_distance(Endpoint::Point(p), Endpoint::Point(q)).unwrap();
                let b = f.uniformized_distance(Endpoint::Point(q), Endpoint::Point(p)).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
                prop_assert_eq!(a == 0.0, p == q);
            }
        }
    }

    #[test]
    fn diameter_stays_below_the_bound(s in setup(), cap in 1usize..8) {
        let (base, f) = build(&s, cap);
        let bound = f.diameter_bound();
        for v in (0..f.vertices.len()).step_by(7) {
            prop_assert!(f.vertex_distances(v).iter().all(|&d| d <= bound));
        }
        for p in [0, base.len() - 1] {
            prop_assert!(f.point_distances(p).iter().all(|&d| d + f.attach_radius <= bound));
        }
    }

    #[test]
    fn mu_beta_balls_behave(s in setup(), pick in 0.0f64..1.0) {
        let (base, f) = build(&s, 6);
        let z = ((pick * base.len() as f64) as usize).min(base.len() - 1);
        let radii: Vec<f64> = (0..12).map(|k| f.attach_radius / 4.0 * 2f64.powi(k)).collect();
        let masses: Vec<f64> = radii.iter().map(|&r| f.mu_beta_ball(z, r).unwrap()).collect();
        prop_assert!(masses[0] > 0.0);
        prop_assert!(masses.windows(2).all(|w| w[0] <= w[1] * (1.0 + 1e-12)));
        let total = f.total_mass();
        let far = f.mu_beta_ball(z, 2.0 * f.diameter_bound()).unwrap();
        prop_assert!((far - total).abs() <= 1e-9 * total);
        let scales: Vec<f64> = radii.iter().copied().filter(|&r| r >= 2.0 * f.attach_radius && r <= f.diameter_bound()).collect();
        prop_assert!(mu_beta_doubling(&f, &[z], &scales).unwrap() <= 64.0);
    }

    #[test]
    fn boundary_traces_have_positive_content(s in setup(), lo in 0.0f64..0.8, width in 0.05f64..0.2) {
        let (base, f) = build(&s, 5);
        let g = base.grid().unwrap().clone();
        let subset: Vec<u8> = (0..base.len()).map(|i| { let x = g.coord(i, 0); (lo <= x && x < lo + width) as u8 }).collect();
        prop_assume!(subset.contains(&1));
        let deltas: Vec<f64> = (1..=3).map(|k| 2.0 * f.attach_radius * 2f64.powi(k)).collect();
        for row in boundary_trace_check(&f, &base, &subset, &deltas).unwrap() {
            prop_assert!(!row.violation && row.ratio.is_finite());
        }
    }
}

#[test]
fn too_many_levels_is_a_budget_error() {
    let base = build_grid_space(1, 64, 0.0, 1.0).unwrap();
    assert!(HyperbolicFilling::build(&base, FillingParams::with_beta_ratio(2.0, 2.0, 6, 0.5)).is_err());
    assert!(HyperbolicFilling::build(&base, FillingParams::with_beta_ratio(2.0, 2.0, 5, 0.5)).is_ok());
    assert!(HyperbolicFilling::build(&base, FillingParams::with_beta_ratio(2.0, 0.5, 3, 0.5)).is_err());
    assert!(HyperbolicFilling::build(&base, FillingParams::with_beta_ratio(2.0, 2.0, 3, 1.5)).is_err());
}
