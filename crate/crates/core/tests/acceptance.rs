//! Acceptance suite: every criterion at its pinned parameters, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the summary is always printed.

use fracperim::boundary::{measure_theoretic_boundary, minkowski_content, regularized_boundary, BoundarySpec};
use fracperim::filling::{FillingParams, HyperbolicFilling};
use fracperim::geometry::{build_grid_space, fat_cantor, parse_rational};
use fracperim::interval::cantor_energy_direct;
use fracperim::kernels::{complement, functional_j, interaction, kernel_value, s_perimeter, KernelMode, PairWeights, PerimeterForm};
use fracperim::minimizer::{brute_force_with_weights, solve_with_weights, MinimizationProblem, TIE_TOL};
use fracperim::recipes::{self, Check, DEFAULT_SEED};
use fracperim::DiscreteSpace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

type Outcome = fracperim::Result<(Vec<Check>, Value)>;

/// Counts of cases and violations for one property family.
#[derive(Default)]
struct Tally {
    cases: usize,
    failures: Vec<String>,
}

impl Tally {
    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures.push(what());
        }
    }
}

fn random_set(rng: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.gen_range(0..2u8)).collect()
}

fn random_grid(rng: &mut ChaCha8Rng) -> (usize, DiscreteSpace) {
    let dim = rng.gen_range(1..=2);
    let n = if dim == 1 { rng.gen_range(8..48) } else { rng.gen_range(3..8) };
    (dim, build_grid_space(dim, n, 0.0, 1.0).unwrap())
}

fn random_cloud(rng: &mut ChaCha8Rng) -> DiscreteSpace {
    let n = rng.gen_range(4..24);
    let coords: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(0.0..1.0)).collect();
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    DiscreteSpace::from_coords(coords, 2, weights, 1e-6).unwrap()
}

fn properties(seed: u64) -> BTreeMap<&'static str, Tally> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t: BTreeMap<&'static str, Tally> = BTreeMap::new();
    for _ in 0..200 {
        let (dim, sp) = random_grid(&mut rng);
        let s = rng.gen_range(0.05..0.95);
        let mode = if dim == 1 && rng.gen_bool(0.5) { KernelMode::Interval1d } else { KernelMode::MetricMeasure };
        let n = sp.len();
        let pw = PairWeights::build(&sp, s, mode).unwrap();
        let (a, b, c) = (random_set(&mut rng, n), random_set(&mut rng, n), random_set(&mut rng, n));
        let ab = interaction(&pw, &a, &b).unwrap();
        let ba = interaction(&pw, &b, &a).unwrap();
        t.entry("symmetry").or_default().record(ab.to_bits() == ba.to_bits(), || format!("L(A,B)={ab} L(B,A)={ba}"));

        let a1: Vec<u8> = a.iter().zip(&c).map(|(&x, &y)| x & (1 - y)).collect();
        let union: Vec<u8> = a.iter().zip(&c).map(|(&x, &y)| x | y).collect();
        let whole = interaction(&pw, &union, &b).unwrap();
        let parts = interaction(&pw, &a1, &b).unwrap() + interaction(&pw, &c, &b).unwrap();
        t.entry("additivity").or_default().record((whole - parts).abs() <= 1e-12 * whole.abs().max(parts.abs()), || {
            format!("{whole} vs {parts}")
        });

        let p = s_perimeter(&sp, &a, s, mode, PerimeterForm::Symmetric).unwrap();
        let q = s_perimeter(&sp, &complement(&a), s, mode, PerimeterForm::Symmetric).unwrap();
        t.entry("complement invariance").or_default().record(p.to_bits() == q.to_bits() && p >= 0.0, || format!("{p} vs {q}"));

        let mut omega = random_set(&mut rng, n);
        omega[0] = 1;
        omega[n - 1] = 0;
        let j = functional_j(&pw, &a, &omega).unwrap();
        if mode == KernelMode::MetricMeasure {
            let mut want = 0.0;
            for x in 0..n {
                for y in 0..n {
                    if x != y && a[x] == 1 && a[y] == 0 && (omega[x] == 1 || omega[y] == 1) {
                        want += kernel_value(&sp, x, y, s).unwrap() * sp.weight(x) * sp.weight(y);
                    }
                }
            }
            t.entry("functional vs double loop").or_default().record((j - want).abs() <= 1e-9 * want.max(1.0), || format!("{j} vs {want}"));
        }
        if omega.iter().filter(|&&o| o == 1).count() <= 12 {
            let exterior: Vec<u8> = omega.iter().zip(&b).map(|(&o, &e)| (1 - o) & e).collect();
            let prob = MinimizationProblem::new(&sp, omega.clone(), exterior, s, mode).unwrap();
            let cut = solve_with_weights(&prob, &pw).unwrap();
            let brute = brute_force_with_weights(&prob, &pw).unwrap();
            let same = (cut.energy - brute.energy).abs() <= TIE_TOL * brute.energy.abs().max(f64::MIN_POSITIVE) && cut.set == brute.set;
            t.entry("graph cut vs enumeration").or_default().record(same, || format!("{} vs {}", cut.energy, brute.energy));
        }
    }
    for _ in 0..60 {
        let sp = random_cloud(&mut rng);
        let s = rng.gen_range(0.05..0.95);
        let (x, y) = (0, sp.len() - 1);
        let kxy = kernel_value(&sp, x, y, s).unwrap();
        let kyx = kernel_value(&sp, y, x, s).unwrap();
        t.entry("symmetry").or_default().record(kxy.to_bits() == kyx.to_bits(), || format!("K(x,y)={kxy} K(y,x)={kyx}"));
        let radii: Vec<f64> = (0..10).map(|k| 0.05 * 1.4f64.powi(k)).collect();
        let masses: Vec<f64> = radii.iter().map(|&r| sp.ball_measure(x, r).unwrap()).collect();
        t.entry("monotonicity").or_default().record(masses.windows(2).all(|w| w[0] <= w[1]), || format!("ball masses {masses:?}"));
    }
    for _ in 0..40 {
        let dim = rng.gen_range(1..=2);
        let n = if dim == 1 { rng.gen_range(128..512) } else { rng.gen_range(24..48) };
        let sp = build_grid_space(dim, n, 0.0, 1.0).unwrap();
        let g = sp.grid().unwrap().clone();
        let (cx, cy, r) = (rng.gen_range(0.2..0.8), rng.gen_range(0.2..0.8), rng.gen_range(0.1..0.3));
        let set: Vec<u8> = (0..sp.len())
            .map(|i| {
                let dy = if dim == 2 { g.coord(i, 1) - cy } else { 0.0 };
                ((g.coord(i, 0) - cx).hypot(dy) < r) as u8
            })
            .collect();
        let h = sp.resolution_h();
        let spec = BoundarySpec { scale_min: 4.0 * h, scale_max: rng.gen_range(6.0..12.0) * h, delta: rng.gen_range(0.05..0.45) };
        let reg = regularized_boundary(&sp, &set, &spec).unwrap();
        let mtb = measure_theoretic_boundary(&sp, &set, &spec).unwrap();
        t.entry("containment").or_default().record(mtb.iter().zip(&reg).all(|(&m, &g)| m <= g), || "boundary outside regularized boundary".into());
        if reg.contains(&1) {
            let rr = 8.0 * h;
            let vals: Vec<f64> = [0.0, 0.3, 0.6, 0.9, 1.2].iter().map(|&t| minkowski_content(&sp, &reg, t, rr).unwrap().value).collect();
            t.entry("monotonicity").or_default().record(vals.windows(2).all(|w| w[0] <= w[1]), || format!("contents {vals:?}"));
        }
    }
    for (a, depth) in [("1/4", 6), ("1/5", 7), ("1/7", 5), ("2/9", 6)] {
        let c = fat_cantor(&parse_rational(a).unwrap(), depth).unwrap();
        for s in [0.1, 0.4, 0.7] {
            let fast = c.energy(s).unwrap().energy;
            let direct = cantor_energy_direct(&c.removed, &c.remaining, s).unwrap().energy;
            t.entry("treecode vs direct sum").or_default().record((fast - direct).abs() <= 1e-10 * direct, || format!("{fast} vs {direct}"));
        }
    }
    let base = build_grid_space(1, 128, 0.0, 1.0).unwrap();
    for ratio in [0.25, 0.5, 1.0] {
        let f = HyperbolicFilling::build(&base, FillingParams::with_beta_ratio(2.0, 2.0, 5, ratio)).unwrap();
        for z in (0..128).step_by(9) {
            let m: Vec<f64> = (0..10).map(|k| f.mu_beta_ball(z, f.attach_radius / 4.0 * 2f64.powi(k)).unwrap()).collect();
            t.entry("monotonicity").or_default().record(m[0] > 0.0 && m.windows(2).all(|w| w[0] <= w[1] * (1.0 + 1e-12)), || format!("mu_beta {m:?}"));
        }
        t.entry("filling metric").or_default().record(f.is_connected() && f.triangle_violation().map(|v| v <= 1e-12).unwrap_or(true), || "triangle inequality".into());
    }
    t
}

/// Every sampled `s` below the lower end of the Minkowski bracket must be classified convergent.
fn convergence_below_minkowski(minkowski: &Value, fractional: &Value) -> Result<usize, String> {
    let lo = minkowski["bracket"][0].as_f64().ok_or("missing minkowski bracket")?;
    let samples = fractional["samples"].as_array().ok_or("missing ratio samples")?;
    let mut checked = 0;
    for x in samples {
        let s = x["s"].as_f64().ok_or("missing s")?;
        if s < lo {
            checked += 1;
            if x["class"] != "convergent" {
                return Err(format!("s = {s} below {lo} classified {}", x["class"]));
            }
        }
    }
    Ok(checked)
}

fn main() -> ExitCode {
    let start = Instant::now();
    let jobs: Vec<(&str, fn() -> Outcome)> = vec![
        ("cantor-energy", recipes::cantor_energy),
        ("cantor-fractional", recipes::cantor_fractional),
        ("cantor-chain", recipes::cantor_chain),
        ("koch-codim", recipes::koch_codim),
        ("minimize-1d", || recipes::random_minimizers(1, 250, DEFAULT_SEED)),
        ("minimize-2d", || recipes::random_minimizers(2, 250, DEFAULT_SEED)),
        ("disk-regularity", recipes::disk_regularity),
        ("hypfill-verify", recipes::hypfill_verify),
        ("trace-content", recipes::cantor_trace_content),
    ];
    let results: Vec<(&str, Outcome)> = jobs
        .into_iter()
        .map(|(name, f)| {
            let t = Instant::now();
            let r = f();
            println!("ran {name} in {:.1}s", t.elapsed().as_secs_f64());
            (name, r)
        })
        .collect();

    let mut by_criterion: BTreeMap<u32, Vec<Check>> = BTreeMap::new();
    let mut data: BTreeMap<&str, Value> = BTreeMap::new();
    let mut errors = Vec::new();
    for (name, r) in results {
        match r {
            Ok((checks, d)) => {
                for c in checks {
                    by_criterion.entry(c.criterion).or_default().push(c);
                }
                data.insert(name, d);
            }
            Err(e) => errors.push(format!("{name}: {e}")),
        }
    }

    let tallies = properties(DEFAULT_SEED);
    let mut prop_checks: Vec<Check> = tallies
        .iter()
        .map(|(name, t)| Check {
            criterion: 10,
            name: name.to_string(),
            passed: t.failures.is_empty(),
            detail: match t.failures.first() {
                None => format!("{} cases", t.cases),
                Some(f) => format!("{} of {} cases failed, first: {f}", t.failures.len(), t.cases),
            },
        })
        .collect();
    for (name, mink, frac) in [
        ("cantor convergence below minkowski codimension", data.get("cantor-chain").map(|d| &d["minkowski"]), data.get("cantor-chain").map(|d| &d["fractional"])),
        ("koch convergence below minkowski codimension", data.get("koch-codim").map(|d| &d["minkowski"]), data.get("koch-codim").map(|d| &d["fractional"])),
    ] {
        let r = match (mink, frac) {
            (Some(m), Some(f)) => convergence_below_minkowski(m, f),
            _ => Err("recipe data unavailable".to_string()),
        };
        prop_checks.push(Check {
            criterion: 10,
            name: name.into(),
            passed: r.is_ok(),
            detail: match r {
                Ok(k) => format!("{k} samples convergent"),
                Err(e) => e,
            },
        });
    }
    by_criterion.insert(10, prop_checks);

    let mut all = errors.is_empty();
    for e in &errors {
        println!("ERROR {e}");
    }
    for k in 1..=10u32 {
        let checks = by_criterion.get(&k).cloned().unwrap_or_default();
        let ok = !checks.is_empty() && checks.iter().all(|c| c.passed);
        all &= ok;
        println!("{} criterion {k}", if ok { "PASS" } else { "FAIL" });
        for c in &checks {
            println!("    {} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
        }
    }
    println!("acceptance finished in {:.1}s", start.elapsed().as_secs_f64());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
