//! End-to-end experiments with pinned parameters, each ending in pass/fail checks.

use crate::boundary::{
    codim_chain_report, estimate_codimension, fractional_codimension, hausdorff_content, measure_theoretic_boundary,
    regularized_minkowski_sums, uniform_grid, BoundarySpec, ChainParams, ChainStatus, CodimParams, RatioParams,
};
use crate::error::{invalid, Result};
use crate::filling::{verify_codim_relation, FillingParams, HyperbolicFilling};
use crate::geometry::{build_grid_space, fat_cantor, koch_snowflake, parse_rational};
use crate::kernels::{KernelMode, PairWeights};
use crate::minimizer::{
    brute_force_with_weights, check_supersolution, solve_with_weights, verify_porosity, verify_uniform_density,
    MinimizationProblem, TIE_TOL,
};
use crate::shells::ShellEnergies;
use crate::space::{dyadic_scales, DiscreteSpace};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use std::time::Instant;

pub const RECIPES: [&str; 6] = ["cantor-energy", "cantor-chain", "koch-codim", "minimize-1d", "minimize-2d", "hypfill-verify"];

pub const DEFAULT_SEED: u64 = 20240611;

/// `2 - log 4 / log 3`.
pub const KOCH_CODIM: f64 = 0.738_140_493_617_726_6;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub criterion: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecipeReport {
    pub recipe: String,
    pub checks: Vec<Check>,
    pub data: Value,
    pub seconds: f64,
}

impl RecipeReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(criterion: u32, name: &str, passed: bool, detail: String) -> Check {
    Check { criterion, name: name.to_string(), passed, detail }
}

pub fn run_recipe(name: &str, seed: u64) -> Result<RecipeReport> {
    let start = Instant::now();
    let (checks, data) = match name {
        "cantor-energy" => cantor_energy()?,
        "cantor-chain" => {
            let (mut c, d2) = cantor_fractional()?;
            let (c3, d3) = cantor_chain()?;
            let (c9, d9) = cantor_trace_content()?;
            c.extend(c3);
            c.extend(c9);
            (c, json!({ "fractional": d2, "chain": d3, "trace_content": d9 }))
        }
        "koch-codim" => koch_codim()?,
        "minimize-1d" => random_minimizers(1, 250, seed)?,
        "minimize-2d" => {
            let (mut c, d5) = random_minimizers(2, 250, seed)?;
            let (c7, d7) = disk_regularity()?;
            c.extend(c7);
            (c, json!({ "random": d5, "disk": d7 }))
        }
        "hypfill-verify" => hypfill_verify()?,
        _ => return invalid(format!("unknown recipe '{name}', expected one of {}", RECIPES.join(", "))),
    };
    Ok(RecipeReport { recipe: name.to_string(), checks, data, seconds: start.elapsed().as_secs_f64() })
}

type Outcome = (Vec<Check>, Value);

/// Energies of the `a = 1/5` Cantor tilings against `sum_{j <= J} (2 a^(1-s))^j`.
pub fn cantor_energy() -> Result<Outcome> {
    let a = parse_rational("1/5")?;
    let af = 0.2f64;
    let mut checks = Vec::new();
    let mut data = Vec::new();
    for s in [0.2, 0.3] {
        let start = Instant::now();
        let mut ratios = Vec::new();
        for depth in 6..=16u32 {
            let e = fat_cantor(&a, depth)?.energy(s)?.energy;
            let q = 2.0 * af.powf(1.0 - s);
            let series: f64 = (1..=depth as i32).map(|j| q.powi(j)).sum();
            ratios.push((depth, e, e / series));
        }
        let secs = start.elapsed().as_secs_f64();
        let steps: Vec<f64> = ratios.windows(2).filter(|w| w[1].0 >= 12).map(|w| w[1].2 / w[0].2).collect();
        let worst = steps.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
        let limit = ratios.last().unwrap().2;
        let ok = worst <= 0.02 && (0.1..=10.0).contains(&limit) && secs < 60.0;
        checks.push(check(
            1,
            &format!("cantor energy asymptotics s={s}"),
            ok,
            format!("max successive change {:.4}, limit ratio {limit:.4}, {secs:.1}s", worst),
        ));
        data.push(json!({ "s": s, "rows": ratios, "seconds": secs }));
    }
    Ok((checks, Value::Array(data)))
}

/// Fractional codimension of `C_{1/4}` from exact level energies at depth 14.
pub fn cantor_fractional() -> Result<Outcome> {
    let start = Instant::now();
    let c = fat_cantor(&parse_rational("1/4")?, 14)?;
    let f = fractional_codimension(|s| c.level_energies(s), &uniform_grid(0.02, 0.98, 48), &RatioParams::default())?;
    let secs = start.elapsed().as_secs_f64();
    let [lo, hi] = f.bracket;
    let ok = lo <= 0.5 && 0.5 <= hi && hi - lo <= 0.06 + 1e-12 && secs < 120.0;
    let detail = format!("bracket [{lo:.3}, {hi:.3}] {:?}, {secs:.1}s", f.status);
    Ok((vec![check(2, "fractional codimension of C_1/4", ok, detail)], serde_json::to_value(&f)?))
}

fn cantor_raster_spec(space: &DiscreteSpace) -> BoundarySpec {
    let h = space.resolution_h();
    BoundarySpec { scale_min: 4.0 * h, scale_max: 8.0 * h, delta: 0.2 }
}

/// Minkowski, fractional and Hausdorff codimensions of `C_{1/4}` rasterized at `n = 2^14`.
pub fn cantor_chain() -> Result<Outcome> {
    let a = parse_rational("1/4")?;
    let (space, set) = fat_cantor(&a, 8)?.raster(1 << 14)?;
    let h = space.resolution_h();
    let spec = cantor_raster_spec(&space);
    let exact = fat_cantor(&a, 14)?;
    let mut energies = |s: f64| exact.level_energies(s);
    let mut params = ChainParams::new(uniform_grid(0.0, 1.5, 30), uniform_grid(0.02, 0.98, 48));
    params.boundary_ratio = 0.0;
    params.minkowski_scales = Some(dyadic_scales(128.0 * h, 4096.0 * h));
    params.hausdorff_scales = Some(dyadic_scales(8.0 * h, 64.0 * h));
    let r = codim_chain_report(&space, &set, &spec, &params, Some(&mut energies))?;
    let (m, f, hs) = (r.minkowski.bracket, r.fractional.bracket, r.hausdorff.bracket);
    let ok = m[1] <= 0.15 && f[0] <= 0.5 && 0.5 <= f[1] && hs[0] >= 0.8 && r.status == ChainStatus::Pass;
    let detail = format!(
        "minkowski [{:.3}, {:.3}], fractional [{:.3}, {:.3}], hausdorff [{:.3}, {:.3}], {:?}",
        m[0], m[1], f[0], f[1], hs[0], hs[1], r.status
    );
    Ok((vec![check(3, "codimension chain of C_1/4", ok, detail)], serde_json::to_value(&r)?))
}

/// Greedy `H^-0.3` content of the finite-scale measure-theoretic boundary of the depth-4
/// `C_{1/4}` tiling as `n` grows by 4 and `r_max = 64 h` shrinks by 4.
pub fn cantor_trace_content() -> Result<Outcome> {
    let c = fat_cantor(&parse_rational("1/4")?, 4)?;
    let mut rows = Vec::new();
    for k in [12u32, 14, 16, 18] {
        let (space, set) = c.raster(1 << k)?;
        let mtb = measure_theoretic_boundary(&space, &set, &cantor_raster_spec(&space))?;
        let r_max = 64.0 * space.resolution_h();
        rows.push((1usize << k, r_max, hausdorff_content(&space, &mtb, 0.3, r_max)?.value));
    }
    let drops: Vec<f64> = rows.windows(2).map(|w| w[0].2 / w[1].2).collect();
    let ok = drops.iter().all(|&d| d >= 2.0);
    let detail = format!("drops {:?}", drops.iter().map(|d| format!("{d:.3}")).collect::<Vec<_>>());
    Ok((vec![check(9, "H^-0.3 content of the boundary vanishes", ok, detail)], json!({ "rows": rows, "drops": drops })))
}

/// Minkowski and fractional codimension of the depth-6 Koch snowflake at `n = 1024`.
pub fn koch_codim() -> Result<Outcome> {
    let start = Instant::now();
    let (space, set) = koch_snowflake(6)?.raster(1024)?;
    let h = space.resolution_h();
    let spec = cantor_raster_spec(&space);
    let scales: Vec<f64> = (0..=16).map(|k| 16.0 * h * 2f64.powf(k as f64 / 4.0)).collect();
    let sums = regularized_minkowski_sums(&space, &set, &spec, &scales, 0.125)?;
    let mink = estimate_codimension(&scales, &uniform_grid(0.0, 1.5, 30), &CodimParams::default(), |t| {
        Ok(scales.iter().zip(&sums).map(|(&r, &m)| r.powf(-t) * m).collect())
    })?;
    let shells = ShellEnergies::new(&space, &set, 8.0 * h, space.diameter() / 8.0)?;
    let frac = fractional_codimension(|s| shells.energies(s), &uniform_grid(0.02, 0.98, 48), &RatioParams::default())?;
    let secs = start.elapsed().as_secs_f64();
    let gap = |b: [f64; 2]| (b[0] - KOCH_CODIM).max(KOCH_CODIM - b[1]).max(0.0);
    let checks = vec![
        check(
            4,
            "koch minkowski codimension",
            gap(mink.bracket) <= 0.05 && secs < 600.0,
            format!("bracket [{:.3}, {:.3}] estimate {:.3}, {secs:.1}s", mink.bracket[0], mink.bracket[1], mink.estimate),
        ),
        check(
            4,
            "koch fractional codimension",
            gap(frac.bracket) <= 0.08 && secs < 600.0,
            format!("bracket [{:.3}, {:.3}]", frac.bracket[0], frac.bracket[1]),
        ),
    ];
    Ok((checks, json!({ "minkowski": mink, "fractional": frac, "seconds": secs })))
}

fn random_problem_space(rng: &mut ChaCha8Rng, dim: usize) -> Result<DiscreteSpace> {
    let n = if dim == 1 { rng.gen_range(6..=24) } else { rng.gen_range(3..=6) };
    build_grid_space(dim, n, 0.0, 1.0)
}

/// Graph-cut minimizers against enumeration on seeded random problems, then the
/// supersolution inequality on every output.
pub fn random_minimizers(dim: usize, count: usize, seed: u64) -> Result<Outcome> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (dim as u64) << 32);
    let (mut mismatches, mut violations, mut subsets) = (0usize, 0usize, 0usize);
    let mut worst_gap = 0.0f64;
    for k in 0..count {
        let space = random_problem_space(&mut rng, dim)?;
        let n = space.len();
        let m = rng.gen_range(1..=16.min(n - 1));
        let mut omega = vec![0u8; n];
        for i in sample(&mut rng, n, m) {
            omega[i] = 1;
        }
        let exterior: Vec<u8> = omega.iter().map(|&o| if o == 0 && rng.gen_bool(0.5) { 1 } else { 0 }).collect();
        let s = [0.2, 0.5, 0.8][k % 3];
        let mode = if dim == 1 && k % 2 == 1 { KernelMode::Interval1d } else { KernelMode::MetricMeasure };
        let problem = MinimizationProblem::new(&space, omega.clone(), exterior, s, mode)?;
        let pw = PairWeights::build(&space, s, mode)?;
        let exact = solve_with_weights(&problem, &pw)?;
        let brute = brute_force_with_weights(&problem, &pw)?;
        let gap = (exact.energy - brute.energy).abs() / brute.energy.abs().max(f64::MIN_POSITIVE);
        worst_gap = worst_gap.max(gap);
        if gap > 1e-12 || exact.set != brute.set {
            mismatches += 1;
        }
        let inner: Vec<usize> = (0..n).filter(|&i| exact.set[i] == 1 && omega[i] == 1).collect();
        if inner.is_empty() {
            continue;
        }
        let mut trials: Vec<Vec<usize>> = inner.iter().map(|&i| vec![i]).collect();
        for _ in 0..100 {
            let mut a: Vec<usize> = inner.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
            if a.is_empty() {
                a.push(inner[rng.gen_range(0..inner.len())]);
            }
            trials.push(a);
        }
        for a in trials {
            let mut mask = vec![0u8; n];
            a.iter().for_each(|&i| mask[i] = 1);
            subsets += 1;
            if !check_supersolution(&pw, &omega, &exact.set, &mask)?.holds {
                violations += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let checks = vec![
        check(
            5,
            &format!("graph cut equals enumeration ({dim}-D)"),
            mismatches == 0 && secs < 300.0,
            format!("{count} problems, {mismatches} mismatches, worst relative gap {worst_gap:.2e}, {secs:.1}s"),
        ),
        check(
            6,
            &format!("supersolution inequality ({dim}-D)"),
            violations == 0,
            format!("{subsets} subsets, {violations} violations at tolerance {TIE_TOL:e}"),
        ),
    ];
    Ok((checks, json!({ "dim": dim, "count": count, "seed": seed, "mismatches": mismatches, "worst_gap": worst_gap, "subsets": subsets, "violations": violations, "seconds": secs })))
}

/// Minimizers on a 64 x 64 grid with a central disk and half-plane exterior data.
pub fn disk_regularity() -> Result<Outcome> {
    let n = 64;
    let space = build_grid_space(2, n, 0.0, 1.0)?;
    let g = space.grid().unwrap().clone();
    let (omega, exterior): (Vec<u8>, Vec<u8>) = (0..space.len())
        .map(|i| {
            let (x, y) = (g.coord(i, 0), g.coord(i, 1));
            let inside = (x - 0.5).hypot(y - 0.5) < 0.375;
            (inside as u8, (!inside && x > 0.5) as u8)
        })
        .unzip();
    let mut checks = Vec::new();
    let mut data = Vec::new();
    for s in [0.3, 0.6] {
        let problem = MinimizationProblem::new(&space, omega.clone(), exterior.clone(), s, KernelMode::MetricMeasure)?;
        let pw = PairWeights::build(&space, s, KernelMode::MetricMeasure)?;
        let result = solve_with_weights(&problem, &pw)?;
        let density = verify_uniform_density(&space, &omega, &result, 0.02)?;
        let porosity = verify_porosity(&space, &omega, &result, 64.0)?;
        let balls = density.rows.len();
        checks.push(check(
            7,
            &format!("uniform density s={s}"),
            density.passes && balls > 0,
            format!("{balls} interface balls, min ratio {:.4}", density.min_ratio.unwrap_or(f64::NAN)),
        ));
        checks.push(check(
            7,
            &format!("porosity s={s}"),
            porosity.passes && balls > 0,
            format!("max C {:.2}", porosity.max_c.unwrap_or(f64::NAN)),
        ));
        data.push(json!({
            "s": s,
            "energy": result.energy,
            "density_min": density.min_ratio,
            "porosity_max": porosity.max_c,
            "balls": balls,
            "gamma0_bound": density.gamma0_bound,
        }));
    }
    Ok((checks, Value::Array(data)))
}

/// Codimension relation of the hyperbolic filling of the unit interval grid.
pub fn hypfill_verify() -> Result<Outcome> {
    let start = Instant::now();
    let base = build_grid_space(1, 512, 0.0, 1.0)?;
    let samples: Vec<usize> = (0..16).map(|k| 64 + k * 384 / 15).collect();
    let mut checks = Vec::new();
    let mut data = Vec::new();
    for ratio in [0.5, 1.0] {
        let filling = HyperbolicFilling::build(&base, FillingParams::with_beta_ratio(2.0, 2.0, 7, ratio))?;
        let r0 = 2.0 * filling.attach_radius;
        let radii: Vec<f64> = (0..=4).map(|k| r0 * 2f64.powi(k)).collect();
        let rel = verify_codim_relation(&filling, &base, &samples, &radii)?;
        let secs = start.elapsed().as_secs_f64();
        checks.push(check(
            8,
            &format!("filling codimension relation beta/eps={ratio}"),
            rel.spread <= 50.0 && secs < 120.0,
            format!("ratios in [{:.3}, {:.3}], max/min {:.3}", rel.min_ratio, rel.max_ratio, rel.spread),
        ));
        data.push(json!({ "beta_over_eps": ratio, "relation": rel }));
    }
    Ok((checks, Value::Array(data)))
}
