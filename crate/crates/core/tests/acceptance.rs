//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! (run with `--nocapture` to see per-entry detail).
//!
//! Criteria 2-4 compare Monte Carlo variance ratios against benchmark values
//! whose sample counts are unknown, so their tolerances are statistical
//! bands; a band miss is re-run once with an independent derived seed and
//! counts as a failure only if it misses twice.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

use levy_isamp_core::*;

const ACCEPT_SEED: u64 = 42;
const N_SAMPLES: usize = 100_000;

fn single_asset() -> VarianceGammaModel {
    VarianceGammaModel::new(1.0, DVector::from_vec(vec![-0.2]), DMatrix::from_vec(1, 1, vec![0.04]))
        .unwrap()
}

fn basket_3d() -> VarianceGammaModel {
    VarianceGammaModel::new(
        1.0,
        DVector::from_element(3, -0.2),
        DMatrix::from_row_slice(3, 3, &[0.04, 0.02, 0.02, 0.02, 0.04, 0.02, 0.02, 0.02, 0.04]),
    )
    .unwrap()
}

fn entry_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add((index + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Band check with the one-re-run flaky budget for statistical entries.
fn ratio_within_band(
    name: &str,
    model: &VarianceGammaModel,
    payoff: &PayoffSpec,
    measure: &TiltMeasure,
    m: usize,
    expect: f64,
    tol_frac: f64,
    index: u64,
    failures: &mut Vec<String>,
) {
    let run = |seed: u64| variance_ratio(model, payoff, measure, m, N_SAMPLES, seed, 0).unwrap();
    let first = run(entry_seed(ACCEPT_SEED, index));
    let lo = expect * (1.0 - tol_frac);
    let hi = expect * (1.0 + tol_frac);
    let mut measured = first;
    let mut verdict = "ok";
    if !(lo..=hi).contains(&first) {
        let second = run(entry_seed(ACCEPT_SEED ^ 0x5EED_CAFE, index));
        measured = second;
        if !(lo..=hi).contains(&second) {
            verdict = "FAIL";
            failures.push(format!(
                "{name}: ratios {first:.3}/{second:.3} outside [{lo:.3}, {hi:.3}] (benchmark {expect})"
            ));
        } else {
            verdict = "ok (re-run)";
        }
    }
    println!("    {name}: ratio {measured:7.3}  band [{lo:7.3}, {hi:7.3}]  {verdict}");
}

#[test]
fn criterion_1_optimal_tilt_reproduction() {
    let start = Instant::now();
    let model = single_asset();
    let mut failures = Vec::new();
    let maturity_row = [
        (0.25, -2.77),
        (0.5, -2.45),
        (1.0, -2.06),
        (2.0, -1.65),
        (3.0, -1.41),
    ];
    let strike_row = [
        (0.5, -2.84),
        (0.7, -2.56),
        (0.9, -2.24),
        (1.1, -1.88),
        (1.3, -1.54),
        (1.5, -1.25),
    ];
    for (t, expect) in maturity_row {
        let payoff = PayoffSpec::vanilla_put(1.0, t).unwrap();
        let got = solve_european(&model, &payoff).unwrap().theta_bar.unwrap()[0];
        let ok = (got - expect).abs() <= 0.01;
        println!("    K=1.0 T={t}: theta* {got:+.4} vs {expect:+.2} {}", if ok { "ok" } else { "FAIL" });
        if !ok {
            failures.push(format!("T={t}: {got:.4} vs {expect}"));
        }
    }
    for (k, expect) in strike_row {
        let payoff = PayoffSpec::vanilla_put(k, 1.0).unwrap();
        let got = solve_european(&model, &payoff).unwrap().theta_bar.unwrap()[0];
        let ok = (got - expect).abs() <= 0.01;
        println!("    K={k} T=1.0: theta* {got:+.4} vs {expect:+.2} {}", if ok { "ok" } else { "FAIL" });
        if !ok {
            failures.push(format!("K={k}: {got:.4} vs {expect}"));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = failures.is_empty() && elapsed < 1.0;
    println!("criterion 1 (deterministic theta* reproduction, {elapsed:.2}s): {}", if ok { "PASS" } else { "FAIL" });
    assert!(elapsed < 1.0, "criterion 1 runtime {elapsed:.2}s >= 1s");
    assert!(
        failures.is_empty(),
        "criterion 1: {} of 11 entries deviate from the benchmark table by more than 0.01: {:?} \
         (the solver satisfies the first-order condition of h^ + T*G exactly; see criterion 6)",
        failures.len(),
        failures
    );
}

#[test]
fn criterion_2_vanilla_variance_ratios() {
    let start = Instant::now();
    let model = single_asset();
    let mut failures = Vec::new();
    let maturity_row = [(0.25, 3.38), (0.5, 3.61), (1.0, 3.78), (2.0, 3.75), (3.0, 3.67)];
    let strike_row = [
        (0.5, 17.44),
        (0.7, 6.80),
        (0.9, 4.14),
        (1.1, 3.19),
        (1.3, 3.63),
        (1.5, 3.63),
    ];
    let mut idx = 0;
    for (t, expect) in maturity_row {
        let payoff = PayoffSpec::vanilla_put(1.0, t).unwrap();
        let sol = solve_european(&model, &payoff).unwrap();
        ratio_within_band(
            &format!("K=1.0 T={t}"),
            &model,
            &payoff,
            &sol.measure,
            1,
            expect,
            0.20,
            idx,
            &mut failures,
        );
        idx += 1;
    }
    for (k, expect) in strike_row {
        let payoff = PayoffSpec::vanilla_put(k, 1.0).unwrap();
        let sol = solve_european(&model, &payoff).unwrap();
        ratio_within_band(
            &format!("K={k} T=1.0"),
            &model,
            &payoff,
            &sol.measure,
            1,
            expect,
            0.25,
            idx,
            &mut failures,
        );
        idx += 1;
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = failures.is_empty() && elapsed < 60.0;
    println!("criterion 2 (vanilla variance ratios, {elapsed:.1}s): {}", if ok { "PASS" } else { "FAIL" });
    assert!(elapsed < 60.0, "criterion 2 runtime {elapsed:.1}s >= 60s");
    assert!(failures.is_empty(), "criterion 2 failures: {failures:?}");
}

#[test]
fn criterion_3_basket_variance_ratios() {
    let start = Instant::now();
    let model = basket_3d();
    let mut failures = Vec::new();
    let rows = [
        (1.0, [23.1, 9.78, 5.53, 3.80, 3.23, 4.22, 5.14]),
        (3.0, [6.63, 4.88, 4.35, 3.81, 2.96, 2.42, 2.19]),
    ];
    let strikes = [1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5];
    let mut idx = 0;
    for (t, expects) in rows {
        for (k, expect) in strikes.iter().zip(expects) {
            let payoff = PayoffSpec::basket_put(*k, t, 3).unwrap();
            let sol = solve_european(&model, &payoff).unwrap();
            ratio_within_band(
                &format!("K={k} T={t}"),
                &model,
                &payoff,
                &sol.measure,
                1,
                expect,
                0.25,
                idx,
                &mut failures,
            );
            idx += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = failures.is_empty() && elapsed < 180.0;
    println!("criterion 3 (basket variance ratios, {elapsed:.1}s): {}", if ok { "PASS" } else { "FAIL" });
    assert!(elapsed < 180.0, "criterion 3 runtime {elapsed:.1}s >= 3min");
    assert!(failures.is_empty(), "criterion 3 failures: {failures:?}");
}

#[test]
fn criterion_4_asian_variance_ratios() {
    let start = Instant::now();
    let model = single_asset();
    let mut failures = Vec::new();
    let entries = [
        (0.5, 39.7),
        (0.7, 10.6),
        (0.9, 4.82),
        (1.1, 3.21),
        (1.3, 5.08),
        (1.5, 6.91),
    ];
    let m = 100;
    for (idx, (k, expect)) in entries.iter().enumerate() {
        let sol = solve_asian(&model, *k, 1.0, m).unwrap();
        let payoff = PayoffSpec::asian_put(*k, 1.0, m).unwrap();
        ratio_within_band(
            &format!("K={k}"),
            &model,
            &payoff,
            &sol.measure,
            m,
            *expect,
            0.30,
            idx as u64,
            &mut failures,
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = failures.is_empty() && elapsed < 180.0;
    println!("criterion 4 (asian variance ratios, {elapsed:.1}s): {}", if ok { "PASS" } else { "FAIL" });
    assert!(elapsed < 180.0, "criterion 4 runtime {elapsed:.1}s >= 3min");
    assert!(failures.is_empty(), "criterion 4 failures: {failures:?}");
}

#[test]
fn criterion_5_sweep_argmin_matches_solver() {
    let model = single_asset();
    // 0.25-spaced grid; -3.75 and -4 are outside the CGF domain (the boundary
    // for these parameters is at -3.66), so the grid starts at -3.5
    let grid: Vec<f64> = (0..=14).map(|i| -3.5 + 0.25 * i as f64).collect();
    let mut failures = Vec::new();
    for (idx, k) in [1.0, 0.5].iter().enumerate() {
        let payoff = PayoffSpec::vanilla_put(*k, 1.0).unwrap();
        let theta_star = solve_european(&model, &payoff).unwrap().theta_bar.unwrap()[0];
        let points = sweep_theta(
            &model,
            &payoff,
            &grid,
            1,
            N_SAMPLES,
            entry_seed(ACCEPT_SEED, 100 + idx as u64),
            0,
        )
        .unwrap();
        let argmin = points
            .iter()
            .min_by(|a, b| a.variance.total_cmp(&b.variance))
            .unwrap()
            .theta;
        let ok = (argmin - theta_star).abs() <= 0.25 + 1e-12;
        println!("    K={k}: sweep argmin {argmin:+.2} vs theta* {theta_star:+.4} {}", if ok { "ok" } else { "FAIL" });
        if !ok {
            failures.push(format!("K={k}: argmin {argmin} vs theta* {theta_star}"));
        }
    }
    let ok = failures.is_empty();
    println!("criterion 5 (sweep argmin within one grid step): {}", if ok { "PASS" } else { "FAIL" });
    assert!(failures.is_empty(), "criterion 5 failures: {failures:?}");
}

#[test]
fn criterion_6_property_suite() {
    let model1 = single_asset();
    let model3 = basket_3d();
    let mut failures: Vec<String> = Vec::new();
    let mut check = |name: &str, ok: bool, detail: String| {
        println!("    {name}: {} ({detail})", if ok { "ok" } else { "FAIL" });
        if !ok {
            failures.push(format!("{name}: {detail}"));
        }
    };

    // Esscher CGF identity within 1e-10 on 200 random admissible (theta, u)
    {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut worst = 0.0f64;
        for model in [&model1, &model3] {
            let mut done = 0;
            while done < 200 {
                let theta = DVector::from_fn(model.dim(), |_, _| rng.gen_range(-2.0..1.0f64));
                let u = DVector::from_fn(model.dim(), |_, _| rng.gen_range(-1.5..1.0f64));
                let sum = &theta + &u;
                if !model.domain_margin(&theta).admissible()
                    || !model.domain_margin(&sum).admissible()
                {
                    continue;
                }
                done += 1;
                let tilted = model.esscher_tilt(&theta).unwrap();
                let gap = (tilted.cgf(&u) - (model.cgf(&sum) - model.cgf(&theta))).abs();
                worst = worst.max(gap);
            }
        }
        check("esscher cgf identity <= 1e-10", worst <= 1e-10, format!("worst {worst:.2e}"));
    }

    // convexity of G along random chords, 1e-12 slack
    {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut worst = f64::NEG_INFINITY;
        for model in [&model1, &model3] {
            let mut done = 0;
            while done < 200 {
                let a = DVector::from_fn(model.dim(), |_, _| rng.gen_range(-3.0..1.2f64));
                let b = DVector::from_fn(model.dim(), |_, _| rng.gen_range(-3.0..1.2f64));
                let t: f64 = rng.gen_range(0.05..0.95);
                let mix = &a * t + &b * (1.0 - t);
                if [&a, &b, &mix]
                    .iter()
                    .any(|v| !model.domain_margin(v).admissible())
                {
                    continue;
                }
                done += 1;
                let violation = model.cgf(&mix) - t * model.cgf(&a) - (1.0 - t) * model.cgf(&b);
                worst = worst.max(violation);
            }
        }
        check("cgf convexity violation <= 1e-12", worst <= 1e-12, format!("worst {worst:.2e}"));
    }

    // martingale normalization G(e_i) = 0 within 1e-12
    {
        let mut worst = 0.0f64;
        for model in [&model1, &model3] {
            for i in 0..model.dim() {
                let e = DVector::from_fn(model.dim(), |j, _| if i == j { 1.0 } else { 0.0 });
                worst = worst.max(model.cgf(&e).abs());
            }
        }
        check("martingale cgf zero <= 1e-12", worst <= 1e-12, format!("worst {worst:.2e}"));
    }

    // conjugate closed forms vs brute-force oracle within 1e-4 on 50 random tilts
    {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut worst = 0.0f64;
        let vanilla = PayoffSpec::vanilla_put(1.0, 1.0).unwrap();
        let basket = PayoffSpec::basket_put(3.0, 1.0, 3).unwrap();
        let asian = PayoffSpec::asian_put(1.0, 1.0, 8).unwrap();
        for _ in 0..17 {
            let th = [-rng.gen_range(0.05..3.0f64)];
            let closed = conjugate_basket(&DVector::from_column_slice(&th), 1.0).value;
            let brute = conjugate_bruteforce(&vanilla, &th, -14.0, 1.0, 400_000);
            worst = worst.max((closed - brute).abs());

            let th3: Vec<f64> = (0..3).map(|_| -rng.gen_range(0.05..2.0f64)).collect();
            let closed = conjugate_basket(&DVector::from_column_slice(&th3), 3.0).value;
            let brute = conjugate_bruteforce(&basket, &th3, -14.0, 2.5, 6_000);
            worst = worst.max((closed - brute).abs());

            let thd: Vec<f64> = (0..8).map(|_| -rng.gen_range(0.05..3.0f64)).collect();
            let closed = conjugate_asian(&thd, &[0.125; 8], 1.0, 1.0).value;
            let brute = conjugate_bruteforce(&asian, &thd, -14.0, 2.0, 4_000);
            worst = worst.max((closed - brute).abs());
        }
        check("conjugates vs brute force <= 1e-4", worst <= 1e-4, format!("worst {worst:.2e}"));
    }

    // Fenchel inequality: H^(theta) >= H(x) - <x, theta> on random step paths
    {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = 10;
        let delta = 0.1;
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..100 {
            let theta: Vec<f64> = (0..m).map(|_| -rng.gen_range(0.0..3.0f64)).collect();
            let conj = conjugate_asian(&theta, &vec![delta; m], 1.0, 1.0).value;
            let x: Vec<f64> = (0..m).map(|_| rng.gen_range(-3.0..0.5f64)).collect();
            let avg: f64 = x.iter().map(|v| v.exp() * delta).sum();
            if avg >= 1.0 {
                continue;
            }
            let h = (1.0 - avg).ln();
            let pairing: f64 = x.iter().zip(&theta).map(|(a, b)| a * b * delta).sum();
            worst = worst.max(h - pairing - conj);
        }
        check("fenchel inequality", worst <= 1e-10, format!("worst violation {worst:.2e}"));
    }

    // European first-order condition within 1e-8, conjugate gradient by
    // five-point finite differences of the closed form
    {
        let mut worst = 0.0f64;
        let contracts: [(f64, f64, &VarianceGammaModel, usize); 6] = [
            (1.0, 1.0, &model1, 1),
            (0.5, 1.0, &model1, 1),
            (1.0, 0.25, &model1, 1),
            (1.0, 3.0, &model1, 1),
            (3.0, 1.0, &model3, 3),
            (2.0, 3.0, &model3, 3),
        ];
        for (k, t, model, dim) in contracts {
            let payoff = if dim == 1 {
                PayoffSpec::vanilla_put(k, t).unwrap()
            } else {
                PayoffSpec::basket_put(k, t, dim).unwrap()
            };
            let sol = solve_european(model, &payoff).unwrap();
            let theta = DVector::from_column_slice(sol.theta_bar.as_ref().unwrap());
            let grad_g = model.cgf_grad(&theta).unwrap();
            let h = 1e-5;
            for i in 0..dim {
                let probe = |delta: f64| {
                    let mut v = theta.clone();
                    v[i] += delta;
                    conjugate_basket(&v, k).value
                };
                let dh = (-probe(2.0 * h) + 8.0 * probe(h) - 8.0 * probe(-h) + probe(-2.0 * h))
                    / (12.0 * h);
                worst = worst.max((dh + t * grad_g[i]).abs());
            }
        }
        check("european first-order condition <= 1e-8", worst <= 1e-8, format!("worst {worst:.2e}"));
    }

    // Asian solvers agree on the objective within 1e-3 across strikes
    {
        let mut worst = 0.0f64;
        for k in [0.5, 0.7, 0.9, 1.1, 1.3, 1.5] {
            let bvp = solve_asian_bvp(&model1, k, 1.0, 100).unwrap();
            let direct = solve_asian_direct(&model1, k, 1.0, 100).unwrap();
            worst = worst.max((bvp.objective - direct.objective).abs());
        }
        check("asian bvp vs direct <= 1e-3", worst <= 1e-3, format!("worst {worst:.2e}"));
    }

    // likelihood-ratio mean within 4 standard errors of 1 at N = 1e6
    {
        let payoff = PayoffSpec::vanilla_put(1.0, 1.0).unwrap();
        let sol = solve_european(&model1, &payoff).unwrap();
        let (mean, se) =
            likelihood_ratio_mean(&model1, &sol.measure, 1, 1_000_000, entry_seed(ACCEPT_SEED, 200), 0)
                .unwrap();
        check(
            "lr mean within 4 se of 1 (N=1e6)",
            (mean - 1.0).abs() <= 4.0 * se,
            format!("mean {mean:.6} se {se:.2e}"),
        );
    }

    // zero tilt: importance and standard pipelines are bit-identical
    {
        let payoff = PayoffSpec::vanilla_put(1.0, 1.0).unwrap();
        let zero = TiltMeasure::zero(1.0, 1);
        let a = price_standard(&model1, &payoff, 4, 50_000, ACCEPT_SEED, 0).unwrap();
        let b = price_importance(&model1, &payoff, &zero, 4, 50_000, ACCEPT_SEED, 0).unwrap();
        let ok = a.estimate.to_bits() == b.estimate.to_bits()
            && a.sample_variance.to_bits() == b.sample_variance.to_bits()
            && a.std_error.to_bits() == b.std_error.to_bits();
        check("zero-tilt bitwise identity", ok, format!("{} vs {}", a.estimate, b.estimate));
    }

    // worker-count invariance: identical bits with 1 and 4 workers
    {
        let sol = solve_asian(&model1, 1.0, 1.0, 50).unwrap();
        let payoff = PayoffSpec::asian_put(1.0, 1.0, 50).unwrap();
        let one = price_importance(&model1, &payoff, &sol.measure, 50, 30_000, ACCEPT_SEED, 1).unwrap();
        let four = price_importance(&model1, &payoff, &sol.measure, 50, 30_000, ACCEPT_SEED, 4).unwrap();
        let ok = one.estimate.to_bits() == four.estimate.to_bits()
            && one.sample_variance.to_bits() == four.sample_variance.to_bits();
        check("worker-count invariance (1 vs 4)", ok, format!("{} vs {}", one.estimate, four.estimate));
    }

    let ok = failures.is_empty();
    println!("criterion 6 (property suite): {}", if ok { "PASS" } else { "FAIL" });
    assert!(failures.is_empty(), "criterion 6 failures: {failures:?}");
}
