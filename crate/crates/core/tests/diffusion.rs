use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use sinesch_core::diffusion::{
    coupled_pair, default_dt, floor_count, hitting_time_refinement, level_times, max_dt,
    ode_blowup_time, path_csv, sample_hitting_time, sample_sch_count, sample_sine_count,
    sample_sine_gap, simulate_phase, sine_horizon, DriftSpec, RngSeed,
};
use sinesch_core::stats::{ks_two_sample, McSummary};
use sinesch_core::{EllipticParam, Error};

const SEED: u64 = 0x5eed_0001;

fn seed(i: u64) -> RngSeed {
    RngSeed::new(SEED, i)
}

#[test]
fn identical_inputs_give_identical_paths() {
    let d = DriftSpec::constant(20.0).unwrap();
    let a = simulate_phase(d, 1.0, 1e-4, seed(7)).unwrap();
    let b = simulate_phase(d, 1.0, 1e-4, seed(7)).unwrap();
    assert_eq!(a, b);
    let c = simulate_phase(d, 1.0, 1e-4, seed(8)).unwrap();
    assert_ne!(a.values, c.values);
    let e = simulate_phase(d, 1.0, 1e-4, RngSeed::new(SEED + 1, 7)).unwrap();
    assert_ne!(a.values, e.values);
}

#[test]
fn drift_validation() {
    assert!(matches!(DriftSpec::constant(0.0), Err(Error::Domain(_))));
    assert!(matches!(DriftSpec::exp_decay(1.0, -2.0), Err(Error::Domain(_))));
    let d = DriftSpec::exp_decay(8.0, 2.0).unwrap();
    assert_eq!(d.peak(), 4.0);
    assert!((0..100).all(|k| d.value(k as f64) >= 0.0));
}

#[test]
fn step_policy() {
    assert_eq!(max_dt(1.0), 1e-3);
    assert_eq!(max_dt(1000.0), 1e-4);
    assert!(default_dt(50.0) <= max_dt(50.0));
    let d = DriftSpec::constant(1000.0).unwrap();
    assert!(matches!(simulate_phase(d, 0.1, 1e-3, seed(0)), Err(Error::StepSize(_))));
    assert!(matches!(sample_hitting_time(50.0, Some(0.0), seed(0)), Err(Error::StepSize(_))));
}

#[test]
fn paths_start_at_zero_and_keep_floor_invariants() {
    let d = DriftSpec::constant(40.0).unwrap();
    for i in 0..50 {
        let p = simulate_phase(d, 2.0, 2.5e-4, seed(i)).unwrap();
        assert_eq!(p.values[0], 0.0);
        assert!(p.floor_monotone(), "stream {i}");
        assert!(p.times.windows(2).all(|w| w[1] > w[0]));
    }
}

#[test]
fn vanishing_drift_stays_below_first_level() {
    let d = DriftSpec::constant(1e-8).unwrap();
    for i in 0..200 {
        let p = simulate_phase(d, 1.0, 1e-3, seed(i)).unwrap();
        assert!(p.final_value() >= 0.0 && p.final_value() < TAU);
        assert_eq!(floor_count(&p), 0);
    }
}

#[test]
fn constant_drift_density() {
    let (lambda, t) = (50.0, 10.0);
    let d = DriftSpec::constant(lambda).unwrap();
    let counts: Vec<f64> = (0..2000)
        .map(|i| floor_count(&simulate_phase(d, t, default_dt(lambda), seed(i)).unwrap()) as f64)
        .collect();
    let s = McSummary::from_samples(&counts).unwrap();
    let ratio = s.mean / (lambda * t / TAU);
    assert!((ratio - 1.0).abs() < 0.03, "ratio {ratio}");
}

#[test]
fn floor_count_is_number_of_levels_crossed() {
    let d = DriftSpec::constant(30.0).unwrap();
    let p = simulate_phase(d, 3.0, 1e-4, seed(3)).unwrap();
    let distinct = p
        .values
        .iter()
        .map(|v| (v / TAU).floor() as i64)
        .fold((0i64, 0u64), |(top, n), k| if k > top { (k, n + (k - top) as u64) } else { (top, n) })
        .1;
    assert_eq!(floor_count(&p), distinct);
}

#[test]
fn sine_count_small_lambda_is_zero() {
    for i in 0..200 {
        let s = sample_sine_count(1e-6, 2.0, 1e-3, None, seed(i)).unwrap();
        assert_eq!(s.count, 0);
        assert!(s.truncation_error_bound < 1.0);
    }
    assert!(sample_sine_gap(1e-6, 2.0, 1e-3, None, seed(0)).unwrap());
}

#[test]
fn sine_count_density() {
    let lambda = 30.0;
    let counts: Vec<f64> = (0..2000)
        .map(|i| sample_sine_count(lambda, 2.0, 1e-3, None, seed(i)).unwrap().count as f64)
        .collect();
    let s = McSummary::from_samples(&counts).unwrap();
    let ratio = s.mean / (lambda / TAU);
    assert!((ratio - 1.0).abs() < 0.03, "ratio {ratio}");
}

#[test]
fn sine_count_rounding_is_tight() {
    // Without drift the levels 2πk attract the phase, so most runs end close
    // to one by the horizon. A few are still in transit.
    let mut res: Vec<f64> = (0..400)
        .map(|i| {
            let s = sample_sine_count(20.0, 2.0, 1e-3, None, seed(i)).unwrap();
            assert_eq!(s.horizon, sine_horizon(20.0, 2.0, 1e-3));
            s.rounding_residual()
        })
        .collect();
    res.sort_by(f64::total_cmp);
    assert!(res[200] < 0.05, "median residual {}", res[200]);
}

#[test]
fn sine_count_rejects_bad_tail_probability() {
    assert!(matches!(sample_sine_count(10.0, 2.0, 0.5, None, seed(0)), Err(Error::Domain(_))));
    assert!(matches!(sample_sine_count(10.0, 2.0, 0.0, None, seed(0)), Err(Error::Domain(_))));
}

#[test]
fn sch_count_examples() {
    for i in 0..50 {
        assert_eq!(sample_sch_count(1e-9, 1.0, None, seed(i)).unwrap().count, 0);
    }
    let counts: Vec<f64> = (0..2000)
        .map(|i| sample_sch_count(100.0, 1.0, None, seed(i)).unwrap().count as f64)
        .collect();
    let s = McSummary::from_samples(&counts).unwrap();
    let ratio = s.mean / (100.0 / TAU);
    assert!((ratio - 1.0).abs() < 0.03, "ratio {ratio}");
}

#[test]
fn hitting_time_positive_and_near_2pi() {
    let lt: Vec<f64> = (0..2000)
        .map(|i| {
            let h = sample_hitting_time(50.0, None, seed(i)).unwrap();
            assert!(h.tau > 0.0);
            50.0 * h.tau
        })
        .collect();
    let s = McSummary::from_samples(&lt).unwrap();
    assert!((s.mean - TAU).abs() < 0.2, "mean λτ {}", s.mean);
}

#[test]
fn hitting_time_non_increasing_in_lambda() {
    let dt = 1e-4;
    let mut violations = 0;
    for i in 0..300 {
        let taus: Vec<f64> = [10.0, 20.0, 40.0]
            .iter()
            .map(|&l| sample_hitting_time(l, Some(dt), seed(i)).unwrap().tau)
            .collect();
        if !(taus[0] >= taus[1] && taus[1] >= taus[2]) {
            violations += 1;
        }
    }
    // The Euler scheme keeps the pathwise order except in rare near-ties.
    assert!(violations <= 3, "{violations} order violations");
}

#[test]
fn coupled_pair_examples() {
    let (a, b) = coupled_pair(10.0, 10.0, 2.0, 1e-4, seed(1)).unwrap();
    assert_eq!(a, b);
    for i in 0..20 {
        let (a, b) = coupled_pair(10.0, 20.0, 5.0, 1e-4, seed(i)).unwrap();
        assert!(a.values.iter().zip(&b.values).all(|(x, y)| y >= x), "stream {i}");
        assert!(floor_count(&b) >= floor_count(&a));
        assert!(a.floor_monotone() && b.floor_monotone());
    }
    assert!(matches!(coupled_pair(20.0, 10.0, 1.0, 1e-4, seed(0)), Err(Error::Domain(_))));
}

#[test]
fn ode_blowup_matches_four_k() {
    // K by the periodic trapezoid rule, independent of the library.
    let k = |a: f64| {
        let n = 4096;
        let h = PI / n as f64;
        0.5 * h * (0..n).map(|j| (1.0 - a * (j as f64 * h).sin().powi(2)).powf(-0.5)).sum::<f64>()
    };
    for (a, expect) in [(0.0, TAU), (0.5, 4.0 * k(0.5)), (-4.0, 4.0 * k(-4.0))] {
        let t = ode_blowup_time(EllipticParam::new(a).unwrap(), -20.0, 1e-3).unwrap();
        assert!((t - expect).abs() < 1e-3, "a = {a}: {t} vs {expect}");
    }
    assert!((4.0 * k(0.5) - 7.416_30).abs() < 1e-5);
    let p = EllipticParam::new(0.0).unwrap();
    assert!(matches!(ode_blowup_time(p, -5.0, 1e-3), Err(Error::Domain(_))));
    assert!(matches!(ode_blowup_time(p, -20.0, 1.0), Err(Error::StepSize(_))));
}

#[test]
fn renewal_spacings_are_exchangeable() {
    let lambda = 20.0;
    let mut first = Vec::new();
    let mut fourth = Vec::new();
    for i in 0..1000 {
        let t = level_times(lambda, 4, None, seed(i)).unwrap();
        assert!(t.windows(2).all(|w| w[1] >= w[0]));
        first.push(t[0]);
        fourth.push(t[3] - t[2]);
    }
    let ks = ks_two_sample(&first, &fourth).unwrap();
    assert!(ks.p_value > 0.01, "KS p = {}", ks.p_value);
}

#[test]
fn floor_increments_are_sandwiched() {
    // Increments of the floor over [t0, t0 + s] lie between ⌊ξ(s)⌋ and
    // ⌊ξ(s)⌋ + 2π for a freshly started copy ξ, in distribution.
    let (lambda, t0, s, dt) = (15.0, 0.7, 0.5, 2.5e-4f64);
    let d = DriftSpec::constant(lambda).unwrap();
    let n = 2000;
    let i0 = (t0 / dt).round() as usize;
    let inc: Vec<f64> = (0..n)
        .map(|i| {
            let p = simulate_phase(d, t0 + s, dt, seed(i)).unwrap();
            (p.running_floor() - p.floors[i0]) / TAU
        })
        .collect();
    let fresh: Vec<f64> = (0..n)
        .map(|i| floor_count(&simulate_phase(d, s, dt, seed(10_000 + i)).unwrap()) as f64)
        .collect();
    let cdf = |xs: &[f64], x: f64| xs.iter().filter(|&&v| v <= x).count() as f64 / n as f64;
    let margin = 3.0 * (0.5f64 / n as f64).sqrt();
    for k in 0..8 {
        let x = k as f64;
        // Lower: inc ≥ ⌊ξ⌋ stochastically, so F_inc(x) ≤ F_ξ(x).
        assert!(cdf(&inc, x) <= cdf(&fresh, x) + margin, "lower at {k}");
        // Upper: inc ≤ ⌊ξ⌋ + 1 level, so F_inc(x) ≥ F_ξ(x − 1).
        assert!(cdf(&inc, x) + margin >= cdf(&fresh, x - 1.0), "upper at {k}");
    }
}

#[test]
fn exponential_tail_bound() {
    let (f, t) = (5.0, 1.0);
    let d = DriftSpec::constant(f).unwrap();
    let n = 4000usize;
    let finals: Vec<f64> =
        (0..n as u64).map(|i| simulate_phase(d, t, 1e-3, seed(i)).unwrap().running_floor()).collect();
    for k in 1..=3 {
        let hits = finals.iter().filter(|&&v| v >= TAU * k as f64 - 1e-9).count();
        let s = McSummary::from_indicators(hits, n).unwrap();
        let bound = 2.0 * (f * t / (TAU * TAU)).powi(k);
        assert!(s.mean <= bound + 3.0 * s.stderr.max(1.0 / n as f64), "k = {k}: {} vs {bound}", s.mean);
    }
}

#[test]
fn halving_dt_moves_hitting_mean_less_than_stderr() {
    let lambda = 50.0;
    let (mut coarse, mut fine) = (Vec::new(), Vec::new());
    for i in 0..5000 {
        let (c, f) = hitting_time_refinement(lambda, default_dt(lambda), seed(i)).unwrap();
        coarse.push(lambda * c.tau);
        fine.push(lambda * f.tau);
    }
    let sc = McSummary::from_samples(&coarse).unwrap();
    let sf = McSummary::from_samples(&fine).unwrap();
    assert!((sc.mean - sf.mean).abs() < sc.stderr, "{} vs {}", sc.mean, sf.mean);
}

#[test]
fn csv_dump_format() {
    let d = DriftSpec::constant(5.0).unwrap();
    let p = simulate_phase(d, 0.01, 1e-3, seed(0)).unwrap();
    let csv = path_csv(&p);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,alpha,floor"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), p.times.len());
    for (row, (&t, &a)) in rows.iter().zip(p.times.iter().zip(&p.values)) {
        let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols[0], t);
        assert_eq!(cols[1], a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn floor_monotone_for_any_seed(s in any::<u64>(), lambda in 0.1f64..200.0) {
        let d = DriftSpec::constant(lambda).unwrap();
        let p = simulate_phase(d, 0.5, default_dt(lambda), RngSeed::new(s, 0)).unwrap();
        prop_assert!(p.floor_monotone());
        prop_assert!(p.values.iter().zip(&p.floors).all(|(v, f)| v >= f));
    }

    #[test]
    fn coupling_order_for_any_seed(s in any::<u64>(), l1 in 1.0f64..30.0, dl in 0.0f64..30.0) {
        let (a, b) = coupled_pair(l1, l1 + dl, 1.0, 1e-4, RngSeed::new(s, 1)).unwrap();
        prop_assert!(a.values.iter().zip(&b.values).all(|(x, y)| y >= x));
    }
}
