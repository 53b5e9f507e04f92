//! Named invariant checks. `fast` is deterministic; `full` adds Monte Carlo.
//!
//! The special-function checks read `K` through [`Ctx`] so the hidden
//! `--fault corrupt-k` switch can prove the suite notices a broken `K`.

use std::f64::consts::{FRAC_1_PI, FRAC_PI_2, PI, TAU};
use std::time::Instant;

use sinesch_core::diffusion::{simulate_phase, DriftSpec, RngSeed};
use sinesch_core::mc_harness::{run_clt, run_density, ExperimentConfig, Process};
use sinesch_core::rate_fn::{
    big_i, big_i_prime, gamma_fn, gamma_ode_residual, i_sine, i_sine_prime, ln_big_i_second, TYPICAL_DENSITY,
};
use sinesch_core::special_fn::{ellip_e, ellip_k, inv_k, script_h};
use sinesch_core::variational::{solve_sch, solve_sine};
use sinesch_core::{Density, EllipticParam, NuParam, Slope};

use crate::manifest::RunManifest;
use crate::{Fault, Level, Status, VerifyArgs};

type Outcome = Result<(), String>;

struct Ctx {
    k: Box<dyn Fn(f64) -> f64>,
}

impl Ctx {
    fn new(fault: Option<Fault>) -> Self {
        let k: Box<dyn Fn(f64) -> f64> = match fault {
            None => Box::new(|a| ellip_k(p(a)).value),
            Some(Fault::CorruptK) => Box::new(|a| ellip_k(p(a)).value * (1.0 + 1e-6)),
        };
        Self { k }
    }
}

fn p(a: f64) -> EllipticParam {
    EllipticParam::new(a).expect("checked parameter")
}

fn d(rho: f64) -> Density {
    Density::new(rho).expect("checked density")
}

fn nu(x: f64) -> NuParam {
    NuParam::new(x).expect("checked nu")
}

fn close(what: &str, got: f64, want: f64, tol: f64) -> Outcome {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{what}: got {got:.16e}, want {want:.16e} (tol {tol:e})"))
    }
}

fn core<T>(r: sinesch_core::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// Trapezoid rule on `[0, π)` for the periodic integrand `(1 − a sin²θ)^power`.
fn periodic_quad(a: f64, power: f64) -> f64 {
    let n = 8192;
    let h = PI / n as f64;
    let s: f64 = (0..n)
        .map(|j| {
            let s = (j as f64 * h).sin();
            (1.0 - a * s * s).powf(power)
        })
        .sum();
    0.5 * s * h
}

const QUAD_A: [f64; 8] = [-100.0, -8.0, -1.0, -0.3, 0.0, 0.3, 0.7, 0.95];

fn k_matches_quadrature(c: &Ctx) -> Outcome {
    for a in QUAD_A {
        let q = periodic_quad(a, -0.5);
        close(&format!("K({a})"), (c.k)(a), q, 1e-12 * q)?;
    }
    Ok(())
}

fn e_matches_quadrature(_: &Ctx) -> Outcome {
    for a in QUAD_A {
        let q = periodic_quad(a, 0.5);
        close(&format!("E({a})"), ellip_e(p(a)).value, q, 1e-12 * q)?;
    }
    Ok(())
}

fn legendre_relation(c: &Ctx) -> Outcome {
    for a in [0.1, 0.5, 0.9] {
        let (k, k1) = ((c.k)(a), (c.k)(1.0 - a));
        let (e, e1) = (ellip_e(p(a)).value, ellip_e(p(1.0 - a)).value);
        close(&format!("Legendre at {a}"), e * k1 + e1 * k - k * k1, FRAC_PI_2, 1e-12)?;
    }
    Ok(())
}

fn h_derivative(c: &Ctx) -> Outcome {
    let h = 1e-5;
    for a in [-5.0, -0.5, 0.3, 0.8] {
        let fd = (script_h(p(a + h)) - script_h(p(a - h))) / (2.0 * h);
        close(&format!("H′({a})"), fd, -0.5 * (c.k)(a), 1e-7)?;
    }
    Ok(())
}

fn inv_k_round_trip(c: &Ctx) -> Outcome {
    for y in [0.5, 1.0, FRAC_PI_2, 3.0, 10.0] {
        let a = core(inv_k(y))?.a();
        close(&format!("K(K⁻¹({y}))"), (c.k)(a), y, 1e-11 * y)?;
    }
    Ok(())
}

fn big_i_shape(_: &Ctx) -> Outcome {
    let i = |q: f64| core(big_i(core(Slope::new(q))?)).map(|v| v.value());
    close("I(1)", i(1.0)?, 0.0, 1e-14)?;
    close("I(0+)", i(1e-12)?, 0.125, 1e-10)?;
    close("I′(1)", core(big_i_prime(core(Slope::new(1.0))?))?, 0.0, 1e-12)?;
    let mut last = f64::NEG_INFINITY;
    for q in [0.01, 0.1, 0.5, 0.9, 1.1, 2.0, 10.0, 100.0] {
        let s = core(Slope::new(q))?;
        let second = core(ln_big_i_second(s))?;
        let first = core(big_i_prime(s))?;
        if !second.is_finite() || first <= last {
            return Err(format!("I is not strictly convex near q = {q}"));
        }
        last = first;
    }
    Ok(())
}

fn i_sine_endpoints(_: &Ctx) -> Outcome {
    close("I_Sine(0)", core(i_sine(d(0.0)))?.value(), 1.0 / 64.0, 1e-15)?;
    close("I_Sine(1/2π)", core(i_sine(d(TYPICAL_DENSITY)))?.value(), 0.0, 1e-15)?;
    let h = 1e-6;
    for r in [0.05, 0.3, 0.5] {
        let fd = (core(i_sine(d(r + h)))?.value() - core(i_sine(d(r - h)))?.value()) / (2.0 * h);
        close(&format!("I_Sine′({r})"), core(i_sine_prime(d(r)))?, fd, 1e-6)?;
    }
    Ok(())
}

fn gamma_endpoints(_: &Ctx) -> Outcome {
    close("γ(0)", core(gamma_fn(nu(0.0)))?.get(), 0.5 * FRAC_1_PI, 0.0)?;
    close("γ(1)", core(gamma_fn(nu(1.0)))?.get(), 0.0, 0.0)?;
    let mut last = f64::INFINITY;
    for x in [-50.0, -5.0, -0.5, -1e-3, 1e-3, 0.5, 0.99] {
        let g = core(gamma_fn(nu(x)))?.get();
        if g >= last {
            return Err(format!("γ is not decreasing at ν = {x}"));
        }
        last = g;
    }
    Ok(())
}

/// `γ` against its elliptic closed forms on either side of zero.
fn gamma_closed_form(c: &Ctx) -> Outcome {
    for x in [-5.0f64, -0.5, 0.2, 0.6] {
        let want = if x < 0.0 {
            (1.0 - x).sqrt() * ellip_e(p(1.0 / (1.0 - x))).value / TAU
        } else {
            (ellip_e(p(1.0 - x)).value - x * (c.k)(1.0 - x)) / TAU
        };
        close(&format!("γ({x})"), core(gamma_fn(nu(x)))?.get(), want, 1e-10)?;
    }
    Ok(())
}

fn gamma_ode(_: &Ctx) -> Outcome {
    for x in [-20.0, -3.0, -0.5, -0.05, 0.05, 0.3, 0.7, 0.95] {
        let r = core(gamma_ode_residual(nu(x)))?.unwrap_or(f64::NAN);
        close(&format!("ODE residual at {x}"), r, 0.0, 1e-3)?;
    }
    Ok(())
}

fn sch_variational(_: &Ctx) -> Outcome {
    let sol = core(solve_sch(d(FRAC_1_PI), 1.0))?;
    let want = core(big_i(core(Slope::new(2.0))?))?.value();
    close("Sch solve at ρ = 1/π", sol.value.value(), want, 0.0)
}

fn sine_variational(_: &Ctx) -> Outcome {
    let typical = core(solve_sine(d(TYPICAL_DENSITY), 2.0, 2000))?;
    close("Sine solve at 1/2π", typical.value.value(), 0.0, 1e-12)?;
    let sol = core(solve_sine(d(0.3), 2.0, 2000))?;
    let exact = 2.0 * core(i_sine(d(0.3)))?.value();
    close("Sine solve at ρ = 0.3", sol.value.value(), exact, 1e-3 * exact)
}

fn path_determinism(_: &Ctx) -> Outcome {
    let run = || core(simulate_phase(core(DriftSpec::constant(20.0))?, 1.0, 1e-4, RngSeed::new(7, 3)));
    let (a, b) = (run()?, run()?);
    if a != b {
        return Err("same seed produced different paths".into());
    }
    if !a.floor_monotone() {
        return Err("running floor is not monotone".into());
    }
    Ok(())
}

fn density_cfg(process: Process, lambda: f64, n: usize) -> ExperimentConfig {
    ExperimentConfig { process, lambda_list: vec![lambda], n_paths: n, ..Default::default() }
}

fn check_report(r: sinesch_core::Result<sinesch_core::mc_harness::ExperimentReport>) -> Outcome {
    let r = core(r)?;
    let failed = r.failed().next().map(|c| format!("{}: {} outside [{}, {}]", c.name, c.statistic, c.lower, c.upper));
    failed.map_or(Ok(()), Err)
}

fn density_sine(_: &Ctx) -> Outcome {
    check_report(run_density(&density_cfg(Process::Sine { beta: 2.0 }, 50.0, 1000)))
}

fn density_sch(_: &Ctx) -> Outcome {
    check_report(run_density(&density_cfg(Process::Sch { tau: 1.0 }, 50.0, 1000)))
}

fn mc_reproducible(_: &Ctx) -> Outcome {
    let cfg = density_cfg(Process::Sch { tau: 1.0 }, 20.0, 200);
    let (a, b) = (core(run_density(&cfg))?, core(run_density(&cfg))?);
    if a.checks != b.checks {
        return Err("identical configs gave different results".into());
    }
    Ok(())
}

/// The Sine count variance grows by `(2/(βπ²)) log(λ₂/λ₁)` between scales;
/// constant terms cancel in the difference.
fn clt_sine_increment(_: &Ctx) -> Outcome {
    let beta = 2.0;
    let (l1, l2) = (25.0, 400.0);
    let cfg = ExperimentConfig {
        process: Process::Sine { beta },
        lambda_list: vec![l1, l2],
        n_paths: 2000,
        ..Default::default()
    };
    let r = core(run_clt(&cfg))?;
    let var = |i: usize| {
        let scale = cfg.process.clt_variance(cfg.lambda_list[i]);
        r.checks[i].summary.map_or(f64::NAN, |s| s.variance * scale)
    };
    let growth = (var(1) - var(0)) / (2.0 / (beta * PI * PI) * (l2 / l1).ln());
    if (0.5..=1.5).contains(&growth) {
        Ok(())
    } else {
        Err(format!("variance increment ratio {growth} outside [0.5, 1.5]"))
    }
}

type Invariant = (&'static str, fn(&Ctx) -> Outcome);

const FAST: &[Invariant] = &[
    ("k_matches_quadrature", k_matches_quadrature),
    ("e_matches_quadrature", e_matches_quadrature),
    ("legendre_relation", legendre_relation),
    ("h_derivative_is_minus_half_k", h_derivative),
    ("inv_k_round_trip", inv_k_round_trip),
    ("big_i_minimum_and_convexity", big_i_shape),
    ("i_sine_endpoints_and_slope", i_sine_endpoints),
    ("gamma_endpoints_and_monotone", gamma_endpoints),
    ("gamma_closed_form", gamma_closed_form),
    ("gamma_ode_residual", gamma_ode),
    ("sch_variational_closed_form", sch_variational),
    ("sine_variational_closed_form", sine_variational),
    ("path_determinism", path_determinism),
];

const FULL: &[Invariant] = &[
    ("mc_reproducible", mc_reproducible),
    ("density_sine", density_sine),
    ("density_sch", density_sch),
    ("clt_sine_variance_increment", clt_sine_increment),
];

pub fn run(a: &VerifyArgs, m: &mut RunManifest) -> anyhow::Result<Status> {
    let level = a.level.unwrap_or_default();
    crate::commands::echo(m, VerifyArgs { level: Some(level), fault: a.fault })?;
    let ctx = Ctx::new(a.fault);
    let mut suite = FAST.to_vec();
    if level == Level::Full {
        suite.extend_from_slice(FULL);
    }
    let mut failed = Vec::new();
    for (name, check) in suite {
        let t = Instant::now();
        match check(&ctx) {
            Ok(()) => println!("PASS {name} ({:.2}s)", t.elapsed().as_secs_f64()),
            Err(why) => {
                println!("FAIL {name}: {why}");
                failed.push(name.to_string());
            }
        }
    }
    m.set("level", level);
    m.set("invariants_run", FAST.len() + if level == Level::Full { FULL.len() } else { 0 });
    Ok(if failed.is_empty() { Status::Pass } else { Status::Failed(failed) })
}
