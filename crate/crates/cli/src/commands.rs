use std::f64::consts::{FRAC_1_PI, TAU};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::json;
use sinesch_core::diffusion::{default_dt, floor_count, path_csv, simulate_phase, sine_horizon, DriftSpec, RngSeed};
use sinesch_core::mc_harness::{
    run_clt, run_density, run_exp_moment, run_gap, run_hitting_stats, run_ldp_curve, ExpMomentParams,
    ExperimentConfig, ExperimentReport, GapParams, HittingParams, Process,
};
use sinesch_core::rate_fn::{big_i, gamma_fn, gamma_ode_residual, i_sch, i_sch_prime, i_sine, i_sine_prime};
use sinesch_core::variational::{solve_sch, solve_sine};
use sinesch_core::{Density, NuParam, Slope};

use crate::manifest::RunManifest;
use crate::{
    resolve_out, usage, ExperimentArgs, ExperimentName, GammaTableArgs, ProcessKind, RateTableArgs, SimulateArgs,
    Status, VariationalArgs,
};

pub const SCHEMA_VERSION: u32 = 1;
const DEFAULT_SEED: u64 = 20_240_917;

/// 17 significant digits; non-finite values print as `inf`/`NaN`.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn positive(name: &str, v: f64) -> anyhow::Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        usage(format!("--{name} must be positive and finite, got {v}"))
    }
}

/// `n` points from `lo` to `hi` with both endpoints hit exactly.
fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let d = (n - 1) as f64;
    (0..n).map(move |i| (lo * (d - i as f64) + hi * i as f64) / d)
}

/// Records the fully resolved flags; unset optional fields are dropped.
pub fn echo(m: &mut RunManifest, resolved: impl Serialize) -> anyhow::Result<()> {
    let mut v = serde_json::to_value(resolved)?;
    if let Some(obj) = v.as_object_mut() {
        obj.retain(|_, x| !x.is_null());
    }
    m.effective_config = v;
    Ok(())
}

fn write(path: &Path, text: &str, m: &mut RunManifest) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    m.output(path);
    Ok(())
}

fn check_grid(lo: f64, hi: f64, steps: usize) -> anyhow::Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return usage(format!("grid needs finite min < max, got [{lo}, {hi}]"));
    }
    if steps < 2 {
        return usage(format!("--steps must be at least 2, got {steps}"));
    }
    Ok(())
}

pub fn rate_table(a: &RateTableArgs, m: &mut RunManifest) -> anyhow::Result<Status> {
    let process = a.process.unwrap_or(ProcessKind::Sine);
    let beta = positive("beta", a.beta.unwrap_or(2.0))?;
    let tau = positive("tau", a.tau.unwrap_or(1.0))?;
    let (lo, hi) = (a.rho_min.unwrap_or(0.0), a.rho_max.unwrap_or(FRAC_1_PI));
    let steps = a.steps.unwrap_or(41);
    check_grid(lo, hi, steps)?;
    if lo < 0.0 {
        return usage(format!("--rho-min must be non-negative, got {lo}"));
    }
    let out = resolve_out(&a.out, "rate_table.csv");
    echo(
        m,
        RateTableArgs {
            process: Some(process),
            beta: Some(beta),
            tau: Some(tau),
            rho_min: Some(lo),
            rho_max: Some(hi),
            steps: Some(steps),
            out: Some(out.clone()),
        },
    )?;
    let mut s = String::from("rho,rate,rate_prime\n");
    for rho in linspace(lo, hi, steps) {
        let r = Density::new(rho)?;
        let (rate, prime) = match process {
            // At ρ = 0 the Sine derivative is the one-sided limit H(1)/4.
            ProcessKind::Sine => {
                let d = if rho == 0.0 { -0.25 } else { i_sine_prime(r)? };
                (beta * i_sine(r)?.value(), beta * d)
            }
            ProcessKind::Sch => (i_sch(r)?.value() / tau, i_sch_prime(r)? / tau),
        };
        let _ = writeln!(s, "{},{},{}", num(rho), num(rate), num(prime));
    }
    write(&out, &s, m)?;
    Ok(Status::Pass)
}

pub fn gamma_table(a: &GammaTableArgs, m: &mut RunManifest) -> anyhow::Result<Status> {
    let (lo, hi) = (a.nu_min.unwrap_or(-10.0), a.nu_max.unwrap_or(1.0));
    let steps = a.steps.unwrap_or(111);
    check_grid(lo, hi, steps)?;
    if hi > 1.0 {
        return usage(format!("--nu-max must be at most 1, got {hi}"));
    }
    let out = resolve_out(&a.out, "gamma_table.csv");
    echo(m, GammaTableArgs { nu_min: Some(lo), nu_max: Some(hi), steps: Some(steps), out: Some(out.clone()) })?;
    let mut s = String::from("nu,gamma,ode_residual\n");
    for nu in linspace(lo, hi, steps) {
        let p = NuParam::new(nu)?;
        let g = gamma_fn(p)?.get();
        let res = gamma_ode_residual(p)?.map_or_else(|| "NA".to_string(), num);
        let _ = writeln!(s, "{},{},{res}", num(nu), num(g));
    }
    write(&out, &s, m)?;
    Ok(Status::Pass)
}

pub fn simulate(a: &SimulateArgs, m: &mut RunManifest) -> anyhow::Result<Status> {
    let process = a.process.unwrap_or(ProcessKind::Sch);
    let lambda = positive("lambda", a.lambda.unwrap_or(50.0))?;
    let seed = a.seed.unwrap_or(DEFAULT_SEED);
    let eps_tail = a.eps_tail.unwrap_or(1e-3);
    let mut beta = None;
    let mut tau = None;
    let (drift, horizon) = match process {
        ProcessKind::Sine => {
            let b = positive("beta", a.beta.unwrap_or(2.0))?;
            beta = Some(b);
            if !(eps_tail > 0.0 && eps_tail <= 0.1) {
                return usage(format!("--eps-tail must lie in (0, 0.1], got {eps_tail}"));
            }
            let t = match a.t {
                Some(t) => t,
                None => sine_horizon(lambda, b, eps_tail),
            };
            (DriftSpec::exp_decay(lambda, b)?, t)
        }
        ProcessKind::Sch => {
            tau = Some(a.tau.unwrap_or(1.0));
            (DriftSpec::constant(lambda)?, a.t.or(tau).unwrap_or(1.0))
        }
    };
    if !(horizon > 0.0 && horizon.is_finite()) {
        return usage(format!("horizon must be positive, got {horizon}; pass --t"));
    }
    let dt = match a.dt {
        Some(dt) => positive("dt", dt)?,
        None => default_dt(drift.peak()),
    };
    let out = resolve_out(&a.out, "path.csv");
    echo(
        m,
        SimulateArgs {
            process: Some(process),
            lambda: Some(lambda),
            beta,
            tau,
            t: Some(horizon),
            dt: Some(dt),
            seed: Some(seed),
            eps_tail: beta.map(|_| eps_tail),
            out: Some(out.clone()),
        },
    )?;
    let path = simulate_phase(drift, horizon, dt, RngSeed::new(seed, 0))?;
    let count = match process {
        ProcessKind::Sine => (path.final_value() / TAU).round() as u64,
        ProcessKind::Sch => floor_count(&path),
    };
    write(&out, &path_csv(&path), m)?;
    m.base_seed = Some(seed);
    m.set("count", count);
    m.set("horizon", horizon);
    m.set("dt", dt);
    m.set("steps", path.times.len() - 1);
    if process == ProcessKind::Sine {
        m.set("eps_tail", eps_tail);
    }
    println!("count = {count}");
    Ok(Status::Pass)
}

fn counting_config(a: &ExperimentArgs) -> ExperimentConfig {
    let d = ExperimentConfig::default();
    let process = match a.process.unwrap_or(ProcessKind::Sine) {
        ProcessKind::Sine => Process::Sine { beta: a.beta.unwrap_or(2.0) },
        ProcessKind::Sch => Process::Sch { tau: a.tau.unwrap_or(1.0) },
    };
    ExperimentConfig {
        process,
        lambda_list: a.lambda.clone().unwrap_or(d.lambda_list),
        n_paths: a.n_paths.unwrap_or(d.n_paths),
        dt: a.dt.or(d.dt),
        base_seed: a.seed.unwrap_or(d.base_seed),
        bins: a.bins.unwrap_or(d.bins),
        eps_tail: a.eps_tail.unwrap_or(d.eps_tail),
    }
}

fn single_lambda(a: &ExperimentArgs, default: f64) -> anyhow::Result<f64> {
    match a.lambda.as_deref() {
        None => Ok(default),
        Some([l]) => Ok(*l),
        Some(_) => usage("this experiment takes a single --lambda"),
    }
}

fn reject(flags: &[(&str, bool)]) -> anyhow::Result<()> {
    match flags.iter().find(|(_, set)| *set) {
        Some((name, _)) => usage(format!("--{name} does not apply to this experiment")),
        None => Ok(()),
    }
}

pub fn experiment(a: &ExperimentArgs, m: &mut RunManifest) -> anyhow::Result<Status> {
    let out = resolve_out(&a.out, "experiment.json");
    let counting = matches!(a.name, ExperimentName::Density | ExperimentName::Clt | ExperimentName::LdpCurve);
    if counting {
        reject(&[("a", a.a.is_some()), ("window-a", a.window_a.is_some()), ("window-eps", a.window_eps.is_some())])?;
    }
    let report: ExperimentReport = match a.name {
        ExperimentName::Density | ExperimentName::Clt | ExperimentName::LdpCurve => {
            let cfg = counting_config(a);
            cfg.validate()?;
            m.base_seed = Some(cfg.base_seed);
            let (process, beta, tau) = match cfg.process {
                Process::Sine { beta } => (ProcessKind::Sine, Some(beta), None),
                Process::Sch { tau } => (ProcessKind::Sch, None, Some(tau)),
            };
            echo(
                m,
                ExperimentArgs {
                    process: Some(process),
                    beta,
                    tau,
                    lambda: Some(cfg.lambda_list.clone()),
                    n_paths: Some(cfg.n_paths),
                    seed: Some(cfg.base_seed),
                    dt: cfg.dt,
                    bins: Some(cfg.bins),
                    eps_tail: Some(cfg.eps_tail),
                    out: Some(out.clone()),
                    ..Default::default()
                },
            )?;
            match a.name {
                ExperimentName::Density => run_density(&cfg)?,
                ExperimentName::Clt => run_clt(&cfg)?,
                _ => run_ldp_curve(&cfg)?,
            }
        }
        ExperimentName::Gap => {
            reject(&[("process", a.process == Some(ProcessKind::Sch)), ("tau", a.tau.is_some()), ("a", a.a.is_some())])?;
            let d = GapParams::default();
            let p = GapParams {
                lambda: single_lambda(a, d.lambda)?,
                beta: a.beta.unwrap_or(d.beta),
                n: a.n_paths.unwrap_or(d.n),
                base_seed: a.seed.unwrap_or(d.base_seed),
                dt: a.dt.or(d.dt),
                eps_tail: a.eps_tail.unwrap_or(d.eps_tail),
            };
            m.base_seed = Some(p.base_seed);
            echo(
                m,
                ExperimentArgs {
                    beta: Some(p.beta),
                    lambda: Some(vec![p.lambda]),
                    n_paths: Some(p.n),
                    seed: Some(p.base_seed),
                    dt: p.dt,
                    eps_tail: Some(p.eps_tail),
                    out: Some(out.clone()),
                    ..Default::default()
                },
            )?;
            run_gap(&p)?
        }
        ExperimentName::ExpMoment => {
            reject(&[("process", a.process.is_some()), ("beta", a.beta.is_some()), ("tau", a.tau.is_some())])?;
            let d = ExpMomentParams::default();
            let p = ExpMomentParams {
                a: a.a.unwrap_or(d.a),
                lambda: single_lambda(a, d.lambda)?,
                n: a.n_paths.unwrap_or(d.n),
                base_seed: a.seed.unwrap_or(d.base_seed),
                dt: a.dt.or(d.dt),
            };
            m.base_seed = Some(p.base_seed);
            echo(
                m,
                ExperimentArgs {
                    a: Some(p.a),
                    lambda: Some(vec![p.lambda]),
                    n_paths: Some(p.n),
                    seed: Some(p.base_seed),
                    dt: p.dt,
                    out: Some(out.clone()),
                    ..Default::default()
                },
            )?;
            run_exp_moment(&p)?
        }
        ExperimentName::Hitting => {
            reject(&[("process", a.process.is_some()), ("beta", a.beta.is_some()), ("tau", a.tau.is_some())])?;
            let d = HittingParams::default();
            let p = HittingParams {
                lambda: single_lambda(a, d.lambda)?,
                n: a.n_paths.unwrap_or(d.n),
                base_seed: a.seed.unwrap_or(d.base_seed),
                dt: a.dt.or(d.dt),
                window_a: a.window_a.clone().unwrap_or(d.window_a),
                window_eps: a.window_eps.or(d.window_eps),
            };
            m.base_seed = Some(p.base_seed);
            echo(
                m,
                ExperimentArgs {
                    lambda: Some(vec![p.lambda]),
                    n_paths: Some(p.n),
                    seed: Some(p.base_seed),
                    dt: p.dt,
                    window_a: Some(p.window_a.clone()),
                    window_eps: p.window_eps,
                    out: Some(out.clone()),
                    ..Default::default()
                },
            )?;
            run_hitting_stats(&p)?
        }
    };

    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "experiment": report.experiment,
        "config": report.config,
        "summaries": report.checks.iter().map(|c| c.summary).collect::<Vec<_>>(),
        "theory": report.checks.iter().map(|c| c.theory).collect::<Vec<_>>(),
        "pass": report.checks.iter().map(|c| c.pass).collect::<Vec<_>>(),
        "checks": report.checks,
        "ldp_curve": report.ldp_curve,
        "windows": report.windows,
        "runtime_sec": report.runtime_sec,
    });
    write(&out, &(serde_json::to_string_pretty(&doc)? + "\n"), m)?;
    if let Some(curve) = &report.ldp_curve {
        write(&out.with_extension("csv"), &curve.to_csv(), m)?;
    }
    for c in &report.checks {
        println!("{} {}: {} in [{}, {}]", if c.pass { "PASS" } else { "FAIL" }, c.name, c.statistic, c.lower, c.upper);
    }
    Ok(if report.all_pass() {
        Status::Pass
    } else {
        Status::Failed(report.failed().map(|c| c.name.clone()).collect())
    })
}

pub fn variational(a: &VariationalArgs, m: &mut RunManifest) -> anyhow::Result<Status> {
    let process = a.process.unwrap_or(ProcessKind::Sine);
    let rho_v = a.rho.unwrap_or(0.3);
    if !(rho_v >= 0.0 && rho_v.is_finite()) {
        return usage(format!("--rho must be finite and non-negative, got {rho_v}"));
    }
    let rho = Density::new(rho_v)?;
    let out = resolve_out(&a.out, "variational.json");
    let mut resolved = VariationalArgs { process: Some(process), rho: Some(rho_v), out: Some(out.clone()), ..Default::default() };
    let (sol, closed_form, param) = match process {
        ProcessKind::Sine => {
            let beta = positive("beta", a.beta.unwrap_or(2.0))?;
            let n = a.grid_n.unwrap_or(2000);
            (resolved.beta, resolved.grid_n) = (Some(beta), Some(n));
            echo(m, &resolved)?;
            (solve_sine(rho, beta, n)?, beta * i_sine(rho)?.value(), json!({ "beta": beta, "grid_n": n }))
        }
        ProcessKind::Sch => {
            let t = positive("tau", a.tau.unwrap_or(1.0))?;
            resolved.tau = Some(t);
            echo(m, &resolved)?;
            let q = TAU * rho_v / t;
            let exact = if q == 0.0 { t / 8.0 } else { t * big_i(Slope::new(q)?)?.value() };
            (solve_sch(rho, t)?, exact, json!({ "tau": t }))
        }
    };
    let value = sol.value.value();
    let relative_gap = (value - closed_form).abs() / closed_form.max(1e-12);
    let profile_path = out.with_extension("csv");
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "process": process,
        "rho": rho_v,
        "params": param,
        "value": value,
        "dual_c": sol.dual_c,
        "free_boundary_a": sol.free_boundary_a,
        "closed_form": closed_form,
        "relative_gap": relative_gap,
        "discrete_cells": sol.discrete_cells,
        "profile": profile_path.display().to_string(),
    });
    write(&out, &(serde_json::to_string_pretty(&doc)? + "\n"), m)?;
    write(&profile_path, &sol.profile.to_csv(), m)?;
    println!("value = {value:.16e}, closed form = {closed_form:.16e}, relative gap = {relative_gap:.3e}");
    Ok(Status::Pass)
}
