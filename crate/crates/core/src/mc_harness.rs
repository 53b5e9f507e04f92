//! Monte Carlo experiments that set simulated counting functions and
//! hitting times against the closed-form theory.
//!
//! Every experiment draws from its own family of ChaCha streams,
//! `stream = tag·2⁴⁸ + sub·2³² + i`, with `tag` fixed per experiment, `sub`
//! indexing the parameter value and `i` the path. Paths run in parallel
//! and are collected in index order, so a report depends only on its
//! configuration.

use std::f64::consts::{FRAC_1_PI, PI, TAU};
use std::ops::Range;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffusion::{sample_hitting_time, sample_sch_count, sample_sine_count, sample_sine_gap, RngSeed};
use crate::error::{domain, Error, Result};
use crate::rate_fn::{i_sch, i_sine, Density};
use crate::special_fn::{script_h, EllipticParam};
use crate::stats::McSummary;

/// Minimum number of paths for any statistical assertion.
pub const MIN_PATHS: usize = 100;
/// Minimum (expected and observed) hit count for a rare-event assertion.
pub const MIN_RARE_HITS: usize = 10;
/// Minimum hits for an LDP bin to enter the ordering and band checks.
pub const MIN_BIN_HITS: u64 = 50;

const TAG_DENSITY: u64 = 1;
const TAG_CLT: u64 = 2;
const TAG_GAP: u64 = 3;
const TAG_LDP: u64 = 4;
const TAG_EXP_MOMENT: u64 = 5;
const TAG_HITTING: u64 = 6;

fn stream(tag: u64, sub: u64, i: u64) -> u64 {
    debug_assert!(sub < 1 << 16 && i < 1 << 32);
    tag << 48 | sub << 32 | i
}

fn check_paths(n: usize) -> Result<()> {
    if n < MIN_PATHS {
        return Err(Error::InsufficientData(format!(
            "{n} paths requested; statistical checks need at least {MIN_PATHS}"
        )));
    }
    if n as u64 >= 1 << 32 {
        return domain(format!("at most 2^32 − 1 paths per experiment, got {n}"));
    }
    Ok(())
}

fn par_map<T: Send>(range: Range<u64>, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    range.into_par_iter().map(f).collect()
}

/// Which point process to simulate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Process {
    Sine { beta: f64 },
    Sch { tau: f64 },
}

impl Process {
    fn validate(&self) -> Result<()> {
        let (name, v) = match *self {
            Process::Sine { beta } => ("beta", beta),
            Process::Sch { tau } => ("tau", tau),
        };
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            domain(format!("{name} must be positive, got {v}"))
        }
    }

    /// LDP rate at scale `λ²`: `β I_Sine(ρ)` or `I_Sch(ρ)/τ`.
    pub fn rate(&self, rho: Density) -> Result<f64> {
        Ok(match *self {
            Process::Sine { beta } => beta * i_sine(rho)?.value(),
            Process::Sch { tau } => i_sch(rho)?.value() / tau,
        })
    }

    /// Leading variance of `N(λ)`: `(2/(βπ²)) log λ` or `τ/(4π²)`.
    pub fn clt_variance(&self, lambda: f64) -> f64 {
        match *self {
            Process::Sine { beta } => 2.0 / (beta * PI * PI) * lambda.ln(),
            Process::Sch { tau } => tau / (4.0 * PI * PI),
        }
    }

    /// Accepted band for the CLT variance ratio.
    pub fn clt_band(&self) -> (f64, f64) {
        match self {
            Process::Sine { .. } => (0.7, 1.3),
            Process::Sch { .. } => (0.6, 1.4),
        }
    }
}

/// Settings shared by the counting-function experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub process: Process,
    pub lambda_list: Vec<f64>,
    pub n_paths: usize,
    /// Step override; `None` uses the default step policy.
    pub dt: Option<f64>,
    pub base_seed: u64,
    /// Number of count bins `k = 0, …, bins − 1` for LDP histograms.
    pub bins: usize,
    /// Truncation tail probability for Sine horizons.
    pub eps_tail: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            process: Process::Sine { beta: 2.0 },
            lambda_list: vec![100.0],
            n_paths: 2000,
            dt: None,
            base_seed: 20_240_917,
            bins: 12,
            eps_tail: 1e-3,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.process.validate()?;
        if self.lambda_list.is_empty() {
            return domain("lambda_list must not be empty");
        }
        if let Some(l) = self.lambda_list.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return domain(format!("every lambda must be positive, got {l}"));
        }
        if self.lambda_list.len() >= 1 << 16 {
            return domain("lambda_list is too long");
        }
        if self.bins == 0 {
            return domain("bins must be positive");
        }
        check_paths(self.n_paths)
    }
}

/// Counting-function draws for `lambda_list[lambda_index]` on the given
/// path indices of the density stream family. Disjoint index ranges give
/// disjoint, independent samples that concatenate to the pooled sample.
pub fn count_samples(cfg: &ExperimentConfig, lambda_index: usize, paths: Range<u64>) -> Result<Vec<u64>> {
    draw_counts(cfg, TAG_DENSITY, lambda_index, paths)
}

fn draw_counts(cfg: &ExperimentConfig, tag: u64, li: usize, paths: Range<u64>) -> Result<Vec<u64>> {
    let lambda = *cfg
        .lambda_list
        .get(li)
        .ok_or_else(|| Error::Domain(format!("no lambda at index {li}")))?;
    let seed = |i| RngSeed::new(cfg.base_seed, stream(tag, li as u64, i));
    par_map(paths, |i| {
        Ok(match cfg.process {
            Process::Sine { beta } => sample_sine_count(lambda, beta, cfg.eps_tail, cfg.dt, seed(i))?.count,
            Process::Sch { tau } => sample_sch_count(lambda, tau, cfg.dt, seed(i))?.count,
        })
    })
}

/// One asserted (or reported) comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub lambda: Option<f64>,
    pub summary: Option<McSummary>,
    /// The quantity compared against `[lower, upper]`.
    pub statistic: f64,
    pub theory: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
}

impl Check {
    fn band(name: impl Into<String>, lambda: Option<f64>, summary: Option<McSummary>, statistic: f64, theory: f64, lower: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            lambda,
            summary,
            statistic,
            theory,
            lower,
            upper,
            pass: statistic >= lower && statistic <= upper,
        }
    }
}

/// Empirical LDP curve on count bins `ρ_k = k/λ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LdpCurve {
    pub lambda: f64,
    pub rho_bins: Vec<f64>,
    pub counts: Vec<u64>,
    /// `−log(count/n)/λ²`; `None` marks an empty bin.
    pub neg_log_p_over_lambda2: Vec<Option<f64>>,
    pub theory: Vec<f64>,
    /// Bin nearest the typical density.
    pub center_bin: usize,
}

impl LdpCurve {
    /// CSV `rho,count,neg_log_p_over_lambda2,theory`; empty bins print `NA`.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::from("rho,count,neg_log_p_over_lambda2,theory\n");
        for k in 0..self.rho_bins.len() {
            let emp = self.neg_log_p_over_lambda2[k].map_or("NA".to_string(), |v| format!("{v:.16e}"));
            let _ = writeln!(s, "{:.16e},{},{emp},{:.16e}", self.rho_bins[k], self.counts[k], self.theory[k]);
        }
        s
    }

    fn eligible(&self, k: usize) -> bool {
        self.counts[k] >= MIN_BIN_HITS
    }

    /// The empirical rate strictly increases away from the center bin on
    /// both sides, over bins with at least [`MIN_BIN_HITS`] hits.
    pub fn ordering_holds(&self) -> bool {
        let c = self.center_bin;
        if !self.eligible(c) {
            return false;
        }
        let emp = |k: usize| self.neg_log_p_over_lambda2[k].expect("eligible bins are non-empty");
        let increasing = |ks: &mut dyn Iterator<Item = usize>| {
            let mut last = emp(c);
            ks.filter(|&k| self.eligible(k)).all(|k| {
                let ok = emp(k) > last;
                last = emp(k);
                ok
            })
        };
        increasing(&mut (c + 1..self.rho_bins.len())) && increasing(&mut (0..c).rev())
    }

    /// Largest `|empirical − theory|/theory` over eligible bins.
    pub fn max_relative_deviation(&self) -> f64 {
        (0..self.rho_bins.len())
            .filter(|&k| self.eligible(k))
            .map(|k| {
                let e = self.neg_log_p_over_lambda2[k].expect("eligible");
                let t = self.theory[k];
                if t > 0.0 {
                    (e - t).abs() / t
                } else if e == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Window probability of `λτ` around `t_a = 4K(a)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowResult {
    pub a: f64,
    pub t_a: f64,
    pub eps: f64,
    pub probability: f64,
    pub stderr: f64,
    /// Lower bound with prefactor `A = 1/2`; present when `0 < ε < |t_a − 2π|`.
    pub lower_bound: Option<f64>,
}

/// Parameters of whichever experiment produced a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ExperimentParams {
    Counting(ExperimentConfig),
    Gap(GapParams),
    ExpMoment(ExpMomentParams),
    Hitting(HittingParams),
}

/// Outcome of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: ExperimentParams,
    pub checks: Vec<Check>,
    pub ldp_curve: Option<LdpCurve>,
    pub windows: Vec<WindowResult>,
    pub runtime_sec: f64,
}

impl ExperimentReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

fn report(name: &str, config: ExperimentParams, checks: Vec<Check>, start: Instant) -> ExperimentReport {
    ExperimentReport {
        experiment: name.into(),
        config,
        checks,
        ldp_curve: None,
        windows: Vec::new(),
        runtime_sec: start.elapsed().as_secs_f64(),
    }
}

/// Mean of `N(λ)/λ` per `λ`, asserted within 3% of `1/(2π)`.
pub fn run_density(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    cfg.validate()?;
    let mut checks = Vec::new();
    for (li, &lambda) in cfg.lambda_list.iter().enumerate() {
        let counts = draw_counts(cfg, TAG_DENSITY, li, 0..cfg.n_paths as u64)?;
        let xs: Vec<f64> = counts.iter().map(|&c| c as f64 / lambda).collect();
        let s = McSummary::from_samples(&xs)?;
        let typ = 0.5 * FRAC_1_PI;
        checks.push(Check::band("density", Some(lambda), Some(s), s.mean, typ, 0.97 * typ, 1.03 * typ));
    }
    Ok(report("density", ExperimentParams::Counting(cfg.clone()), checks, start))
}

/// Variance of `N(λ)` against the leading CLT variance. The summary is of
/// `(N − λ/2π)/σ_theory`, so its variance is the reported ratio.
pub fn run_clt(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    cfg.validate()?;
    if cfg.lambda_list.len() < 2 {
        return Err(Error::InsufficientData("the CLT experiment needs at least two lambdas".into()));
    }
    let (lo, hi) = cfg.process.clt_band();
    let mut checks = Vec::new();
    for (li, &lambda) in cfg.lambda_list.iter().enumerate() {
        let var = cfg.process.clt_variance(lambda);
        if !(var > 0.0) {
            return domain(format!("theoretical variance vanishes at λ = {lambda}"));
        }
        let sd = var.sqrt();
        let counts = draw_counts(cfg, TAG_CLT, li, 0..cfg.n_paths as u64)?;
        let z: Vec<f64> = counts.iter().map(|&c| (c as f64 - lambda / TAU) / sd).collect();
        let s = McSummary::from_samples(&z)?;
        checks.push(Check::band("clt_variance_ratio", Some(lambda), Some(s), s.variance, 1.0, lo, hi));
    }
    Ok(report("clt", ExperimentParams::Counting(cfg.clone()), checks, start))
}

/// Parameters of the gap experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapParams {
    pub lambda: f64,
    pub beta: f64,
    pub n: usize,
    pub base_seed: u64,
    pub dt: Option<f64>,
    pub eps_tail: f64,
}

impl Default for GapParams {
    fn default() -> Self {
        Self { lambda: 8.0, beta: 2.0, n: 100_000, base_seed: 20_240_917, dt: None, eps_tail: 1e-3 }
    }
}

/// `−βλ²/64 + (β/8 − 1/4)λ`, the leading terms of `log P(N_β(λ) = 0)`.
pub fn gap_envelope_log(lambda: f64, beta: f64) -> f64 {
    -beta * lambda * lambda / 64.0 + (beta / 8.0 - 0.25) * lambda
}

/// `|υ_β| log λ + 2` with `υ_β = (β/2 − 2/β − 3)/4`.
pub fn gap_tolerance(lambda: f64, beta: f64) -> f64 {
    let upsilon = (0.5 * beta - 2.0 / beta - 3.0) / 4.0;
    upsilon.abs() * lambda.ln().max(0.0) + 2.0
}

/// Empirical `P(N_β(λ) = 0)` against the gap envelope. Refuses to assert
/// when fewer than [`MIN_RARE_HITS`] empty intervals are expected or seen.
pub fn run_gap(p: &GapParams) -> Result<ExperimentReport> {
    let start = Instant::now();
    if !(p.lambda > 0.0 && p.lambda.is_finite()) || !(p.beta > 0.0 && p.beta.is_finite()) {
        return domain("gap experiment needs positive lambda and beta");
    }
    check_paths(p.n)?;
    let env = gap_envelope_log(p.lambda, p.beta);
    let tol = gap_tolerance(p.lambda, p.beta);
    // Budget from the most optimistic probability inside the tolerance band.
    let expected = p.n as f64 * (env + tol).min(0.0).exp();
    if expected < MIN_RARE_HITS as f64 {
        return Err(Error::InsufficientRareEvents { hits: expected as usize, needed: MIN_RARE_HITS });
    }
    let empty = par_map(0..p.n as u64, |i| {
        sample_sine_gap(p.lambda, p.beta, p.eps_tail, p.dt, RngSeed::new(p.base_seed, stream(TAG_GAP, 0, i)))
    })?;
    let hits = empty.iter().filter(|&&e| e).count();
    if hits < MIN_RARE_HITS {
        return Err(Error::InsufficientRareEvents { hits, needed: MIN_RARE_HITS });
    }
    let s = McSummary::from_indicators(hits, p.n)?;
    let check = Check::band("gap_log_probability", Some(p.lambda), Some(s), s.mean.ln(), env, env - tol, env + tol);
    Ok(report("gap", ExperimentParams::Gap(p.clone()), vec![check], start))
}

/// Histogram of `N(λ)` over count bins against the LDP rate. Uses the first
/// entry of `lambda_list`, which must not exceed 30.
pub fn run_ldp_curve(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    cfg.validate()?;
    let lambda = cfg.lambda_list[0];
    if lambda > 30.0 {
        return domain(format!("LDP curves need moderate λ ≤ 30, got {lambda}"));
    }
    let counts = draw_counts(cfg, TAG_LDP, 0, 0..cfg.n_paths as u64)?;
    let mut hist = vec![0u64; cfg.bins];
    for c in counts {
        if let Some(h) = hist.get_mut(c as usize) {
            *h += 1;
        }
    }
    let n = cfg.n_paths as f64;
    let l2 = lambda * lambda;
    let rho_bins: Vec<f64> = (0..cfg.bins).map(|k| k as f64 / lambda).collect();
    let emp = hist.iter().map(|&h| (h > 0).then(|| -(h as f64 / n).ln() / l2)).collect();
    let theory = rho_bins
        .iter()
        .map(|&r| cfg.process.rate(Density::new(r)?))
        .collect::<Result<Vec<f64>>>()?;
    let center_bin = ((lambda / TAU).round() as usize).min(cfg.bins - 1);
    let curve = LdpCurve { lambda, rho_bins, counts: hist, neg_log_p_over_lambda2: emp, theory, center_bin };
    let ordering = curve.ordering_holds();
    let dev = curve.max_relative_deviation();
    let checks = vec![
        Check {
            name: "ldp_ordering".into(),
            lambda: Some(lambda),
            summary: None,
            statistic: if ordering { 1.0 } else { 0.0 },
            theory: 1.0,
            lower: 1.0,
            upper: 1.0,
            pass: ordering,
        },
        Check::band("ldp_band_max_relative_deviation", Some(lambda), None, dev, 0.0, 0.0, 0.5),
    ];
    let mut r = report("ldp-curve", ExperimentParams::Counting(cfg.clone()), checks, start);
    r.ldp_curve = Some(curve);
    r.runtime_sec = start.elapsed().as_secs_f64();
    Ok(r)
}

/// Parameters of the exponential-moment experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpMomentParams {
    pub a: f64,
    pub lambda: f64,
    pub n: usize,
    pub base_seed: u64,
    pub dt: Option<f64>,
}

impl Default for ExpMomentParams {
    fn default() -> Self {
        Self { a: 0.5, lambda: 20.0, n: 10_000, base_seed: 20_240_917, dt: None }
    }
}

/// Largest exponent accepted before [`Error::OverflowGuard`].
pub const EXPONENT_CAP: f64 = 700.0;

/// `E exp((λ²a/8 − λ(|a| ∧ √|a|)/4) τ_λ) ≤ e^{−λH(a)}`, asserted as
/// `mean + 3·stderr ≤ 1.05·bound`.
pub fn run_exp_moment(p: &ExpMomentParams) -> Result<ExperimentReport> {
    let start = Instant::now();
    if !(p.a.abs() <= 0.6) {
        return domain(format!("exp-moment needs |a| ≤ 0.6, got {}", p.a));
    }
    if !(p.lambda > 0.0 && p.lambda <= 30.0) {
        return domain(format!("exp-moment needs 0 < λ ≤ 30, got {}", p.lambda));
    }
    check_paths(p.n)?;
    let param = EllipticParam::new(p.a)?;
    let abs_a = p.a.abs();
    let kappa = p.lambda * p.lambda * p.a / 8.0 - p.lambda * abs_a.min(abs_a.sqrt()) / 4.0;
    let taus = par_map(0..p.n as u64, |i| {
        Ok(sample_hitting_time(p.lambda, p.dt, RngSeed::new(p.base_seed, stream(TAG_EXP_MOMENT, 0, i)))?.tau)
    })?;
    let mut xs = Vec::with_capacity(taus.len());
    for t in taus {
        let e = kappa * t;
        if e > EXPONENT_CAP {
            return Err(Error::OverflowGuard(format!("exponent {e} exceeds {EXPONENT_CAP}")));
        }
        xs.push(e.exp());
    }
    let s = McSummary::from_samples(&xs)?;
    let bound = (-p.lambda * script_h(param)).exp();
    let stat = s.mean + 3.0 * s.stderr;
    let check = Check::band("exp_moment_bound", Some(p.lambda), Some(s), stat, bound, 0.0, 1.05 * bound);
    Ok(report("exp-moment", ExperimentParams::ExpMoment(p.clone()), vec![check], start))
}

/// Parameters of the hitting-time experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HittingParams {
    pub lambda: f64,
    pub n: usize,
    pub base_seed: u64,
    pub dt: Option<f64>,
    /// Parameters `a` of the windows around `t_a = 4K(a)`.
    pub window_a: Vec<f64>,
    /// Window half-width; `None` uses `|t_a − 2π|/2`.
    pub window_eps: Option<f64>,
}

impl Default for HittingParams {
    fn default() -> Self {
        Self { lambda: 50.0, n: 5000, base_seed: 20_240_917, dt: None, window_a: Vec::new(), window_eps: None }
    }
}

/// Lower bound on `P(λτ ∈ [t_a − ε, t_a + ε])` with the prefactor fixed at
/// `A = 1/2`; requires `0 < ε < |t_a − 2π|`.
pub fn window_lower_bound(a: EllipticParam, lambda: f64, eps: f64) -> Option<f64> {
    let t_a = 4.0 * a.k();
    if !(eps > 0.0 && eps < (t_a - TAU).abs()) {
        return None;
    }
    let av = a.a();
    let expo = -lambda * (script_h(a) + av * t_a / 8.0)
        - lambda * av.abs() * eps / 8.0
        - lambda * av.abs() / 2.0 * (t_a + eps);
    Some(0.5 * expo.exp())
}

/// Summary of `λτ_λ` with the diagnostic `|mean − 2π| ≤ 0.2`, and window
/// probabilities around `t_a` for each requested `a`.
pub fn run_hitting_stats(p: &HittingParams) -> Result<ExperimentReport> {
    let start = Instant::now();
    if !(p.lambda >= 10.0 && p.lambda.is_finite()) {
        return domain(format!("hitting statistics need λ ≥ 10, got {}", p.lambda));
    }
    check_paths(p.n)?;
    let scaled = par_map(0..p.n as u64, |i| {
        Ok(p.lambda * sample_hitting_time(p.lambda, p.dt, RngSeed::new(p.base_seed, stream(TAG_HITTING, 0, i)))?.tau)
    })?;
    let s = McSummary::from_samples(&scaled)?;
    let mut checks = vec![Check::band("hitting_mean", Some(p.lambda), Some(s), s.mean, TAU, TAU - 0.2, TAU + 0.2)];
    let mut windows = Vec::new();
    for &a in &p.window_a {
        let param = EllipticParam::new(a)?;
        let t_a = 4.0 * param.k();
        let eps = p.window_eps.unwrap_or(0.5 * (t_a - TAU).abs());
        if !(eps > 0.0) {
            return domain(format!("window half-width must be positive at a = {a}"));
        }
        let inside = scaled.iter().filter(|&&x| (x - t_a).abs() <= eps).count();
        let ws = McSummary::from_indicators(inside, scaled.len())?;
        let lower_bound = window_lower_bound(param, p.lambda, eps);
        if let Some(b) = lower_bound {
            checks.push(Check::band(format!("window_lower_bound(a={a})"), Some(p.lambda), Some(ws), ws.mean, b, b, 1.0));
        }
        windows.push(WindowResult { a, t_a, eps, probability: ws.mean, stderr: ws.stderr, lower_bound });
    }
    let mut r = report("hitting", ExperimentParams::Hitting(p.clone()), checks, start);
    r.windows = windows;
    r.runtime_sec = start.elapsed().as_secs_f64();
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_do_not_collide() {
        assert_ne!(stream(TAG_DENSITY, 0, 5), stream(TAG_CLT, 0, 5));
        assert_ne!(stream(TAG_DENSITY, 1, 0), stream(TAG_DENSITY, 0, 1));
    }

    #[test]
    fn gap_envelope_at_beta_two() {
        assert!((gap_envelope_log(8.0, 2.0) + 2.0).abs() < 1e-15);
        assert!((gap_tolerance(8.0, 2.0) - (0.75 * 8f64.ln() + 2.0)).abs() < 1e-15);
    }

    #[test]
    fn small_samples_are_refused() {
        let cfg = ExperimentConfig { n_paths: 1, ..Default::default() };
        assert!(matches!(run_density(&cfg), Err(Error::InsufficientData(_))));
    }
}
