//! Phase diffusions `dα = f(t) dt + 2 sin(α/2) dB` and their counting
//! functions.
//!
//! Paths are advanced with Euler–Maruyama. The deterministic part of each
//! step uses the exact drift mass `∫ f` over the step. After every step the
//! phase is clamped to its running `2π`-floor, which the exact process never
//! re-crosses downward.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::quad::integrate;
use crate::special_fn::EllipticParam;

/// Drift of the phase diffusion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DriftSpec {
    /// `f(t) = λ`.
    Constant { lambda: f64 },
    /// `f(t) = λ (β/4) e^{−βt/4}`.
    ExpDecay { lambda: f64, beta: f64 },
}

impl DriftSpec {
    pub fn constant(lambda: f64) -> Result<Self> {
        check_positive("lambda", lambda)?;
        Ok(Self::Constant { lambda })
    }

    pub fn exp_decay(lambda: f64, beta: f64) -> Result<Self> {
        check_positive("lambda", lambda)?;
        check_positive("beta", beta)?;
        Ok(Self::ExpDecay { lambda, beta })
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Self::Constant { lambda } => lambda,
            Self::ExpDecay { lambda, beta } => lambda * 0.25 * beta * (-0.25 * beta * t).exp(),
        }
    }

    /// Peak drift over `t ≥ 0`.
    pub fn peak(&self) -> f64 {
        self.value(0.0)
    }

    /// `∫_{t0}^{t1} f(t) dt`.
    pub fn mass(&self, t0: f64, t1: f64) -> f64 {
        match *self {
            Self::Constant { lambda } => lambda * (t1 - t0),
            Self::ExpDecay { lambda, beta } => {
                let k = 0.25 * beta;
                lambda * (-k * t0).exp() * -(-k * (t1 - t0)).exp_m1()
            }
        }
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        domain(format!("{name} must be finite and positive, got {v}"))
    }
}

/// Seed and stream selecting one independent random sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream_index: u64,
}

impl RngSeed {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        Self { seed, stream_index }
    }

    /// ChaCha8 keyed by `seed`, on stream `stream_index`. Normals are drawn
    /// with the ziggurat sampler of `rand_distr::StandardNormal`.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream_index);
        r
    }
}

#[inline]
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Largest accepted step for peak drift `f_max`.
pub fn max_dt(f_max: f64) -> f64 {
    1e-3f64.min(0.1 / f_max)
}

/// Step used when none is supplied.
pub fn default_dt(f_max: f64) -> f64 {
    1e-3f64.min(0.01 / f_max)
}

fn check_dt(dt: f64, f_max: f64) -> Result<()> {
    let cap = max_dt(f_max);
    if !(dt > 0.0) || !dt.is_finite() || dt > cap * (1.0 + 1e-12) {
        return Err(Error::StepSize(format!(
            "dt = {dt} violates the step-size policy (0 < dt ≤ {cap:e} for peak drift {f_max})"
        )));
    }
    Ok(())
}

/// Largest number of grid points a stored path may hold.
pub const MAX_STORED_STEPS: usize = 50_000_000;

fn step_count(t: f64, dt: f64) -> Result<usize> {
    let n = (t / dt).ceil();
    if !n.is_finite() || n > 1e15 {
        return Err(Error::Resource(format!("T/dt = {n} steps is not addressable")));
    }
    Ok((n as usize).max(1))
}

/// `2π·⌊α/2π⌋`.
#[inline]
pub fn floor_2pi(alpha: f64) -> f64 {
    TAU * (alpha / TAU).floor()
}

/// Simulated phase trajectory on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhasePath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Running `2π`-floor after each step.
    pub floors: Vec<f64>,
}

impl PhasePath {
    pub fn final_value(&self) -> f64 {
        *self.values.last().expect("paths are non-empty")
    }

    pub fn running_floor(&self) -> f64 {
        *self.floors.last().expect("paths are non-empty")
    }

    /// Checks the floor invariants post hoc: the recorded floor is the
    /// running maximum of `floor_2pi(α)` and never exceeds the phase.
    pub fn floor_monotone(&self) -> bool {
        let mut run = 0.0f64;
        self.values.iter().zip(&self.floors).all(|(&v, &f)| {
            run = run.max(floor_2pi(v));
            f == run && v >= f
        })
    }
}

/// State of one clamped scalar phase.
#[derive(Debug, Clone, Copy)]
struct Phase {
    alpha: f64,
    floor: f64,
}

impl Phase {
    const ZERO: Phase = Phase { alpha: 0.0, floor: 0.0 };

    #[inline]
    fn step(&mut self, drift_mass: f64, db: f64) {
        let a = self.alpha + drift_mass + 2.0 * (0.5 * self.alpha).sin() * db;
        self.alpha = a.max(self.floor);
        let f = floor_2pi(self.alpha);
        if f > self.floor {
            self.floor = f;
        }
    }

    /// Step of the two-noise form `Re[(e^{−iα} − 1)(dB₁ + i dB₂)]`.
    #[inline]
    fn step_complex(&mut self, drift_mass: f64, db1: f64, db2: f64) {
        let (s, c) = self.alpha.sin_cos();
        let a = self.alpha + drift_mass + (c - 1.0) * db1 + s * db2;
        self.alpha = a.max(self.floor);
        let f = floor_2pi(self.alpha);
        if f > self.floor {
            self.floor = f;
        }
    }
}

/// Euler–Maruyama path of `dα = f dt + 2 sin(α/2) dB` from `α(0) = 0`.
pub fn simulate_phase(drift: DriftSpec, t_end: f64, dt: f64, seed: RngSeed) -> Result<PhasePath> {
    check_positive("T", t_end)?;
    check_dt(dt, drift.peak())?;
    let n = step_count(t_end, dt)?;
    if n + 1 > MAX_STORED_STEPS {
        return Err(Error::Resource(format!(
            "{n} steps exceed the stored-path limit of {MAX_STORED_STEPS}"
        )));
    }
    let h = t_end / n as f64;
    let sh = h.sqrt();
    let mut rng = seed.rng();
    let mut times = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    let mut floors = Vec::with_capacity(n + 1);
    let mut ph = Phase::ZERO;
    times.push(0.0);
    values.push(0.0);
    floors.push(0.0);
    for k in 0..n {
        let t0 = k as f64 * h;
        let t1 = (k + 1) as f64 * h;
        ph.step(drift.mass(t0, t1), sh * normal(&mut rng));
        times.push(t1);
        values.push(ph.alpha);
        floors.push(ph.floor);
    }
    Ok(PhasePath { times, values, floors })
}

/// Number of `2π` levels below the running floor at the end of the path.
pub fn floor_count(path: &PhasePath) -> u64 {
    (path.running_floor() / TAU).round() as u64
}

/// One Monte Carlo draw of a counting function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountSample {
    pub lambda: f64,
    pub count: u64,
    /// For Sine: probability bound on gains after the horizon. For Sch the
    /// count is exact in the phase representation and this is zero.
    pub truncation_error_bound: f64,
    /// Final phase divided by `2π` (Sine: `α(T)`, Sch: `φ_λ(τ) − φ_0(τ)`).
    pub phase_turns: f64,
    pub horizon: f64,
}

impl CountSample {
    /// Distance from `phase_turns` to the nearest integer.
    pub fn rounding_residual(&self) -> f64 {
        (self.phase_turns - self.phase_turns.round()).abs()
    }
}

/// Horizon `T` with `2 λ e^{−βT/4}/(4π²) ≤ eps`, the single-level exponential
/// tail bound on the drift mass left after `T`.
pub fn sine_horizon(lambda: f64, beta: f64, eps_tail: f64) -> f64 {
    let arg = lambda / (2.0 * PI * PI * eps_tail);
    if arg <= 1.0 {
        0.0
    } else {
        4.0 / beta * arg.ln()
    }
}

fn check_eps(eps_tail: f64) -> Result<()> {
    if eps_tail > 0.0 && eps_tail <= 0.1 {
        Ok(())
    } else {
        domain(format!("eps_tail must lie in (0, 0.1], got {eps_tail}"))
    }
}

/// `N_β(λ)`: the `ExpDecay(λ, β)` phase run to the horizon [`sine_horizon`],
/// rounded to the nearest multiple of `2π`.
pub fn sample_sine_count(
    lambda: f64,
    beta: f64,
    eps_tail: f64,
    dt: Option<f64>,
    seed: RngSeed,
) -> Result<CountSample> {
    let drift = DriftSpec::exp_decay(lambda, beta)?;
    check_eps(eps_tail)?;
    let dt = dt.unwrap_or_else(|| default_dt(drift.peak()));
    check_dt(dt, drift.peak())?;
    let t_end = sine_horizon(lambda, beta, eps_tail);
    let alpha = run_sine(drift, t_end, dt, seed, None)?;
    let turns = alpha / TAU;
    Ok(CountSample {
        lambda,
        count: turns.round() as u64,
        truncation_error_bound: eps_tail,
        phase_turns: turns,
        horizon: t_end,
    })
}

/// Whether `N_β(λ) = 0`. The run stops as soon as the phase passes `2π`,
/// after which the rounded count is at least one.
pub fn sample_sine_gap(
    lambda: f64,
    beta: f64,
    eps_tail: f64,
    dt: Option<f64>,
    seed: RngSeed,
) -> Result<bool> {
    let drift = DriftSpec::exp_decay(lambda, beta)?;
    check_eps(eps_tail)?;
    let dt = dt.unwrap_or_else(|| default_dt(drift.peak()));
    check_dt(dt, drift.peak())?;
    let t_end = sine_horizon(lambda, beta, eps_tail);
    let alpha = run_sine(drift, t_end, dt, seed, Some(TAU))?;
    Ok((alpha / TAU).round() == 0.0)
}

fn run_sine(drift: DriftSpec, t_end: f64, dt: f64, seed: RngSeed, stop: Option<f64>) -> Result<f64> {
    if t_end <= 0.0 {
        return Ok(0.0);
    }
    let n = step_count(t_end, dt)?;
    let h = t_end / n as f64;
    let sh = h.sqrt();
    let mut rng = seed.rng();
    let mut ph = Phase::ZERO;
    // Drift masses follow a geometric sequence for ExpDecay.
    let (mut m, ratio) = match drift {
        DriftSpec::Constant { lambda } => (lambda * h, 1.0),
        DriftSpec::ExpDecay { .. } => {
            let m0 = drift.mass(0.0, h);
            (m0, drift.mass(h, 2.0 * h) / m0)
        }
    };
    for _ in 0..n {
        ph.step(m, sh * normal(&mut rng));
        m *= ratio;
        if let Some(level) = stop {
            if ph.floor >= level {
                break;
            }
        }
    }
    Ok(ph.alpha)
}

/// `Ñ_τ(λ) = ⌊φ_{λ/τ}(τ)/2π⌋ − ⌊φ_0(τ)/2π⌋`, with both phases of
/// `dφ_μ = μ dt + dB₀ + Re[e^{−iφ_μ}(dB₁ + i dB₂)]` driven by shared noise.
pub fn sample_sch_count(lambda: f64, tau: f64, dt: Option<f64>, seed: RngSeed) -> Result<CountSample> {
    check_positive("lambda", lambda)?;
    check_positive("tau", tau)?;
    let mu = lambda / tau;
    let dt = dt.unwrap_or_else(|| default_dt(mu));
    check_dt(dt, mu)?;
    let n = step_count(tau, dt)?;
    let h = tau / n as f64;
    let sh = h.sqrt();
    let mut rng = seed.rng();
    let (mut p0, mut p1) = (0.0f64, 0.0f64);
    let drift = mu * h;
    for _ in 0..n {
        let b0 = sh * normal(&mut rng);
        let b1 = sh * normal(&mut rng);
        let b2 = sh * normal(&mut rng);
        let (s0, c0) = p0.sin_cos();
        let (s1, c1) = p1.sin_cos();
        p0 += b0 + c0 * b1 + s0 * b2;
        p1 += drift + b0 + c1 * b1 + s1 * b2;
    }
    let count = (p1 / TAU).floor() - (p0 / TAU).floor();
    Ok(CountSample {
        lambda,
        count: count.max(0.0) as u64,
        truncation_error_bound: 0.0,
        phase_turns: (p1 - p0) / TAU,
        horizon: tau,
    })
}

/// First passage of the `Constant(λ)` phase through `2π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HitSample {
    pub lambda: f64,
    pub tau: f64,
}

/// `τ_λ = inf{t : α̃_λ(t) ≥ 2π}`, linearly interpolated inside the crossing
/// step. Fails beyond the safety horizon `100·2π/λ`.
pub fn sample_hitting_time(lambda: f64, dt: Option<f64>, seed: RngSeed) -> Result<HitSample> {
    check_positive("lambda", lambda)?;
    let dt = dt.unwrap_or_else(|| default_dt(lambda));
    check_dt(dt, lambda)?;
    let horizon = 100.0 * TAU / lambda;
    let n = step_count(horizon, dt)?;
    let sh = dt.sqrt();
    let drift = lambda * dt;
    let mut rng = seed.rng();
    let mut ph = Phase::ZERO;
    for k in 0..n {
        let prev = ph.alpha;
        ph.step(drift, sh * normal(&mut rng));
        if ph.alpha >= TAU {
            let frac = (TAU - prev) / (ph.alpha - prev);
            let tau = (k as f64 + frac.clamp(0.0, 1.0)) * dt;
            return Ok(HitSample { lambda, tau: tau.max(f64::MIN_POSITIVE) });
        }
    }
    Err(Error::Horizon(format!(
        "no crossing of 2π before t = {horizon} at λ = {lambda}"
    )))
}

/// Times at which the `Constant(λ)` phase first reaches `2π, 4π, …, 2πk`,
/// linearly interpolated. Fails beyond the horizon `100·k·2π/λ`.
pub fn level_times(lambda: f64, levels: usize, dt: Option<f64>, seed: RngSeed) -> Result<Vec<f64>> {
    check_positive("lambda", lambda)?;
    let dt = dt.unwrap_or_else(|| default_dt(lambda));
    check_dt(dt, lambda)?;
    let horizon = 100.0 * levels as f64 * TAU / lambda;
    let n = step_count(horizon, dt)?;
    let sh = dt.sqrt();
    let mut rng = seed.rng();
    let mut ph = Phase::ZERO;
    let mut out = Vec::with_capacity(levels);
    for k in 0..n {
        if out.len() == levels {
            break;
        }
        let prev = ph.alpha;
        ph.step(lambda * dt, sh * normal(&mut rng));
        // A single step may pass several levels only at absurd dt; record each.
        while out.len() < levels && ph.alpha >= TAU * (out.len() + 1) as f64 {
            let level = TAU * (out.len() + 1) as f64;
            let frac = ((level - prev) / (ph.alpha - prev)).clamp(0.0, 1.0);
            out.push((k as f64 + frac) * dt);
        }
    }
    if out.len() < levels {
        return Err(Error::Horizon(format!(
            "only {} of {levels} levels reached before t = {horizon}",
            out.len()
        )));
    }
    Ok(out)
}

/// Hitting times at steps `dt` and `dt/2` driven by one Brownian path: each
/// coarse increment is the sum of two fine ones.
pub fn hitting_time_refinement(lambda: f64, dt: f64, seed: RngSeed) -> Result<(HitSample, HitSample)> {
    check_positive("lambda", lambda)?;
    check_dt(dt, lambda)?;
    let horizon = 100.0 * TAU / lambda;
    let n = step_count(horizon, dt)?;
    let half = 0.5 * dt;
    let sh = half.sqrt();
    let mut rng = seed.rng();
    let mut coarse = Phase::ZERO;
    let mut fine = Phase::ZERO;
    let mut tc = None;
    let mut tf = None;
    let cross = |prev: f64, now: f64, base: f64, h: f64| {
        base + ((TAU - prev) / (now - prev)).clamp(0.0, 1.0) * h
    };
    for k in 0..n {
        let b1 = sh * normal(&mut rng);
        let b2 = sh * normal(&mut rng);
        let t0 = k as f64 * dt;
        if tf.is_none() {
            for (j, b) in [b1, b2].into_iter().enumerate() {
                let prev = fine.alpha;
                fine.step(lambda * half, b);
                if fine.alpha >= TAU {
                    tf = Some(cross(prev, fine.alpha, t0 + j as f64 * half, half));
                    break;
                }
            }
        }
        if tc.is_none() {
            let prev = coarse.alpha;
            coarse.step(lambda * dt, b1 + b2);
            if coarse.alpha >= TAU {
                tc = Some(cross(prev, coarse.alpha, t0, dt));
            }
        }
        if let (Some(c), Some(f)) = (tc, tf) {
            let hit = |tau: f64| HitSample { lambda, tau: tau.max(f64::MIN_POSITIVE) };
            return Ok((hit(c), hit(f)));
        }
    }
    Err(Error::Horizon(format!(
        "no crossing of 2π before t = {horizon} at λ = {lambda}"
    )))
}

/// CSV dump of a path with header `t,alpha,floor`, 17 significant digits.
pub fn path_csv(path: &PhasePath) -> String {
    use std::fmt::Write as _;
    let mut s = String::from("t,alpha,floor\n");
    for ((t, a), f) in path.times.iter().zip(&path.values).zip(&path.floors) {
        let _ = writeln!(s, "{t:.16e},{a:.16e},{f:.16e}");
    }
    s
}

/// Two `Constant` phases driven by identical complex-noise increments.
pub fn coupled_pair(
    lambda1: f64,
    lambda2: f64,
    t_end: f64,
    dt: f64,
    seed: RngSeed,
) -> Result<(PhasePath, PhasePath)> {
    check_positive("lambda1", lambda1)?;
    check_positive("lambda2", lambda2)?;
    check_positive("T", t_end)?;
    if lambda1 > lambda2 {
        return domain(format!("coupled_pair requires λ1 ≤ λ2, got {lambda1} > {lambda2}"));
    }
    check_dt(dt, lambda2)?;
    let n = step_count(t_end, dt)?;
    if n + 1 > MAX_STORED_STEPS {
        return Err(Error::Resource(format!("{n} steps exceed the stored-path limit")));
    }
    let h = t_end / n as f64;
    let sh = h.sqrt();
    let mut rng = seed.rng();
    let mut a = Phase::ZERO;
    let mut b = Phase::ZERO;
    let mut pa = PhasePath { times: vec![0.0], values: vec![0.0], floors: vec![0.0] };
    let mut pb = pa.clone();
    for k in 0..n {
        let db1 = sh * normal(&mut rng);
        let db2 = sh * normal(&mut rng);
        a.step_complex(lambda1 * h, db1, db2);
        b.step_complex(lambda2 * h, db1, db2);
        let t = (k + 1) as f64 * h;
        for (p, s) in [(&mut pa, a), (&mut pb, b)] {
            p.times.push(t);
            p.values.push(s.alpha);
            p.floors.push(s.floor);
        }
    }
    Ok((pa, pb))
}

/// Blow-up time of `y′ = ½√(cosh²y − a)` from `−∞` to `+∞`, which equals
/// `∫ 2/√(cosh²y − a) dy = 4K(a)`.
///
/// RK4 runs from `y0` to the symmetric cutoff `−y0` with time step
/// `dt / max(1, y′)`. The stretches beyond `y0` and `−y0` contribute
/// `4e^{y0} − (4/3)(1 − 2a)e^{3y0}` each.
pub fn ode_blowup_time(a: EllipticParam, y0: f64, dt: f64) -> Result<f64> {
    if !(y0 <= -10.0) || !y0.is_finite() {
        return domain(format!("ode_blowup_time requires finite y0 ≤ −10, got {y0}"));
    }
    if !(dt > 0.0 && dt <= 0.1) {
        return Err(Error::StepSize(format!("ODE step must lie in (0, 0.1], got {dt}")));
    }
    let av = a.a();
    let rhs = |y: f64| {
        let c = y.cosh();
        0.5 * (c * c - av).sqrt()
    };
    let cutoff = -y0;
    let tail = 4.0 * y0.exp() - 4.0 / 3.0 * (1.0 - 2.0 * av) * (3.0 * y0).exp();
    let mut y = y0;
    let mut t = 0.0;
    let mut steps = 0usize;
    loop {
        let g = rhs(y);
        let h = dt / g.max(1.0);
        let k1 = g;
        let k2 = rhs(y + 0.5 * h * k1);
        let k3 = rhs(y + 0.5 * h * k2);
        let k4 = rhs(y + h * k3);
        let yn = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if yn >= cutoff {
            // Remaining time to the cutoff, ∫ dy / y′.
            let rest = integrate(|x| 1.0 / rhs(x), y, cutoff, 1e-14, 1e-12)?;
            t += rest.value;
            break;
        }
        y = yn;
        t += h;
        steps += 1;
        if steps > 100_000_000 {
            return Err(Error::StepSize("ODE integration exceeded its step budget".into()));
        }
    }
    Ok(tail + t + tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_decay_mass_is_exact() {
        let d = DriftSpec::exp_decay(3.0, 2.0).unwrap();
        let total = d.mass(0.0, 1.0) + d.mass(1.0, 7.0);
        assert!((total - d.mass(0.0, 7.0)).abs() < 1e-14);
        assert!((d.mass(0.0, 1e9) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn step_policy_enforced() {
        let d = DriftSpec::constant(50.0).unwrap();
        assert!(matches!(
            simulate_phase(d, 1.0, 0.01, RngSeed::new(1, 0)),
            Err(Error::StepSize(_))
        ));
        assert!(simulate_phase(d, 1.0, 1e-3, RngSeed::new(1, 0)).is_ok());
    }

    #[test]
    fn floor_count_examples() {
        let p = PhasePath { times: vec![0.0, 1.0], values: vec![0.0, 0.0], floors: vec![0.0, 0.0] };
        assert_eq!(floor_count(&p), 0);
        let p = PhasePath {
            times: vec![0.0, 1.0],
            values: vec![0.0, 6.9],
            floors: vec![0.0, TAU],
        };
        assert_eq!(floor_count(&p), 1);
    }

    #[test]
    fn horizon_formula() {
        let t = sine_horizon(100.0, 2.0, 1e-3);
        let rest = 2.0 * 100.0 * (-0.5 * t).exp() / (4.0 * PI * PI);
        assert!((rest - 1e-3).abs() < 1e-12);
        assert_eq!(sine_horizon(1e-6, 2.0, 1e-3), 0.0);
    }
}
