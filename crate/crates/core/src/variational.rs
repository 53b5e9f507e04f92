//! Path rate functionals and the convex variational problem behind `I_Sine`.
//!
//! The Sine problem, in the time-changed coordinate `y ∈ [0, 1]`, is
//!
//! ```text
//! minimize (β/4) ∫₀¹ (1 − y) I(g′(y)) dy   subject to  ∫₀¹ g′ = 2πρ,  g′ ≥ 0.
//! ```
//!
//! Its Lagrangian decouples pointwise: `g′(y) = (I′)⁻¹(c/(1 − y))` where that
//! argument exceeds `−1/(2π)` and `g′ = 0` elsewhere. The multiplier `c` is
//! found by a scalar root search on the mass constraint.
//!
//! For `c > 0` the optimal slope blows up at `y = 1` like `1/(u log² u)` with
//! `u = 1 − y`. A plain cell discretization resolves that layer only at rate
//! `1/log n`, so [`solve_sine`] uses constant-slope cells on `[0, 1 − δ]` and
//! integrates the pointwise optimum exactly on the last stretch `[1 − δ, 1]`.
//! There the substitution `H(x) = 2πc/u` turns mass and cost into
//!
//! ```text
//! ∫₀^{u₁} g′ du     = (π²c/2)  ∫ H⁻² dx,
//! ∫₀^{u₁} u I(g′) du = 2π²c²  ∫ I K / H³ dx,
//! ```
//!
//! whose `x → −∞` ends are integrated in `log(1 − x)` with their leading
//! asymptotics subtracted.

use std::f64::consts::{FRAC_1_PI, PI, TAU};
use std::fmt::Write as _;
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::quad::integrate;
use crate::rate_fn::{
    big_i, gamma_inv, inv_h_sq_below, split_tail, Density, RateValue, Slope, SPLIT, TAIL_SPAN,
    TYPICAL_DENSITY,
};
use crate::roots::illinois;
use crate::special_fn::{inv_script_h, script_h, EllipticParam};

/// A piecewise-linear path sampled on an increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Slope attached to each node: the slope of the cell to its right, and
    /// for the final node the slope of the last cell.
    pub gprime: Vec<f64>,
}

impl Profile {
    /// Builds a profile with forward-difference slopes. Rejects grids that
    /// are not strictly increasing, non-finite data and length mismatches.
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return domain(format!(
                "profile needs at least two nodes and matching lengths (grid {}, values {})",
                grid.len(),
                values.len()
            ));
        }
        if grid.iter().chain(&values).any(|v| !v.is_finite()) {
            return domain("profile contains non-finite entries");
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return domain("profile grid must be strictly increasing");
        }
        let mut gprime: Vec<f64> = grid
            .windows(2)
            .zip(values.windows(2))
            .map(|(t, g)| (g[1] - g[0]) / (t[1] - t[0]))
            .collect();
        gprime.push(*gprime.last().expect("at least one cell"));
        Ok(Self { grid, values, gprime })
    }

    /// Uniform grid on `[0, t_end]` with `n` cells, values from `g`.
    pub fn from_fn(t_end: f64, n: usize, g: impl Fn(f64) -> f64) -> Result<Self> {
        if n == 0 || !(t_end > 0.0) {
            return domain("profile needs n ≥ 1 and a positive horizon");
        }
        let grid: Vec<f64> = (0..=n).map(|i| t_end * i as f64 / n as f64).collect();
        let values = grid.iter().map(|&t| g(t)).collect();
        Self::new(grid, values)
    }

    fn with_slopes(mut self, slopes: Vec<f64>) -> Self {
        debug_assert_eq!(slopes.len(), self.grid.len());
        self.gprime = slopes;
        self
    }

    /// Starts at zero and never decreases.
    pub fn is_feasible(&self) -> bool {
        self.values[0] == 0.0 && self.values.windows(2).all(|w| w[1] >= w[0])
    }

    pub fn endpoint(&self) -> f64 {
        *self.values.last().expect("non-empty")
    }

    /// CSV with header `y,g,gprime`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("y,g,gprime\n");
        for ((y, g), d) in self.grid.iter().zip(&self.values).zip(&self.gprime) {
            let _ = writeln!(s, "{y:.16e},{g:.16e},{d:.16e}");
        }
        s
    }
}

/// Output of a variational solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationalSolution {
    pub value: RateValue,
    /// Lagrange multiplier `c` of the mass constraint.
    pub dual_c: f64,
    /// `sup{y : g′(y) > 0}`; `1` when the slope never vanishes.
    pub free_boundary_a: f64,
    pub profile: Profile,
    /// Number of leading constant-slope cells. Cells after these belong to
    /// the analytic tail element and carry averaged slopes.
    pub discrete_cells: usize,
}

fn check_grid(g: &Profile, lo: f64, hi: f64) -> Result<()> {
    let first = g.grid[0];
    let last = *g.grid.last().expect("non-empty");
    if first != lo || last > hi * (1.0 + 1e-12) {
        return domain(format!("profile grid must start at {lo} and stay within [{lo}, {hi}]"));
    }
    Ok(())
}

fn cell_rate(dg: f64, dt: f64) -> Result<f64> {
    if dg == 0.0 {
        return Ok(0.125);
    }
    Ok(big_i(Slope::new(dg / dt)?)?.value())
}

/// `Σ Δt · I(Δg/Δt)` over the cells of `g` on `[0, T]`; `+∞` when `g` does
/// not start at zero or decreases anywhere.
pub fn rate_of_path_sch(g: &Profile, t_end: f64) -> Result<RateValue> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return domain(format!("T must be positive, got {t_end}"));
    }
    check_grid(g, 0.0, t_end)?;
    if !g.is_feasible() {
        return Ok(RateValue::INFINITE);
    }
    let mut total = 0.0;
    for (t, v) in g.grid.windows(2).zip(g.values.windows(2)) {
        let dt = t[1] - t[0];
        total += dt * cell_rate(v[1] - v[0], dt)?;
    }
    Ok(RateValue::new(total))
}

/// `(β/4) Σ Δy (1 − y_mid) I(Δg/Δy)` for a profile in the coordinate
/// `y = 1 − e^{−βt/4}`. The cell weight is the exact cell average of `1 − y`.
pub fn rate_of_path_sine(g: &Profile, beta: f64) -> Result<RateValue> {
    if !(beta > 0.0) || !beta.is_finite() {
        return domain(format!("beta must be positive, got {beta}"));
    }
    check_grid(g, 0.0, 1.0)?;
    if !g.is_feasible() {
        return Ok(RateValue::INFINITE);
    }
    let mut total = 0.0;
    for (y, v) in g.grid.windows(2).zip(g.values.windows(2)) {
        let dy = y[1] - y[0];
        let w = 1.0 - 0.5 * (y[0] + y[1]);
        total += dy * w * cell_rate(v[1] - v[0], dy)?;
    }
    Ok(RateValue::new(0.25 * beta * total))
}

/// Cells used by [`solve_sch`] for its profile.
pub const SCH_PROFILE_CELLS: usize = 100;

/// `T·I(2πρ/T)`, attained by the constant-slope path `g(t) = 2πρt/T`.
pub fn solve_sch(rho: Density, t_end: f64) -> Result<VariationalSolution> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return domain(format!("T must be positive, got {t_end}"));
    }
    let total = TAU * rho.get();
    let slope = total / t_end;
    let (value, dual_c) = if total == 0.0 {
        (0.125 * t_end, -0.5 * FRAC_1_PI)
    } else {
        let q = Slope::new(slope)?;
        (t_end * big_i(q)?.value(), crate::rate_fn::big_i_prime(q)?)
    };
    let profile = Profile::from_fn(t_end, SCH_PROFILE_CELLS, |t| slope * t)?;
    let n = profile.grid.len();
    let profile = profile.with_slopes(vec![slope; n]);
    Ok(VariationalSolution {
        value: RateValue::new(value),
        dual_c,
        free_boundary_a: if total > 0.0 { 1.0 } else { 0.0 },
        profile,
        discrete_cells: SCH_PROFILE_CELLS,
    })
}

/// Slope and rate at the pointwise optimum `I′(q) = x`; `(0, 1/8)` once `x`
/// reaches `−1/(2π)`.
fn dual_point(x: f64) -> Result<(f64, f64)> {
    let h = TAU * x;
    if h <= -1.0 {
        return Ok((0.0, 0.125));
    }
    let p = match inv_script_h(h) {
        Ok(p) => p,
        // Within e^{−690} of the activation point: the slope is below 0.005
        // and vanishes in the limit.
        Err(Error::Precision(_)) if h < 0.0 => return Ok((0.0, 0.125)),
        Err(e) => return Err(e),
    };
    Ok(rate_at(p))
}

fn rate_at(p: EllipticParam) -> (f64, f64) {
    let (k, e) = p.ke();
    let q = 0.5 * PI / k;
    let i = (1.0 + p.complement()) / 8.0 - e / (4.0 * k);
    (q, i.max(0.0))
}

/// Integrates a fallible integrand, surfacing the first failure.
fn integrate_fallible(
    f: impl Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    let failure = std::cell::RefCell::new(None);
    let r = integrate(
        |x| match f(x) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        a,
        b,
        abs_tol,
        rel_tol,
    )?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(r.value),
    }
}

/// `∫_{−∞}^{1−s1} Î(x) K(x)/H(x)³ dx` for `s1 ≥ 1 + SPLIT`, with
/// `Î(x) = (2 − x)/8 − E/(4K)`. The subtracted leading term
/// `(w − 2)/(2 s w³)`, `w = ln(16 s) − 2`, integrates to `1/(2w₁) − 1/(2w₁²)`.
fn cost_tail(s1: f64) -> Result<f64> {
    let wlog = |s: f64| (16.0 * s).ln() - 2.0;
    let f = |v: f64| -> Result<f64> {
        let s = v.exp();
        let p = EllipticParam::new(1.0 - s)?;
        let (k, e) = p.ke();
        let h = script_h(p);
        let ihat = (1.0 + s) / 8.0 - e / (4.0 * k);
        let w = wlog(s);
        Ok(s * ihat * k / (h * h * h) - (w - 2.0) / (2.0 * w * w * w))
    };
    let v0 = s1.ln();
    let r = integrate_fallible(f, v0, v0 + TAIL_SPAN, 1e-15, 1e-13)?;
    let w1 = wlog(s1);
    Ok(r + 0.5 / w1 - 0.5 / (w1 * w1))
}

fn split_cost() -> Result<f64> {
    static CACHE: OnceLock<f64> = OnceLock::new();
    if let Some(v) = CACHE.get() {
        return Ok(*v);
    }
    let v = cost_tail(1.0 + SPLIT)?;
    Ok(*CACHE.get_or_init(|| v))
}

fn h_at_split() -> f64 {
    static CACHE: OnceLock<f64> = OnceLock::new();
    *CACHE.get_or_init(|| script_h(EllipticParam::new(-SPLIT).expect("valid parameter")))
}

/// Mass `∫₀^{u1} g′` and cost `∫₀^{u1} u I(g′)` of the pointwise optimum
/// `g′(u) = (I′)⁻¹(c/u)` near the right end, with `u = 1 − y`.
#[derive(Debug, Clone, Copy)]
struct TailPart {
    mass: f64,
    cost: f64,
}

fn tail_part(c: f64, u1: f64) -> Result<TailPart> {
    const ABS: f64 = 1e-15;
    const REL: f64 = 1e-13;
    if u1 <= 0.0 {
        return Ok(TailPart { mass: 0.0, cost: 0.0 });
    }
    if c == 0.0 {
        return Ok(TailPart { mass: u1, cost: 0.0 });
    }
    let mass_f = |u: f64| Ok(dual_point(c / u)?.0);
    let cost_f = |u: f64| Ok(u * dual_point(c / u)?.1);
    if c < 0.0 {
        let u0 = -TAU * c;
        if u1 <= u0 {
            return Ok(TailPart { mass: 0.0, cost: u1 * u1 / 16.0 });
        }
        return Ok(TailPart {
            mass: integrate_fallible(mass_f, u0, u1, ABS, REL)?,
            cost: u0 * u0 / 16.0 + integrate_fallible(cost_f, u0, u1, ABS, REL)?,
        });
    }
    let mass_scale = 0.5 * PI * PI * c;
    let cost_scale = 2.0 * PI * PI * c * c;
    let u_split = TAU * c / h_at_split();
    if u1 <= u_split {
        let x1 = inv_script_h(TAU * c / u1)?.a().min(-SPLIT);
        return Ok(TailPart {
            mass: mass_scale * inv_h_sq_below(x1)?,
            cost: cost_scale * cost_tail(1.0 - x1)?,
        });
    }
    Ok(TailPart {
        mass: mass_scale * split_tail()? + integrate_fallible(mass_f, u_split, u1, ABS, REL)?,
        cost: cost_scale * split_cost()? + integrate_fallible(cost_f, u_split, u1, ABS, REL)?,
    })
}

/// Width in cells of the analytic tail element for a grid of `n` cells.
pub fn tail_cells(n: usize) -> usize {
    n.div_ceil(50).max(1)
}

/// Smallest grid accepted by [`solve_sine`].
pub const MIN_SINE_CELLS: usize = 100;

/// Minimizes `(β/4)∫(1 − y) I(g′)` subject to `∫g′ = 2πρ` on the uniform grid
/// `y_i = i/n`, by root search on the multiplier `c`.
///
/// The first `n − m` cells carry constant slopes `(I′)⁻¹(c/(1 − y_mid))`
/// (zero where the argument is at most `−1/(2π)`); the last `m =
/// ⌈n/50⌉` cells are the exact pointwise optimum. `ρ = 0` and `ρ = 1/(2π)`
/// return their closed forms.
pub fn solve_sine(rho: Density, beta: f64, n: usize) -> Result<VariationalSolution> {
    if !(beta > 0.0) || !beta.is_finite() {
        return domain(format!("beta must be positive, got {beta}"));
    }
    if n < MIN_SINE_CELLS {
        return domain(format!("grid size must be at least {MIN_SINE_CELLS}, got {n}"));
    }
    let r = rho.get();
    let m = tail_cells(n);
    let nd = n - m;
    let h = 1.0 / n as f64;
    let delta = m as f64 * h;
    let weights: Vec<f64> = (0..nd).map(|i| 1.0 - (i as f64 + 0.5) * h).collect();

    if r == 0.0 || r == TYPICAL_DENSITY {
        let slope = if r == 0.0 { 0.0 } else { 1.0 };
        let profile = Profile::from_fn(1.0, n, |y| slope * y)?;
        let len = profile.grid.len();
        return Ok(VariationalSolution {
            value: RateValue::new(if r == 0.0 { beta / 64.0 } else { 0.0 }),
            dual_c: if r == 0.0 { -0.5 * FRAC_1_PI } else { 0.0 },
            free_boundary_a: if r == 0.0 { 0.0 } else { 1.0 },
            profile: profile.with_slopes(vec![slope; len]),
            discrete_cells: nd,
        });
    }

    let target = TAU * r;
    let slopes = |c: f64| -> Result<Vec<(f64, f64)>> {
        weights.iter().map(|&w| dual_point(c / w)).collect()
    };
    let mass = |c: f64| -> Result<f64> {
        let cells: f64 = slopes(c)?.iter().map(|s| s.0).sum::<f64>() * h;
        Ok(cells + tail_part(c, delta)?.mass - target)
    };

    // mass(lo) = −target: every cell and the whole tail are inactive.
    let lo = -weights[0] / TAU;
    let mut hi = 1.0;
    while mass(hi)? < 0.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Convergence(format!("cannot bracket the multiplier for ρ = {r}")));
        }
    }
    let c = illinois(mass, lo, hi, 1e-15 * hi.abs().max(1e-300), 1e-14 * target.max(1.0))
        .map_err(|e| Error::Convergence(format!("multiplier search failed: {e}")))?;

    let mut cell = slopes(c)?;
    let tail_total = tail_part(c, delta)?;
    // A cell switching on has slope ~ π/log(1/(c − c*)), so the mass is not
    // resolvable in c near that point. The marginal cell, where I′ equals
    // −1/(2π) to all digits, absorbs the residual.
    let resid = target - cell.iter().map(|s| s.0).sum::<f64>() * h - tail_total.mass;
    if resid.abs() > 1e-13 * target {
        let last_active = cell.iter().rposition(|s| s.0 > 0.0);
        let j = match (resid > 0.0, last_active) {
            (true, Some(i)) if i + 1 < nd => Some(i + 1),
            (true, None) => Some(0),
            (false, Some(i)) => Some(i),
            _ => None,
        };
        if let Some(j) = j {
            let q = (cell[j].0 + resid / h).max(0.0);
            if q > 1.0 {
                return Err(Error::Convergence(format!(
                    "multiplier search left a mass residual of {resid:e}"
                )));
            }
            cell[j] = (q, cell_rate(q * h, h)?);
        }
    }
    let mut cost: f64 = weights.iter().zip(&cell).map(|(w, s)| w * s.1).sum::<f64>() * h;
    cost += tail_total.cost;

    let mut grid = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    let mut g = 0.0;
    grid.push(0.0);
    values.push(0.0);
    for (i, s) in cell.iter().enumerate() {
        g += s.0 * h;
        grid.push((i + 1) as f64 * h);
        values.push(g);
    }
    let g_edge = g;
    for j in nd + 1..=n {
        let u = (n - j) as f64 * h;
        let rest = if j == n { 0.0 } else { tail_part(c, u)?.mass };
        grid.push(j as f64 * h);
        values.push(g_edge + (tail_total.mass - rest).max(0.0));
    }
    // Tail node values come from separate quadratures; keep them ordered.
    for j in nd + 1..=n {
        if values[j] < values[j - 1] {
            values[j] = values[j - 1];
        }
    }

    let free_boundary_a = if c >= 0.0 {
        1.0
    } else if -TAU * c < delta {
        1.0 + TAU * c
    } else {
        cell.iter().rposition(|s| s.0 > 0.0).map_or(0.0, |i| (i + 1) as f64 * h)
    };

    let profile = Profile::new(grid, values)?;
    Ok(VariationalSolution {
        value: RateValue::new(0.25 * beta * cost),
        dual_c: c,
        free_boundary_a,
        profile,
        discrete_cells: nd,
    })
}

/// The optimizer of the Sine problem in closed form, with two evaluations of
/// its rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerSolution {
    pub profile: Profile,
    /// `c = H(ν)/2π`, `ν = γ⁻¹(ρ)`.
    pub dual_c: f64,
    pub free_boundary_a: f64,
    /// `(β/4)∫(1 − y) I(g′)` by per-cell adaptive quadrature.
    pub cell_sum_value: f64,
    /// `(β/8)[I(g′(0)) − c g′(0) + 2πρc]`, from integrating
    /// `d/dy[(1 − y)² I(g′)]` along the Euler–Lagrange equation.
    pub identity_value: f64,
}

/// Closed-form optimizer on the uniform grid with `n` cells, evaluated for
/// weight `β`. Each cell's increment is the exact integral of
/// `g′(y) = (I′)⁻¹(c/(1 − y))` over the cell.
pub fn optimizer_solution(rho: Density, beta: f64, n: usize) -> Result<OptimizerSolution> {
    if !(beta > 0.0) || !beta.is_finite() {
        return domain(format!("beta must be positive, got {beta}"));
    }
    if n < 2 {
        return domain("optimizer grid needs at least two cells");
    }
    let r = rho.get();
    let nu = gamma_inv(rho)?.get();
    let c = if nu == 1.0 {
        -0.5 * FRAC_1_PI
    } else {
        script_h(EllipticParam::new(nu)?) / TAU
    };
    let a = if c < 0.0 { 1.0 + TAU * c } else { 1.0 };
    let h = 1.0 / n as f64;

    let slope_at = |y: f64| -> Result<f64> { Ok(dual_point(c / (1.0 - y))?.0) };
    let cost_at = |y: f64| -> Result<f64> { Ok((1.0 - y) * dual_point(c / (1.0 - y))?.1) };

    let mut values = vec![0.0];
    let mut slopes = Vec::with_capacity(n + 1);
    let mut cost = 0.0;
    let mut g = 0.0;
    for i in 0..n {
        let y0 = i as f64 * h;
        let y1 = if i + 1 == n { 1.0 } else { (i + 1) as f64 * h };
        let (dg, dc) = if i + 1 == n {
            let t = tail_part(c, 1.0 - y0)?;
            (t.mass, t.cost)
        } else {
            let edge = y1.min(a);
            let (mut dg, mut dc) = (0.0, 0.0);
            if edge > y0 {
                dg = integrate_fallible(slope_at, y0, edge, 1e-15, 1e-13)?;
                dc = integrate_fallible(cost_at, y0, edge, 1e-15, 1e-13)?;
            }
            let lo = y0.max(edge);
            // Inactive part: ∫(1 − y)/8 dy.
            dc += ((1.0 - lo).powi(2) - (1.0 - y1).powi(2)) / 16.0;
            (dg, dc)
        };
        g += dg;
        cost += dc;
        values.push(g);
        slopes.push(dg / (y1 - y0));
    }
    slopes.push(*slopes.last().expect("n ≥ 2"));
    let grid: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    let profile = Profile::new(grid, values)?.with_slopes(slopes);

    let (q0, i0) = dual_point(c)?;
    let identity = 0.125 * beta * (i0 - c * q0 + TAU * r * c);
    Ok(OptimizerSolution {
        profile,
        dual_c: c,
        free_boundary_a: a.clamp(0.0, 1.0),
        cell_sum_value: 0.25 * beta * cost,
        identity_value: identity,
    })
}

/// The closed-form optimal profile for density `ρ` on `n` uniform cells.
pub fn optimizer_profile(rho: Density, n: usize) -> Result<Profile> {
    Ok(optimizer_solution(rho, 1.0, n)?.profile)
}
