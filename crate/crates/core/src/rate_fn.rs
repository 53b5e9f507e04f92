//! Rate functions of the counting-function large deviations.
//!
//! With `a(q) = K⁻¹(π/(2q))`,
//!
//! ```text
//! I(q)     = (2 − a)/8 − E(a)/(4K(a))
//! I′(q)    = H(a)/(2π)
//! I″(q)    = π / (16 q³ K′(a))
//! I_Sch(ρ) = I(2πρ)
//! I_Sine(ρ) = (ν/8 + ρ H(ν)) / 8,   ν = γ⁻¹(ρ)
//! ```
//!
//! `γ` is evaluated from its defining integral of `H⁻²`. The `1/x²` pole at
//! the origin is removed analytically and the `1/(x log²|x|)` decay at `−∞`
//! is integrated in logarithmic coordinates with its leading term subtracted.
//!
//! For `q` below roughly `0.0049` the parameter `1 − a ≈ 16 e^{−π/q}` is
//! not representable; there `I`, `I′` use their exact leading behaviour
//! (corrections are below `1e−270`) and `I″` is available through
//! [`ln_big_i_second`].

use std::f64::consts::{FRAC_1_PI, LN_2, PI};
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::quad::integrate;
use crate::roots::{bisect, newton_polish};
use crate::special_fn::{h_series, inv_k, inv_script_h, ln_ellip_k_deriv, script_h, EllipticParam};

/// The typical density `1/(2π)`.
pub const TYPICAL_DENSITY: f64 = 0.5 * FRAC_1_PI;

/// Normalized phase growth rate `q > 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Slope(f64);

impl Slope {
    pub fn new(q: f64) -> Result<Self> {
        if q > 0.0 && q.is_finite() {
            Ok(Self(q))
        } else {
            domain(format!("slope must be finite and positive, got {q}"))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Point density `ρ ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Density(f64);

impl Density {
    pub fn new(rho: f64) -> Result<Self> {
        if rho >= 0.0 && rho.is_finite() {
            Ok(Self(rho))
        } else {
            domain(format!("density must be finite and non-negative, got {rho}"))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Argument `ν ≤ 1` of `γ`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct NuParam(f64);

impl NuParam {
    pub fn new(nu: f64) -> Result<Self> {
        if nu <= 1.0 && nu.is_finite() {
            Ok(Self(nu))
        } else {
            domain(format!("nu must be finite and at most 1, got {nu}"))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Non-negative rate, or the `+∞` sentinel for infeasible arguments.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct RateValue(f64);

impl RateValue {
    pub const INFINITE: RateValue = RateValue(f64::INFINITY);
    pub const ZERO: RateValue = RateValue(0.0);

    /// Rounding residue below zero is clamped to zero.
    pub fn new(v: f64) -> Self {
        debug_assert!(!v.is_nan());
        Self(v.max(0.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }
}

/// Below this `K` target the complement `1 − a` underflows.
const SMALL_Q_K: f64 = 320.0;

enum SlopeParam {
    Exact(EllipticParam),
    /// `ln(1 − a)` for slopes too small to represent `1 − a`.
    Small(f64),
}

fn slope_param(q: f64) -> Result<SlopeParam> {
    let y = 0.5 * PI / q;
    if y > SMALL_Q_K {
        Ok(SlopeParam::Small(16f64.ln() - 2.0 * y))
    } else {
        Ok(SlopeParam::Exact(inv_k(y)?))
    }
}

/// `a(q) = K⁻¹(π/(2q))`.
pub fn slope_to_param(q: Slope) -> Result<EllipticParam> {
    inv_k(0.5 * PI / q.0)
}

/// `I(q)`.
pub fn big_i(q: Slope) -> Result<RateValue> {
    let v = match slope_param(q.0)? {
        SlopeParam::Exact(p) => {
            let (k, e) = p.ke();
            (1.0 + p.complement()) / 8.0 - e / (4.0 * k)
        }
        SlopeParam::Small(_) => 0.125 - 0.5 * q.0 * FRAC_1_PI,
    };
    Ok(RateValue::new(v))
}

/// `I′(q) = H(a(q))/(2π)`, equal to `I(q)/q − a(q)/(8q)`.
pub fn big_i_prime(q: Slope) -> Result<f64> {
    Ok(match slope_param(q.0)? {
        SlopeParam::Exact(p) => 0.5 * FRAC_1_PI * script_h(p),
        SlopeParam::Small(_) => -0.5 * FRAC_1_PI,
    })
}

/// `ln I″(q)`; finite for every `q > 0`.
pub fn ln_big_i_second(q: Slope) -> Result<f64> {
    let base = (PI / 16.0).ln() - 3.0 * q.0.ln();
    Ok(match slope_param(q.0)? {
        SlopeParam::Exact(p) => base - ln_ellip_k_deriv(p),
        // K′ ≈ 1/(2(1−a)) with E − (1−a)K → 1.
        SlopeParam::Small(ln_m1) => base + LN_2 + ln_m1,
    })
}

/// `I″(q) = π/(16 q³ K′(a(q)))`. Underflows to zero for `q ≲ 0.0045`; use
/// [`ln_big_i_second`] there.
pub fn big_i_second(q: Slope) -> Result<f64> {
    Ok(ln_big_i_second(q)?.exp())
}

/// The unique `q` with `I′(q) = c`, for `c > −1/(2π)`.
pub fn inv_big_i_prime(c: f64) -> Result<Slope> {
    let h = 2.0 * PI * c;
    if !(h > -1.0) || !c.is_finite() {
        return domain(format!("inv_big_i_prime requires c > −1/(2π), got {c}"));
    }
    let p = inv_script_h(h)?;
    Slope::new(0.5 * PI / p.k())
}

/// `I_Sch(ρ) = I(2πρ)`, with the limit `1/8` at `ρ = 0`.
pub fn i_sch(rho: Density) -> Result<RateValue> {
    if rho.0 == 0.0 {
        return Ok(RateValue::new(0.125));
    }
    big_i(Slope::new(2.0 * PI * rho.0)?)
}

/// `d/dρ I_Sch(ρ) = 2π I′(2πρ)`.
pub fn i_sch_prime(rho: Density) -> Result<f64> {
    if rho.0 == 0.0 {
        return Ok(-1.0);
    }
    Ok(2.0 * PI * big_i_prime(Slope::new(2.0 * PI * rho.0)?)?)
}

// γ(ν) via the integral of H⁻².

pub(crate) const SPLIT: f64 = 2.0;
pub(crate) const TAIL_SPAN: f64 = 45.0;
const C16: f64 = 16.0 / (PI * PI);
const C4: f64 = 4.0 / (PI * PI);

fn h_of(x: f64) -> f64 {
    script_h(EllipticParam::new(x).expect("x < 1 inside γ quadrature"))
}

/// `H(x)⁻² − 16/(π²x²) + 4/(π²x)`, bounded near `x = 0`.
fn inv_h_sq_remainder(x: f64) -> f64 {
    if x.abs() <= 0.25 {
        let (_, u, w) = h_series(x);
        let opu = 1.0 + u;
        C16 / (x * x) * ((3.0 * u * u + 2.0 * u * u * u) / (opu * opu) - 2.0 * w)
    } else {
        let h = h_of(x);
        1.0 / (h * h) - C16 / (x * x) + C4 / x
    }
}

/// `∫_{−∞}^{1−s1} H(x)⁻² dx` for `s1 ≥ 1 + SPLIT`, computed in `v = ln(1 − x)`
/// after subtracting `4/(s (ln(16 s) − 2)²)`, whose integral is `4/(ln(16 s1) − 2)`.
fn inv_h_sq_tail(s1: f64) -> Result<f64> {
    let wlog = |s: f64| (16.0 * s).ln() - 2.0;
    let f = |v: f64| {
        let s = v.exp();
        let h = script_h(EllipticParam::new(1.0 - s).expect("negative parameter"));
        let w = wlog(s);
        s / (h * h) - 4.0 / (w * w)
    };
    let v0 = s1.ln();
    let r = integrate(f, v0, v0 + TAIL_SPAN, 1e-15, 1e-13)?;
    Ok(r.value + 4.0 / wlog(s1))
}

pub(crate) fn split_tail() -> Result<f64> {
    static TAIL: OnceLock<f64> = OnceLock::new();
    if let Some(v) = TAIL.get() {
        return Ok(*v);
    }
    let v = inv_h_sq_tail(1.0 + SPLIT)?;
    Ok(*TAIL.get_or_init(|| v))
}

/// `∫_{−∞}^{ν} H⁻²` for `ν < 0`.
pub(crate) fn inv_h_sq_below(nu: f64) -> Result<f64> {
    if nu <= -SPLIT {
        return inv_h_sq_tail(1.0 - nu);
    }
    let r = integrate(inv_h_sq_remainder, -SPLIT, nu, 1e-15, 1e-13)?;
    let m = -nu;
    Ok(split_tail()? + r.value + C16 * (1.0 / m - 1.0 / SPLIT) - C4 * (m.ln() - SPLIT.ln()))
}

/// `∫_{ν}^{1} H⁻²` for `0 < ν < 1`.
fn inv_h_sq_above(nu: f64) -> Result<f64> {
    let r = integrate(inv_h_sq_remainder, nu, 1.0, 1e-15, 1e-13)?;
    Ok(r.value + C16 * (1.0 / nu - 1.0) + C4 * nu.ln())
}

/// `γ(ν)`: `(H(ν)/8)∫_{−∞}^{ν} H⁻²` for `ν < 0`, `1/(2π)` at 0,
/// `(H(ν)/8)∫_{1}^{ν} H⁻²` on `(0, 1)` and `0` at 1.
pub fn gamma_fn(nu: NuParam) -> Result<Density> {
    let x = nu.0;
    let v = if x == 0.0 {
        TYPICAL_DENSITY
    } else if x == 1.0 {
        0.0
    } else if x < 0.0 {
        h_of(x) / 8.0 * inv_h_sq_below(x)?
    } else {
        -h_of(x) / 8.0 * inv_h_sq_above(x)?
    };
    Density::new(v.max(0.0))
}

/// `γ′(ν)` from `H γ′ = 1/8 + H′ γ` with `H′ = −K/2`; `ν ∉ {0, 1}`.
pub fn gamma_prime(nu: NuParam) -> Result<f64> {
    let x = nu.0;
    if x == 0.0 || x == 1.0 {
        return domain("γ′ is unbounded at ν = 0 and ν = 1");
    }
    let p = EllipticParam::new(x)?;
    let g = gamma_fn(nu)?.0;
    Ok((0.125 - 0.5 * p.k() * g) / script_h(p))
}

/// `4ν(1 − ν)γ″(ν) − γ(ν)` with `γ″` from a central difference of step
/// `10⁻² · min(|ν|, 1 − ν, 1) · max(1, |ν|)`, scaled to the distance from the
/// singular points. `None` at `ν ∈ {0, 1}`.
pub fn gamma_ode_residual(nu: NuParam) -> Result<Option<f64>> {
    let x = nu.0;
    if x == 0.0 || x == 1.0 {
        return Ok(None);
    }
    let h = 1e-2 * x.abs().min(1.0 - x).min(1.0) * x.abs().max(1.0);
    let g = |y: f64| -> Result<f64> { Ok(gamma_fn(NuParam::new(y)?)?.0) };
    let g0 = g(x)?;
    let d2 = (g(x + h)? - 2.0 * g0 + g(x - h)?) / (h * h);
    Ok(Some(4.0 * x * (1.0 - x) * d2 - g0))
}

/// The unique `ν ≤ 1` with `γ(ν) = ρ`.
pub fn gamma_inv(rho: Density) -> Result<NuParam> {
    let r = rho.0;
    if r == 0.0 {
        return NuParam::new(1.0);
    }
    if r == TYPICAL_DENSITY {
        return NuParam::new(0.0);
    }
    let g = |x: f64| -> Result<f64> { Ok(gamma_fn(NuParam::new(x)?)?.0 - r) };
    let nu = if r > TYPICAL_DENSITY {
        // ν = −e^u; γ(ν) ~ √|ν|/4 for ν → −∞.
        let mut u_hi = (16.0 * r * r + 4.0).ln() + 1.0;
        while g(-u_hi.exp())? < 0.0 {
            u_hi += 2.0;
            if u_hi > 700.0 {
                return Err(Error::Convergence(format!("cannot bracket γ⁻¹({r})")));
            }
        }
        let u = bisect(|u: f64| g(-u.exp()), -700.0, u_hi, 1e-14)?;
        let nu = -u.exp();
        polish_nu(nu, r, -u_hi.exp(), 0.0)?
    } else {
        // ν = 1/(1 + e^{−u}) ∈ (0, 1).
        let nu_of = |u: f64| 1.0 / (1.0 + (-u).exp());
        let u = bisect(|u: f64| g(nu_of(u)), -700.0, 40.0, 1e-14)?;
        polish_nu(nu_of(u), r, 0.0, 1.0)?
    };
    NuParam::new(nu)
}

fn polish_nu(nu: f64, rho: f64, lo: f64, hi: f64) -> Result<f64> {
    if nu.abs() < 1e-8 || 1.0 - nu < 1e-8 {
        return Ok(nu);
    }
    let p = NuParam::new(nu)?;
    let gv = gamma_fn(p)?.0;
    let cand = newton_polish(nu, gv - rho, gamma_prime(p)?, lo, hi);
    // Keep the step only if it improves the residual.
    let gc = gamma_fn(NuParam::new(cand)?)?.0;
    Ok(if (gc - rho).abs() <= (gv - rho).abs() { cand } else { nu })
}

/// `I_Sine(ρ) = (ν/8 + ρ H(ν))/8` with `ν = γ⁻¹(ρ)`; `1/64` at `ρ = 0`.
pub fn i_sine(rho: Density) -> Result<RateValue> {
    let r = rho.0;
    if r == 0.0 {
        return Ok(RateValue::new(1.0 / 64.0));
    }
    if r == TYPICAL_DENSITY {
        return Ok(RateValue::ZERO);
    }
    let nu = gamma_inv(rho)?.0;
    if nu == 1.0 {
        return Ok(RateValue::new(1.0 / 64.0 - r / 8.0));
    }
    Ok(RateValue::new((nu / 8.0 + r * h_of(nu)) / 8.0))
}

/// `I_Sine′(ρ) = H(ν)/4`.
pub fn i_sine_prime(rho: Density) -> Result<f64> {
    if rho.0 <= 0.0 {
        return domain("i_sine_prime requires ρ > 0");
    }
    let nu = gamma_inv(rho)?.0;
    if nu == 1.0 {
        return Ok(-0.25);
    }
    Ok(h_of(nu) / 4.0)
}
