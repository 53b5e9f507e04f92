//! Complete elliptic integrals in the parameter convention
//!
//! ```text
//! K(a) = ∫₀^{π/2} (1 − a sin²x)^{−1/2} dx,   E(a) = ∫₀^{π/2} (1 − a sin²x)^{1/2} dx,
//! H(a) = (1 − a) K(a) − E(a),                 a < 1.
//! ```
//!
//! For `0 ≤ a < 1` the values come from the arithmetic–geometric mean started
//! at `(1, √(1−a))`. Negative parameters are mapped into `(0, 1)` with the
//! imaginary-modulus transformation `K(a) = (1−a)^{−1/2} K(a/(a−1))`,
//! `E(a) = (1−a)^{1/2} E(a/(a−1))`. Every value carries the complement
//! `1 − a` exactly so that parameters within `1e−300` of 1 remain usable.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::roots::{bisect, newton_polish};

/// Parameter `a < 1` together with its complement `1 − a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EllipticParam {
    a: f64,
    comp: f64,
}

impl EllipticParam {
    pub fn new(a: f64) -> Result<Self> {
        if !a.is_finite() {
            return domain(format!("elliptic parameter must be finite, got {a}"));
        }
        if a >= 1.0 {
            return domain(format!("elliptic parameter must satisfy a < 1, got {a}"));
        }
        Ok(Self { a, comp: 1.0 - a })
    }

    /// Builds `a = 1 − m1` from the complement, keeping `m1` at full precision.
    pub fn from_complement(m1: f64) -> Result<Self> {
        if !(m1 > 0.0) || !m1.is_finite() {
            return domain(format!("complement must be positive and finite, got {m1}"));
        }
        Ok(Self { a: 1.0 - m1, comp: m1 })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn complement(&self) -> f64 {
        self.comp
    }

    pub fn k(&self) -> f64 {
        self.ke().0
    }

    pub fn e(&self) -> f64 {
        self.ke().1
    }

    pub fn h(&self) -> f64 {
        script_h(*self)
    }

    /// `(K, E)` evaluated together.
    pub fn ke(&self) -> (f64, f64) {
        if self.a >= 0.0 {
            let (k, e, _) = ke_from_comp(self.comp);
            (k, e)
        } else {
            let z1 = 1.0 / self.comp;
            let (kz, ez, _) = ke_from_comp(z1);
            let r = z1.sqrt();
            (r * kz, ez / r)
        }
    }
}

/// A value with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EllipticValue {
    pub value: f64,
    pub abs_err_estimate: f64,
}

/// `(K, E, E − 1)` for parameter `m = 1 − m1`, `0 < m1 ≤ 1`.
fn ke_from_comp(m1: f64) -> (f64, f64, f64) {
    if m1 < 1e-6 {
        ke_near_one(m1)
    } else {
        ke_agm(m1)
    }
}

/// Logarithmic expansions around `m = 1`; truncation error `O(m1³ log m1)`.
fn ke_near_one(m1: f64) -> (f64, f64, f64) {
    let l = (4.0 / m1.sqrt()).ln();
    let k = l + 0.25 * m1 * (l - 1.0) + 9.0 / 64.0 * m1 * m1 * (l - 7.0 / 6.0);
    let em1 = 0.5 * m1 * (l - 0.5) + 3.0 / 16.0 * m1 * m1 * (l - 13.0 / 12.0);
    (k, 1.0 + em1, em1)
}

fn ke_agm(m1: f64) -> (f64, f64, f64) {
    let mut a = 1.0;
    let mut b = m1.sqrt();
    let mut pow = 0.5;
    let mut sum = 0.5 * (1.0 - m1);
    for _ in 0..64 {
        let c = 0.5 * (a - b);
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
        pow *= 2.0;
        sum += pow * c * c;
        if c.abs() <= f64::EPSILON * a {
            break;
        }
    }
    let k = FRAC_PI_2 / a;
    let e = k * (1.0 - sum);
    (k, e, e - 1.0)
}

/// `S(a)` with `H(a) = −(π/4)·a·S(a)`, plus the tails `u = S − 1` and
/// `w = S − 1 − a/8`, all summed directly. Intended for `|a| ≤ 1/4`.
pub(crate) fn h_series(a: f64) -> (f64, f64, f64) {
    // S(a) = Σ_{n≥1} k_{n−1} a^{n−1} / n with k_n = ((2n−1)!!/(2n)!!)².
    let mut kk = 0.25; // k_1
    let mut pw = a * a; // a^{n−1} for n = 3
    let mut w = 0.0;
    for n in 3..200 {
        let nf = n as f64;
        let prev = nf - 1.0;
        kk *= ((2.0 * prev - 1.0) / (2.0 * prev)).powi(2);
        let term = kk * pw / nf;
        w += term;
        if term.abs() <= 1e-18 * w.abs().max(1e-300) {
            break;
        }
        pw *= a;
    }
    let u = a / 8.0 + w;
    (1.0 + u, u, w)
}

const SERIES_RADIUS: f64 = 0.25;

fn err_estimate(value: f64, p: EllipticParam) -> f64 {
    let spread = if p.a >= 0.0 {
        (-p.comp.ln()).max(0.0)
    } else {
        p.comp.ln()
    };
    8.0 * f64::EPSILON * value.abs() * (1.0 + spread)
}

/// Complete elliptic integral of the first kind.
pub fn ellip_k(p: EllipticParam) -> EllipticValue {
    let v = p.k();
    EllipticValue { value: v, abs_err_estimate: err_estimate(v, p) }
}

/// Complete elliptic integral of the second kind.
pub fn ellip_e(p: EllipticParam) -> EllipticValue {
    let v = p.e();
    EllipticValue { value: v, abs_err_estimate: err_estimate(v, p) }
}

/// `H(a) = (1 − a)K(a) − E(a)`, with a series near `a = 0` where the two
/// terms cancel.
pub fn script_h(p: EllipticParam) -> f64 {
    let a = p.a;
    if a.abs() <= SERIES_RADIUS {
        let (s, _, _) = h_series(a);
        -0.25 * PI * a * s
    } else if a < 0.0 {
        let z1 = 1.0 / p.comp;
        let (kz, ez, _) = ke_from_comp(z1);
        p.comp.sqrt() * (kz - ez)
    } else {
        let (k, _, em1) = ke_from_comp(p.comp);
        // m1·K − E, arranged so that H + 1 keeps its digits as a → 1.
        (p.comp * k - em1) - 1.0
    }
}

/// `H(a) + 1`, accurate as `a → 1` where `H → −1`.
pub(crate) fn script_h_plus_one(p: EllipticParam) -> f64 {
    if p.a > SERIES_RADIUS {
        let (k, _, em1) = ke_from_comp(p.comp);
        p.comp * k - em1
    } else {
        script_h(p) + 1.0
    }
}

/// `K′(a) = (E − (1−a)K) / (2a(1−a)) = −H(a) / (2a(1−a))`, with the series
/// limit `π/8` at `a = 0`.
pub fn ellip_k_deriv(p: EllipticParam) -> f64 {
    let a = p.a;
    if a.abs() <= SERIES_RADIUS {
        let (s, _, _) = h_series(a);
        0.125 * PI * s / p.comp
    } else {
        -script_h(p) / (2.0 * a * p.comp)
    }
}

/// `ln K′(a)`, finite even when `1 − a` is far below the range where
/// `K′ ≈ 1/(2(1−a))` is representable.
pub fn ln_ellip_k_deriv(p: EllipticParam) -> f64 {
    if p.a > SERIES_RADIUS {
        // −H = E − m1·K stays O(1).
        let (k, e, _) = ke_from_comp(p.comp);
        (e - p.comp * k).ln() - (2.0 * p.a).ln() - p.comp.ln()
    } else {
        ellip_k_deriv(p).ln()
    }
}

/// Lowest log-complement accepted before reporting a precision failure.
const MIN_LN_COMP: f64 = -690.0;

/// Inverse of `K` on `(0, ∞)`.
pub fn inv_k(y: f64) -> Result<EllipticParam> {
    if !(y > 0.0) || !y.is_finite() {
        return domain(format!("inv_k requires a finite positive argument, got {y}"));
    }
    if y == FRAC_PI_2 {
        return EllipticParam::new(0.0);
    }
    if y > FRAC_PI_2 {
        // a ∈ (0, 1), parametrized by t = ln(1 − a); K decreases in t.
        let f = |t: f64| Ok(EllipticParam::from_complement(t.exp())?.k() - y);
        let guess = 16f64.ln() - 2.0 * y;
        let mut lo = (guess - 2.0).min(-1e-3);
        while f(lo)? < 0.0 {
            lo -= 4.0;
            if lo < MIN_LN_COMP {
                break;
            }
        }
        if lo < MIN_LN_COMP || guess < MIN_LN_COMP {
            return Err(Error::Precision(format!(
                "K⁻¹({y}) lies within e^{MIN_LN_COMP} of 1"
            )));
        }
        let t = bisect(f, lo, 0.0, 1e-15)?;
        let p = EllipticParam::from_complement(t.exp())?;
        let df = -ellip_k_deriv(p) * p.comp;
        let t = newton_polish(t, p.k() - y, df, lo, 0.0);
        EllipticParam::from_complement(t.exp())
    } else {
        // a < 0, parametrized by s = ln(1 − a); K decreases in s.
        let f = |s: f64| Ok(param_from_log_one_minus(s)?.k() - y);
        let mut hi = 1.0;
        while f(hi)? > 0.0 {
            hi *= 2.0;
            if hi > 700.0 {
                return Err(Error::Convergence(format!("cannot bracket K⁻¹({y})")));
            }
        }
        let s = bisect(f, 0.0, hi, 1e-15 * hi.max(1.0))?;
        let p = param_from_log_one_minus(s)?;
        let df = -ellip_k_deriv(p) * p.comp;
        let s = newton_polish(s, p.k() - y, df, 0.0, hi);
        param_from_log_one_minus(s)
    }
}

fn param_from_log_one_minus(s: f64) -> Result<EllipticParam> {
    let comp = s.exp();
    Ok(EllipticParam { a: 1.0 - comp, comp })
}

/// Inverse of `H` on `(−1, ∞)`.
pub fn inv_script_h(h: f64) -> Result<EllipticParam> {
    if !(h > -1.0) || !h.is_finite() {
        return domain(format!("inv_script_h requires h > −1, got {h}"));
    }
    if h == 0.0 {
        return EllipticParam::new(0.0);
    }
    if h > 0.0 {
        // a < 0; H increases in s = ln(1 − a).
        let f = |s: f64| Ok(script_h(param_from_log_one_minus(s)?) - h);
        let mut hi = 1.0;
        while f(hi)? < 0.0 {
            hi *= 2.0;
            if hi > 700.0 {
                return Err(Error::Precision(format!("H⁻¹({h}) is below −e^700")));
            }
        }
        let s = bisect(f, 0.0, hi, 1e-15 * hi.max(1.0))?;
        let p = param_from_log_one_minus(s)?;
        let df = 0.5 * p.k() * p.comp;
        let s = newton_polish(s, script_h(p) - h, df, 0.0, hi);
        param_from_log_one_minus(s)
    } else {
        // a ∈ (0, 1); H + 1 increases in t = ln(1 − a).
        let d = h + 1.0;
        let f = |t: f64| Ok(script_h_plus_one(EllipticParam::from_complement(t.exp())?) - d);
        let mut lo = d.ln() - 1.0;
        while lo > MIN_LN_COMP && f(lo)? > 0.0 {
            lo -= 4.0;
        }
        if lo <= MIN_LN_COMP {
            return Err(Error::Precision(format!(
                "H⁻¹({h}) lies within e^{MIN_LN_COMP} of 1"
            )));
        }
        let lo = lo.min(-1e-12);
        let t = bisect(f, lo, 0.0, 1e-15)?;
        let p = EllipticParam::from_complement(t.exp())?;
        let df = 0.5 * p.k() * p.comp;
        let t = newton_polish(t, script_h_plus_one(p) - d, df, lo, 0.0);
        EllipticParam::from_complement(t.exp())
    }
}
