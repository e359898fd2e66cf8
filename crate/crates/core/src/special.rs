//! Gamma function machinery, the h-factorial `x_h^{(y)}` and the discrete
//! generalized polynomials `H_k` of the time scale `(hZ)_a`.
//!
//! All ratios of gamma values go through [`ln_gamma`] with explicit sign
//! tracking, so kernels with large arguments never overflow an intermediate
//! `Γ` value.
//!
//! Poles are handled with the convention "division at a pole yields zero":
//! when the denominator argument of a ratio sits at a nonpositive integer the
//! ratio is `0`. When *both* arguments sit at poles the ratio is replaced by
//! its limit, `(-1)^(den-num) Γ(1-den) / Γ(1-num)`. This second rule is an
//! extension; it is what makes `(t - s)_h^{(k)}` a plain falling factorial
//! for `t < s`.

use std::f64::consts::PI;

use thiserror::Error;

/// Distance to the nearest nonpositive integer below which an argument
/// counts as a pole. Grid arithmetic produces near-integers with a few ulps
/// of error, so exact comparison is not usable.
pub const POLE_TOLERANCE: f64 = 1e-9;

/// Errors raised by the special functions.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SpecialError {
    /// Γ evaluated at a nonpositive integer.
    #[error("gamma function pole at {0}")]
    Pole(f64),
    /// The result does not fit in an `f64`.
    #[error("gamma function overflow at {0}")]
    Overflow(f64),
    /// `Γ(num)/Γ(den)` with `num` at a pole and `den` regular.
    #[error("gamma ratio diverges: numerator {num} is a pole, denominator {den} is not")]
    DivergentRatio {
        /// Numerator argument.
        num: f64,
        /// Denominator argument.
        den: f64,
    },
    /// A step size that is not strictly positive and finite.
    #[error("step size must be positive and finite, got {0}")]
    InvalidStep(f64),
    /// A non-finite argument.
    #[error("non-finite argument {0}")]
    NotFinite(f64),
}

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

// ln(sqrt(2π))
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Returns the nonpositive integer `x` is within [`POLE_TOLERANCE`] of, if any.
pub fn pole_at(x: f64) -> Option<i64> {
    let r = x.round();
    if r <= 0.0 && (x - r).abs() < POLE_TOLERANCE {
        Some(r as i64)
    } else {
        None
    }
}

/// Lanczos series for `x >= 0.5`, written as `ln Γ(x)`.
fn ln_gamma_lanczos(x: f64) -> f64 {
    let z = x - 1.0;
    let mut series = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        series += c / (z + i as f64);
    }
    let w = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * w.ln() - w + series.ln()
}

/// `sin(πx)` with the argument reduced first, so the result stays accurate
/// for large `|x|`.
fn sin_pi(x: f64) -> f64 {
    let n = x.round();
    let r = x - n;
    let s = (PI * r).sin();
    if (n as i64) % 2 == 0 {
        s
    } else {
        -s
    }
}

/// Natural log of `|Γ(x)|` together with the sign of `Γ(x)`.
pub fn ln_gamma(x: f64) -> Result<(f64, f64), SpecialError> {
    if !x.is_finite() {
        return Err(SpecialError::NotFinite(x));
    }
    if pole_at(x).is_some() {
        return Err(SpecialError::Pole(x));
    }
    if x >= 0.5 {
        Ok((ln_gamma_lanczos(x), 1.0))
    } else {
        // Reflection: Γ(x) Γ(1-x) = π / sin(πx), and Γ(1-x) > 0 here.
        let s = sin_pi(x);
        let lg = PI.ln() - s.abs().ln() - ln_gamma_lanczos(1.0 - x);
        Ok((lg, s.signum()))
    }
}

/// Euler gamma function.
pub fn gamma(x: f64) -> Result<f64, SpecialError> {
    if !x.is_finite() {
        return Err(SpecialError::NotFinite(x));
    }
    if pole_at(x).is_some() {
        return Err(SpecialError::Pole(x));
    }
    // Exact factorials for small positive integers.
    if x == x.round() && (1.0..=23.0).contains(&x) {
        let mut f = 1.0;
        for i in 2..(x as u32) {
            f *= f64::from(i);
        }
        return Ok(f);
    }
    if x >= 0.5 {
        if x < 140.0 {
            let z = x - 1.0;
            let mut series = LANCZOS_COEF[0];
            for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
                series += c / (z + i as f64);
            }
            let w = z + LANCZOS_G + 0.5;
            // Split the power to delay overflow.
            let p = w.powf(0.5 * (z + 0.5));
            return Ok((2.0 * PI).sqrt() * p * (p * (-w).exp()) * series);
        }
        let v = ln_gamma_lanczos(x).exp();
        if v.is_finite() {
            Ok(v)
        } else {
            Err(SpecialError::Overflow(x))
        }
    } else {
        let g = gamma(1.0 - x)?;
        let v = PI / (sin_pi(x) * g);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(SpecialError::Overflow(x))
        }
    }
}

/// `Γ(num) / Γ(den)` with the pole conventions described in the module docs.
///
/// Computed as `exp(ln|Γ(num)| - ln|Γ(den)|)` with sign tracking.
pub fn gamma_ratio(num: f64, den: f64) -> Result<f64, SpecialError> {
    if !num.is_finite() {
        return Err(SpecialError::NotFinite(num));
    }
    if !den.is_finite() {
        return Err(SpecialError::NotFinite(den));
    }
    match (pole_at(num), pole_at(den)) {
        (None, Some(_)) => Ok(0.0),
        (Some(_), None) => Err(SpecialError::DivergentRatio { num, den }),
        (Some(n), Some(d)) => {
            // Γ(n+ε)/Γ(d+ε) → (-1)^(d-n) Γ(1-d)/Γ(1-n)
            let sign = if (d - n).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let (lnum, _) = ln_gamma(1.0 - d as f64)?;
            let (lden, _) = ln_gamma(1.0 - n as f64)?;
            finite_exp(sign, lnum - lden, num)
        }
        (None, None) => {
            if num == den {
                return Ok(1.0);
            }
            let (ln_n, s_n) = ln_gamma(num)?;
            let (ln_d, s_d) = ln_gamma(den)?;
            finite_exp(s_n * s_d, ln_n - ln_d, num)
        }
    }
}

fn finite_exp(sign: f64, log: f64, at: f64) -> Result<f64, SpecialError> {
    let v = sign * log.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(SpecialError::Overflow(at))
    }
}

fn check_step(h: f64) -> Result<(), SpecialError> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(SpecialError::InvalidStep(h))
    }
}

/// The h-factorial `x_h^{(y)} = h^y Γ(x/h + 1) / Γ(x/h + 1 - y)`.
pub fn h_factorial(x: f64, y: f64, h: f64) -> Result<f64, SpecialError> {
    check_step(h)?;
    h_factorial_units(x / h, y, h)
}

/// The h-factorial with its first argument already expressed in units of
/// `h`, i.e. `(z h)_h^{(y)}`. Grid kernels call this with `z` built from
/// integer index differences, so no division by `h` is involved.
pub fn h_factorial_units(z: f64, y: f64, h: f64) -> Result<f64, SpecialError> {
    check_step(h)?;
    if y == 0.0 {
        return Ok(1.0);
    }
    let ratio = gamma_ratio(z + 1.0, z + 1.0 - y)?;
    Ok(h.powf(y) * ratio)
}

/// Generalized polynomial `H_k(t, s) = (t - s)_h^{(k)} / k!` on `(hZ)_a`.
pub fn generalized_polynomial(k: u32, t: f64, s: f64, h: f64) -> Result<f64, SpecialError> {
    check_step(h)?;
    if k == 0 {
        return Ok(1.0);
    }
    let kf = f64::from(k);
    let fact = gamma(kf + 1.0)?;
    Ok(h_factorial(t - s, kf, h)? / fact)
}
