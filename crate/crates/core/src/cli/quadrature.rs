//! Reference curve for the `ex1` sweep:
//! `y(t) = ½ ∫_0^t dx / [(1 - x)(t - x)]^{1/4}`.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("t = {0} is outside (0, 1]")]
    OutOfRange(f64),
    #[error("quadrature at t = {t} did not reach {tol:e} (estimate {estimate:e})")]
    NotConverged { t: f64, tol: f64, estimate: f64 },
}

// Gauss–Kronrod 7/15 nodes on [-1, 1] (nonnegative half) and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One G7K15 panel: (Kronrod estimate, |Kronrod - Gauss|).
fn gk15(f: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let c = 0.5 * (lo + hi);
    let r = 0.5 * (hi - lo);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = r * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * r, ((k - g) * r).abs())
}

/// Adaptive Gauss–Kronrod integration by repeated bisection of the worst panel.
pub fn integrate(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64, f64> {
    let mut panels = vec![(lo, hi, gk15(&f, lo, hi))];
    for _ in 0..2000 {
        let err: f64 = panels.iter().map(|p| p.2 .1).sum();
        if err <= tol {
            return Ok(panels.iter().map(|p| p.2 .0).sum());
        }
        let (i, _) = panels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .2 .1.total_cmp(&b.1 .2 .1))
            .expect("at least one panel");
        let (a, b, _) = panels.swap_remove(i);
        let m = 0.5 * (a + b);
        panels.push((a, m, gk15(&f, a, m)));
        panels.push((m, b, gk15(&f, m, b)));
    }
    Err(panels.iter().map(|p| p.2 .1).sum())
}

/// `½ ∫_0^t dx / [(1 - x)(t - x)]^{1/4}` for `0 < t ≤ 1`, absolute error ≤ 1e-8.
///
/// Substituting `x = t - u⁴` removes both endpoint singularities: the
/// integrand becomes `2u² (1 - t + u⁴)^{-1/4}` on `[0, t^{1/4}]`, which is
/// bounded even at `t = 1`.
pub fn reference_quadrature_ex1(t: f64) -> Result<f64, QuadratureError> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(QuadratureError::OutOfRange(t));
    }
    let tol = 1e-10;
    let f = move |u: f64| {
        let u2 = u * u;
        2.0 * u2 * (1.0 - t + u2 * u2).powf(-0.25)
    };
    integrate(f, 0.0, t.powf(0.25), tol).map_err(|estimate| QuadratureError::NotConverged { t, tol, estimate })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Double-exponential quadrature of `g(t - x)` over `x ∈ [0, t]`. The
    /// integrand receives the distance to the upper endpoint so the
    /// singular factor keeps full precision.
    fn tanh_sinh(g: impl Fn(f64) -> f64, t: f64) -> f64 {
        let r = 0.5 * t;
        let step = 1.0 / 64.0;
        let mut sum = 0.0;
        for i in -400i32..=400 {
            let s = f64::from(i) * step;
            let q = std::f64::consts::FRAC_PI_2 * s.sinh();
            let w = std::f64::consts::FRAC_PI_2 * s.cosh() / (q.cosh() * q.cosh());
            // t - x = r (1 - tanh q) = r e^{-q} / cosh q
            let gap = r * (-q).exp() / q.cosh();
            if gap <= 0.0 || gap >= t || !w.is_finite() || w == 0.0 {
                continue;
            }
            sum += w * g(gap);
        }
        sum * r * step
    }

    fn original(t: f64) -> impl Fn(f64) -> f64 {
        move |gap: f64| 0.5 * ((1.0 - t) + gap).powf(-0.25) * gap.powf(-0.25)
    }

    #[test]
    fn matches_independent_scheme() {
        for t in [0.05, 0.3, 0.5, 0.9, 0.999, 1.0] {
            let a = reference_quadrature_ex1(t).unwrap();
            let b = tanh_sinh(original(t), t);
            assert!((a - b).abs() < 1e-7, "t {t}: {a} vs {b}");
        }
    }

    #[test]
    fn endpoint_values() {
        assert!((reference_quadrature_ex1(1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(reference_quadrature_ex1(1e-12).unwrap() < 1e-8);
        assert!(reference_quadrature_ex1(0.0).is_err());
        assert!(reference_quadrature_ex1(1.5).is_err());
    }

    #[test]
    fn increasing_in_t() {
        let mut prev = 0.0;
        for i in 1..=50 {
            let y = reference_quadrature_ex1(i as f64 / 50.0).unwrap();
            assert!(y > prev);
            prev = y;
        }
    }

    #[test]
    fn gauss_kronrod_integrates_smooth_functions() {
        let v = integrate(|x| x.exp(), 0.0, 2.0, 1e-13).unwrap();
        assert!((v - (2.0f64.exp() - 1.0)).abs() < 1e-12);
    }
}
