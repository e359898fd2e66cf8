//! Grids on `(hZ)_a` and the discrete operators that live on them.
//!
//! A [`GridFunction`] carries its own domain: a base point `a`, a step `h`,
//! a shift measured in multiples of `h`, and one value per point. Domain
//! point `i` is `a + (i + shift) h`. The fractional sums change domains
//! (the left sum of order `ν` lives on `{t + νh}`, the right sum on
//! `{t - νh}`), and the shift makes those domains explicit.
//!
//! Operators always interpret an unshifted function as defined on
//! `[a, b] ∩ (hZ)_a` with `a` its first and `b` its last point. Restricting
//! a function to `T^κ` and applying an operator therefore yields the
//! operator with right endpoint `ρ(b)`.

use thiserror::Error;

use crate::special::{self, SpecialError};
use crate::sum::{csum, CompensatedSum};

/// Relative tolerance used to decide whether a real lies on a grid.
pub const GRID_TOLERANCE: f64 = 1e-9;

/// Errors raised by grid construction and the discrete operators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    /// A gamma-function failure while evaluating a kernel.
    #[error(transparent)]
    Special(#[from] SpecialError),
    /// Step size not positive and finite.
    #[error("step size must be positive and finite, got {0}")]
    InvalidStep(f64),
    /// Grid with too few subintervals.
    #[error("grid needs at least {min} subintervals, got {got}")]
    TooFewIntervals {
        /// Minimum accepted.
        min: usize,
        /// Requested.
        got: usize,
    },
    /// `(b - a) / h` is not an integer.
    #[error("(b - a)/h = {0} is not a positive integer")]
    NotIntegralSpan(f64),
    /// Domain too small for the requested operation.
    #[error("operation needs at least {min} points, domain has {got}")]
    TooShort {
        /// Minimum accepted.
        min: usize,
        /// Actual length.
        got: usize,
    },
    /// Value count does not match the domain.
    #[error("expected {expected} values, got {got}")]
    LengthMismatch {
        /// Required length.
        expected: usize,
        /// Supplied length.
        got: usize,
    },
    /// A fractional order outside its admissible range.
    #[error("order {value} outside {range}")]
    InvalidOrder {
        /// Supplied order.
        value: f64,
        /// Human-readable admissible range.
        range: &'static str,
    },
    /// The operation needs a function defined on an unshifted grid.
    #[error("operation requires an unshifted domain, got shift {0}")]
    ShiftedDomain(f64),
    /// A point that is not on the domain of the function.
    #[error("{0} is not a point of the domain")]
    NotOnGrid(f64),
    /// Integration bounds in the wrong order.
    #[error("lower bound {lo} exceeds upper bound {hi}")]
    InvertedRange {
        /// Lower bound.
        lo: f64,
        /// Upper bound.
        hi: f64,
    },
}

type Result<T> = std::result::Result<T, OperatorError>;

fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(OperatorError::InvalidStep(h))
    }
}

/// The discrete interval `T = [a, b] ∩ (hZ)_a` with `b = a + k h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    a: f64,
    h: f64,
    k: usize,
}

impl GridSpec {
    /// Grid `{a, a + h, ..., a + k h}`; requires `k >= 2` so `T^{κ²}` is
    /// nonempty.
    pub fn new(a: f64, h: f64, k: usize) -> Result<Self> {
        check_step(h)?;
        if !a.is_finite() {
            return Err(OperatorError::NotOnGrid(a));
        }
        if k < 2 {
            return Err(OperatorError::TooFewIntervals { min: 2, got: k });
        }
        Ok(Self { a, h, k })
    }

    /// Grid from its endpoints. `(b - a)/h` must be within
    /// [`GRID_TOLERANCE`] of a positive integer; it is then snapped.
    pub fn from_endpoints(a: f64, b: f64, h: f64) -> Result<Self> {
        check_step(h)?;
        let span = (b - a) / h;
        let k = span.round();
        if !span.is_finite() || k < 1.0 || (span - k).abs() > GRID_TOLERANCE {
            return Err(OperatorError::NotIntegralSpan(span));
        }
        Self::new(a, h, k as usize)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of subintervals.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn b(&self) -> f64 {
        self.point(self.k)
    }

    /// Grid point `a + i h`.
    pub fn point(&self, i: usize) -> f64 {
        self.a + i as f64 * self.h
    }

    /// Points of `T^{κ^n}`: the grid with its last `n` points dropped.
    pub fn truncated_points(&self, n: usize) -> Vec<f64> {
        let last = self.k.saturating_sub(n);
        (0..=last).map(|i| self.point(i)).collect()
    }

    /// All points of `T`.
    pub fn points(&self) -> Vec<f64> {
        self.truncated_points(0)
    }

    /// Forward jump `σ(t) = t + h`.
    pub fn sigma(&self, t: f64) -> f64 {
        t + self.h
    }

    /// Backward jump `ρ(t) = t - h`.
    pub fn rho(&self, t: f64) -> f64 {
        t - self.h
    }

    /// Graininess, constant on this time scale.
    pub fn mu(&self) -> f64 {
        self.h
    }

    /// Index of `t` on the grid, if `t` is a grid point.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let z = (t - self.a) / self.h;
        let r = z.round();
        if (z - r).abs() <= GRID_TOLERANCE * (1.0 + r.abs()) && r >= 0.0 && r as usize <= self.k {
            Some(r as usize)
        } else {
            None
        }
    }
}

/// Fractional orders `α, β ∈ (0, 1]` of the left and right differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalOrders {
    alpha: f64,
    beta: f64,
}

impl FractionalOrders {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        check_difference_order(alpha)?;
        check_difference_order(beta)?;
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `γ = 1 - α`
    pub fn gamma_order(&self) -> f64 {
        1.0 - self.alpha
    }

    /// `ν = 1 - β`
    pub fn nu_order(&self) -> f64 {
        1.0 - self.beta
    }
}

fn check_difference_order(order: f64) -> Result<()> {
    if order > 0.0 && order <= 1.0 {
        Ok(())
    } else {
        Err(OperatorError::InvalidOrder { value: order, range: "(0, 1]" })
    }
}

/// Real values sampled on a (possibly shifted) slice of `(hZ)_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    a: f64,
    h: f64,
    shift: f64,
    values: Vec<f64>,
}

impl GridFunction {
    /// Function with domain points `a + (i + shift) h`, `i = 0..values.len()`.
    pub fn new(a: f64, h: f64, shift: f64, values: Vec<f64>) -> Result<Self> {
        check_step(h)?;
        if values.is_empty() {
            return Err(OperatorError::TooShort { min: 1, got: 0 });
        }
        Ok(Self { a, h, shift, values })
    }

    /// Function on all of `T`.
    pub fn on_grid(grid: &GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.k() + 1 {
            return Err(OperatorError::LengthMismatch { expected: grid.k() + 1, got: values.len() });
        }
        Self::new(grid.a(), grid.h(), 0.0, values)
    }

    /// Samples `f` at every point of `T`.
    pub fn from_fn(grid: &GridSpec, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.points().into_iter().map(f).collect();
        Self { a: grid.a(), h: grid.h(), shift: 0.0, values }
    }

    /// Base point `a` of the underlying time scale.
    pub fn base(&self) -> f64 {
        self.a
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Shift of the domain in multiples of `h`.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Shift of the domain in time units (`±νh` for fractional sums).
    pub fn offset(&self) -> f64 {
        self.shift * self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Domain point `i`.
    pub fn point(&self, i: usize) -> f64 {
        self.a + (i as f64 + self.shift) * self.h
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Index of domain point `t`.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let z = (t - self.a) / self.h - self.shift;
        let r = z.round();
        if (z - r).abs() <= GRID_TOLERANCE * (1.0 + r.abs()) && r >= 0.0 && (r as usize) < self.len() {
            Some(r as usize)
        } else {
            None
        }
    }

    /// Value at domain point `t`.
    pub fn at(&self, t: f64) -> Result<f64> {
        self.index_of(t).map(|i| self.values[i]).ok_or(OperatorError::NotOnGrid(t))
    }

    /// The same function with its last `n` points dropped (`T → T^{κ^n}`).
    pub fn truncated(&self, n: usize) -> Result<Self> {
        let len = self.len();
        if n >= len {
            return Err(OperatorError::TooShort { min: n + 1, got: len });
        }
        Ok(self.with_values(self.shift, self.values[..len - n].to_vec()))
    }

    fn with_values(&self, shift: f64, values: Vec<f64>) -> Self {
        Self { a: self.a, h: self.h, shift, values }
    }

    fn require_unshifted(&self) -> Result<()> {
        if self.shift == 0.0 {
            Ok(())
        } else {
            Err(OperatorError::ShiftedDomain(self.shift))
        }
    }

    /// Pointwise linear combination `c1 self + c2 other` on the same domain.
    pub fn combine(&self, c1: f64, other: &Self, c2: f64) -> Result<Self> {
        if self.len() != other.len() {
            return Err(OperatorError::LengthMismatch { expected: self.len(), got: other.len() });
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| c1 * x + c2 * y).collect();
        Ok(self.with_values(self.shift, values))
    }
}

/// Forward h-difference `(f(t + h) - f(t)) / h` on the κ-truncated domain.
pub fn delta_derivative(f: &GridFunction) -> Result<GridFunction> {
    if f.len() < 2 {
        return Err(OperatorError::TooShort { min: 2, got: f.len() });
    }
    let h = f.h;
    let values = f.values.windows(2).map(|w| (w[1] - w[0]) / h).collect();
    Ok(f.with_values(f.shift, values))
}

/// h-integral `∫_lo^hi f Δt = Σ_{t ∈ [lo, hi)} f(t) h`; zero when `lo = hi`.
pub fn h_integral(f: &GridFunction, lo: f64, hi: f64) -> Result<f64> {
    let ilo = f.index_of(lo).ok_or(OperatorError::NotOnGrid(lo))?;
    let ihi = f.index_of(hi).ok_or(OperatorError::NotOnGrid(hi))?;
    if ilo > ihi {
        return Err(OperatorError::InvertedRange { lo, hi });
    }
    Ok(csum(f.values[ilo..ihi].iter().map(|v| v * f.h)))
}

/// Weights `w_m = h (m - 1 + ν)_h^{(ν-1)} / Γ(ν)`, `m = 0..n`, of the
/// fractional h-sum of order `ν` at lag `m`.
pub fn sum_weights(nu: f64, n: usize, h: f64) -> Result<Vec<f64>> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(OperatorError::InvalidOrder { value: nu, range: "(0, ∞)" });
    }
    let inv_gamma = 1.0 / special::gamma(nu)?;
    (0..n)
        .map(|m| Ok(special::h_factorial_units(m as f64 - 1.0 + nu, nu - 1.0, h)? * inv_gamma * h))
        .collect()
}

/// Source of fractional-sum weights. The default is [`sum_weights`]; the
/// self-check command swaps in a perturbed one to prove it can detect
/// errors.
pub(crate) type WeightSource = dyn Fn(f64, usize, f64) -> Result<Vec<f64>> + Sync;

fn left_sum_with(f: &GridFunction, nu: f64, weights: &WeightSource) -> Result<GridFunction> {
    f.require_unshifted()?;
    let n = f.len();
    let w = weights(nu, n, f.h)?;
    let values = (0..n)
        .map(|i| {
            let mut acc = CompensatedSum::new();
            for j in 0..=i {
                acc.add(w[i - j] * f.values[j]);
            }
            acc.value()
        })
        .collect();
    Ok(f.with_values(nu, values))
}

fn right_sum_with(f: &GridFunction, nu: f64, weights: &WeightSource) -> Result<GridFunction> {
    f.require_unshifted()?;
    let n = f.len();
    let w = weights(nu, n, f.h)?;
    let values = (0..n)
        .map(|i| {
            let mut acc = CompensatedSum::new();
            for j in i..n {
                acc.add(w[j - i] * f.values[j]);
            }
            acc.value()
        })
        .collect();
    Ok(f.with_values(-nu, values))
}

/// Left fractional h-sum of order `ν > 0`:
/// `_aΔ_h^{-ν} f(t) = (1/Γ(ν)) Σ_{k=a/h}^{t/h-ν} (t - σ(kh))_h^{(ν-1)} f(kh) h`,
/// returned on `{t + νh : t ∈ T}`.
pub fn left_fractional_sum(f: &GridFunction, nu: f64) -> Result<GridFunction> {
    left_sum_with(f, nu, &sum_weights)
}

/// Right fractional h-sum of order `ν > 0`:
/// `_hΔ_b^{-ν} f(t) = (1/Γ(ν)) Σ_{k=t/h+ν}^{b/h} (kh - σ(t))_h^{(ν-1)} f(kh) h`,
/// returned on `{t - νh : t ∈ T}`.
pub fn right_fractional_sum(f: &GridFunction, nu: f64) -> Result<GridFunction> {
    right_sum_with(f, nu, &sum_weights)
}

/// `t ↦ _aΔ_h^{-ν} f(t + νh)` on `T`, with order 0 meaning the identity.
fn left_sum_aligned(f: &GridFunction, nu: f64, weights: &WeightSource) -> Result<Vec<f64>> {
    if nu == 0.0 {
        f.require_unshifted()?;
        Ok(f.values.clone())
    } else {
        Ok(left_sum_with(f, nu, weights)?.values)
    }
}

/// `t ↦ _hΔ_b^{-ν} f(t - νh)` on `T`, with order 0 meaning the identity.
fn right_sum_aligned(f: &GridFunction, nu: f64, weights: &WeightSource) -> Result<Vec<f64>> {
    if nu == 0.0 {
        f.require_unshifted()?;
        Ok(f.values.clone())
    } else {
        Ok(right_sum_with(f, nu, weights)?.values)
    }
}

fn forward_difference(values: &[f64], h: f64) -> Vec<f64> {
    values.windows(2).map(|w| (w[1] - w[0]) / h).collect()
}

/// Left fractional difference of order `α ∈ (0, 1]`,
/// `_aΔ_h^α f(t) = (_aΔ_h^{-γ} f(t + γh))^Δ` with `γ = 1 - α`, on `T^κ`.
pub fn left_fractional_difference(f: &GridFunction, alpha: f64) -> Result<GridFunction> {
    check_difference_order(alpha)?;
    if f.len() < 2 {
        return Err(OperatorError::TooShort { min: 2, got: f.len() });
    }
    let g = left_sum_aligned(f, 1.0 - alpha, &sum_weights)?;
    Ok(f.with_values(0.0, forward_difference(&g, f.h)))
}

/// Right fractional difference of order `β ∈ (0, 1]`,
/// `_hΔ_b^β f(t) = -(_hΔ_b^{-ν} f(t - νh))^Δ` with `ν = 1 - β`, on `T^κ`.
pub fn right_fractional_difference(f: &GridFunction, beta: f64) -> Result<GridFunction> {
    check_difference_order(beta)?;
    if f.len() < 2 {
        return Err(OperatorError::TooShort { min: 2, got: f.len() });
    }
    let q = right_sum_aligned(f, 1.0 - beta, &sum_weights)?;
    let values = forward_difference(&q, f.h).into_iter().map(|d| -d).collect();
    Ok(f.with_values(0.0, values))
}

fn check_shift_order(nu: f64) -> Result<()> {
    if nu >= 0.0 && nu.is_finite() {
        Ok(())
    } else {
        Err(OperatorError::InvalidOrder { value: nu, range: "[0, ∞)" })
    }
}

fn max_abs_diff(lhs: &[f64], rhs: &[f64]) -> f64 {
    lhs.iter().zip(rhs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Max over `t ∈ T^κ` of the defect in
/// `_aΔ_h^{-ν} f^Δ(t + νh) = (_aΔ_h^{-ν} f(t + νh))^Δ - ν/Γ(ν+1) (t + νh - a)_h^{(ν-1)} f(a)`.
pub fn left_shift_identity_residual(f: &GridFunction, nu: f64) -> Result<f64> {
    left_shift_identity_residual_with(f, nu, &sum_weights)
}

pub(crate) fn left_shift_identity_residual_with(
    f: &GridFunction,
    nu: f64,
    weights: &WeightSource,
) -> Result<f64> {
    check_shift_order(nu)?;
    f.require_unshifted()?;
    let h = f.h;
    let df = delta_derivative(f)?;
    let lhs = left_sum_aligned(&df, nu, weights)?;
    let summed = forward_difference(&left_sum_aligned(f, nu, weights)?, h);
    let coef = if nu == 0.0 { 0.0 } else { 1.0 / special::gamma(nu)? };
    let rhs = summed
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let boundary = if coef == 0.0 {
                0.0
            } else {
                coef * special::h_factorial_units(i as f64 + nu, nu - 1.0, h)? * f.values[0]
            };
            Ok(d - boundary)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(max_abs_diff(&lhs, &rhs))
}

/// Max over `t ∈ T^κ` of the defect in
/// `_hΔ_{ρ(b)}^{-ν} f^Δ(t - νh) = ν/Γ(ν+1) (b + νh - σ(t))_h^{(ν-1)} f(b) + (_hΔ_b^{-ν} f(t - νh))^Δ`.
pub fn right_shift_identity_residual(f: &GridFunction, nu: f64) -> Result<f64> {
    right_shift_identity_residual_with(f, nu, &sum_weights)
}

pub(crate) fn right_shift_identity_residual_with(
    f: &GridFunction,
    nu: f64,
    weights: &WeightSource,
) -> Result<f64> {
    check_shift_order(nu)?;
    f.require_unshifted()?;
    let h = f.h;
    let k = f.len() - 1;
    let df = delta_derivative(f)?;
    let lhs = right_sum_aligned(&df, nu, weights)?;
    let summed = forward_difference(&right_sum_aligned(f, nu, weights)?, h);
    let coef = if nu == 0.0 { 0.0 } else { 1.0 / special::gamma(nu)? };
    let rhs = summed
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let boundary = if coef == 0.0 {
                0.0
            } else {
                let lag = (k - i - 1) as f64 + nu;
                coef * special::h_factorial_units(lag, nu - 1.0, h)? * f.values[k]
            };
            Ok(boundary + d)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(max_abs_diff(&lhs, &rhs))
}

/// `|LHS - RHS|` of the exchange identity
/// `∫_a^b f(t) [∫_a^t g(t,s) k(s) Δs] Δt = ∫_a^{ρ(b)} k(t) [∫_{σ(t)}^b g(s,t) f(s) Δs] Δt`
/// with `f` on `T^κ` and `k` on `T^{κ²}`.
pub fn exchange_lemma_residual(
    f: &GridFunction,
    k: &GridFunction,
    g: impl Fn(f64, f64) -> f64,
) -> Result<f64> {
    if k.len() + 1 != f.len() {
        return Err(OperatorError::LengthMismatch { expected: f.len().saturating_sub(1), got: k.len() });
    }
    let h = f.h;
    let lhs = csum((0..f.len()).map(|i| {
        let inner = csum((0..i).map(|j| g(f.point(i), f.point(j)) * k.values[j] * h));
        f.values[i] * inner * h
    }));
    let rhs = csum((0..k.len()).map(|i| {
        let inner = csum((i + 1..f.len()).map(|j| g(f.point(j), f.point(i)) * f.values[j] * h));
        k.values[i] * inner * h
    }));
    Ok((lhs - rhs).abs())
}
