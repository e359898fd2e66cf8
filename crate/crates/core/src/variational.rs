//! The discrete fractional variational problem
//!
//! ```text
//! F(y) = Σ_{t ∈ T^κ} h · L(t, y(σ(t)), _aΔ_h^α y(t), _hΔ_b^β y(t)),
//! ```
//!
//! with optional pinned endpoints, its Euler–Lagrange residual, the natural
//! boundary conditions for free endpoints and the fractional Legendre
//! expression.

use thiserror::Error;

use crate::expr::{EvalError, Lagrangian, LagrangianJet};
use crate::operators::{self, FractionalOrders, GridFunction, GridSpec, OperatorError};
use crate::special::{self, h_factorial_units};
use crate::sum::csum;

/// Legendre values at or above `-TOL_LEGENDRE` count as nonnegative.
pub const TOL_LEGENDRE: f64 = 1e-9;

/// Max-abs Euler–Lagrange residual accepted for an extremal.
pub const TOL_RESIDUAL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VariationalError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("lagrangian at t = {t}: {source}")]
    Lagrangian { t: f64, source: EvalError },
    #[error("grid needs at least 2 intervals, got {0}")]
    TooFewIntervals(usize),
    #[error("trajectory has {got} values, grid has {expected} points")]
    LengthMismatch { expected: usize, got: usize },
    #[error("{side} endpoint is pinned, so it has no natural boundary condition")]
    PinnedEndpoint { side: &'static str },
    #[error("{side} endpoint value {got} differs from the pinned value {expected}")]
    BoundaryMismatch { side: &'static str, expected: f64, got: f64 },
    #[error("trajectory lives on a different grid")]
    GridMismatch,
}

impl From<special::SpecialError> for VariationalError {
    fn from(e: special::SpecialError) -> Self {
        VariationalError::Operator(OperatorError::from(e))
    }
}

pub type Result<T, E = VariationalError> = std::result::Result<T, E>;

/// A fully specified problem: grid, orders, Lagrangian and boundary data.
#[derive(Debug, Clone)]
pub struct VariationalProblem {
    grid: GridSpec,
    orders: FractionalOrders,
    lagrangian: Lagrangian,
    left_bc: Option<f64>,
    right_bc: Option<f64>,
}

/// Values of `y` on all of `T`, endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    values: GridFunction,
}

impl Trajectory {
    pub fn new(grid: &GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.k() + 1 {
            return Err(VariationalError::LengthMismatch { expected: grid.k() + 1, got: values.len() });
        }
        Ok(Self { values: GridFunction::on_grid(grid, values)? })
    }

    pub fn from_fn(grid: &GridSpec, f: impl Fn(f64) -> f64) -> Self {
        Self { values: GridFunction::from_fn(grid, f) }
    }

    pub fn function(&self) -> &GridFunction {
        &self.values
    }

    pub fn values(&self) -> &[f64] {
        self.values.values()
    }

    /// Values strictly between the endpoints.
    pub fn interior(&self) -> &[f64] {
        let v = self.values.values();
        &v[1..v.len() - 1]
    }

    pub fn points(&self) -> Vec<f64> {
        self.values.points()
    }
}

/// A converged extremal with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalCandidate {
    pub trajectory: Trajectory,
    pub functional_value: f64,
    /// Max-abs Euler–Lagrange residual over `T^{κ²}`.
    pub el_residual_norm: f64,
    /// Legendre left-hand side at each point of `T^{κ²}`.
    pub legendre_values: Vec<f64>,
    pub legendre_verified: bool,
}

/// `L` and its partials along a trajectory, one jet per point of `T^κ`.
struct Along {
    jets: Vec<LagrangianJet>,
}

impl Along {
    fn column(&self, f: impl Fn(&LagrangianJet) -> f64) -> Vec<f64> {
        self.jets.iter().map(f).collect()
    }
}

impl VariationalProblem {
    pub fn new(
        grid: GridSpec,
        orders: FractionalOrders,
        lagrangian: Lagrangian,
        left_bc: Option<f64>,
        right_bc: Option<f64>,
    ) -> Result<Self> {
        if grid.k() < 2 {
            return Err(VariationalError::TooFewIntervals(grid.k()));
        }
        Ok(Self { grid, orders, lagrangian, left_bc, right_bc })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn orders(&self) -> &FractionalOrders {
        &self.orders
    }

    pub fn lagrangian(&self) -> &Lagrangian {
        &self.lagrangian
    }

    pub fn left_bc(&self) -> Option<f64> {
        self.left_bc
    }

    pub fn right_bc(&self) -> Option<f64> {
        self.right_bc
    }

    /// Same problem with a different Lagrangian.
    pub fn with_lagrangian(&self, lagrangian: Lagrangian) -> Self {
        Self { lagrangian, ..self.clone() }
    }

    /// Builds a trajectory and checks pinned endpoints match exactly.
    pub fn trajectory(&self, values: Vec<f64>) -> Result<Trajectory> {
        let y = Trajectory::new(&self.grid, values)?;
        self.check(&y)?;
        Ok(y)
    }

    /// Number of unknowns: interior values plus free endpoints.
    pub fn unknown_count(&self) -> usize {
        self.grid.k() - 1 + usize::from(self.left_bc.is_none()) + usize::from(self.right_bc.is_none())
    }

    /// Trajectory from the unknown vector `[y(a)?, interior.., y(b)?]`.
    pub fn trajectory_from_unknowns(&self, x: &[f64]) -> Result<Trajectory> {
        if x.len() != self.unknown_count() {
            return Err(VariationalError::LengthMismatch { expected: self.unknown_count(), got: x.len() });
        }
        let mut values = Vec::with_capacity(self.grid.k() + 1);
        let mut rest = x;
        match self.left_bc {
            Some(a) => values.push(a),
            None => {
                values.push(rest[0]);
                rest = &rest[1..];
            }
        }
        let interior = self.grid.k() - 1;
        values.extend_from_slice(&rest[..interior]);
        values.push(self.right_bc.unwrap_or_else(|| rest[interior]));
        Trajectory::new(&self.grid, values)
    }

    /// Inverse of [`trajectory_from_unknowns`](Self::trajectory_from_unknowns).
    pub fn unknowns_of(&self, y: &Trajectory) -> Vec<f64> {
        let v = y.values();
        let lo = usize::from(self.left_bc.is_some());
        let hi = v.len() - usize::from(self.right_bc.is_some());
        v[lo..hi].to_vec()
    }

    /// Euler–Lagrange residuals followed by the natural boundary residuals
    /// of free endpoints (left first). Length equals
    /// [`unknown_count`](Self::unknown_count).
    pub fn stationarity_residual(&self, y: &Trajectory) -> Result<Vec<f64>> {
        self.check(y)?;
        let along = self.along(y)?;
        let mut r = self.el_from(&along)?.into_values();
        if self.left_bc.is_none() {
            r.insert(0, self.nbc_left_from(&along)?);
        }
        if self.right_bc.is_none() {
            r.push(self.nbc_right_from(&along)?);
        }
        Ok(r)
    }

    fn check(&self, y: &Trajectory) -> Result<()> {
        let f = y.function();
        if f.len() != self.grid.k() + 1 {
            return Err(VariationalError::LengthMismatch { expected: self.grid.k() + 1, got: f.len() });
        }
        if f.base() != self.grid.a() || f.h() != self.grid.h() {
            return Err(VariationalError::GridMismatch);
        }
        let v = f.values();
        for (side, bc, got) in [("left", self.left_bc, v[0]), ("right", self.right_bc, v[v.len() - 1])] {
            if let Some(expected) = bc {
                if got != expected {
                    return Err(VariationalError::BoundaryMismatch { side, expected, got });
                }
            }
        }
        Ok(())
    }

    /// `(y^σ, _aΔ_h^α y, _hΔ_b^β y)` on `T^κ`.
    fn states(&self, y: &Trajectory) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let f = y.function();
        let u = f.values()[1..].to_vec();
        let v = operators::left_fractional_difference(f, self.orders.alpha())?.into_values();
        let w = operators::right_fractional_difference(f, self.orders.beta())?.into_values();
        Ok((u, v, w))
    }

    fn along(&self, y: &Trajectory) -> Result<Along> {
        let (u, v, w) = self.states(y)?;
        let jets = (0..u.len())
            .map(|i| {
                let t = self.grid.point(i);
                self.lagrangian
                    .eval_jet(t, u[i], v[i], w[i])
                    .map_err(|source| VariationalError::Lagrangian { t, source })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Along { jets })
    }

    fn on_kappa(&self, values: Vec<f64>) -> Result<GridFunction> {
        Ok(GridFunction::new(self.grid.a(), self.grid.h(), 0.0, values)?)
    }

    /// `Σ_{t ∈ T^κ} h L(t, y^σ(t), _aΔ_h^α y(t), _hΔ_b^β y(t))`.
    pub fn evaluate_functional(&self, y: &Trajectory) -> Result<f64> {
        self.check(y)?;
        let (u, v, w) = self.states(y)?;
        let h = self.grid.h();
        let terms = (0..u.len())
            .map(|i| {
                let t = self.grid.point(i);
                self.lagrangian
                    .eval(t, u[i], v[i], w[i])
                    .map(|l| h * l)
                    .map_err(|source| VariationalError::Lagrangian { t, source })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(csum(terms))
    }

    /// `L_u + _hΔ_{ρ(b)}^α L_v + _aΔ_h^β L_w` on `T^{κ²}`.
    pub fn euler_lagrange_residual(&self, y: &Trajectory) -> Result<GridFunction> {
        self.check(y)?;
        self.el_from(&self.along(y)?)
    }

    fn el_from(&self, along: &Along) -> Result<GridFunction> {
        let lu = along.column(LagrangianJet::l_u);
        let lv = self.on_kappa(along.column(LagrangianJet::l_v))?;
        let lw = self.on_kappa(along.column(LagrangianJet::l_w))?;
        let right = operators::right_fractional_difference(&lv, self.orders.alpha())?;
        let left = operators::left_fractional_difference(&lw, self.orders.beta())?;
        let values = right
            .values()
            .iter()
            .zip(left.values())
            .zip(&lu)
            .map(|((r, l), u)| u + r + l)
            .collect();
        self.on_kappa(values)
    }

    /// Stationarity of `F` with respect to a free `y(a)`.
    pub fn natural_bc_left_residual(&self, y: &Trajectory) -> Result<f64> {
        if self.left_bc.is_some() {
            return Err(VariationalError::PinnedEndpoint { side: "left" });
        }
        self.check(y)?;
        self.nbc_left_from(&self.along(y)?)
    }

    fn nbc_left_from(&self, along: &Along) -> Result<f64> {
        let h = self.grid.h();
        let gamma = self.orders.gamma_order();
        let nu = self.orders.nu_order();
        let lv = along.column(LagrangianJet::l_v);
        let lw0 = along.jets[0].l_w();
        let mut r = -h.powf(gamma) * lv[0] + h.powf(nu) * lw0;
        if gamma > 0.0 {
            let c = 1.0 / special::gamma(gamma)?;
            let mut terms = Vec::with_capacity(2 * lv.len());
            for (i, l) in lv.iter().enumerate() {
                terms.push(c * h_factorial_units(i as f64 + gamma, gamma - 1.0, h)? * l * h);
                if i >= 1 {
                    terms.push(-c * h_factorial_units((i - 1) as f64 + gamma, gamma - 1.0, h)? * l * h);
                }
            }
            r += csum(terms);
        }
        Ok(r)
    }

    /// Stationarity of `F` with respect to a free `y(b)`.
    pub fn natural_bc_right_residual(&self, y: &Trajectory) -> Result<f64> {
        if self.right_bc.is_some() {
            return Err(VariationalError::PinnedEndpoint { side: "right" });
        }
        self.check(y)?;
        self.nbc_right_from(&self.along(y)?)
    }

    fn nbc_right_from(&self, along: &Along) -> Result<f64> {
        let h = self.grid.h();
        let gamma = self.orders.gamma_order();
        let nu = self.orders.nu_order();
        let last = along.jets[along.jets.len() - 1];
        let mut r = h * last.l_u() + h.powf(gamma) * last.l_v() - h.powf(nu) * last.l_w();
        if nu > 0.0 {
            let lw = along.column(LagrangianJet::l_w);
            let n = lw.len();
            let c = 1.0 / special::gamma(nu)?;
            let mut terms = Vec::with_capacity(2 * n);
            for (i, l) in lw.iter().enumerate() {
                // (b + νh - σ(t)) / h and (ρ(b) + νh - σ(t)) / h for t = a + ih
                terms.push(c * h_factorial_units((n - 1 - i) as f64 + nu, nu - 1.0, h)? * l * h);
                if i + 1 < n {
                    terms.push(-c * h_factorial_units((n - 2 - i) as f64 + nu, nu - 1.0, h)? * l * h);
                }
            }
            r += csum(terms);
        }
        Ok(r)
    }

    /// Left-hand side of the fractional Legendre condition on `T^{κ²}`.
    pub fn legendre_lhs(&self, y: &Trajectory) -> Result<GridFunction> {
        self.check(y)?;
        let along = self.along(y)?;
        let jets = &along.jets;
        let h = self.grid.h();
        let g = self.orders.gamma_order();
        let nu = self.orders.nu_order();
        let n = jets.len();
        let cg = if g > 0.0 { g * (g - 1.0) / special::gamma(g + 1.0)? } else { 0.0 };
        let cn = if nu > 0.0 { nu * (1.0 - nu) / special::gamma(nu + 1.0)? } else { 0.0 };
        let h4 = h.powi(4);
        let mut out = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            let j0 = &jets[i];
            let j1 = &jets[i + 1];
            let mut terms = vec![
                h * h * j0.l_uu(),
                2.0 * h.powf(g + 1.0) * j0.l_uv(),
                2.0 * h.powf(nu + 1.0) * (nu - 1.0) * j0.l_uw(),
                h.powf(2.0 * g) * j0.l_vv(),
                2.0 * h.powf(g + nu) * (nu - 1.0) * j0.l_vw(),
                (nu - 1.0).powi(2) * h.powf(2.0 * nu) * j0.l_ww(),
                (g - 1.0).powi(2) * h.powf(2.0 * g) * j1.l_vv(),
                2.0 * (g - 1.0) * h.powf(g + nu) * j1.l_vw(),
                h.powf(2.0 * nu) * j1.l_ww(),
            ];
            if cg != 0.0 {
                for (j, jet) in jets.iter().enumerate().skip(i + 2) {
                    let kernel = cg * h_factorial_units((j - i - 2) as f64 + g, g - 2.0, h)?;
                    terms.push(h4 * jet.l_vv() * kernel * kernel);
                }
            }
            if cn != 0.0 {
                for (j, jet) in jets.iter().enumerate().take(i) {
                    let kernel = cn * h_factorial_units((i - j - 1) as f64 + nu, nu - 2.0, h)?;
                    terms.push(h4 * jet.l_ww() * kernel * kernel);
                }
            }
            out.push(csum(terms));
        }
        self.on_kappa(out)
    }

    /// `max|f^σ| + max|_aΔ_h^α f| + max|_hΔ_b^β f|` over `T^κ`.
    pub fn trajectory_norm(&self, f: &Trajectory) -> Result<f64> {
        let (u, v, w) = self.states(f)?;
        let max_abs = |x: &[f64]| x.iter().fold(0.0f64, |m, z| m.max(z.abs()));
        Ok(max_abs(&u) + max_abs(&v) + max_abs(&w))
    }

    /// Evaluates `y` into a candidate with all diagnostics.
    pub fn candidate(&self, y: Trajectory, tol_legendre: f64) -> Result<ExtremalCandidate> {
        let functional_value = self.evaluate_functional(&y)?;
        let el = self.euler_lagrange_residual(&y)?;
        let el_residual_norm = el.values().iter().fold(0.0f64, |m, r| m.max(r.abs()));
        let legendre_values = self.legendre_lhs(&y)?.into_values();
        let legendre_verified = legendre_values.iter().all(|&x| x >= -tol_legendre);
        Ok(ExtremalCandidate { trajectory: y, functional_value, el_residual_norm, legendre_values, legendre_verified })
    }
}

/// `|LHS - RHS|` of the fractional summation-by-parts formula
///
/// ```text
/// ∫_a^b f _aΔ_h^α g Δt = h^γ f(ρ(b)) g(b) - h^γ f(a) g(a)
///     + ∫_a^{ρ(b)} _hΔ_{ρ(b)}^α f(t) g^σ(t) Δt
///     + γ/Γ(γ+1) g(a) (∫_a^b (t+γh-a)_h^{(γ-1)} f Δt - ∫_{σ(a)}^b (t+γh-σ(a))_h^{(γ-1)} f Δt)
/// ```
///
/// with `f` on `T^κ` and `g` on `T`.
pub fn summation_by_parts_residual(f: &GridFunction, g: &GridFunction, alpha: f64) -> Result<f64> {
    if f.len() + 1 != g.len() {
        return Err(VariationalError::LengthMismatch { expected: g.len().saturating_sub(1), got: f.len() });
    }
    let h = g.h();
    let gamma = 1.0 - alpha;
    let fv = f.values();
    let gv = g.values();
    let n = fv.len();
    let dg = operators::left_fractional_difference(g, alpha)?;
    let lhs = csum(fv.iter().zip(dg.values()).map(|(a, b)| a * b * h));
    let mut rhs = vec![h.powf(gamma) * fv[n - 1] * gv[n], -h.powf(gamma) * fv[0] * gv[0]];
    if n >= 2 {
        let df = operators::right_fractional_difference(f, alpha)?;
        rhs.extend(df.values().iter().enumerate().map(|(i, d)| d * gv[i + 1] * h));
    }
    if gamma > 0.0 {
        let c = gv[0] / special::gamma(gamma)?;
        for (i, x) in fv.iter().enumerate() {
            rhs.push(c * h_factorial_units(i as f64 + gamma, gamma - 1.0, h)? * x * h);
            if i >= 1 {
                rhs.push(-c * h_factorial_units((i - 1) as f64 + gamma, gamma - 1.0, h)? * x * h);
            }
        }
    }
    Ok((lhs - csum(rhs)).abs())
}
