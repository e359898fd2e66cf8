//! Randomised residual checks of the identities the solver relies on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::Lagrangian;
use crate::operators::{self, FractionalOrders, GridFunction, GridSpec, OperatorError, WeightSource};
use crate::variational::{summation_by_parts_residual, Trajectory, VariationalError, VariationalProblem};

/// Maximum observed defect of one identity over all instances.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub max_residual: f64,
    pub tolerance: f64,
    pub instances: usize,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.max_residual < self.tolerance
    }
}

const STEPS: [f64; 3] = [0.1, 0.25, 1.0];

const LAGRANGIANS: [&str; 4] = [
    "0.5*v^2 + u*w + sin(u)*v + 0.3*w^2*v + t*u^2",
    "v^3 + w^2",
    "exp(0.2*u)*v^2 - u + cos(w)*v",
    "u^2*v + v*w + w^3",
];

fn random_grid_fn(rng: &mut ChaCha8Rng, a: f64, h: f64, len: usize) -> GridFunction {
    GridFunction::new(a, h, 0.0, (0..len).map(|_| rng.random_range(-1.0..1.0)).collect())
        .expect("positive length and step")
}

/// Perturbs every second fractional-sum weight by one part in a million.
fn corrupted_weights(nu: f64, n: usize, h: f64) -> Result<Vec<f64>, OperatorError> {
    let mut w = operators::sum_weights(nu, n, h)?;
    for x in w.iter_mut().skip(1).step_by(2) {
        *x *= 1.0 + 1e-6;
    }
    Ok(w)
}

fn random_problem(rng: &mut ChaCha8Rng) -> (VariationalProblem, Trajectory) {
    let h = STEPS[rng.random_range(0..STEPS.len())];
    let k = rng.random_range(2..=8);
    let grid = GridSpec::new(rng.random_range(-1.0..1.0), h, k).expect("valid grid");
    let orders = FractionalOrders::new(rng.random_range(0.05..=1.0), rng.random_range(0.05..=1.0)).expect("valid orders");
    let l = Lagrangian::parse(LAGRANGIANS[rng.random_range(0..LAGRANGIANS.len())]).expect("valid lagrangian");
    let values: Vec<f64> = (0..=k).map(|_| rng.random_range(-1.5..1.5)).collect();
    let p = VariationalProblem::new(grid, orders, l, None, None).expect("k >= 2");
    let y = Trajectory::new(&grid, values).expect("length matches");
    (p, y)
}

fn with_value(y: &Trajectory, grid: &GridSpec, idx: usize, delta: f64) -> Trajectory {
    let mut v = y.values().to_vec();
    v[idx] += delta;
    Trajectory::new(grid, v).expect("length unchanged")
}

/// Worst relative gap between the finite-difference gradient of the
/// functional and `h` times the Euler–Lagrange residual.
fn gradient_gap(p: &VariationalProblem, y: &Trajectory) -> Result<f64, VariationalError> {
    let g = p.grid();
    let el = p.euler_lagrange_residual(y)?;
    let step = 1e-6;
    let mut worst = 0.0f64;
    for (i, r) in el.values().iter().enumerate() {
        let fp = p.evaluate_functional(&with_value(y, g, i + 1, step))?;
        let fm = p.evaluate_functional(&with_value(y, g, i + 1, -step))?;
        let fd = (fp - fm) / (2.0 * step);
        let want = g.h() * r;
        worst = worst.max((fd - want).abs() / (1.0 + want.abs()));
    }
    Ok(worst)
}

/// Worst relative gap between `Φ''(0)` for the single-point variation and
/// `h` times the Legendre left-hand side.
fn hessian_gap(p: &VariationalProblem, y: &Trajectory) -> Result<f64, VariationalError> {
    let g = p.grid();
    let h = g.h();
    let lhs = p.legendre_lhs(y)?;
    let f0 = p.evaluate_functional(y)?;
    let eps = 1e-4;
    let mut worst = 0.0f64;
    for (i, l) in lhs.values().iter().enumerate() {
        let fp = p.evaluate_functional(&with_value(y, g, i + 1, eps * h))?;
        let fm = p.evaluate_functional(&with_value(y, g, i + 1, -eps * h))?;
        let phi2 = (fp - 2.0 * f0 + fm) / (eps * eps);
        let want = h * l;
        worst = worst.max((phi2 - want).abs() / (1.0 + want.abs()));
    }
    Ok(worst)
}

/// Runs every check. With `inject_kernel_error` the shift identities are
/// evaluated with deliberately wrong weights, so they must fail.
pub fn run_checks(seed: u64, instances: usize, inject_kernel_error: bool) -> Result<Vec<CheckResult>, VariationalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: &WeightSource = if inject_kernel_error { &corrupted_weights } else { &operators::sum_weights };
    let mut sbp = 0.0f64;
    let mut left = 0.0f64;
    let mut right = 0.0f64;
    let mut exchange = 0.0f64;
    for _ in 0..instances {
        let h = STEPS[rng.random_range(0..STEPS.len())];
        let k = rng.random_range(2..=16);
        let a = rng.random_range(-2.0..2.0);
        let alpha = rng.random_range(0.01..=1.0);
        let nu = rng.random_range(0.0..=1.0);
        let f = random_grid_fn(&mut rng, a, h, k);
        let g = random_grid_fn(&mut rng, a, h, k + 1);
        sbp = sbp.max(summation_by_parts_residual(&f, &g, alpha)?);
        left = left.max(operators::left_shift_identity_residual_with(&g, nu, weights)?);
        right = right.max(operators::right_shift_identity_residual_with(&g, nu, weights)?);
        let c: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let kf = random_grid_fn(&mut rng, a, h, k - 1);
        let kernel = move |t: f64, s: f64| c[0] + c[1] * t * s + c[2] * (t - s).sin();
        exchange = exchange.max(operators::exchange_lemma_residual(&f, &kf, kernel)?);
    }
    let oracle_instances = instances.div_ceil(2);
    let mut grad = 0.0f64;
    let mut hess = 0.0f64;
    for _ in 0..oracle_instances {
        let (p, y) = random_problem(&mut rng);
        grad = grad.max(gradient_gap(&p, &y)?);
        hess = hess.max(hessian_gap(&p, &y)?);
    }
    Ok(vec![
        CheckResult { name: "summation by parts", max_residual: sbp, tolerance: 1e-10, instances },
        CheckResult { name: "left shift identity", max_residual: left, tolerance: 1e-10, instances },
        CheckResult { name: "right shift identity", max_residual: right, tolerance: 1e-10, instances },
        CheckResult { name: "exchange lemma", max_residual: exchange, tolerance: 1e-10, instances },
        CheckResult { name: "gradient consistency", max_residual: grad, tolerance: 1e-5, instances: oracle_instances },
        CheckResult { name: "hessian consistency", max_residual: hess, tolerance: 1e-3, instances: oracle_instances },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_checks_pass_and_repeat() {
        let a = run_checks(0, 30, false).unwrap();
        assert!(a.iter().all(CheckResult::passed), "{a:?}");
        assert_eq!(a, run_checks(0, 30, false).unwrap());
    }

    #[test]
    fn injected_error_is_detected() {
        let r = run_checks(0, 10, true).unwrap();
        assert!(!r.iter().all(CheckResult::passed));
    }
}
