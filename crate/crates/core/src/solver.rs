//! Multi-start damped Newton search for the extremals of a
//! [`VariationalProblem`].
//!
//! The unknowns are the interior trajectory values plus any free endpoint;
//! the residual map is [`VariationalProblem::stationarity_residual`]. Each
//! start runs an independent Newton iteration with a finite-difference
//! Jacobian and backtracking. Converged points are deduplicated, evaluated
//! and sorted by functional value.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::variational::{ExtremalCandidate, VariationalError, VariationalProblem, TOL_LEGENDRE, TOL_RESIDUAL};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Total starts, counting the two fixed ones (zero and linear interpolant).
    pub n_starts: usize,
    pub init_box: (f64, f64),
    pub max_iters: usize,
    pub step_tol: f64,
    pub residual_tol: f64,
    pub dedupe_tol: f64,
    pub tol_legendre: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n_starts: 200,
            init_box: (-5.0, 5.0),
            max_iters: 100,
            step_tol: 1e-12,
            residual_tol: TOL_RESIDUAL,
            dedupe_tol: 1e-6,
            tol_legendre: TOL_LEGENDRE,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Sorted ascending by functional value.
    pub candidates: Vec<ExtremalCandidate>,
    pub n_starts_converged: usize,
    pub n_duplicates_merged: usize,
    /// Starts that stalled, hit the iteration cap or met a singular Jacobian.
    pub n_starts_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("none of the {n_starts} starts converged")]
    NoConvergence { n_starts: usize },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Variational(#[from] VariationalError),
}

/// Result of one damped Newton step.
#[derive(Debug, Clone, PartialEq)]
pub enum NewtonStep {
    /// The residual at `x` is already within tolerance; no step taken.
    Converged,
    /// Accepted update and its residual max-norm.
    Step { x: Vec<f64>, residual: f64 },
    /// Backtracking went below the minimum damping.
    Stalled,
    /// The Jacobian could not be factorised.
    Singular,
}

/// How a full Newton run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum NewtonOutcome {
    Converged { x: Vec<f64>, residual: f64, iterations: usize },
    Failed { reason: &'static str },
}

const MIN_DAMPING: f64 = 1e-4;

fn max_abs(r: &[f64]) -> f64 {
    r.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn l2(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Central-difference Jacobian with step `1e-7 (1 + |x_i|)`.
pub fn finite_difference_jacobian<F>(residual_map: &F, x: &[f64]) -> Option<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let n = x.len();
    let mut cols = Vec::with_capacity(n);
    let mut m = 0;
    for i in 0..n {
        let step = 1e-7 * (1.0 + x[i].abs());
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += step;
        xm[i] -= step;
        let rp = residual_map(&xp)?;
        let rm = residual_map(&xm)?;
        m = rp.len();
        cols.push(rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * step)).collect::<Vec<f64>>());
    }
    Some(DMatrix::from_fn(m, n, |r, c| cols[c][r]))
}

/// One damped Newton step for `residual_map(x) = 0` with the Jacobian
/// supplied by `jacobian`. The full step `Δx = J⁻¹ r` is scaled by
/// `λ ∈ {1, ½, ¼, …}` until the residual 2-norm decreases.
pub fn newton_step<F, J>(residual_map: &F, jacobian: &J, x: &[f64], residual_tol: f64) -> NewtonStep
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
    J: Fn(&[f64]) -> Option<DMatrix<f64>>,
{
    let Some(r) = residual_map(x) else { return NewtonStep::Stalled };
    if max_abs(&r) <= residual_tol {
        return NewtonStep::Converged;
    }
    let Some(jac) = jacobian(x) else { return NewtonStep::Singular };
    if jac.nrows() != jac.ncols() || jac.nrows() != r.len() {
        return NewtonStep::Singular;
    }
    let Some(dx) = jac.lu().solve(&DVector::from_column_slice(&r)) else { return NewtonStep::Singular };
    if dx.iter().any(|d| !d.is_finite()) {
        return NewtonStep::Singular;
    }
    let norm0 = l2(&r);
    let mut lambda = 1.0;
    while lambda >= MIN_DAMPING {
        let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(xi, di)| xi - lambda * di).collect();
        if let Some(rt) = residual_map(&trial) {
            if rt.iter().all(|v| v.is_finite()) && l2(&rt) < norm0 {
                return NewtonStep::Step { residual: max_abs(&rt), x: trial };
            }
        }
        lambda *= 0.5;
    }
    NewtonStep::Stalled
}

/// Iterates [`newton_step`] from `x0` with a finite-difference Jacobian.
/// A singular Jacobian triggers one perturbed retry, using `perturb` to
/// pick the nudged point.
pub fn newton_solve<F>(
    residual_map: &F,
    x0: &[f64],
    cfg: &SolverConfig,
    mut perturb: impl FnMut(&[f64]) -> Vec<f64>,
) -> NewtonOutcome
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let jacobian = |x: &[f64]| finite_difference_jacobian(residual_map, x);
    let mut x = x0.to_vec();
    let mut retried = false;
    for iterations in 0..=cfg.max_iters {
        match newton_step(residual_map, &jacobian, &x, cfg.residual_tol) {
            NewtonStep::Converged => {
                let residual = residual_map(&x).map_or(f64::INFINITY, |r| max_abs(&r));
                return NewtonOutcome::Converged { x, residual, iterations };
            }
            NewtonStep::Step { x: next, residual } => {
                let moved = x.iter().zip(&next).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                let scale = 1.0 + max_abs(&next);
                x = next;
                if residual <= cfg.residual_tol {
                    return NewtonOutcome::Converged { x, residual, iterations: iterations + 1 };
                }
                if moved <= cfg.step_tol * scale {
                    return NewtonOutcome::Failed { reason: "step below tolerance" };
                }
            }
            NewtonStep::Stalled => return NewtonOutcome::Failed { reason: "stalled" },
            NewtonStep::Singular => {
                if retried {
                    return NewtonOutcome::Failed { reason: "singular jacobian" };
                }
                retried = true;
                x = perturb(&x);
            }
        }
    }
    NewtonOutcome::Failed { reason: "iteration limit" }
}

/// A converged point before evaluation.
#[derive(Debug, Clone)]
struct Root {
    x: Vec<f64>,
    residual: f64,
}

/// Greedy max-norm clustering in input order. Each cluster keeps the
/// member with the smallest residual norm. Returns survivors (in order of
/// first appearance) and the number merged away.
pub fn dedupe(candidates: Vec<ExtremalCandidate>, dedupe_tol: f64) -> (Vec<ExtremalCandidate>, usize) {
    let keyed = candidates
        .into_iter()
        .map(|c| {
            let x = c.trajectory.values().to_vec();
            let r = c.el_residual_norm;
            (x, r, c)
        })
        .collect::<Vec<_>>();
    let (kept, merged) = cluster(keyed, dedupe_tol);
    (kept.into_iter().map(|(_, _, c)| c).collect(), merged)
}

fn cluster<T>(items: Vec<(Vec<f64>, f64, T)>, tol: f64) -> (Vec<(Vec<f64>, f64, T)>, usize) {
    let mut kept: Vec<(Vec<f64>, f64, T)> = Vec::new();
    let mut merged = 0;
    for item in items {
        let hit = kept.iter().position(|(x, _, _)| {
            x.len() == item.0.len() && x.iter().zip(&item.0).all(|(a, b)| (a - b).abs() <= tol)
        });
        match hit {
            Some(i) => {
                merged += 1;
                if item.1 < kept[i].1 {
                    kept[i] = item;
                }
            }
            None => kept.push(item),
        }
    }
    (kept, merged)
}

fn starts(p: &VariationalProblem, cfg: &SolverConfig) -> Vec<Vec<f64>> {
    let n = p.unknown_count();
    let grid = p.grid();
    let ya = p.left_bc().unwrap_or(0.0);
    let yb = p.right_bc().unwrap_or(0.0);
    let k = grid.k() as f64;
    let linear: Vec<f64> = (0..=grid.k()).map(|i| ya + (yb - ya) * i as f64 / k).collect();
    let linear = match p.trajectory(linear) {
        Ok(y) => p.unknowns_of(&y),
        Err(_) => vec![0.0; n],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (lo, hi) = cfg.init_box;
    let mut out = vec![vec![0.0; n], linear];
    out.truncate(cfg.n_starts);
    while out.len() < cfg.n_starts {
        out.push((0..n).map(|_| rng.random_range(lo..=hi)).collect());
    }
    out
}

fn validate(cfg: &SolverConfig) -> Result<(), SolveError> {
    if cfg.n_starts == 0 {
        return Err(SolveError::InvalidConfig("n_starts must be positive"));
    }
    if cfg.max_iters == 0 {
        return Err(SolveError::InvalidConfig("max_iters must be positive"));
    }
    let (lo, hi) = cfg.init_box;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(SolveError::InvalidConfig("init_box must be a finite interval lo <= hi"));
    }
    if !(cfg.residual_tol > 0.0 && cfg.dedupe_tol >= 0.0 && cfg.step_tol >= 0.0) {
        return Err(SolveError::InvalidConfig("tolerances must be nonnegative and residual_tol positive"));
    }
    Ok(())
}

fn compare(a: &ExtremalCandidate, b: &ExtremalCandidate) -> Ordering {
    a.functional_value.total_cmp(&b.functional_value).then_with(|| {
        a.trajectory
            .interior()
            .iter()
            .zip(b.trajectory.interior())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

/// Finds every extremal reachable from the configured starts.
pub fn solve(p: &VariationalProblem, cfg: &SolverConfig) -> Result<SolveReport, SolveError> {
    validate(cfg)?;
    let residual_map = |x: &[f64]| -> Option<Vec<f64>> {
        let y = p.trajectory_from_unknowns(x).ok()?;
        let r = p.stationarity_residual(&y).ok()?;
        r.iter().all(|v| v.is_finite()).then_some(r)
    };
    let starts = starts(p, cfg);
    let outcomes: Vec<NewtonOutcome> = starts
        .par_iter()
        .enumerate()
        .map(|(i, x0)| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i as u64 + 1)));
            let perturb =
                |x: &[f64]| x.iter().map(|v| v + 1e-3 * (1.0 + v.abs()) * rng.random_range(-1.0..1.0)).collect();
            newton_solve(&residual_map, x0, cfg, perturb)
        })
        .collect();

    let mut roots = Vec::new();
    let mut failed = 0;
    for o in outcomes {
        match o {
            NewtonOutcome::Converged { x, residual, .. } => roots.push(Root { x, residual }),
            NewtonOutcome::Failed { reason } => {
                log::debug!("start discarded: {reason}");
                failed += 1;
            }
        }
    }
    let converged = roots.len();
    if converged == 0 {
        return Err(SolveError::NoConvergence { n_starts: cfg.n_starts });
    }
    let keyed = roots.into_iter().map(|r| (r.x.clone(), r.residual, r)).collect();
    let (kept, merged) = cluster(keyed, cfg.dedupe_tol);
    let mut candidates = kept
        .into_par_iter()
        .map(|(_, _, root)| {
            let y = p.trajectory_from_unknowns(&root.x)?;
            Ok(p.candidate(y, cfg.tol_legendre)?)
        })
        .collect::<Result<Vec<_>, SolveError>>()?;
    candidates.sort_by(compare);
    Ok(SolveReport { candidates, n_starts_converged: converged, n_duplicates_merged: merged, n_starts_failed: failed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Lagrangian;
    use crate::operators::{FractionalOrders, GridSpec};
    use crate::variational::Trajectory;

    fn problem(src: &str, alpha: f64, beta: f64, a: f64, b: f64, h: f64, bc: (Option<f64>, Option<f64>)) -> VariationalProblem {
        VariationalProblem::new(
            GridSpec::from_endpoints(a, b, h).unwrap(),
            FractionalOrders::new(alpha, beta).unwrap(),
            Lagrangian::parse(src).unwrap(),
            bc.0,
            bc.1,
        )
        .unwrap()
    }

    fn no_perturb(x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }

    #[test]
    fn cubic_scalar_newton() {
        let r = |x: &[f64]| Some(vec![x[0].powi(3) - x[0]]);
        match newton_solve(&r, &[2.0], &SolverConfig::default(), no_perturb) {
            NewtonOutcome::Converged { x, .. } => assert!((x[0] - 1.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_step_when_already_converged() {
        let r = |x: &[f64]| Some(vec![x[0] - 3.0]);
        let j = |x: &[f64]| finite_difference_jacobian(&r, x);
        assert_eq!(newton_step(&r, &j, &[3.0], 1e-9), NewtonStep::Converged);
    }

    #[test]
    fn singular_jacobian_is_reported() {
        let r = |x: &[f64]| Some(vec![x[0] * x[0] + 1.0]);
        let j = |x: &[f64]| finite_difference_jacobian(&r, x);
        assert_eq!(newton_step(&r, &j, &[0.0], 1e-9), NewtonStep::Singular);
        assert!(matches!(
            newton_solve(&r, &[0.0], &SolverConfig::default(), no_perturb),
            NewtonOutcome::Failed { .. }
        ));
    }

    #[test]
    fn linear_problem_converges_in_one_step() {
        let p = problem("0.5*v^2 - u", 1.0, 1.0, 0.0, 1.0, 0.125, (Some(0.0), Some(0.0)));
        let residual = |x: &[f64]| p.stationarity_residual(&p.trajectory_from_unknowns(x).ok()?).ok();
        let n = p.unknown_count();
        let x0: Vec<f64> = (0..n).map(|i| (i as f64).sin() * 3.0).collect();
        // The residual is affine, so its Jacobian is constant: columns are
        // differences against the zero vector.
        let r0 = residual(&vec![0.0; n]).unwrap();
        let exact = DMatrix::from_fn(n, n, |r, c| {
            let mut e = vec![0.0; n];
            e[c] = 1.0;
            residual(&e).unwrap()[r] - r0[r]
        });
        let jac = |_: &[f64]| Some(exact.clone());
        let NewtonStep::Step { x, residual: after } = newton_step(&residual, &jac, &x0, 1e-9) else { panic!() };
        assert!(after <= 1e-9, "{after}");
        assert_eq!(newton_step(&residual, &jac, &x, 1e-9), NewtonStep::Converged);

        // With the finite-difference Jacobian the first step is still a full
        // one; rounding in the differences leaves one polishing step.
        match newton_solve(&residual, &x0, &SolverConfig::default(), no_perturb) {
            NewtonOutcome::Converged { iterations, .. } => assert!(iterations <= 2, "{iterations}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn classical_quadratic_has_unique_exact_extremal() {
        for h in [0.5, 0.25, 0.125] {
            let p = problem("0.5*v^2 - u", 1.0, 1.0, 0.0, 1.0, h, (Some(0.0), Some(0.0)));
            let report = solve(&p, &SolverConfig { n_starts: 20, ..SolverConfig::default() }).unwrap();
            assert_eq!(report.candidates.len(), 1);
            let y = &report.candidates[0].trajectory;
            for (t, v) in y.points().iter().zip(y.values()) {
                assert!((v - t * (1.0 - t) / 2.0).abs() <= 1e-10, "h {h} t {t}: {v}");
            }
        }
    }

    #[test]
    fn free_endpoints_solve_natural_conditions() {
        // Quadratic growth keeps the free problems well posed.
        for bc in [(None, Some(1.0)), (Some(0.0), None), (None, None)] {
            let p = problem("0.5*v^2 + 0.5*w^2 + (u - t)^2", 0.7, 0.6, 0.0, 1.0, 0.2, bc);
            let report = solve(&p, &SolverConfig { n_starts: 10, ..SolverConfig::default() }).unwrap();
            assert_eq!(report.candidates.len(), 1, "{bc:?}");
            let y = &report.candidates[0].trajectory;
            if bc.0.is_none() {
                assert!(p.natural_bc_left_residual(y).unwrap().abs() <= 1e-8);
            }
            if bc.1.is_none() {
                assert!(p.natural_bc_right_residual(y).unwrap().abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn dedupe_examples() {
        let p = problem("v^2", 1.0, 1.0, 0.0, 1.0, 0.5, (None, None));
        let make = |mid: f64, res: f64| {
            let y = Trajectory::new(p.grid(), vec![0.0, mid, 1.0]).unwrap();
            let mut c = p.candidate(y, TOL_LEGENDRE).unwrap();
            c.el_residual_norm = res;
            c
        };
        let (kept, merged) = dedupe(vec![make(0.3, 1e-10), make(0.3, 1e-12)], 1e-6);
        assert_eq!((kept.len(), merged), (1, 1));
        assert_eq!(kept[0].el_residual_norm, 1e-12);
        let (kept, merged) = dedupe(vec![make(0.3, 0.0), make(0.3 + 1e-5, 0.0)], 1e-6);
        assert_eq!((kept.len(), merged), (2, 0));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let p = problem("v^3 + 1*w^2", 0.8, 0.5, 0.0, 1.0, 0.25, (Some(0.0), Some(1.0)));
        let cfg = SolverConfig { n_starts: 60, seed: 7, ..SolverConfig::default() };
        let a = solve(&p, &cfg).unwrap();
        let b = solve(&p, &cfg).unwrap();
        assert_eq!(a, b);
        for c in &a.candidates {
            let again = p.euler_lagrange_residual(&c.trajectory).unwrap();
            assert!(again.values().iter().all(|r| r.abs() <= cfg.residual_tol));
        }
        for w in a.candidates.windows(2) {
            assert!(w[0].functional_value <= w[1].functional_value);
        }
    }

    #[test]
    fn rejects_bad_config() {
        let p = problem("v^2", 1.0, 1.0, 0.0, 1.0, 0.5, (Some(0.0), Some(1.0)));
        for cfg in [
            SolverConfig { n_starts: 0, ..SolverConfig::default() },
            SolverConfig { init_box: (1.0, -1.0), ..SolverConfig::default() },
            SolverConfig { residual_tol: 0.0, ..SolverConfig::default() },
        ] {
            assert!(matches!(solve(&p, &cfg), Err(SolveError::InvalidConfig(_))));
        }
    }

    #[test]
    fn no_convergence_is_an_error() {
        // L_u = 1 everywhere, so the residual never vanishes.
        let p = problem("u", 1.0, 1.0, 0.0, 1.0, 0.5, (Some(0.0), Some(1.0)));
        let cfg = SolverConfig { n_starts: 5, max_iters: 20, ..SolverConfig::default() };
        assert!(matches!(solve(&p, &cfg), Err(SolveError::NoConvergence { n_starts: 5 })));
    }

    /// Stationary points by plain gradient descent on the finite-difference
    /// gradient of the functional, independent of the Euler–Lagrange residual.
    fn descent_stationary_points(p: &VariationalProblem, n_starts: usize, seed: u64) -> Vec<Vec<f64>> {
        let f = |x: &[f64]| p.evaluate_functional(&p.trajectory_from_unknowns(x).unwrap()).unwrap();
        let grad = |x: &[f64]| -> Vec<f64> {
            (0..x.len())
                .map(|i| {
                    let s = 1e-6;
                    let mut xp = x.to_vec();
                    let mut xm = x.to_vec();
                    xp[i] += s;
                    xm[i] -= s;
                    (f(&xp) - f(&xm)) / (2.0 * s)
                })
                .collect()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut found: Vec<Vec<f64>> = Vec::new();
        for _ in 0..n_starts {
            let mut x: Vec<f64> = (0..p.unknown_count()).map(|_| rng.random_range(-2.0..2.0)).collect();
            let mut step = 0.1;
            for _ in 0..20000 {
                let g = grad(&x);
                if g.iter().all(|v| v.abs() < 1e-10) {
                    break;
                }
                let fx = f(&x);
                let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
                if f(&trial) < fx {
                    x = trial;
                    step *= 1.2;
                } else {
                    step *= 0.5;
                }
            }
            if grad(&x).iter().all(|v| v.abs() < 1e-7) && !found.iter().any(|y| y.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-5)) {
                found.push(x);
            }
        }
        found
    }

    #[test]
    fn minima_agree_with_gradient_descent() {
        let p = problem("0.5*v^2 + 0.25*w^4 + u^4 - 2*u^2", 0.7, 0.8, 0.0, 1.0, 0.25, (Some(0.0), Some(0.5)));
        let report = solve(&p, &SolverConfig { n_starts: 100, ..SolverConfig::default() }).unwrap();
        let descent = descent_stationary_points(&p, 40, 5);
        assert!(!descent.is_empty());
        for x in &descent {
            let hit = report.candidates.iter().any(|c| {
                c.trajectory.interior().iter().zip(x).all(|(a, b)| (a - b).abs() < 1e-5)
            });
            assert!(hit, "descent minimum {x:?} not among solver candidates");
        }
        let minima: Vec<_> = report.candidates.iter().filter(|c| c.legendre_verified).collect();
        assert!(!minima.is_empty());
    }
}
