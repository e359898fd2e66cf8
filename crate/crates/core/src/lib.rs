//! Discrete-time fractional calculus of variations on the time scale
//! `(hZ)_a = {a, a + h, a + 2h, ...}`.
//!
//! The crate is organised bottom-up:
//!
//! * [`special`] – gamma function, the h-factorial `x_h^{(y)}` and the
//!   generalized polynomials `H_k`.
//! * [`operators`] – grids, the forward h-difference, the h-integral and the
//!   left/right fractional h-sums and h-differences, plus residual checks of
//!   the identities they satisfy.
//! * [`expr`] – a small expression language for Lagrangians `L(t,u,v,w)`,
//!   evaluated with exact first and second partial derivatives.
//! * [`variational`] – the functional, Euler–Lagrange residual, natural
//!   boundary conditions and the fractional Legendre condition.
//! * [`solver`] – multi-start damped Newton search for every extremal.
//! * [`cli`] – config files, CSV output and the `solve`/`check`/`sweep`
//!   commands used by the `fracvar` binary.
//!
//! ```
//! use fracvar::{solve, FractionalOrders, GridSpec, Lagrangian, SolverConfig, VariationalProblem};
//!
//! // Minimise the sum over t of h * ((Δy)²/2 - y(t + h)) with y(0) = y(1) = 0.
//! let grid = GridSpec::from_endpoints(0.0, 1.0, 0.25)?;
//! let orders = FractionalOrders::new(1.0, 1.0)?;
//! let l = Lagrangian::parse("0.5*v^2 - u")?;
//! let p = VariationalProblem::new(grid, orders, l, Some(0.0), Some(0.0))?;
//! let report = solve(&p, &SolverConfig { n_starts: 4, ..SolverConfig::default() })?;
//! assert_eq!(report.candidates.len(), 1);
//! assert!((report.candidates[0].trajectory.values()[2] - 0.125).abs() < 1e-12);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod cli;
pub mod expr;
pub mod operators;
pub mod solver;
pub mod special;
pub mod variational;

mod sum;

pub use expr::{Lagrangian, LagrangianJet};
pub use operators::{FractionalOrders, GridFunction, GridSpec};
pub use solver::{solve, SolveReport, SolverConfig};
pub use variational::{ExtremalCandidate, Trajectory, VariationalProblem};


