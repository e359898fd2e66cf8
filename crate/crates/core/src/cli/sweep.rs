//! Built-in example problems and parameter sweeps over them.

use std::fmt;

use thiserror::Error;

use super::output::ColumnTable;
use super::quadrature::{reference_quadrature_ex1, QuadratureError};
use crate::expr::Lagrangian;
use crate::operators::{FractionalOrders, GridSpec, OperatorError};
use crate::solver::{solve, SolveError, SolverConfig};
use crate::variational::{ExtremalCandidate, VariationalError, VariationalProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Example {
    /// `½ v²`, α = 3/4, y(0) = 0, y(1) = 1.
    Ex1,
    /// `½ v² - u`, y(0) = y(1) = 0.
    Ex2,
    /// `v³ + w²`, α = 0.8, β = 0.5, y(0) = 0, y(1) = 1.
    Ex3,
}

impl fmt::Display for Example {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Example::Ex1 => "ex1",
            Example::Ex2 => "ex2",
            Example::Ex3 => "ex3",
        })
    }
}

/// A sweep value that remembers how it was written, so `1/30` labels its
/// column as `1/30` rather than as a 17-digit decimal.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub text: String,
    pub value: f64,
}

impl Param {
    /// Accepts decimals and simple fractions such as `1/20`.
    pub fn parse(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let value = match s.split_once('/') {
            Some((n, d)) => {
                let n: f64 = n.trim().parse().map_err(|_| format!("bad numerator in `{s}`"))?;
                let d: f64 = d.trim().parse().map_err(|_| format!("bad denominator in `{s}`"))?;
                n / d
            }
            None => s.parse().map_err(|_| format!("`{s}` is not a number"))?,
        };
        if !value.is_finite() || value <= 0.0 {
            return Err(format!("`{s}` must be a positive finite number"));
        }
        Ok(Self { text: s.to_string(), value })
    }
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Grid(#[from] OperatorError),
    #[error(transparent)]
    Problem(#[from] VariationalError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("{label}: solver returned no extremal")]
    NoCandidate { label: String },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

impl Example {
    fn lagrangian(self) -> &'static str {
        match self {
            Example::Ex1 => "0.5*v^2",
            Example::Ex2 => "0.5*v^2 - u",
            Example::Ex3 => "v^3 + 1*w^2",
        }
    }

    fn beta(self) -> f64 {
        match self {
            Example::Ex3 => 0.5,
            _ => 1.0,
        }
    }

    fn boundary(self) -> (f64, f64) {
        match self {
            Example::Ex2 => (0.0, 0.0),
            _ => (0.0, 1.0),
        }
    }

    pub fn default_h(self) -> Vec<Param> {
        let list: &[&str] = match self {
            Example::Ex1 => &["1/10", "1/20", "1/30"],
            Example::Ex2 => &["0.05"],
            Example::Ex3 => &["0.25"],
        };
        list.iter().map(|s| Param::parse(s).expect("valid literal")).collect()
    }

    pub fn default_alpha(self) -> Vec<Param> {
        let list: &[&str] = match self {
            Example::Ex1 => &["0.75"],
            Example::Ex2 => &["0.70", "0.75", "0.95", "0.99"],
            Example::Ex3 => &["0.8"],
        };
        list.iter().map(|s| Param::parse(s).expect("valid literal")).collect()
    }

    /// Continuous curve the discrete extremals are compared against.
    pub fn reference(self, t: f64) -> Option<Result<f64, QuadratureError>> {
        match self {
            Example::Ex1 if t <= 0.0 => Some(Ok(0.0)),
            Example::Ex1 => Some(reference_quadrature_ex1(t)),
            Example::Ex2 => Some(Ok(0.5 * t * (1.0 - t))),
            Example::Ex3 => None,
        }
    }

    pub fn problem(self, h: f64, alpha: f64) -> Result<VariationalProblem, SweepError> {
        let grid = GridSpec::from_endpoints(0.0, 1.0, h)?;
        let orders = FractionalOrders::new(alpha, self.beta())?;
        let l = Lagrangian::parse(self.lagrangian()).expect("built-in lagrangian parses");
        let (lo, hi) = self.boundary();
        Ok(VariationalProblem::new(grid, orders, l, Some(lo), Some(hi))?)
    }
}

/// One solved sweep point.
#[derive(Debug, Clone)]
pub struct SweepRun {
    pub label: String,
    pub candidate: ExtremalCandidate,
    /// `(t, y(t) - reference(t))`, absent for examples without a reference.
    pub deviation: Option<Vec<(f64, f64)>>,
}

impl SweepRun {
    pub fn max_deviation(&self) -> Option<f64> {
        self.deviation.as_ref().map(|d| d.iter().map(|p| p.1.abs()).fold(0.0, f64::max))
    }
}

/// Lowest functional value among Legendre-verified candidates, else the
/// lowest overall. Candidates arrive sorted by functional value.
fn representative(mut candidates: Vec<ExtremalCandidate>) -> Option<ExtremalCandidate> {
    let i = candidates.iter().position(|c| c.legendre_verified).unwrap_or(0);
    (i < candidates.len()).then(|| candidates.swap_remove(i))
}

fn label(h: &Param, alpha: &Param, show_h: bool, show_alpha: bool) -> String {
    match (show_h, show_alpha) {
        (true, true) => format!("h={} alpha={}", h.text, alpha.text),
        (false, true) => format!("alpha={}", alpha.text),
        _ => format!("h={}", h.text),
    }
}

/// Solves `example` for every `(h, alpha)` pair, in list order.
pub fn run_sweep(
    example: Example,
    hs: &[Param],
    alphas: &[Param],
    cfg: &SolverConfig,
) -> Result<Vec<SweepRun>, SweepError> {
    let show_h = hs.len() > 1 || alphas.len() <= 1;
    let show_alpha = alphas.len() > 1;
    let mut runs = Vec::with_capacity(hs.len() * alphas.len());
    for h in hs {
        for alpha in alphas {
            let label = label(h, alpha, show_h, show_alpha);
            let p = example.problem(h.value, alpha.value)?;
            let report = solve(&p, cfg)?;
            let candidate =
                representative(report.candidates).ok_or_else(|| SweepError::NoCandidate { label: label.clone() })?;
            let t = candidate.trajectory.points();
            let deviation = t
                .iter()
                .zip(candidate.trajectory.values())
                .map(|(&t, &y)| example.reference(t).map(|r| r.map(|r| (t, y - r))))
                .collect::<Option<Result<Vec<_>, _>>>()
                .transpose()?;
            log::info!("{example} {label}: F = {}", candidate.functional_value);
            runs.push(SweepRun { label, candidate, deviation });
        }
    }
    Ok(runs)
}

/// `t`, then `y(label)` and `dev(label)` per run.
pub fn sweep_table(runs: &[SweepRun]) -> ColumnTable {
    let mut names = Vec::new();
    let mut series = Vec::new();
    for r in runs {
        names.push(format!("y({})", r.label));
        series.push(r.candidate.trajectory.points().into_iter().zip(r.candidate.trajectory.values().iter().copied()).collect());
        if let Some(d) = &r.deviation {
            names.push(format!("dev({})", r.label));
            series.push(d.clone());
        }
    }
    ColumnTable::from_series(names, &series)
}
