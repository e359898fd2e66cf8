//! Problem files: flat `key = value` lines, `#` starts a comment.
//!
//! ```text
//! # cubic problem with eight extremals
//! a = 0
//! b = 1
//! h = 0.25
//! alpha = 0.8
//! beta = 0.5
//! lagrangian = v^3 + 1*w^2
//! left_bc = 0
//! right_bc = 1
//! ```
//!
//! The grid is given either by `b` or by the interval count `k`. `beta`
//! defaults to 1. Omitting `left_bc` or `right_bc` frees that endpoint.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::expr::{Lagrangian, ParseError};
use crate::operators::{FractionalOrders, GridSpec, OperatorError};
use crate::solver::SolverConfig;
use crate::variational::{VariationalError, VariationalProblem};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("line {line}: `{key}` must be {what}, got `{value}`")]
    BadValue { line: usize, key: String, what: &'static str, value: String },
    #[error("give exactly one of `b` and `k`")]
    GridSpecification,
    #[error("lagrangian: {0}")]
    Lagrangian(#[from] ParseError),
    #[error(transparent)]
    Grid(#[from] OperatorError),
    #[error(transparent)]
    Problem(#[from] VariationalError),
}

const KEYS: [&str; 13] =
    ["a", "b", "k", "h", "alpha", "beta", "lagrangian", "left_bc", "right_bc", "n_starts", "seed", "init_lo", "init_hi"];

/// Parsed problem file.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub grid: GridSpec,
    pub orders: FractionalOrders,
    pub lagrangian: Lagrangian,
    pub left_bc: Option<f64>,
    pub right_bc: Option<f64>,
    pub n_starts: Option<usize>,
    pub seed: Option<u64>,
    pub init_lo: Option<f64>,
    pub init_hi: Option<f64>,
}

impl ProblemConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let key = key.trim();
            let value = value.trim();
            let Some(&key) = KEYS.iter().find(|k| **k == key) else {
                return Err(ConfigError::UnknownKey { line, key: key.to_string() });
            };
            if value.is_empty() {
                return Err(ConfigError::Syntax { line });
            }
            if entries.insert(key, (line, value)).is_some() {
                return Err(ConfigError::Duplicate { line, key: key.to_string() });
            }
        }

        let real = |key: &'static str| -> Result<Option<f64>, ConfigError> {
            entries
                .get(key)
                .map(|&(line, v)| {
                    v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| ConfigError::BadValue {
                        line,
                        key: key.to_string(),
                        what: "a finite real number",
                        value: v.to_string(),
                    })
                })
                .transpose()
        };
        let integer = |key: &'static str| -> Result<Option<u64>, ConfigError> {
            entries
                .get(key)
                .map(|&(line, v)| {
                    v.parse::<u64>().map_err(|_| ConfigError::BadValue {
                        line,
                        key: key.to_string(),
                        what: "a nonnegative integer",
                        value: v.to_string(),
                    })
                })
                .transpose()
        };

        let a = real("a")?.ok_or(ConfigError::Missing("a"))?;
        let h = real("h")?.ok_or(ConfigError::Missing("h"))?;
        let grid = match (real("b")?, integer("k")?) {
            (Some(b), None) => GridSpec::from_endpoints(a, b, h)?,
            (None, Some(k)) => GridSpec::new(a, h, k as usize)?,
            _ => return Err(ConfigError::GridSpecification),
        };
        let alpha = real("alpha")?.ok_or(ConfigError::Missing("alpha"))?;
        let beta = real("beta")?.unwrap_or(1.0);
        let orders = FractionalOrders::new(alpha, beta)?;
        let source = entries.get("lagrangian").ok_or(ConfigError::Missing("lagrangian"))?.1;
        let lagrangian = Lagrangian::parse(source)?;
        let n_starts = integer("n_starts")?.map(|n| n as usize);
        if n_starts == Some(0) {
            let (line, v) = entries["n_starts"];
            return Err(ConfigError::BadValue { line, key: "n_starts".into(), what: "positive", value: v.into() });
        }
        Ok(Self {
            grid,
            orders,
            lagrangian,
            left_bc: real("left_bc")?,
            right_bc: real("right_bc")?,
            n_starts,
            seed: integer("seed")?,
            init_lo: real("init_lo")?,
            init_hi: real("init_hi")?,
        })
    }

    pub fn problem(&self) -> Result<VariationalProblem, ConfigError> {
        Ok(VariationalProblem::new(self.grid, self.orders, self.lagrangian.clone(), self.left_bc, self.right_bc)?)
    }

    /// Solver settings with this file's overrides applied to `base`.
    pub fn solver_config(&self, base: SolverConfig) -> SolverConfig {
        let (lo, hi) = base.init_box;
        SolverConfig {
            n_starts: self.n_starts.unwrap_or(base.n_starts),
            seed: self.seed.unwrap_or(base.seed),
            init_box: (self.init_lo.unwrap_or(lo), self.init_hi.unwrap_or(hi)),
            ..base
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CUBIC: &str = "\
# comment line
a = 0
b = 1
h = 0.25   # trailing comment
alpha = 0.8
beta = 0.5
lagrangian = v^3 + 1*w^2
left_bc = 0
right_bc = 1
n_starts = 500
";

    #[test]
    fn parses_full_file() {
        let c = ProblemConfig::parse(CUBIC).unwrap();
        assert_eq!(c.grid.k(), 4);
        assert_eq!(c.orders.beta(), 0.5);
        assert_eq!((c.left_bc, c.right_bc), (Some(0.0), Some(1.0)));
        assert_eq!(c.lagrangian.source(), "v^3 + 1*w^2");
        let s = c.solver_config(SolverConfig::default());
        assert_eq!((s.n_starts, s.seed, s.init_box), (500, 0, (-5.0, 5.0)));
    }

    #[test]
    fn beta_defaults_to_one_and_endpoints_can_be_free() {
        let c = ProblemConfig::parse("a=0\nk=10\nh=0.1\nalpha=0.75\nlagrangian=0.5*v^2\n").unwrap();
        assert_eq!(c.orders.beta(), 1.0);
        assert_eq!((c.left_bc, c.right_bc), (None, None));
    }

    #[test]
    fn endpoint_and_count_forms_give_identical_grids() {
        for (b, h, k) in [(1.0, 0.1, 10), (0.5, 0.1, 5), (1.0, 1.0 / 30.0, 30), (0.3, 0.1, 3)] {
            let x = ProblemConfig::parse(&format!("a=0\nb={b}\nh={h:?}\nalpha=1\nlagrangian=v\n")).unwrap();
            let y = ProblemConfig::parse(&format!("a=0\nk={k}\nh={h:?}\nalpha=1\nlagrangian=v\n")).unwrap();
            assert_eq!(x.grid, y.grid);
            assert_eq!(x.grid.points(), y.grid.points());
        }
    }

    #[test]
    fn rejects_bad_files() {
        let base = "a=0\nb=1\nh=0.25\nlagrangian=v^2\n";
        let cases = [
            (format!("{base}alpha=1.5\n"), "order"),
            (format!("{base}alpha=0\n"), "order"),
            (format!("{base}alpha=0.5\ncolor=red\n"), "unknown"),
            (format!("{base}alpha=0.5\nalpha=0.6\n"), "duplicate"),
            (format!("{base}alpha=abc\n"), "value"),
            (format!("{base}alpha=0.5\nk=4\n"), "grid"),
            ("a=0\nb=1\nh=0.3\nalpha=1\nlagrangian=v\n".to_string(), "span"),
            ("a=0\nb=1\nh=0.25\nalpha=1\nlagrangian=x^2\n".to_string(), "lagrangian"),
            ("a=0\nb=1\nh=0.25\nalpha=1\n".to_string(), "missing"),
            ("a=0\nb 1\n".to_string(), "syntax"),
        ];
        for (text, what) in cases {
            assert!(ProblemConfig::parse(&text).is_err(), "{what}: {text}");
        }
        assert!(matches!(
            ProblemConfig::parse(&format!("{base}alpha=1.5\n")),
            Err(ConfigError::Grid(OperatorError::InvalidOrder { .. }))
        ));
    }
}
