//! Self-contained linear programming: a standard-form problem container, a
//! two-phase dense-tableau simplex solver with Bland's anti-cycling rule,
//! and an exponential vertex-enumeration oracle used to cross-check it.
//!
//! Problems are `maximize cᵀx` subject to `A x <= b`, `G x = h`, `x >= 0`.

mod oracle;
mod simplex;

pub use oracle::vertex_oracle;
pub use simplex::solve_simplex;

use crate::scalar::Real;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LpError {
    /// Dimension mismatch or a non-finite coefficient.
    #[error("malformed problem: {0}")]
    MalformedProblem(String),
    /// The vertex oracle enumerates every active set and is capped.
    #[error("problem too large for the vertex oracle: {vars} variables (cap {cap})")]
    TooLarge { vars: usize, cap: usize },
    /// Iteration cap exceeded; Bland's rule should make this unreachable.
    #[error("simplex exceeded the {cap} iteration cap")]
    Cycling { cap: u64 },
}

/// `maximize cᵀx` s.t. `A x <= b`, `G x = h`, `x >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem<T> {
    /// Objective coefficients `c`.
    pub objective: Vec<T>,
    /// Inequality rows `A`.
    pub ineq_coeffs: Vec<Vec<T>>,
    /// Inequality right-hand sides `b`.
    pub ineq_rhs: Vec<T>,
    /// Equality rows `G`.
    pub eq_coeffs: Vec<Vec<T>>,
    /// Equality right-hand sides `h`.
    pub eq_rhs: Vec<T>,
}

impl<T: Real> LpProblem<T> {
    /// Empty problem over `objective.len()` non-negative variables.
    pub fn new(objective: Vec<T>) -> Self {
        Self {
            objective,
            ineq_coeffs: Vec::new(),
            ineq_rhs: Vec::new(),
            eq_coeffs: Vec::new(),
            eq_rhs: Vec::new(),
        }
    }

    pub fn push_ineq(&mut self, coeffs: Vec<T>, rhs: T) {
        self.ineq_coeffs.push(coeffs);
        self.ineq_rhs.push(rhs);
    }

    pub fn push_eq(&mut self, coeffs: Vec<T>, rhs: T) {
        self.eq_coeffs.push(coeffs);
        self.eq_rhs.push(rhs);
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.ineq_coeffs.len() + self.eq_coeffs.len()
    }

    pub(crate) fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if n == 0 {
            return Err(LpError::MalformedProblem("no variables".into()));
        }
        if self.ineq_coeffs.len() != self.ineq_rhs.len() {
            return Err(LpError::MalformedProblem(format!(
                "{} inequality rows but {} right-hand sides",
                self.ineq_coeffs.len(),
                self.ineq_rhs.len()
            )));
        }
        if self.eq_coeffs.len() != self.eq_rhs.len() {
            return Err(LpError::MalformedProblem(format!(
                "{} equality rows but {} right-hand sides",
                self.eq_coeffs.len(),
                self.eq_rhs.len()
            )));
        }
        let rows = self.ineq_coeffs.iter().chain(self.eq_coeffs.iter());
        for (i, row) in rows.enumerate() {
            if row.len() != n {
                return Err(LpError::MalformedProblem(format!(
                    "constraint {} has {} coefficients, expected {}",
                    i,
                    row.len(),
                    n
                )));
            }
        }
        let coeffs = self
            .objective
            .iter()
            .chain(self.ineq_coeffs.iter().flatten())
            .chain(self.ineq_rhs.iter())
            .chain(self.eq_coeffs.iter().flatten())
            .chain(self.eq_rhs.iter());
        for &v in coeffs {
            if !v.is_finite() {
                return Err(LpError::MalformedProblem(format!(
                    "non-finite coefficient {v}"
                )));
            }
        }
        Ok(())
    }

    /// Feasibility of a point against every constraint, within `tol`.
    pub fn is_feasible(&self, x: &[T], tol: T) -> bool {
        if x.len() != self.num_vars() {
            return false;
        }
        if x.iter().any(|&v| v < -tol) {
            return false;
        }
        for (row, &b) in self.ineq_coeffs.iter().zip(&self.ineq_rhs) {
            let lhs: T = row.iter().zip(x).map(|(&a, &v)| a * v).sum();
            if lhs > b + tol {
                return false;
            }
        }
        for (row, &h) in self.eq_coeffs.iter().zip(&self.eq_rhs) {
            let lhs: T = row.iter().zip(x).map(|(&a, &v)| a * v).sum();
            if (lhs - h).abs() > tol {
                return false;
            }
        }
        true
    }

    pub fn objective_value(&self, x: &[T]) -> T {
        self.objective.iter().zip(x).map(|(&c, &v)| c * v).sum()
    }
}

/// Plain-text dump of the constraint tableau, for verbose CLI diagnostics.
impl<T: Real> core::fmt::Display for LpProblem<T> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "max ")?;
        for (j, c) in self.objective.iter().enumerate() {
            write!(f, "{}{:+.6e}·x{}", if j > 0 { " " } else { "" }, c, j)?;
        }
        writeln!(f)?;
        for (row, rhs) in self.ineq_coeffs.iter().zip(&self.ineq_rhs) {
            for (j, a) in row.iter().enumerate() {
                write!(f, "{}{:+.6e}", if j > 0 { " " } else { "" }, a)?;
            }
            writeln!(f, " <= {:+.6e}", rhs)?;
        }
        for (row, rhs) in self.eq_coeffs.iter().zip(&self.eq_rhs) {
            for (j, a) in row.iter().enumerate() {
                write!(f, "{}{:+.6e}", if j > 0 { " " } else { "" }, a)?;
            }
            writeln!(f, " == {:+.6e}", rhs)?;
        }
        write!(f, "x >= 0")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Solver output: the point and objective are present exactly when the
/// problem is optimal.
#[derive(Debug, Clone, PartialEq)]
pub enum LpSolution<T> {
    Optimal { x: Vec<T>, objective_value: T },
    Infeasible,
    Unbounded,
}

impl<T: Real> LpSolution<T> {
    pub fn status(&self) -> LpStatus {
        match self {
            LpSolution::Optimal { .. } => LpStatus::Optimal,
            LpSolution::Infeasible => LpStatus::Infeasible,
            LpSolution::Unbounded => LpStatus::Unbounded,
        }
    }

    pub fn optimal(&self) -> Option<(&[T], T)> {
        match self {
            LpSolution::Optimal { x, objective_value } => Some((x, *objective_value)),
            _ => None,
        }
    }
}
