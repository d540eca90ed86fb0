//! Linear programming kernel: a bounded-variable revised simplex.
//!
//! Problems are `min cost·x` subject to rows `a·x {≥, ≤, =} b` and per-variable
//! bounds `lo ≤ x ≤ hi` with `lo` finite or `-inf` and `hi` finite or `+inf`.
//! Constraint rows are stored sparsely; the basis is held as a sparse LU
//! factorization extended by eta columns and rebuilt periodically.
//!
//! Dual values follow the Lagrangian convention for a minimization problem:
//! the multiplier of every `≥` row and every `≤` row is nonnegative at an
//! optimum, and the multiplier of an `=` row equals `∂objective/∂rhs`.

mod factor;
mod simplex;

use std::time::Instant;

use thiserror::Error;

/// Primal feasibility tolerance on scaled rows and variable bounds.
pub const TOL_FEAS: f64 = 1e-7;
/// Smallest pivot magnitude accepted in the ratio test.
pub const TOL_PIVOT: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RowSense {
    Ge,
    Le,
    Eq,
}

/// One constraint row with column indices strictly increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LpProblem {
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Row>,
}

impl LpProblem {
    /// `num_vars` variables with zero cost and bounds `[0, +inf)`, no rows.
    pub fn new(num_vars: usize) -> Self {
        Self {
            cost: vec![0.0; num_vars],
            lower: vec![0.0; num_vars],
            upper: vec![f64::INFINITY; num_vars],
            rows: Vec::new(),
        }
    }

    pub fn with_cost(cost: Vec<f64>) -> Self {
        let n = cost.len();
        Self { cost, ..Self::new(n) }
    }

    /// Builds a problem from a dense row-major constraint matrix.
    pub fn from_dense(
        cost: Vec<f64>,
        matrix: &[Vec<f64>],
        senses: &[RowSense],
        rhs: &[f64],
    ) -> Result<Self, LpError> {
        if matrix.len() != senses.len() || matrix.len() != rhs.len() {
            return Err(LpError::MalformedProblem(format!(
                "{} matrix rows, {} senses, {} right-hand sides",
                matrix.len(),
                senses.len(),
                rhs.len()
            )));
        }
        let mut p = Self::with_cost(cost);
        for ((row, &sense), &b) in matrix.iter().zip(senses).zip(rhs) {
            if row.len() != p.num_vars() {
                return Err(LpError::MalformedProblem(format!(
                    "row has {} entries, expected {}",
                    row.len(),
                    p.num_vars()
                )));
            }
            p.add_row(row.iter().copied().enumerate(), sense, b);
        }
        Ok(p)
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Appends a variable and returns its index.
    pub fn add_var(&mut self, cost: f64, lo: f64, hi: f64) -> usize {
        self.cost.push(cost);
        self.lower.push(lo);
        self.upper.push(hi);
        self.cost.len() - 1
    }

    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.lower[j] = lo;
        self.upper[j] = hi;
    }

    pub fn set_free(&mut self, j: usize) {
        self.set_bounds(j, f64::NEG_INFINITY, f64::INFINITY);
    }

    /// Appends a row; duplicate indices are summed and exact zeros dropped.
    pub fn add_row<I>(&mut self, coeffs: I, sense: RowSense, rhs: f64) -> usize
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        let mut c: Vec<(usize, f64)> = coeffs.into_iter().collect();
        c.sort_by_key(|&(j, _)| j);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(c.len());
        for (j, v) in c {
            match merged.last_mut() {
                Some((lj, lv)) if *lj == j => *lv += v,
                _ => merged.push((j, v)),
            }
        }
        merged.retain(|&(_, v)| v != 0.0);
        self.rows.push(Row { coeffs: merged, sense, rhs });
        self.rows.len() - 1
    }

    /// `a·x` for every row.
    pub fn row_activity(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.coeffs.iter().map(|&(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        let bad = |msg: String| Err(LpError::MalformedProblem(msg));
        if self.lower.len() != n || self.upper.len() != n {
            return bad(format!(
                "{} costs but {} lower and {} upper bounds",
                n,
                self.lower.len(),
                self.upper.len()
            ));
        }
        for j in 0..n {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if !self.cost[j].is_finite() {
                return bad(format!("cost of variable {j} is not finite"));
            }
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return bad(format!("variable {j} has invalid bounds [{lo}, {hi}]"));
            }
            if lo > hi {
                return bad(format!("variable {j} has lo {lo} > hi {hi}"));
            }
        }
        for (i, r) in self.rows.iter().enumerate() {
            if !r.rhs.is_finite() {
                return bad(format!("rhs of row {i} is not finite"));
            }
            for &(j, v) in &r.coeffs {
                if j >= n {
                    return bad(format!("row {i} references column {j} of {n}"));
                }
                if !v.is_finite() {
                    return bad(format!("row {i} has a non-finite coefficient"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    /// `+inf` when infeasible, `-inf` when unbounded.
    pub objective: f64,
    pub primal: Vec<f64>,
    pub dual: Vec<f64>,
    /// `cost_j − Σ_i ∂objective/∂rhs_i · a_ij` for every structural variable.
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum LpError {
    #[error("malformed LP: {0}")]
    MalformedProblem(String),
    #[error("simplex numerical failure: {0}")]
    NumericalFailure(String),
    #[error("LP solve exceeded its deadline")]
    TimeLimit,
}

#[derive(Clone, Debug, Default)]
pub struct LpOptions {
    pub deadline: Option<Instant>,
    /// Overrides the default cap of `50·(nv+nc) + 10000` iterations.
    pub iteration_cap: Option<usize>,
}

pub fn solve_lp(p: &LpProblem) -> Result<LpSolution, LpError> {
    solve_lp_with(p, &LpOptions::default())
}

pub fn solve_lp_with(p: &LpProblem, opts: &LpOptions) -> Result<LpSolution, LpError> {
    p.validate()?;
    simplex::solve(p, opts)
}

/// Converts a row's dual to `∂objective/∂rhs` (undoes the `≤` sign flip).
pub fn rhs_sensitivity(sense: RowSense, dual: f64) -> f64 {
    match sense {
        RowSense::Le => -dual,
        RowSense::Ge | RowSense::Eq => dual,
    }
}
