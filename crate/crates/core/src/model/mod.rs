//! Instances, uncertainty sets and affine policies.

mod io;
mod policy;
mod uncertainty;

pub use io::{InstanceFile, SetFile};
pub use policy::{evaluate_policy, PolicyReport};
pub use uncertainty::{as_polyhedron, max_linear, Block, SetMaximizer, UncertaintySet};

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Fails when rows have unequal lengths. `cols` is used for an empty row list.
    pub fn from_rows(rows: &[Vec<f64>], cols: usize) -> Result<Self> {
        let c = rows.first().map_or(cols, Vec::len);
        if rows.iter().any(|r| r.len() != c) {
            return Err(Error::DimensionMismatch("ragged matrix rows".into()));
        }
        Ok(Self { rows: rows.len(), cols: c, data: rows.concat() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `xᵀ M`.
    pub fn tmul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                for (o, &a) in out.iter_mut().zip(self.row(i)) {
                    *o += xi * a;
                }
            }
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a != 0.0 {
                    for (o, &b) in out.row_mut(i).iter_mut().zip(other.row(k)) {
                        *o += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `X = {x ≥ 0 : F x ≥ g, x ≤ upper}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FirstStageSet {
    pub f: Matrix,
    pub g: Vec<f64>,
    pub upper: Option<Vec<f64>>,
}

impl FirstStageSet {
    /// The nonnegative orthant `R₊ⁿ`.
    pub fn orthant(n: usize) -> Self {
        Self { f: Matrix::zeros(0, n), g: Vec::new(), upper: None }
    }

    pub fn dim(&self) -> usize {
        self.f.cols()
    }

    pub fn is_cone(&self) -> bool {
        self.upper.is_none() && self.g.iter().all(|&v| v == 0.0)
    }

    /// Largest violation of `x ∈ X`.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let mut v = x.iter().fold(0.0f64, |a, &xi| a.max(-xi));
        for (fx, &g) in self.f.mul_vec(x).iter().zip(&self.g) {
            v = v.max(g - fx);
        }
        if let Some(u) = &self.upper {
            for (&xi, &ui) in x.iter().zip(u) {
                v = v.max(xi - ui);
            }
        }
        v
    }
}

/// `min c·x + max_{h∈U} min_y { d·y : A x + B y ≥ h, y ≥ 0 }`, `x ∈ X`.
///
/// `A` is `m × n_x` and `B` is `m × n_y`; the two column counts may differ.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoStageInstance {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub first_stage: FirstStageSet,
    b_nonnegative: bool,
}

impl TwoStageInstance {
    pub fn new(a: Matrix, b: Matrix, c: Vec<f64>, d: Vec<f64>, first_stage: FirstStageSet) -> Result<Self> {
        let m = a.rows();
        let bad = |s: String| Err(Error::DimensionMismatch(s));
        if b.rows() != m {
            return bad(format!("A has {m} rows but B has {}", b.rows()));
        }
        if c.len() != a.cols() {
            return bad(format!("c has {} entries but A has {} columns", c.len(), a.cols()));
        }
        if d.len() != b.cols() {
            return bad(format!("d has {} entries but B has {} columns", d.len(), b.cols()));
        }
        if first_stage.f.cols() != a.cols() || first_stage.g.len() != first_stage.f.rows() {
            return bad("first-stage set dimensions".into());
        }
        if let Some(u) = &first_stage.upper {
            if u.len() != a.cols() {
                return bad("first-stage upper bound length".into());
            }
            if u.iter().any(|&v| !(v >= 0.0)) {
                return Err(Error::InvalidInstance("first-stage upper bounds must be nonnegative".into()));
            }
        }
        if !(a.all_finite() && b.all_finite() && first_stage.f.all_finite()) {
            return Err(Error::InvalidInstance("non-finite matrix entry".into()));
        }
        if c.iter().chain(&d).any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInstance("costs must be finite and nonnegative".into()));
        }
        if first_stage.g.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInstance("non-finite first-stage rhs".into()));
        }
        let b_nonnegative = b.as_slice().iter().all(|&v| v >= 0.0);
        Ok(Self { a, b, c, d, first_stage, b_nonnegative })
    }

    /// Number of covering rows.
    pub fn m(&self) -> usize {
        self.a.rows()
    }

    /// Number of first-stage variables.
    pub fn n_first(&self) -> usize {
        self.a.cols()
    }

    /// Number of second-stage variables.
    pub fn n_second(&self) -> usize {
        self.b.cols()
    }

    pub fn b_nonnegative(&self) -> bool {
        self.b_nonnegative
    }

    /// Divides row `i` of `A` and `B` by `lambda_i`, mapping an uncertainty set
    /// `diag(λ)·V` onto `V`.
    pub fn rescale_rows(&self, lambda: &[f64]) -> Result<Self> {
        if lambda.len() != self.m() {
            return Err(Error::DimensionMismatch("row scale length".into()));
        }
        if lambda.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidInstance("row scales must be positive".into()));
        }
        let mut out = self.clone();
        for (i, &l) in lambda.iter().enumerate() {
            out.a.row_mut(i).iter_mut().for_each(|v| *v /= l);
            out.b.row_mut(i).iter_mut().for_each(|v| *v /= l);
        }
        Ok(out)
    }
}

/// `y(h) = P h + q` with first-stage decision `x`; `P` is `n_y × m`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinePolicy {
    pub x: Vec<f64>,
    pub p: Matrix,
    pub q: Vec<f64>,
}

impl AffinePolicy {
    pub fn recourse(&self, h: &[f64]) -> Vec<f64> {
        self.p.mul_vec(h).iter().zip(&self.q).map(|(a, b)| a + b).collect()
    }
}
