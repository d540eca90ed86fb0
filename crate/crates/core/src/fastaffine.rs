//! Approximate affine policy restricted to `P = Y·diag(α)`.
//!
//! Column `i` of `Y` is the cheapest single-variable cover `v_i` of row `i`.
//! Fixing `Y` leaves `α ∈ R^m₊` and `q ∈ R^n₊` as the only recourse
//! unknowns; nonnegativity of `y(h)` then holds for every `h ≥ 0` and the
//! multiplier block `U` of the full counterpart disappears.

use std::ops::Range;
use std::time::{Duration, Instant};

use crate::affine::{add_first_stage, check_dims, column_lists};
use crate::error::{Error, Result};
use crate::lpkernel::{solve_lp_with, LpOptions, LpProblem, LpStatus, RowSense};
use crate::model::{as_polyhedron, AffinePolicy, Matrix, TwoStageInstance, UncertaintySet};

/// `Y` stored by its single support per column.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnBasis {
    /// `support[i]` is the second-stage variable covering row `i`.
    pub support: Vec<usize>,
    /// `Y[support[i], i] = 1 / B[i, support[i]]`.
    pub value: Vec<f64>,
    /// `z(e_i) = d·v_i`.
    pub unit_costs: Vec<f64>,
    pub n_second: usize,
}

impl ColumnBasis {
    pub fn build(inst: &TwoStageInstance) -> Result<Self> {
        let mut support = Vec::with_capacity(inst.m());
        let mut value = Vec::with_capacity(inst.m());
        let mut unit_costs = Vec::with_capacity(inst.m());
        for i in 0..inst.m() {
            let (j, v, z) = cheapest_cover(inst, i)?;
            support.push(j);
            value.push(v);
            unit_costs.push(z);
        }
        Ok(Self { support, value, unit_costs, n_second: inst.n_second() })
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.n_second];
        v[self.support[i]] = self.value[i];
        v
    }

    pub fn to_matrix(&self) -> Matrix {
        let mut y = Matrix::zeros(self.n_second, self.support.len());
        for (i, (&j, &v)) in self.support.iter().zip(&self.value).enumerate() {
            y[(j, i)] = v;
        }
        y
    }
}

/// `(ℓ, 1/B_iℓ, d_ℓ/B_iℓ)` with `ℓ` minimizing `d_j/B_ij` over `B_ij > 0`,
/// smallest index on ties.
fn cheapest_cover(inst: &TwoStageInstance, i: usize) -> Result<(usize, f64, f64)> {
    if !inst.b_nonnegative() {
        return Err(Error::NotNonnegative);
    }
    let mut best: Option<(usize, f64)> = None;
    for (j, &b) in inst.b.row(i).iter().enumerate() {
        if b > 0.0 {
            let ratio = inst.d[j] / b;
            if best.map_or(true, |(_, r)| ratio < r) {
                best = Some((j, ratio));
            }
        }
    }
    let (j, ratio) = best.ok_or(Error::UncoverableComponent(i))?;
    Ok((j, 1.0 / inst.b[(i, j)], ratio))
}

/// Cheapest cover `v_i` of row `i` and its cost `z(e_i)`.
pub fn column_oracle(inst: &TwoStageInstance, i: usize) -> Result<(Vec<f64>, f64)> {
    if i >= inst.m() {
        return Err(Error::DimensionMismatch(format!("row {i} of {}", inst.m())));
    }
    let (j, v, z) = cheapest_cover(inst, i)?;
    let mut col = vec![0.0; inst.n_second()];
    col[j] = v;
    Ok((col, z))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FastLpLayout {
    pub m: usize,
    pub l: usize,
    pub x: Range<usize>,
    pub alpha: Range<usize>,
    pub q: Range<usize>,
    pub z: usize,
    pub v: Range<usize>,
    /// `V_li` at `big_v.start + l·m + i`.
    pub big_v: Range<usize>,
}

impl FastLpLayout {
    pub fn num_columns(&self) -> usize {
        self.big_v.end
    }

    pub fn v_col(&self, l: usize, i: usize) -> usize {
        self.big_v.start + l * self.m + i
    }
}

pub fn build_fast_lp(
    inst: &TwoStageInstance,
    u: &UncertaintySet,
    basis: &ColumnBasis,
) -> Result<(LpProblem, FastLpLayout)> {
    check_dims(inst, u)?;
    let (m, nx, ny) = (inst.m(), inst.n_first(), inst.n_second());
    let (rmat, r) = as_polyhedron(u);
    let l_rows = rmat.rows();
    let x = 0..nx;
    let alpha = x.end..x.end + m;
    let q = alpha.end..alpha.end + ny;
    let z = q.end;
    let v = z + 1..z + 1 + l_rows;
    let big_v = v.end..v.end + l_rows * m;
    let lay = FastLpLayout { m, l: l_rows, x, alpha, q, z, v, big_v };
    let rcols = column_lists(&rmat);

    let mut lp = LpProblem::new(lay.num_columns());
    for (j, &c) in inst.c.iter().enumerate() {
        lp.cost[lay.x.start + j] = c;
    }
    lp.cost[lay.z] = 1.0;
    lp.set_free(lay.z);

    // z − d·q − r·v ≥ 0
    let row: Vec<(usize, f64)> = std::iter::once((lay.z, 1.0))
        .chain(inst.d.iter().enumerate().map(|(j, &dj)| (lay.q.start + j, -dj)))
        .chain(r.iter().enumerate().map(|(l, &rl)| (lay.v.start + l, -rl)))
        .collect();
    lp.add_row(row, RowSense::Ge, 0.0);

    // Rᵀ v ≥ (Y diag α)ᵀ d, i.e. Σ_l R_lk v_l − z(e_k) α_k ≥ 0
    for k in 0..m {
        let row: Vec<(usize, f64)> = rcols[k]
            .iter()
            .map(|&(l, v)| (lay.v.start + l, v))
            .chain(std::iter::once((lay.alpha.start + k, -basis.unit_costs[k])))
            .collect();
        lp.add_row(row, RowSense::Ge, 0.0);
    }

    // A x + B q − Vᵀ r ≥ 0
    for i in 0..m {
        let row: Vec<(usize, f64)> = inst
            .a
            .row(i)
            .iter()
            .enumerate()
            .map(|(j, &a)| (lay.x.start + j, a))
            .chain(inst.b.row(i).iter().enumerate().map(|(j, &b)| (lay.q.start + j, b)))
            .chain(r.iter().enumerate().map(|(l, &rl)| (lay.v_col(l, i), -rl)))
            .collect();
        lp.add_row(row, RowSense::Ge, 0.0);
    }

    // Σ_l R_lk V_li + (B Y)_ik α_k ≥ δ_ik
    for i in 0..m {
        for k in 0..m {
            let by = inst.b[(i, basis.support[k])] * basis.value[k];
            let row: Vec<(usize, f64)> = rcols[k]
                .iter()
                .map(|&(l, v)| (lay.v_col(l, i), v))
                .chain(std::iter::once((lay.alpha.start + k, by)))
                .collect();
            lp.add_row(row, RowSense::Ge, f64::from(u8::from(i == k)));
        }
    }

    add_first_stage(&mut lp, inst, lay.x.start);
    Ok((lp, lay))
}

#[derive(Clone, Debug)]
pub struct FastAffineSolution {
    pub objective: f64,
    pub policy: AffinePolicy,
    pub alpha: Vec<f64>,
    pub basis: ColumnBasis,
    pub solve_time: Duration,
    pub iterations: usize,
}

pub fn solve_fast_affine(inst: &TwoStageInstance, u: &UncertaintySet) -> Result<FastAffineSolution> {
    solve_fast_affine_with(inst, u, &LpOptions::default())
}

pub fn solve_fast_affine_with(
    inst: &TwoStageInstance,
    u: &UncertaintySet,
    opts: &LpOptions,
) -> Result<FastAffineSolution> {
    let start = Instant::now();
    let basis = ColumnBasis::build(inst)?;
    let (lp, lay) = build_fast_lp(inst, u, &basis)?;
    let sol = solve_lp_with(&lp, opts)?;
    let solve_time = start.elapsed();
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::InfeasibleModel),
        LpStatus::Unbounded => return Err(Error::InvalidInstance("restricted affine counterpart is unbounded".into())),
    }
    let xs = &sol.primal;
    let alpha: Vec<f64> = xs[lay.alpha.clone()].iter().map(|&a| a.max(0.0)).collect();
    let mut p = Matrix::zeros(inst.n_second(), inst.m());
    for (k, &a) in alpha.iter().enumerate() {
        p[(basis.support[k], k)] = basis.value[k] * a;
    }
    let q = xs[lay.q.clone()].iter().map(|&v| v.max(0.0)).collect();
    let policy = AffinePolicy { x: xs[lay.x.clone()].to_vec(), p, q };
    Ok(FastAffineSolution { objective: sol.objective, policy, alpha, basis, solve_time, iterations: sol.iterations })
}
