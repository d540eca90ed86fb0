//! Optimal affine policy via the dualized robust counterpart.
//!
//! With `U = {h ≥ 0 : R h ≤ r}` (box rows included, `L` rows in total) the
//! best policy `y(h) = P h + q` solves
//!
//! ```text
//! min  c·x + z
//! s.t. z − d·q ≥ r·v,            Rᵀ v ≥ Pᵀ d,
//!      A x + B q ≥ Vᵀ r,         (VᵀR)_ik ≥ δ_ik − (B P)_ik,
//!      q ≥ Uᵀ r,                 UᵀR + P ≥ 0,
//!      x ∈ X,  v, U, V ≥ 0,  P, q, z free.
//! ```
//! Row `i` of the covering block pairs multiplier column `V_{·i}` with the
//! worst case of `h_i − (B P h)_i`, so the matrix inequality is indexed
//! `(k, i) ↦ Σ_l R_lk V_li ≥ δ_ik − (BP)_ik`.

use std::ops::Range;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::lpkernel::{solve_lp_with, LpOptions, LpProblem, LpStatus, RowSense};
use crate::model::{as_polyhedron, AffinePolicy, Matrix, TwoStageInstance, UncertaintySet};

/// Column ranges of each variable group in the flat LP.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineLpLayout {
    pub m: usize,
    pub n_first: usize,
    pub n_second: usize,
    /// Rows of `(R, r)` including the box rows.
    pub l: usize,
    pub x: Range<usize>,
    /// `P_jk` at `p.start + j·m + k`.
    pub p: Range<usize>,
    pub q: Range<usize>,
    pub z: usize,
    pub v: Range<usize>,
    /// `U_lj` at `u.start + l·n_second + j`.
    pub u: Range<usize>,
    /// `V_li` at `big_v.start + l·m + i`.
    pub big_v: Range<usize>,
}

impl AffineLpLayout {
    fn new(m: usize, n_first: usize, n_second: usize, l: usize) -> Self {
        let x = 0..n_first;
        let p = x.end..x.end + n_second * m;
        let q = p.end..p.end + n_second;
        let z = q.end;
        let v = z + 1..z + 1 + l;
        let u = v.end..v.end + l * n_second;
        let big_v = u.end..u.end + l * m;
        Self { m, n_first, n_second, l, x, p, q, z, v, u, big_v }
    }

    pub fn num_columns(&self) -> usize {
        self.big_v.end
    }

    pub fn p_col(&self, j: usize, k: usize) -> usize {
        self.p.start + j * self.m + k
    }

    pub fn u_col(&self, l: usize, j: usize) -> usize {
        self.u.start + l * self.n_second + j
    }

    pub fn v_col(&self, l: usize, i: usize) -> usize {
        self.big_v.start + l * self.m + i
    }
}

/// Nonzeros of each column of `R`.
pub(crate) fn column_lists(rmat: &Matrix) -> Vec<Vec<(usize, f64)>> {
    let mut cols = vec![Vec::new(); rmat.cols()];
    for l in 0..rmat.rows() {
        for (k, &v) in rmat.row(l).iter().enumerate() {
            if v != 0.0 {
                cols[k].push((l, v));
            }
        }
    }
    cols
}

/// Appends the first-stage rows `F x ≥ g` and bounds `0 ≤ x ≤ upper`.
pub(crate) fn add_first_stage(lp: &mut LpProblem, inst: &TwoStageInstance, offset: usize) {
    let fs = &inst.first_stage;
    if let Some(up) = &fs.upper {
        for (j, &ub) in up.iter().enumerate() {
            lp.set_bounds(offset + j, 0.0, ub);
        }
    }
    for row in 0..fs.f.rows() {
        let coeffs = fs.f.row(row).iter().enumerate().filter(|&(_, &v)| v != 0.0).map(|(j, &v)| (offset + j, v));
        lp.add_row(coeffs, RowSense::Ge, fs.g[row]);
    }
}

pub(crate) fn check_dims(inst: &TwoStageInstance, u: &UncertaintySet) -> Result<()> {
    if u.dim() != inst.m() {
        return Err(Error::DimensionMismatch(format!(
            "instance has {} rows but the set has dimension {}",
            inst.m(),
            u.dim()
        )));
    }
    Ok(())
}

pub fn build_affine_lp(inst: &TwoStageInstance, u: &UncertaintySet) -> Result<(LpProblem, AffineLpLayout)> {
    check_dims(inst, u)?;
    let (m, nx, ny) = (inst.m(), inst.n_first(), inst.n_second());
    let (rmat, r) = as_polyhedron(u);
    let l_rows = rmat.rows();
    let lay = AffineLpLayout::new(m, nx, ny, l_rows);
    let rcols = column_lists(&rmat);

    let mut lp = LpProblem::new(lay.num_columns());
    for (j, &c) in inst.c.iter().enumerate() {
        lp.cost[lay.x.start + j] = c;
    }
    lp.cost[lay.z] = 1.0;
    for col in lay.p.clone().chain(lay.q.clone()).chain(std::iter::once(lay.z)) {
        lp.set_free(col);
    }

    // z − d·q − r·v ≥ 0
    let row: Vec<(usize, f64)> = std::iter::once((lay.z, 1.0))
        .chain(inst.d.iter().enumerate().map(|(j, &dj)| (lay.q.start + j, -dj)))
        .chain(r.iter().enumerate().map(|(l, &rl)| (lay.v.start + l, -rl)))
        .collect();
    lp.add_row(row, RowSense::Ge, 0.0);

    // Rᵀ v − Pᵀ d ≥ 0
    for k in 0..m {
        let row: Vec<(usize, f64)> = rcols[k]
            .iter()
            .map(|&(l, v)| (lay.v.start + l, v))
            .chain(inst.d.iter().enumerate().map(|(j, &dj)| (lay.p_col(j, k), -dj)))
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

    // Σ_l R_lk V_li + (B P)_ik ≥ δ_ik
    for i in 0..m {
        for k in 0..m {
            let row: Vec<(usize, f64)> = rcols[k]
                .iter()
                .map(|&(l, v)| (lay.v_col(l, i), v))
                .chain(inst.b.row(i).iter().enumerate().map(|(j, &b)| (lay.p_col(j, k), b)))
                .collect();
            lp.add_row(row, RowSense::Ge, f64::from(u8::from(i == k)));
        }
    }

    // q − Uᵀ r ≥ 0
    for j in 0..ny {
        let row: Vec<(usize, f64)> = std::iter::once((lay.q.start + j, 1.0))
            .chain(r.iter().enumerate().map(|(l, &rl)| (lay.u_col(l, j), -rl)))
            .collect();
        lp.add_row(row, RowSense::Ge, 0.0);
    }

    // UᵀR + P ≥ 0
    for j in 0..ny {
        for k in 0..m {
            let row: Vec<(usize, f64)> = rcols[k]
                .iter()
                .map(|&(l, v)| (lay.u_col(l, j), v))
                .chain(std::iter::once((lay.p_col(j, k), 1.0)))
                .collect();
            lp.add_row(row, RowSense::Ge, 0.0);
        }
    }

    add_first_stage(&mut lp, inst, lay.x.start);
    Ok((lp, lay))
}

#[derive(Clone, Debug)]
pub struct AffineSolution {
    pub objective: f64,
    pub policy: AffinePolicy,
    /// Epigraph variable of the worst-case second-stage cost.
    pub z: f64,
    /// Multipliers of the worst-case cost block, one per row of `(R, r)`.
    pub v: Vec<f64>,
    pub solve_time: Duration,
    pub iterations: usize,
}

pub fn solve_optimal_affine(inst: &TwoStageInstance, u: &UncertaintySet) -> Result<AffineSolution> {
    solve_optimal_affine_with(inst, u, &LpOptions::default())
}

pub fn solve_optimal_affine_with(
    inst: &TwoStageInstance,
    u: &UncertaintySet,
    opts: &LpOptions,
) -> Result<AffineSolution> {
    let start = Instant::now();
    let (lp, lay) = build_affine_lp(inst, u)?;
    let sol = solve_lp_with(&lp, opts)?;
    let solve_time = start.elapsed();
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::InfeasibleModel),
        LpStatus::Unbounded => return Err(Error::InvalidInstance("affine counterpart is unbounded".into())),
    }
    let xs = &sol.primal;
    let p = Matrix::from_fn(lay.n_second, lay.m, |j, k| xs[lay.p_col(j, k)]);
    let policy = AffinePolicy { x: xs[lay.x.clone()].to_vec(), p, q: xs[lay.q.clone()].to_vec() };
    Ok(AffineSolution {
        objective: sol.objective,
        policy,
        z: xs[lay.z],
        v: xs[lay.v.clone()].to_vec(),
        solve_time,
        iterations: sol.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{evaluate_policy, FirstStageSet};

    fn one_dim() -> TwoStageInstance {
        TwoStageInstance::new(Matrix::identity(1), Matrix::identity(1), vec![1.0], vec![1.0], FirstStageSet::orthant(1))
            .unwrap()
    }

    #[test]
    fn layout_column_count() {
        let inst = TwoStageInstance::new(
            Matrix::zeros(3, 2),
            Matrix::zeros(3, 4),
            vec![0.0; 2],
            vec![0.0; 4],
            FirstStageSet::orthant(2),
        )
        .unwrap();
        let u = UncertaintySet::budget(vec![0.5; 3]).unwrap();
        let (lp, lay) = build_affine_lp(&inst, &u).unwrap();
        let l = 4;
        assert_eq!(lay.num_columns(), 2 + 4 * 3 + 4 + 1 + l + l * 4 + l * 3);
        assert_eq!(lp.num_vars(), lay.num_columns());
        assert_eq!(lp.num_rows(), 1 + 3 + 3 + 9 + 4 + 12);
    }

    #[test]
    fn one_dimensional_instance() {
        let inst = one_dim();
        let u = UncertaintySet::budget(vec![1.0]).unwrap();
        let s = solve_optimal_affine(&inst, &u).unwrap();
        assert!((s.objective - 1.0).abs() < 1e-9);
        let rep = evaluate_policy(&inst, &u, &s.policy).unwrap();
        assert!(rep.max_violation() <= 1e-7);
        assert!((rep.worst_case_objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mismatched_set_rejected() {
        let u = UncertaintySet::budget(vec![1.0, 1.0]).unwrap();
        assert!(matches!(build_affine_lp(&one_dim(), &u), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn empty_first_stage_set_is_infeasible() {
        let mut inst = one_dim();
        inst.first_stage = FirstStageSet { f: Matrix::from_rows(&[vec![1.0]], 1).unwrap(), g: vec![2.0], upper: Some(vec![1.0]) };
        let u = UncertaintySet::budget(vec![1.0]).unwrap();
        assert!(matches!(solve_optimal_affine(&inst, &u), Err(Error::InfeasibleModel)));
    }
}
