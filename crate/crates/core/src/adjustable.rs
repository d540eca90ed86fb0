//! Exact benchmarks at desk scale: vertices of the uncertainty set, the fully
//! adjustable optimum by scenario generation, and static covers.
//!
//! For fixed `x` the recourse value `Q(x, h) = min { d·y : B y ≥ h − A x, y ≥ 0 }`
//! is convex in `h`, so its maximum over a polytope is attained at a vertex.
//! Scanning a superset of the vertices is therefore an exact worst-case
//! oracle; the one-shot test in this module pins the contract down.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::affine::{add_first_stage, check_dims};
use crate::error::{Error, Result};
use crate::lpkernel::{solve_lp_with, LpOptions, LpProblem, LpStatus, RowSense};
use crate::model::{dot, TwoStageInstance, UncertaintySet};

/// Largest dimension handled for budget sets.
pub const MAX_BUDGET_DIM: usize = 16;
/// Largest dimension handled by generic enumeration.
pub const MAX_GENERIC_DIM: usize = 8;
/// Cap on the square systems tried by generic enumeration.
const MAX_GENERIC_SYSTEMS: f64 = 5e6;
const TOL_MEMBER: f64 = 1e-9;

/// Candidate extreme points, sorted lexicographically and free of duplicates.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexSet {
    pub points: Vec<Vec<f64>>,
    /// Every extreme point of the set is listed.
    pub exhaustive: bool,
}

pub fn enumerate_vertices(u: &UncertaintySet) -> Result<VertexSet> {
    let m = u.dim();
    let mut keyed = Points::default();
    match u {
        UncertaintySet::Budget { w } => {
            if m > MAX_BUDGET_DIM {
                return Err(Error::TooLarge(format!("budget set of dimension {m} (limit {MAX_BUDGET_DIM})")));
            }
            for mask in 0u32..(1u32 << m) {
                let load: f64 = (0..m).filter(|&i| mask >> i & 1 == 1).map(|i| w[i]).sum();
                if load > 1.0 + TOL_MEMBER {
                    continue;
                }
                let base: Vec<f64> = (0..m).map(|i| f64::from(mask >> i & 1)).collect();
                keyed.insert(base.clone());
                for j in (0..m).filter(|&j| mask >> j & 1 == 0 && w[j] > 0.0) {
                    let hj = ((1.0 - load) / w[j]).min(1.0);
                    if hj > 0.0 {
                        let mut h = base.clone();
                        h[j] = hj;
                        keyed.insert(h);
                    }
                }
            }
        }
        _ => generic_vertices(u, &mut keyed)?,
    }
    Ok(VertexSet { points: keyed.into_points(), exhaustive: true })
}

/// Points deduplicated on a `1e-9` grid, kept in key order.
#[derive(Default)]
struct Points(BTreeMap<Vec<i64>, Vec<f64>>);

impl Points {
    fn insert(&mut self, h: Vec<f64>) {
        let key = h.iter().map(|&v| (v * 1e9).round() as i64).collect();
        self.0.entry(key).or_insert(h);
    }

    fn into_points(self) -> Vec<Vec<f64>> {
        self.0.into_values().collect()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Every coordinate is at 0, at 1, or free; the `k` free coordinates are
/// pinned by `k` tight budget rows.
fn generic_vertices(u: &UncertaintySet, out: &mut Points) -> Result<()> {
    let m = u.dim();
    let rows = u.budget_rows();
    let l = rows.len();
    let systems: f64 = (0..=m).map(|k| binomial(m, k) * 2f64.powi((m - k) as i32) * binomial(l, k)).sum();
    if m > MAX_GENERIC_DIM || systems > MAX_GENERIC_SYSTEMS {
        return Err(Error::TooLarge(format!("vertex enumeration in dimension {m} with {l} rows")));
    }
    let mut state = vec![0u8; m]; // 0: at zero, 1: at one, 2: free
    loop {
        let free: Vec<usize> = (0..m).filter(|&i| state[i] == 2).collect();
        let fixed: Vec<f64> = state.iter().map(|&s| f64::from(u8::from(s == 1))).collect();
        let resid: Vec<f64> = rows.iter().map(|r| 1.0 - dot(r, &fixed)).collect();
        if free.is_empty() {
            if u.contains(&fixed, TOL_MEMBER) {
                out.insert(fixed);
            }
        } else {
            let touching: Vec<usize> = (0..l).filter(|&r| free.iter().any(|&i| rows[r][i] != 0.0)).collect();
            for_each_subset(touching.len(), free.len(), |pick| {
                let a: Vec<Vec<f64>> = pick.iter().map(|&t| free.iter().map(|&i| rows[touching[t]][i]).collect()).collect();
                let b: Vec<f64> = pick.iter().map(|&t| resid[touching[t]]).collect();
                if let Some(sol) = solve_dense(a, b) {
                    let mut h = fixed.clone();
                    for (&i, &v) in free.iter().zip(&sol) {
                        h[i] = v;
                    }
                    if u.contains(&h, TOL_MEMBER) {
                        h.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
                        out.insert(h);
                    }
                }
            });
        }
        // Next assignment in base 3.
        let mut i = 0;
        while i < m && state[i] == 2 {
            state[i] = 0;
            i += 1;
        }
        if i == m {
            return Ok(());
        }
        state[i] += 1;
    }
}

/// Calls `f` on every increasing `k`-subset of `0..n`.
pub(crate) fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(t) = (0..k).rev().find(|&t| idx[t] < n - k + t) else { return };
        idx[t] += 1;
        for s in t + 1..k {
            idx[s] = idx[s - 1] + 1;
        }
    }
}

/// Gaussian elimination with partial pivoting; `None` when (nearly) singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-12 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            if f != 0.0 {
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for c in (0..n).rev() {
        let s: f64 = (c + 1..n).map(|k| a[c][k] * x[k]).sum();
        x[c] = (b[c] - s) / a[c][c];
    }
    Some(x)
}

/// `Q(x, h)` for many scenarios against one instance.
pub struct RecourseOracle {
    template: LpProblem,
}

impl RecourseOracle {
    pub fn new(inst: &TwoStageInstance) -> Self {
        let mut template = LpProblem::with_cost(inst.d.clone());
        for i in 0..inst.m() {
            let coeffs = inst.b.row(i).iter().copied().enumerate().filter(|&(_, v)| v != 0.0);
            template.add_row(coeffs, RowSense::Ge, 0.0);
        }
        Self { template }
    }

    /// Cheapest recourse for residual demand `h − A x`; `None` when infeasible.
    pub fn value(&self, residual: &[f64], opts: &LpOptions) -> Result<Option<(f64, Vec<f64>)>> {
        let mut lp = self.template.clone();
        for (row, &rhs) in lp.rows.iter_mut().zip(residual) {
            row.rhs = rhs;
        }
        let sol = solve_lp_with(&lp, opts)?;
        Ok(match sol.status {
            LpStatus::Optimal => Some((sol.objective, sol.primal)),
            LpStatus::Infeasible => None,
            LpStatus::Unbounded => unreachable!("recourse costs are nonnegative"),
        })
    }
}

#[derive(Clone, Debug)]
pub struct AdjustableSolution {
    /// `c·x + max_h Q(x, h)` at the returned `x`.
    pub objective: f64,
    pub x: Vec<f64>,
    /// Worst vertex for `x`, lowest index among ties.
    pub worst_case: Vec<f64>,
    /// Final master value; never above `objective` by more than the gap.
    pub lower_bound: f64,
    pub scenarios: Vec<Vec<f64>>,
    pub iterations: usize,
}

pub fn solve_adjustable(inst: &TwoStageInstance, u: &UncertaintySet) -> Result<AdjustableSolution> {
    solve_adjustable_with(inst, u, &LpOptions::default())
}

struct Cut {
    h: Vec<f64>,
    /// Links the scenario's recourse cost to the epigraph variable.
    priced: bool,
}

/// Master LP: `min c·x + z` over stored scenarios, each with its own recourse.
fn solve_master(inst: &TwoStageInstance, cuts: &[Cut], opts: &LpOptions) -> Result<Option<(f64, Vec<f64>, f64)>> {
    let (nx, ny) = (inst.n_first(), inst.n_second());
    let mut lp = LpProblem::with_cost(inst.c.clone());
    let z = lp.add_var(1.0, 0.0, f64::INFINITY);
    add_first_stage(&mut lp, inst, 0);
    for cut in cuts {
        let y0 = lp.num_vars();
        for _ in 0..ny {
            lp.add_var(0.0, 0.0, f64::INFINITY);
        }
        if cut.priced {
            let coeffs = std::iter::once((z, 1.0)).chain(inst.d.iter().enumerate().map(|(j, &dj)| (y0 + j, -dj)));
            lp.add_row(coeffs, RowSense::Ge, 0.0);
        }
        for i in 0..inst.m() {
            let a = inst.a.row(i).iter().copied().enumerate();
            let b = inst.b.row(i).iter().enumerate().map(|(j, &v)| (y0 + j, v));
            lp.add_row(a.chain(b), RowSense::Ge, cut.h[i]);
        }
    }
    let sol = solve_lp_with(&lp, opts)?;
    Ok(match sol.status {
        LpStatus::Optimal => Some((sol.objective, sol.primal[..nx].to_vec(), sol.primal[z])),
        LpStatus::Infeasible => None,
        LpStatus::Unbounded => unreachable!("costs are nonnegative and variables bounded below"),
    })
}

pub fn solve_adjustable_with(inst: &TwoStageInstance, u: &UncertaintySet, opts: &LpOptions) -> Result<AdjustableSolution> {
    check_dims(inst, u)?;
    let vertices = enumerate_vertices(u)?.points;
    let oracle = RecourseOracle::new(inst);
    // Start from the vertex with the largest total demand.
    let first = (0..vertices.len())
        .max_by(|&a, &b| vertices[a].iter().sum::<f64>().total_cmp(&vertices[b].iter().sum::<f64>()).then(b.cmp(&a)))
        .expect("the origin is always a vertex");
    let mut cuts = vec![Cut { h: vertices[first].clone(), priced: true }];
    let mut iterations = 0;
    loop {
        iterations += 1;
        let Some((lower_bound, x, z)) = solve_master(inst, &cuts, opts)? else {
            return Err(Error::RecourseInfeasible);
        };
        let ax = inst.a.mul_vec(&x);
        let values: Vec<Option<f64>> = vertices
            .par_iter()
            .map(|h| {
                let resid: Vec<f64> = h.iter().zip(&ax).map(|(hi, axi)| hi - axi).collect();
                Ok(oracle.value(&resid, opts)?.map(|(q, _)| q))
            })
            .collect::<Result<_>>()?;

        if let Some(k) = values.iter().position(Option::is_none) {
            if cuts.iter().any(|c| c.h == vertices[k]) {
                return Err(Error::RecourseInfeasible);
            }
            cuts.push(Cut { h: vertices[k].clone(), priced: false });
            continue;
        }
        let mut worst = 0;
        for (k, v) in values.iter().enumerate() {
            if v.unwrap() > values[worst].unwrap() {
                worst = k;
            }
        }
        let q = values[worst].unwrap();
        let objective = dot(&inst.c, &x) + q;
        let tol_gap = 1e-6 * (1.0 + objective.abs());
        let stored = cuts.iter().any(|c| c.priced && c.h == vertices[worst]);
        if q <= z + tol_gap || stored {
            log::debug!("scenario generation finished after {iterations} masters, {} scenarios", cuts.len());
            return Ok(AdjustableSolution {
                objective,
                x,
                worst_case: vertices[worst].clone(),
                lower_bound,
                scenarios: cuts.into_iter().map(|c| c.h).collect(),
                iterations,
            });
        }
        match cuts.iter_mut().find(|c| c.h == vertices[worst]) {
            Some(c) => c.priced = true,
            None => cuts.push(Cut { h: vertices[worst].clone(), priced: true }),
        }
    }
}

#[derive(Clone, Debug)]
pub struct StaticSolution {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub cost: f64,
}

/// Cheapest `(x, y)` with `A x + B y ≥ target`, `x ∈ X`, `y ≥ 0`.
pub fn solve_static(inst: &TwoStageInstance, target: &[f64]) -> Result<StaticSolution> {
    if target.len() != inst.m() {
        return Err(Error::DimensionMismatch(format!("target of length {} for {} rows", target.len(), inst.m())));
    }
    let (nx, ny) = (inst.n_first(), inst.n_second());
    let mut lp = LpProblem::with_cost(inst.c.iter().chain(&inst.d).copied().collect());
    add_first_stage(&mut lp, inst, 0);
    for (i, &t) in target.iter().enumerate() {
        let a = inst.a.row(i).iter().copied().enumerate();
        let b = inst.b.row(i).iter().enumerate().map(|(j, &v)| (nx + j, v));
        lp.add_row(a.chain(b), RowSense::Ge, t);
    }
    let sol = solve_lp_with(&lp, &LpOptions::default())?;
    match sol.status {
        LpStatus::Optimal => Ok(StaticSolution {
            x: sol.primal[..nx].to_vec(),
            y: sol.primal[nx..nx + ny].to_vec(),
            cost: sol.objective,
        }),
        _ => Err(Error::InfeasibleModel),
    }
}
