//! Constructive affine policies built from an optimal adjustable first stage.
//!
//! Both constructions split the rows by a cost threshold. With
//! `α_i = 1 − (A x*)_i`, cheap rows get the linear recourse `α_i h_i v_i`,
//! where `v_i` is the cheapest single-variable cover of row `i`; a static
//! cover handles every other row together with the leftover `(1 − α_i)⁺`
//! of the cheap ones. For `h ≤ 1` this covers `α_i h_i + (1 − α_i)⁺ ≥ h_i`.

use crate::adjustable::{solve_static, StaticSolution};
use crate::covering::{build_greedy_sequence, log_ratio, CoveringProblem, GreedySequence};
use crate::error::{Error, Result};
use crate::fastaffine::ColumnBasis;
use crate::model::{dot, max_linear, AffinePolicy, Matrix, TwoStageInstance, UncertaintySet};

/// `β = 4·log n / log log n` with the logarithm guards of [`log_ratio`].
pub fn budget_threshold(n: usize) -> f64 {
    4.0 * log_ratio(n)
}

/// `β = 8·log n / log log n`, the disjoint-blocks threshold.
pub fn disjoint_threshold(n: usize) -> f64 {
    8.0 * log_ratio(n)
}

#[derive(Clone, Debug)]
pub struct ConstructionState {
    pub x_star: Vec<f64>,
    pub opt: f64,
    pub alpha: Vec<f64>,
    pub threshold_scale: f64,
    /// Rows covered by the linear part.
    pub inexpensive: Vec<usize>,
    pub expensive: Vec<usize>,
    pub basis: ColumnBasis,
    pub static_target: Vec<f64>,
    /// `c·x + d·q` of the static part.
    pub static_cost: f64,
    /// `max_{h∈U} d·P h`.
    pub linear_cost: f64,
}

impl ConstructionState {
    /// Worst-case cost of the constructed policy.
    pub fn total_cost(&self) -> f64 {
        self.static_cost + self.linear_cost
    }
}

fn residual_alpha(inst: &TwoStageInstance, x_star: &[f64]) -> Result<Vec<f64>> {
    if x_star.len() != inst.n_first() {
        return Err(Error::DimensionMismatch(format!("x* has {} entries for {} first-stage variables", x_star.len(), inst.n_first())));
    }
    Ok(inst.a.mul_vec(x_star).iter().map(|ax| 1.0 - ax).collect())
}

/// `α_i z(e_i) / w_i`, with a zero weight making any positive cost infinite.
fn weighted_unit_cost(alpha: f64, unit_cost: f64, w: f64) -> f64 {
    let num = alpha * unit_cost;
    if w > 0.0 {
        num / w
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

struct Assembled {
    policy: AffinePolicy,
    target: Vec<f64>,
    stat: StaticSolution,
    linear_cost: f64,
}

fn assemble(
    inst: &TwoStageInstance,
    u: &UncertaintySet,
    alpha: &[f64],
    inexpensive: &[usize],
    basis: &ColumnBasis,
) -> Result<Assembled> {
    let m = inst.m();
    let mut target = vec![1.0; m];
    let mut p = Matrix::zeros(inst.n_second(), m);
    for &i in inexpensive {
        target[i] = (1.0 - alpha[i]).max(0.0);
        p[(basis.support[i], i)] = alpha[i] * basis.value[i];
    }
    let stat = solve_static(inst, &target)?;
    let (linear_cost, _) = max_linear(u, &p.tmul_vec(&inst.d))?;
    let policy = AffinePolicy { x: stat.x.clone(), p, q: stat.y.clone() };
    Ok(Assembled { policy, target, stat, linear_cost })
}

/// Threshold policy for a single budget set. Rows with `α_i > 0` and
/// `α_i z(e_i)/w_i ≤ β·OPT` (ties included) are inexpensive.
pub fn construct_affine_budget(
    inst: &TwoStageInstance,
    u: &UncertaintySet,
    x_star: &[f64],
    opt: f64,
) -> Result<(AffinePolicy, ConstructionState)> {
    let UncertaintySet::Budget { w } = u else {
        return Err(Error::Unsupported("a single budget uncertainty set".into()));
    };
    crate::affine::check_dims(inst, u)?;
    if !inst.b_nonnegative() {
        return Err(Error::NotNonnegative);
    }
    let alpha = residual_alpha(inst, x_star)?;
    let basis = ColumnBasis::build(inst)?;
    let threshold_scale = budget_threshold(inst.n_second());
    let (inexpensive, expensive): (Vec<usize>, Vec<usize>) = (0..inst.m())
        .partition(|&i| alpha[i] > 0.0 && weighted_unit_cost(alpha[i], basis.unit_costs[i], w[i]) <= threshold_scale * opt);
    let a = assemble(inst, u, &alpha, &inexpensive, &basis)?;
    let state = ConstructionState {
        x_star: x_star.to_vec(),
        opt,
        alpha,
        threshold_scale,
        inexpensive,
        expensive,
        basis,
        static_target: a.target,
        static_cost: a.stat.cost,
        linear_cost: a.linear_cost,
    };
    Ok((a.policy, state))
}

#[derive(Clone, Debug)]
pub struct DisjointConstructionState {
    pub x_star: Vec<f64>,
    pub alpha: Vec<f64>,
    pub threshold_scale: f64,
    /// Rows with `α_i ≤ 0`, already covered by the first stage.
    pub nonpositive: Vec<usize>,
    pub sequence: GreedySequence,
    /// `β·(ν_r − ν_{r−1})` for each block, `r` being the round that used it.
    pub thresholds: Vec<f64>,
    /// Inexpensive rows of each block.
    pub block_rows: Vec<Vec<usize>>,
    pub inexpensive: Vec<usize>,
    pub expensive: Vec<usize>,
    /// Rows with `α_i > 0` that the online cover meets to at least 1/2.
    pub half_covered: Vec<usize>,
    /// Expensive rows outside `nonpositive` and `half_covered`.
    pub remaining: Vec<usize>,
    pub basis: ColumnBasis,
    pub static_target: Vec<f64>,
    pub static_cost: f64,
    pub linear_cost: f64,
}

impl DisjointConstructionState {
    /// Final online cost `ν_L`.
    pub fn sequence_cost(&self) -> f64 {
        *self.sequence.prefix_costs.last().expect("prefix costs start at zero")
    }

    pub fn total_cost(&self) -> f64 {
        self.static_cost + self.linear_cost
    }
}

/// Threshold policy for disjoint blocks: the online cover runs on the rows
/// rescaled by `1/α_i`, the greedy block sequence sets one threshold per
/// block, and rows of a block with `α_i z(e_i)/w_i` under it are inexpensive.
pub fn construct_affine_disjoint(
    inst: &TwoStageInstance,
    u: &UncertaintySet,
    x_star: &[f64],
) -> Result<(AffinePolicy, DisjointConstructionState)> {
    let UncertaintySet::IntersectionBudgets { blocks, disjoint: true, .. } = u else {
        return Err(Error::Unsupported("disjoint budget blocks".into()));
    };
    crate::affine::check_dims(inst, u)?;
    if !inst.b_nonnegative() {
        return Err(Error::NotNonnegative);
    }
    let m = inst.m();
    let alpha = residual_alpha(inst, x_star)?;
    let basis = ColumnBasis::build(inst)?;
    let threshold_scale = disjoint_threshold(inst.n_second());
    let eligible: Vec<bool> = alpha.iter().map(|&a| a > 0.0).collect();

    let mut scaled = inst.b.clone();
    for i in (0..m).filter(|&i| eligible[i]) {
        scaled.row_mut(i).iter_mut().for_each(|v| *v /= alpha[i]);
    }
    let cp = CoveringProblem::new(scaled, inst.d.clone())?;
    let sequence = build_greedy_sequence(&cp, blocks, &eligible)?;

    let mut thresholds = vec![0.0; blocks.len()];
    for (r, &s) in sequence.blocks.iter().enumerate() {
        thresholds[s] = threshold_scale * (sequence.prefix_costs[r + 1] - sequence.prefix_costs[r]);
    }
    let block_rows: Vec<Vec<usize>> = blocks
        .iter()
        .zip(&thresholds)
        .map(|(b, &t)| {
            b.support
                .iter()
                .zip(&b.weights)
                .filter(|&(&i, &w)| eligible[i] && weighted_unit_cost(alpha[i], basis.unit_costs[i], w) <= t)
                .map(|(&i, _)| i)
                .collect()
        })
        .collect();
    let mut inexpensive: Vec<usize> = block_rows.concat();
    inexpensive.sort_unstable();
    let mut is_cheap = vec![false; m];
    for &i in &inexpensive {
        is_cheap[i] = true;
    }
    let expensive: Vec<usize> = (0..m).filter(|&i| !is_cheap[i]).collect();
    let nonpositive: Vec<usize> = (0..m).filter(|&i| !eligible[i]).collect();
    let half_covered: Vec<usize> = (0..m).filter(|&i| eligible[i] && sequence.state.coverage(&cp, i) >= 0.5).collect();
    let remaining: Vec<usize> =
        expensive.iter().copied().filter(|&i| eligible[i] && sequence.state.coverage(&cp, i) < 0.5).collect();

    let a = assemble(inst, u, &alpha, &inexpensive, &basis)?;
    let state = DisjointConstructionState {
        x_star: x_star.to_vec(),
        alpha,
        threshold_scale,
        nonpositive,
        sequence,
        thresholds,
        block_rows,
        inexpensive,
        expensive,
        half_covered,
        remaining,
        basis,
        static_target: a.target,
        static_cost: a.stat.cost,
        linear_cost: a.linear_cost,
    };
    debug_assert!((dot(&inst.c, &a.policy.x) + dot(&inst.d, &a.policy.q) - state.static_cost).abs() <= 1e-9 * (1.0 + state.static_cost));
    Ok((a.policy, state))
}

#[cfg(test)]
mod tests;
