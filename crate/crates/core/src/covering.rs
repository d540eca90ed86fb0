//! Fractional covering `z(h) = min { d·y : B y ≥ h, y ≥ 0 }` with `B ≥ 0`:
//! offline values, an online multiplicative-update algorithm, the greedy
//! scenario sequence over disjoint blocks, and the dichotomy certificate
//! that either bounds the cost of covering a row set or exhibits a
//! budget-feasible subset that is expensive to cover.

use crate::error::{Error, Result};
use crate::instances::Stream;
use crate::lpkernel::{solve_lp, LpProblem, LpStatus, RowSense};
use crate::model::{Block, Matrix, TwoStageInstance};

#[derive(Clone, Debug, PartialEq)]
pub struct CoveringProblem {
    b: Matrix,
    d: Vec<f64>,
}

impl CoveringProblem {
    pub fn new(b: Matrix, d: Vec<f64>) -> Result<Self> {
        if d.len() != b.cols() {
            return Err(Error::DimensionMismatch(format!("{} costs for {} columns", d.len(), b.cols())));
        }
        if b.as_slice().iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::NotNonnegative);
        }
        if d.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInstance("covering costs must be finite and nonnegative".into()));
        }
        Ok(Self { b, d })
    }

    /// The recourse data `(B, d)` of an instance.
    pub fn from_instance(inst: &TwoStageInstance) -> Result<Self> {
        if !inst.b_nonnegative() {
            return Err(Error::NotNonnegative);
        }
        Self::new(inst.b.clone(), inst.d.clone())
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn m(&self) -> usize {
        self.b.rows()
    }

    pub fn n(&self) -> usize {
        self.b.cols()
    }

    pub fn coverable(&self, i: usize) -> bool {
        self.b.row(i).iter().any(|&v| v > 0.0)
    }

    /// `z(e_i) = min_j d_j / B_ij` over `B_ij > 0`.
    pub fn unit_cost(&self, i: usize) -> Option<f64> {
        self.b
            .row(i)
            .iter()
            .zip(&self.d)
            .filter(|(&b, _)| b > 0.0)
            .map(|(&b, &d)| d / b)
            .min_by(f64::total_cmp)
    }

    /// Indicator of a row set.
    pub fn indicator(&self, rows: &[usize]) -> Vec<f64> {
        let mut h = vec![0.0; self.m()];
        for &i in rows {
            h[i] = 1.0;
        }
        h
    }
}

/// `min { d·y : B y ≥ h, y ≥ 0 }`; rows with `h_i ≤ 0` hold trivially.
fn covering_lp(b: &Matrix, d: &[f64], h: &[f64]) -> Result<(f64, Vec<f64>)> {
    let mut lp = LpProblem::with_cost(d.to_vec());
    for (i, &hi) in h.iter().enumerate() {
        if hi > 0.0 {
            if b.row(i).iter().all(|&v| v <= 0.0) {
                return Err(Error::UncoverableComponent(i));
            }
            lp.add_row(b.row(i).iter().copied().enumerate().filter(|&(_, v)| v > 0.0), RowSense::Ge, hi);
        }
    }
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok((sol.objective, sol.primal)),
        _ => unreachable!("a covering LP with coverable rows is feasible and bounded"),
    }
}

pub fn cover_cost(cp: &CoveringProblem, h: &[f64]) -> Result<(f64, Vec<f64>)> {
    if h.len() != cp.m() {
        return Err(Error::DimensionMismatch(format!("demand of length {} for {} rows", h.len(), cp.m())));
    }
    covering_lp(&cp.b, &cp.d, h)
}

/// Growth of a row's coverage allowed in one multiplicative pass.
const MAX_GROWTH: f64 = 0.1;
const MAX_PASSES: usize = 100_000;

/// Online fractional cover: `y` only grows as requirement sets arrive.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OnlineCoveringState {
    pub y: Vec<f64>,
    /// `d·y`, accumulated from the augmentations.
    pub cost: f64,
    pub history: Vec<Vec<usize>>,
}

impl OnlineCoveringState {
    pub fn new(n: usize) -> Self {
        Self { y: vec![0.0; n], cost: 0.0, history: Vec::new() }
    }

    pub fn coverage(&self, cp: &CoveringProblem, i: usize) -> f64 {
        crate::model::dot(cp.b.row(i), &self.y)
    }

    /// Covers every row of `rows` (in increasing order) and returns the
    /// augmentation cost. Rows already covered cost nothing.
    pub fn step(&mut self, cp: &CoveringProblem, rows: &[usize]) -> Result<f64> {
        if self.y.len() != cp.n() {
            return Err(Error::DimensionMismatch("online state and covering problem differ in columns".into()));
        }
        let mut sorted = rows.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if let Some(&i) = sorted.iter().find(|&&i| i >= cp.m() || !cp.coverable(i)) {
            return Err(if i >= cp.m() {
                Error::DimensionMismatch(format!("row {i} of {}", cp.m()))
            } else {
                Error::UncoverableComponent(i)
            });
        }
        let added = augment_rows(&mut self.y, cp, &sorted);
        self.cost += added;
        self.history.push(sorted);
        Ok(added)
    }
}

/// Functional form of [`OnlineCoveringState::step`].
pub fn online_cover_step(
    state: &OnlineCoveringState,
    cp: &CoveringProblem,
    rows: &[usize],
) -> Result<(OnlineCoveringState, f64)> {
    let mut next = state.clone();
    let cost = next.step(cp, rows)?;
    Ok((next, cost))
}

/// Covers coverable rows in order; returns the added cost.
fn augment_rows(y: &mut [f64], cp: &CoveringProblem, rows: &[usize]) -> f64 {
    rows.iter().map(|&i| cover_row(y, cp, i)).sum()
}

/// Multiplicative update on the columns of row `i`: each pass sets
/// `y_j ← y_j + B_ij·δ·(y_j + 1/n)/d_j`, with `δ` sized so that the row's
/// coverage grows by `min(0.1, 1 − coverage)`.
fn cover_row(y: &mut [f64], cp: &CoveringProblem, i: usize) -> f64 {
    let row = cp.b.row(i);
    let d = &cp.d;
    let cov = |y: &[f64]| crate::model::dot(row, y);
    let mut c = cov(y);
    if c >= 1.0 {
        return 0.0;
    }
    if let Some(j) = (0..row.len()).find(|&j| row[j] > 0.0 && d[j] == 0.0) {
        y[j] += (1.0 - c) / row[j];
        return 0.0;
    }
    let inv_n = 1.0 / cp.n() as f64;
    let mut added = 0.0;
    for _ in 0..MAX_PASSES {
        let speed: f64 = (0..row.len()).filter(|&j| row[j] > 0.0).map(|j| row[j] * row[j] * (y[j] + inv_n) / d[j]).sum();
        let delta = MAX_GROWTH.min(1.0 - c) / speed;
        for j in (0..row.len()).filter(|&j| row[j] > 0.0) {
            let inc = row[j] * delta * (y[j] + inv_n) / d[j];
            y[j] += inc;
            added += d[j] * inc;
        }
        c = cov(y);
        if c >= 1.0 {
            return added;
        }
    }
    // Rounding left the row a hair short; close it on the cheapest column.
    let j = (0..row.len()).filter(|&j| row[j] > 0.0).min_by(|&a, &b| (d[a] / row[a]).total_cmp(&(d[b] / row[b]))).expect("row is coverable");
    let inc = (1.0 - c) / row[j];
    y[j] += inc;
    added + d[j] * inc
}

/// Largest block handled by exhaustive subset search in the greedy oracle.
pub const EXHAUSTIVE_BLOCK: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct GreedyChoice {
    /// 0/1 scenario of length `m`.
    pub scenario: Vec<f64>,
    pub support: Vec<usize>,
    /// Simulated augmentation cost from the current state.
    pub augment: f64,
}

/// The 0/1 scenario of one block whose arrival costs the online algorithm
/// the most. Candidates are the block's rows marked `eligible` and coverable;
/// a scenario must keep the block's load at most 1. Ties go to the
/// lexicographically smallest support.
pub fn greedy_augment_oracle(
    state: &OnlineCoveringState,
    cp: &CoveringProblem,
    block: &Block,
    eligible: &[bool],
) -> GreedyChoice {
    let cand: Vec<(usize, f64)> = block
        .support
        .iter()
        .zip(&block.weights)
        .filter(|&(&i, _)| eligible[i] && cp.coverable(i))
        .map(|(&i, &w)| (i, w))
        .collect();
    let simulate = |rows: &[usize]| {
        let mut y = state.y.clone();
        augment_rows(&mut y, cp, rows)
    };
    let better = |aug: f64, rows: &[usize], best: &GreedyChoice| {
        let tie = 1e-12 * (1.0 + best.augment.abs());
        aug > best.augment + tie || (aug >= best.augment - tie && rows < best.support.as_slice())
    };
    let mut best = GreedyChoice { scenario: Vec::new(), support: Vec::new(), augment: 0.0 };
    if cand.len() <= EXHAUSTIVE_BLOCK {
        for mask in 1u32..(1u32 << cand.len()) {
            let picked: Vec<&(usize, f64)> = (0..cand.len()).filter(|&t| mask >> t & 1 == 1).map(|t| &cand[t]).collect();
            if picked.iter().map(|p| p.1).sum::<f64>() > 1.0 {
                continue;
            }
            let rows: Vec<usize> = picked.iter().map(|p| p.0).collect();
            let aug = simulate(&rows);
            if better(aug, &rows, &best) {
                best.augment = aug;
                best.support = rows;
            }
        }
    } else {
        let mut load = 0.0;
        let mut rows: Vec<usize> = Vec::new();
        loop {
            let mut step: Option<(usize, f64, f64)> = None;
            for &(i, w) in &cand {
                if rows.contains(&i) || load + w > 1.0 {
                    continue;
                }
                let mut trial = rows.clone();
                trial.push(i);
                trial.sort_unstable();
                let gain = simulate(&trial) - best.augment;
                if gain > step.map_or(0.0, |s| s.1) {
                    step = Some((i, gain, w));
                }
            }
            let Some((i, gain, w)) = step else { break };
            rows.push(i);
            rows.sort_unstable();
            load += w;
            best.augment += gain;
            best.support = rows.clone();
        }
    }
    best.scenario = cp.indicator(&best.support);
    best
}

/// Greedy order of block scenarios and the online cost after each round.
#[derive(Clone, Debug, PartialEq)]
pub struct GreedySequence {
    pub scenarios: Vec<Vec<f64>>,
    pub supports: Vec<Vec<usize>>,
    /// Block used in each round.
    pub blocks: Vec<usize>,
    /// `nu[0] = 0` and `nu[r]` is the online cost after round `r`.
    pub prefix_costs: Vec<f64>,
    pub state: OnlineCoveringState,
}

/// Each round commits, among the unused blocks, the scenario with the largest
/// online augmentation (lowest block index on ties).
pub fn build_greedy_sequence(cp: &CoveringProblem, blocks: &[Block], eligible: &[bool]) -> Result<GreedySequence> {
    let mut seen = vec![false; cp.m()];
    for b in blocks {
        for &i in &b.support {
            if i >= cp.m() {
                return Err(Error::DimensionMismatch(format!("block row {i} of {}", cp.m())));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidSet("greedy sequence needs disjoint blocks".into()));
            }
        }
    }
    if eligible.len() != cp.m() {
        return Err(Error::DimensionMismatch("eligibility mask length".into()));
    }
    let mut state = OnlineCoveringState::new(cp.n());
    let mut used = vec![false; blocks.len()];
    let mut seq = GreedySequence { scenarios: Vec::new(), supports: Vec::new(), blocks: Vec::new(), prefix_costs: vec![0.0], state: state.clone() };
    for _ in 0..blocks.len() {
        let mut pick: Option<(usize, GreedyChoice)> = None;
        for (s, b) in blocks.iter().enumerate().filter(|&(s, _)| !used[s]) {
            let choice = greedy_augment_oracle(&state, cp, b, eligible);
            if pick.as_ref().map_or(true, |(_, c)| choice.augment > c.augment) {
                pick = Some((s, choice));
            }
        }
        let (s, choice) = pick.expect("an unused block remains");
        used[s] = true;
        state.step(cp, &choice.support)?;
        seq.prefix_costs.push(state.cost);
        seq.blocks.push(s);
        seq.supports.push(choice.support);
        seq.scenarios.push(choice.scenario);
    }
    seq.state = state;
    Ok(seq)
}

/// `max(ln n, 1) / max(ln max(ln n, 1), 1)`, the guarded `log n / log log n`.
pub fn log_ratio(n: usize) -> f64 {
    let ln = (n.max(1) as f64).ln().max(1.0);
    ln / ln.ln().max(1.0)
}

/// Certificate scale `η = 4·log n / log log n` for `n` columns.
pub fn certificate_scale(n: usize) -> f64 {
    4.0 * log_ratio(n)
}

/// Covering system over rows `J` rescaled so that every column's largest
/// weighted entry is 1: `d̂_j = d_j / (ηγ·M_j)`, `B̂_ij = w_i B_ij / M_j` with
/// `M_j = max_{k∈J} w_k B_kj`. Columns with `M_j = 0` cannot help any row of
/// `J` and are left out.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalized {
    pub rows: Vec<usize>,
    pub weights: Vec<f64>,
    /// Original indices of the kept columns.
    pub columns: Vec<usize>,
    pub excluded: Vec<usize>,
    /// `ηγ`.
    pub scale: f64,
    pub d_hat: Vec<f64>,
    /// `|J| × columns.len()`.
    pub b_hat: Matrix,
}

impl Normalized {
    /// `ẑ(W) = min { d̂·ŷ : (B̂ ŷ)_i ≥ w_i for i ∈ W }`, so that
    /// `z(W) = ηγ·ẑ(W)`. `members` are positions in `rows`.
    pub fn cost(&self, members: &[usize]) -> Result<f64> {
        let mut h = vec![0.0; self.rows.len()];
        for &t in members {
            h[t] = self.weights[t];
        }
        Ok(covering_lp(&self.b_hat, &self.d_hat, &h)?.0)
    }

    /// `max { Σ w_i π_i : B̂ᵀ π ≤ d̂, π ≥ 0 }`, equal to `ẑ(J)`.
    pub fn packing_dual(&self) -> Result<(f64, Vec<f64>)> {
        let k = self.rows.len();
        let mut lp = LpProblem::with_cost(self.weights.iter().map(|w| -w).collect());
        for (c, &dh) in self.d_hat.iter().enumerate() {
            lp.add_row((0..k).map(|t| (t, self.b_hat[(t, c)])), RowSense::Le, dh);
        }
        let sol = solve_lp(&lp)?;
        match sol.status {
            LpStatus::Optimal => Ok((-sol.objective, sol.primal.iter().map(|&v| v.max(0.0)).collect())),
            _ => Err(Error::InvalidInstance("packing dual is not finite; some row of J is uncoverable".into())),
        }
    }

    /// Whether `π` satisfies every packing row within a relative `1e-12`.
    pub fn dual_feasible(&self, pi: &[f64]) -> bool {
        (0..self.columns.len()).all(|c| {
            let lhs: f64 = (0..self.rows.len()).map(|t| self.b_hat[(t, c)] * pi[t]).sum();
            lhs <= self.d_hat[c] * (1.0 + 1e-12)
        })
    }
}

pub fn normalize_rows(cp: &CoveringProblem, rows: &[usize], w: &[f64], threshold: f64) -> Result<Normalized> {
    if rows.len() != w.len() {
        return Err(Error::DimensionMismatch("row set and weights differ in length".into()));
    }
    let scale = certificate_scale(cp.n()) * threshold;
    let (mut columns, mut excluded, mut d_hat, mut maxes) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for j in 0..cp.n() {
        let mj = rows.iter().zip(w).map(|(&i, &wi)| wi * cp.b[(i, j)]).fold(0.0f64, f64::max);
        if mj > 0.0 {
            columns.push(j);
            d_hat.push(cp.d[j] / (scale * mj));
            maxes.push(mj);
        } else {
            excluded.push(j);
        }
    }
    let b_hat = Matrix::from_fn(rows.len(), columns.len(), |t, c| w[t] * cp.b[(rows[t], columns[c])] / maxes[c]);
    Ok(Normalized { rows: rows.to_vec(), weights: w.to_vec(), columns, excluded, scale, d_hat, b_hat })
}

/// Trials of randomized dual rounding before giving up.
pub const MAX_ROUNDING_TRIALS: usize = 1000;

/// One draw `Z_i = ⌊π_i⌋ + Ber(π_i − ⌊π_i⌋)` from stream `trial` of `seed`.
pub fn round_dual(pi: &[f64], seed: u64, trial: u64) -> Vec<u64> {
    let mut rng = Stream::substream(seed, trial);
    pi.iter()
        .map(|&p| {
            let fl = p.floor();
            fl as u64 + u64::from(rng.bernoulli(p - fl))
        })
        .collect()
}

/// Positions of the shortest prefix, in order of decreasing `w_i Z_i`
/// (lowest position on ties), whose `Σ w_i Z_i` exceeds 1/2. Every term is
/// either above 1/2 (a singleton prefix) or at most 1/2 (prefix total at
/// most 1), and `Z_i ≥ 1` on the prefix, so `Σ w_i ≤ 1` over it.
pub fn prefix_members(w: &[f64], z: &[u64]) -> Option<Vec<usize>> {
    let mut order: Vec<usize> = (0..w.len()).filter(|&t| z[t] > 0).collect();
    let val = |t: usize| w[t] * z[t] as f64;
    order.sort_by(|&a, &b| val(b).total_cmp(&val(a)).then(a.cmp(&b)));
    let mut sum = 0.0;
    for (k, &t) in order.iter().enumerate() {
        sum += val(t);
        if sum > 0.5 {
            let mut out = order[..=k].to_vec();
            out.sort_unstable();
            return Some(out);
        }
    }
    None
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RoundingStats {
    pub trials: usize,
    /// Draws with `2Z/η` feasible for the packing dual.
    pub dual_feasible: usize,
    /// Draws with `Σ w_i Z_i > 1/2`.
    pub heavy: usize,
    pub both: usize,
}

pub fn rounding_statistics(norm: &Normalized, pi: &[f64], scale: f64, trials: usize, seed: u64) -> RoundingStats {
    let mut st = RoundingStats { trials, ..Default::default() };
    for t in 0..trials {
        let z = round_dual(pi, seed, t as u64);
        let scaled: Vec<f64> = z.iter().map(|&v| 2.0 * v as f64 / scale).collect();
        let feasible = norm.dual_feasible(&scaled);
        let heavy = norm.weights.iter().zip(&z).map(|(w, &v)| w * v as f64).sum::<f64>() > 0.5;
        st.dual_feasible += usize::from(feasible);
        st.heavy += usize::from(heavy);
        st.both += usize::from(feasible && heavy);
    }
    st
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundingCertificate {
    /// Packing dual optimum `π`, by position in `J`.
    pub dual: Vec<f64>,
    pub rounded: Vec<u64>,
    /// `2Z/η`, feasible for the packing dual.
    pub scaled: Vec<f64>,
    /// Selected rows `W` as original indices.
    pub members: Vec<usize>,
    pub weight: f64,
    pub trial: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    /// `z(J) ≤ ηγ`.
    Bounded { cover_cost: f64 },
    /// `Σ_{i∈W} w_i ≤ 1` and `z(W) > γ`, confirmed by an independent LP.
    ViolatingScenario { members: Vec<usize>, cover_cost: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub verdict: Verdict,
    pub scale: f64,
    pub threshold: f64,
    /// `ẑ(J)`; at most 1 exactly when the verdict is bounded.
    pub dual_value: f64,
    pub normalized: Option<Normalized>,
    pub rounding: Option<RoundingCertificate>,
}

/// Either certifies `z(J) ≤ ηγ` or finds `W ⊆ J` with `Σ_W w_i ≤ 1` and
/// `z(W) > γ`. Requires `z(e_i)/w_i > ηγ` for every `i ∈ J`.
pub fn structural_certificate(cp: &CoveringProblem, rows: &[usize], w: &[f64], threshold: f64, seed: u64) -> Result<Certificate> {
    if rows.len() != w.len() {
        return Err(Error::DimensionMismatch("row set and weights differ in length".into()));
    }
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(Error::InvalidInstance(format!("threshold must be positive, got {threshold}")));
    }
    if let Some(&i) = rows.iter().find(|&&i| i >= cp.m()) {
        return Err(Error::DimensionMismatch(format!("row {i} of {}", cp.m())));
    }
    if w.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
        return Err(Error::InvalidSet("certificate weights must lie in (0, 1]".into()));
    }
    let scale = certificate_scale(cp.n());
    let empty = |verdict| Certificate { verdict, scale, threshold, dual_value: 0.0, normalized: None, rounding: None };
    if rows.is_empty() {
        return Ok(empty(Verdict::Bounded { cover_cost: 0.0 }));
    }
    let bound = scale * threshold;
    for (&i, &wi) in rows.iter().zip(w) {
        let z = cp.unit_cost(i).ok_or(Error::UncoverableComponent(i))?;
        if z / wi <= bound {
            return Err(Error::ConditionOneViolated { index: i, ratio: z / wi, bound });
        }
    }

    let norm = normalize_rows(cp, rows, w, threshold)?;
    let (dual_value, pi) = norm.packing_dual()?;
    if dual_value <= 1.0 {
        let (cover_cost, _) = cover_cost(cp, &cp.indicator(rows))?;
        return Ok(Certificate { dual_value, normalized: Some(norm), ..empty(Verdict::Bounded { cover_cost }) });
    }
    for trial in 0..MAX_ROUNDING_TRIALS {
        let z = round_dual(&pi, seed, trial as u64);
        let scaled: Vec<f64> = z.iter().map(|&v| 2.0 * v as f64 / scale).collect();
        let heavy = w.iter().zip(&z).map(|(wi, &v)| wi * v as f64).sum::<f64>() > 0.5;
        if !heavy || !norm.dual_feasible(&scaled) {
            continue;
        }
        let Some(pos) = prefix_members(w, &z) else { continue };
        let weight: f64 = pos.iter().map(|&t| w[t]).sum();
        if weight > 1.0 {
            continue;
        }
        let members: Vec<usize> = pos.iter().map(|&t| rows[t]).collect();
        let (zw, _) = cover_cost(cp, &cp.indicator(&members))?;
        if zw <= threshold {
            log::warn!("rounded witness failed LP confirmation: z(W) = {zw} ≤ threshold = {threshold}");
            continue;
        }
        let rounding = RoundingCertificate { dual: pi, rounded: z, scaled, members: members.clone(), weight, trial, seed };
        return Ok(Certificate {
            dual_value,
            normalized: Some(norm),
            rounding: Some(rounding),
            ..empty(Verdict::ViolatingScenario { members, cover_cost: zw })
        });
    }
    Err(Error::RoundingExhausted { trials: MAX_ROUNDING_TRIALS, dual_value })
}
