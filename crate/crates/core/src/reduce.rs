//! Single-budget surrogates sandwiching an intersection of budgets.
//!
//! A certificate records `s_in·V ⊆ U ⊆ s_out·V` for a budget set `V`. Each
//! inclusion is checked row by row: the outer set's rows, box rows included,
//! are maximized over the inner set. With a conic first-stage set the
//! inclusions transfer affine-policy costs between `U` and `V`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{as_polyhedron, dot, max_linear, SetMaximizer, UncertaintySet};

/// Absolute slack allowed on each verified inclusion row.
pub const INCLUSION_TOL: f64 = 1e-7;

/// Random points tried by the permutation spot-check.
const SPOT_CHECKS: usize = 16;

/// One verified inclusion `inner_scale·inner ⊆ outer_scale·outer`.
#[derive(Clone, Debug, PartialEq)]
pub struct InclusionCheck {
    pub inner_scale: f64,
    pub outer_scale: f64,
    /// Largest `inner_scale·max ρ·h − outer_scale·r_ρ` over outer rows `(ρ, r_ρ)`.
    pub worst_excess: f64,
}

impl InclusionCheck {
    pub fn holds(&self) -> bool {
        self.worst_excess <= INCLUSION_TOL
    }
}

/// `inner_scale·inner ⊆ outer_scale·outer`, one LP per outer row.
pub fn check_inclusion(
    inner: &UncertaintySet,
    inner_scale: f64,
    outer: &UncertaintySet,
    outer_scale: f64,
) -> Result<InclusionCheck> {
    if inner.dim() != outer.dim() {
        return Err(Error::DimensionMismatch("inclusion between sets of different dimension".into()));
    }
    let sm = SetMaximizer::new(inner);
    let (rmat, r) = as_polyhedron(outer);
    let mut worst_excess = f64::NEG_INFINITY;
    for l in 0..rmat.rows() {
        let (v, _) = sm.maximize(rmat.row(l))?;
        worst_excess = worst_excess.max(inner_scale * v - outer_scale * r[l]);
    }
    Ok(InclusionCheck { inner_scale, outer_scale, worst_excess })
}

/// The accepted draw of the sampling reduction.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingRecord {
    /// `max e·h / m` over the input set.
    pub inclusion_prob: f64,
    pub sample: Vec<bool>,
    /// Draws rejected before the accepted one.
    pub retries: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SandwichCertificate {
    pub inner_scale: f64,
    pub outer_scale: f64,
    pub surrogate: UncertaintySet,
    /// `inner_scale·V ⊆ U`.
    pub lower: InclusionCheck,
    /// `U ⊆ outer_scale·V`.
    pub upper: InclusionCheck,
    pub sampling: Option<SamplingRecord>,
}

impl SandwichCertificate {
    fn build(u: &UncertaintySet, v: UncertaintySet, s_in: f64, s_out: f64, sampling: Option<SamplingRecord>) -> Result<Self> {
        let lower = check_inclusion(&v, s_in, u, 1.0)?;
        let upper = check_inclusion(u, 1.0, &v, s_out)?;
        Ok(Self { inner_scale: s_in, outer_scale: s_out, surrogate: v, lower, upper, sampling })
    }

    pub fn holds(&self) -> bool {
        self.lower.holds() && self.upper.holds()
    }

    /// Re-runs both inclusion LPs against `u`.
    pub fn verify(&self, u: &UncertaintySet) -> Result<bool> {
        let lower = check_inclusion(&self.surrogate, self.inner_scale, u, 1.0)?;
        let upper = check_inclusion(u, 1.0, &self.surrogate, self.outer_scale)?;
        Ok(lower.holds() && upper.holds())
    }
}

/// `ln L` floored at 1.
pub fn guarded_log(l: usize) -> f64 {
    (l as f64).ln().max(1.0)
}

/// Averages the budget rows: `U ⊆ V ⊆ L·U`, i.e. scales `(1/L, 1)`.
pub fn reduce_average(u: &UncertaintySet) -> Result<(UncertaintySet, SandwichCertificate)> {
    let rows = u.budget_rows();
    let m = u.dim();
    let l = rows.len().max(1);
    let mut w = vec![0.0; m];
    for row in &rows {
        for (a, b) in w.iter_mut().zip(row) {
            *a += b / l as f64;
        }
    }
    let v = UncertaintySet::budget(w)?;
    let cert = SandwichCertificate::build(u, v.clone(), 1.0 / l as f64, 1.0, None)?;
    Ok((v, cert))
}

/// Feasible points of `u` pushed through random permutations must stay in `u`.
fn spot_check_permutations(u: &UncertaintySet, rng: &mut ChaCha8Rng) -> Result<()> {
    let m = u.dim();
    let sm = SetMaximizer::new(u);
    let mut perm: Vec<usize> = (0..m).collect();
    for _ in 0..SPOT_CHECKS {
        let a: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
        let (_, h) = sm.maximize(&a)?;
        perm.shuffle(rng);
        let hp: Vec<f64> = perm.iter().map(|&j| h[j]).collect();
        if !u.contains(&hp, INCLUSION_TOL) {
            return Err(Error::NotPermutationInvariant);
        }
    }
    Ok(())
}

/// Rejection-samples `Ṽ = {h ∈ [0,1]^m : Σh ≤ Σξ}` with `ξ_i ~ Ber(γ)` until
/// `max e·h ≤ 2Σξ`, every row has `w_ℓ·ξ ≤ 4·ln L`, and both inclusions
/// verify. Scales are `(1/(4·ln L), 2)`, with `ln L` floored at 1.
pub fn reduce_permutation_invariant(
    u: &UncertaintySet,
    seed: u64,
    max_retries: usize,
) -> Result<(UncertaintySet, SandwichCertificate)> {
    let m = u.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    spot_check_permutations(u, &mut rng)?;
    let rows = u.budget_rows();
    let log_l = guarded_log(rows.len());
    let (top, _) = max_linear(u, &vec![1.0; m])?;
    let inclusion_prob = (top / m as f64).clamp(0.0, 1.0);
    let mut sample_f = vec![0.0; m];
    for retries in 0..max_retries {
        let sample: Vec<bool> = (0..m).map(|_| rng.gen_bool(inclusion_prob)).collect();
        let k = sample.iter().filter(|&&b| b).count();
        if k == 0 || top > 2.0 * k as f64 {
            continue;
        }
        for (f, &b) in sample_f.iter_mut().zip(&sample) {
            *f = if b { 1.0 } else { 0.0 };
        }
        if rows.iter().any(|w| dot(w, &sample_f) > 4.0 * log_l) {
            continue;
        }
        let v = UncertaintySet::budget(vec![1.0 / k as f64; m])?;
        let record = SamplingRecord { inclusion_prob, sample, retries };
        let cert = SandwichCertificate::build(u, v.clone(), 1.0 / (4.0 * log_l), 2.0, Some(record))?;
        if cert.holds() {
            return Ok((v, cert));
        }
    }
    Err(Error::SamplingExhausted(max_retries))
}

#[cfg(test)]
mod tests;
