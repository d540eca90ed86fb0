use rayon::prelude::*;

use crate::error::{Error, Result};

use super::{dot, AffinePolicy, SetMaximizer, TwoStageInstance, UncertaintySet};

/// Worst-case cost and robust feasibility of an affine policy.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyReport {
    pub worst_case_objective: f64,
    pub worst_case_scenario: Vec<f64>,
    /// Largest `max(0, h_i − (A x + B y(h))_i)` over rows and scenarios.
    pub max_constraint_violation: f64,
    pub constraint_witness: Option<(usize, Vec<f64>)>,
    /// Largest `max(0, −y_j(h))` over coordinates and scenarios.
    pub max_nonnegativity_violation: f64,
    pub nonnegativity_witness: Option<(usize, Vec<f64>)>,
    /// Largest violation of `x ∈ X`.
    pub first_stage_violation: f64,
}

impl PolicyReport {
    pub fn max_violation(&self) -> f64 {
        self.max_constraint_violation
            .max(self.max_nonnegativity_violation)
            .max(self.first_stage_violation)
    }
}

pub fn evaluate_policy(inst: &TwoStageInstance, u: &UncertaintySet, pol: &AffinePolicy) -> Result<PolicyReport> {
    let (m, nx, ny) = (inst.m(), inst.n_first(), inst.n_second());
    if u.dim() != m || pol.x.len() != nx || pol.q.len() != ny || pol.p.rows() != ny || pol.p.cols() != m {
        return Err(Error::DimensionMismatch("policy, instance and set dimensions disagree".into()));
    }
    let sm = SetMaximizer::new(u);

    let pd = pol.p.tmul_vec(&inst.d);
    let (lin, worst_h) = sm.maximize(&pd)?;
    let worst = dot(&inst.c, &pol.x) + dot(&inst.d, &pol.q) + lin;

    // Row i holds, for every h, (A x + B q)_i + Σ_k ((B P)_ik − δ_ik) h_k ≥ 0.
    let bp = inst.b.matmul(&pol.p);
    let base: Vec<f64> = inst
        .a
        .mul_vec(&pol.x)
        .iter()
        .zip(inst.b.mul_vec(&pol.q))
        .map(|(a, b)| a + b)
        .collect();
    let rows: Vec<(f64, Vec<f64>)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let neg: Vec<f64> = (0..m).map(|k| f64::from(u8::from(i == k)) - bp[(i, k)]).collect();
            let (v, h) = sm.maximize(&neg)?;
            Ok(((v - base[i]).max(0.0), h))
        })
        .collect::<Result<_>>()?;
    let nonneg: Vec<(f64, Vec<f64>)> = (0..ny)
        .into_par_iter()
        .map(|j| {
            let neg: Vec<f64> = pol.p.row(j).iter().map(|v| -v).collect();
            let (v, h) = sm.maximize(&neg)?;
            Ok(((v - pol.q[j]).max(0.0), h))
        })
        .collect::<Result<_>>()?;

    let arg_worst = |list: Vec<(f64, Vec<f64>)>| -> (f64, Option<(usize, Vec<f64>)>) {
        let mut best: (f64, Option<(usize, Vec<f64>)>) = (0.0, None);
        for (i, (v, h)) in list.into_iter().enumerate() {
            if v > best.0 {
                best = (v, Some((i, h)));
            }
        }
        best
    };
    let (max_constraint_violation, constraint_witness) = arg_worst(rows);
    let (max_nonnegativity_violation, nonnegativity_witness) = arg_worst(nonneg);
    Ok(PolicyReport {
        worst_case_objective: worst,
        worst_case_scenario: worst_h,
        max_constraint_violation,
        constraint_witness,
        max_nonnegativity_violation,
        nonnegativity_witness,
        first_stage_violation: inst.first_stage.violation(&pol.x).max(0.0),
    })
}
