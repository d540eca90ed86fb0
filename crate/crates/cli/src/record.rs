use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use anyhow::Context;
use aro_core::adjustable::{solve_adjustable_with, solve_static};
use aro_core::affine::solve_optimal_affine_with;
use aro_core::construct::{construct_affine_budget, construct_affine_disjoint};
use aro_core::fastaffine::solve_fast_affine_with;
use aro_core::lpkernel::{LpError, LpOptions};
use aro_core::model::{evaluate_policy, InstanceFile, SetMaximizer};
use aro_core::{Error, TwoStageInstance, UncertaintySet};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Affine,
    Fast,
    Adjustable,
    Static,
    Construct,
    ConstructDisjoint,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Affine => "affine",
            Method::Fast => "fast",
            Method::Adjustable => "adjustable",
            Method::Static => "static",
            Method::Construct => "construct",
            Method::ConstructDisjoint => "construct-disjoint",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    TimeLimit,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub code: String,
    pub message: String,
}

impl From<&Error> for ErrorInfo {
    fn from(e: &Error) -> Self {
        Self { code: e.code().into(), message: e.to_string() }
    }
}

/// One solve, as printed by `aro solve`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub method: Method,
    /// `None` unless the status is optimal.
    pub objective: Option<f64>,
    pub time_s: f64,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Value>,
}

/// Nine significant digits.
pub fn sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

/// Seconds to the millisecond.
pub fn secs3(d: Duration) -> f64 {
    (d.as_secs_f64() * 1000.0).round() / 1000.0
}

pub fn lp_options(time_cap: Option<Duration>) -> LpOptions {
    LpOptions { deadline: time_cap.map(|c| Instant::now() + c), ..LpOptions::default() }
}

pub struct LoadedInstance {
    pub id: String,
    pub family: Option<String>,
    pub seed: Option<u64>,
    pub inst: TwoStageInstance,
    pub u: UncertaintySet,
}

pub fn load_instance(path: &Path) -> anyhow::Result<LoadedInstance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file = InstanceFile::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    let meta = file.meta.clone().unwrap_or(Value::Null);
    let (inst, u) = file.into_model().with_context(|| format!("loading {}", path.display()))?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(LoadedInstance {
        id: meta["id"].as_str().map_or(stem, str::to_owned),
        family: meta["family"].as_str().map(str::to_owned),
        seed: meta["seed"].as_u64(),
        inst,
        u,
    })
}

/// Row-wise maxima of the set: the cover a static policy must provide.
fn static_target(u: &UncertaintySet) -> aro_core::Result<Vec<f64>> {
    let m = u.dim();
    let sm = SetMaximizer::new(u);
    (0..m)
        .map(|i| {
            let mut e = vec![0.0; m];
            e[i] = 1.0;
            Ok(sm.maximize(&e)?.0)
        })
        .collect()
}

fn run_method(li: &LoadedInstance, method: Method, opts: &LpOptions) -> aro_core::Result<(f64, Option<Value>)> {
    let (inst, u) = (&li.inst, &li.u);
    match method {
        Method::Affine => {
            let s = solve_optimal_affine_with(inst, u, opts)?;
            Ok((s.objective, Some(json!({ "iterations": s.iterations }))))
        }
        Method::Fast => {
            let s = solve_fast_affine_with(inst, u, opts)?;
            Ok((s.objective, Some(json!({ "iterations": s.iterations }))))
        }
        Method::Adjustable => {
            let s = solve_adjustable_with(inst, u, opts)?;
            let cert = json!({
                "lower_bound": sig9(s.lower_bound),
                "scenarios": s.scenarios.len(),
                "iterations": s.iterations,
            });
            Ok((s.objective, Some(cert)))
        }
        Method::Static => {
            let s = solve_static(inst, &static_target(u)?)?;
            Ok((s.cost, None))
        }
        Method::Construct => {
            if !matches!(u, UncertaintySet::Budget { .. }) {
                return Err(Error::Unsupported("a single budget uncertainty set".into()));
            }
            if !inst.b_nonnegative() {
                return Err(Error::NotNonnegative);
            }
            let adj = solve_adjustable_with(inst, u, opts)?;
            let (pol, st) = construct_affine_budget(inst, u, &adj.x, adj.objective)?;
            let rep = evaluate_policy(inst, u, &pol)?;
            let cert = json!({
                "threshold_scale": sig9(st.threshold_scale),
                "opt": sig9(st.opt),
                "inexpensive": st.inexpensive.len(),
                "static_cost": sig9(st.static_cost),
                "linear_cost": sig9(st.linear_cost),
                "bound": sig9((1.0 + 2.0 * st.threshold_scale) * st.opt),
                "max_violation": rep.max_violation(),
            });
            Ok((st.total_cost(), Some(cert)))
        }
        Method::ConstructDisjoint => {
            if !matches!(u, UncertaintySet::IntersectionBudgets { disjoint: true, .. }) {
                return Err(Error::Unsupported("disjoint budget blocks".into()));
            }
            if !inst.b_nonnegative() {
                return Err(Error::NotNonnegative);
            }
            let adj = solve_adjustable_with(inst, u, opts)?;
            let (pol, st) = construct_affine_disjoint(inst, u, &adj.x)?;
            let rep = evaluate_policy(inst, u, &pol)?;
            let nu = st.sequence_cost();
            let cert = json!({
                "threshold_scale": sig9(st.threshold_scale),
                "opt": sig9(adj.objective),
                "sequence_cost": sig9(nu),
                "inexpensive": st.inexpensive.len(),
                "static_cost": sig9(st.static_cost),
                "linear_cost": sig9(st.linear_cost),
                "bound": sig9(adj.objective + (2.0 + 2.0 * st.threshold_scale) * nu),
                "max_violation": rep.max_violation(),
            });
            Ok((st.total_cost(), Some(cert)))
        }
    }
}

/// Runs one method; solver failures become error-status records.
pub fn solve(li: &LoadedInstance, method: Method, time_cap: Option<Duration>) -> RunRecord {
    let start = Instant::now();
    let result = run_method(li, method, &lp_options(time_cap));
    let time_s = secs3(start.elapsed());
    let mut rec = RunRecord {
        instance: li.id.clone(),
        method,
        objective: None,
        time_s,
        status: Status::Optimal,
        family: li.family.clone(),
        m: li.inst.m(),
        seed: li.seed,
        error: None,
        certificate: None,
    };
    match result {
        Ok((obj, cert)) => {
            rec.objective = Some(sig9(obj));
            rec.certificate = cert;
        }
        Err(e) => {
            log::warn!("{} on {}: {e}", method.name(), li.id);
            rec.status = if matches!(e, Error::Lp(LpError::TimeLimit)) { Status::TimeLimit } else { Status::Error };
            rec.error = Some(ErrorInfo::from(&e));
        }
    }
    rec
}
