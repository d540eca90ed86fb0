//! End-to-end acceptance run. Criteria execute one after another so that
//! wall-clock limits are measured without competing tests; each prints a
//! single PASS/FAIL line and the process fails if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use aro_core::adjustable::solve_adjustable;
use aro_core::affine::solve_optimal_affine;
use aro_core::construct::construct_affine_budget;
use aro_core::covering::{
    certificate_scale, cover_cost, normalize_rows, rounding_statistics, structural_certificate, CoveringProblem,
    OnlineCoveringState, Verdict,
};
use aro_core::fastaffine::solve_fast_affine;
use aro_core::instances::{gen_lot_sizing, generate, Family, GenSpec};
use aro_core::lpkernel::{solve_lp, LpStatus, RowSense};
use aro_core::model::{evaluate_policy, Block, FirstStageSet};
use aro_core::reduce::{reduce_average, reduce_permutation_invariant};
use aro_core::{Error, Matrix, TwoStageInstance, UncertaintySet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel_le(a: f64, b: f64, tol: f64) -> bool {
    a <= b + tol * (1.0 + b.abs())
}

fn random_nonneg_instance(rng: &mut ChaCha8Rng, m: usize, n: usize) -> TwoStageInstance {
    let mut mat = |p: f64| Matrix::from_fn(m, n, |_, _| if rng.gen_bool(p) { rng.gen_range(0..4) as f64 } else { 0.0 });
    let a = mat(0.5);
    let mut b = mat(0.5);
    for i in 0..m {
        b[(i, i % n)] += 1.0;
    }
    let c = (0..n).map(|_| rng.gen_range(1..6) as f64).collect();
    let d = (0..n).map(|_| rng.gen_range(1..6) as f64).collect();
    TwoStageInstance::new(a, b, c, d, FirstStageSet::orthant(n)).unwrap()
}

fn random_cp(rng: &mut ChaCha8Rng, m: usize, n: usize, density: f64) -> CoveringProblem {
    let mut b = Matrix::from_fn(m, n, |_, _| if rng.gen_bool(density) { rng.gen_range(0.1..2.0) } else { 0.0 });
    for i in 0..m {
        b[(i, rng.gen_range(0..n))] += 0.5;
    }
    let d = (0..n).map(|_| rng.gen_range(0.5..4.0)).collect();
    CoveringProblem::new(b, d).unwrap()
}

fn lot_sizing_gap() -> Outcome {
    let start = Instant::now();
    let mut worst_ar = 0.0f64;
    let mut worst_aff = 0.0f64;
    for m in [4, 6, 8, 10] {
        let (inst, u) = gen_lot_sizing(m).unwrap();
        worst_ar = worst_ar.max(solve_adjustable(&inst, &u).unwrap().objective.abs());
        let aff = solve_optimal_affine(&inst, &u).unwrap().objective;
        worst_aff = worst_aff.max((aff - (m as f64 / 2.0 - 1.0)).abs());
    }
    let t = start.elapsed().as_secs_f64();
    outcome(
        worst_ar <= 1e-6 && worst_aff <= 1e-5 && t < 10.0,
        format!("max |z_AR| = {worst_ar:.1e}, max |z_Aff - (m/2-1)| = {worst_aff:.1e}, {t:.2} s"),
    )
}

fn simplex_optimality() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst = 0.0f64;
    for k in 0..20u64 {
        let m = 2 + (k % 5) as usize;
        let inst = if k % 2 == 0 {
            random_nonneg_instance(&mut rng, m, m)
        } else {
            generate(&GenSpec::new(Family::GaussianU1, m, k)).unwrap().0
        };
        let u = UncertaintySet::budget(vec![1.0; m]).unwrap();
        let ar = solve_adjustable(&inst, &u).unwrap().objective;
        let aff = solve_optimal_affine(&inst, &u).unwrap().objective;
        worst = worst.max((aff - ar).abs() / (1.0 + ar.abs()));
    }
    let t = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-5 && t < 30.0, format!("max |z_Aff - z_AR|/(1+z_AR) = {worst:.1e}, {t:.2} s"))
}

fn policy_ordering() -> Outcome {
    let mut corpus: Vec<(String, TwoStageInstance, UncertaintySet)> = Vec::new();
    for m in [4, 6, 8, 10, 20] {
        for family in [Family::GaussianU1, Family::GaussianU2] {
            for seed in 0..3 {
                let spec = GenSpec::new(family, m, seed);
                let (inst, u) = generate(&spec).unwrap();
                corpus.push((spec.id(), inst, u));
            }
        }
        let (inst, u) = gen_lot_sizing(m).unwrap();
        corpus.push((format!("lot_sizing-m{m}"), inst, u));
    }
    let (mut worst_violation, mut failures, mut ar_checked, mut alg_checked) = (0.0f64, Vec::new(), 0, 0);
    for (id, inst, u) in &corpus {
        let aff = solve_optimal_affine(inst, u).unwrap();
        worst_violation = worst_violation.max(evaluate_policy(inst, u, &aff.policy).unwrap().max_violation());
        if inst.m() <= 10 {
            let ar = solve_adjustable(inst, u).unwrap().objective;
            ar_checked += 1;
            if !rel_le(ar, aff.objective, 1e-6) {
                failures.push(format!("{id}: z_AR {ar} > z_Aff {}", aff.objective));
            }
        }
        match solve_fast_affine(inst, u) {
            Ok(alg) => {
                alg_checked += 1;
                worst_violation = worst_violation.max(evaluate_policy(inst, u, &alg.policy).unwrap().max_violation());
                if !rel_le(aff.objective, alg.objective, 1e-6) {
                    failures.push(format!("{id}: z_Aff {} > z_Alg {}", aff.objective, alg.objective));
                }
            }
            // The column policy needs nonnegative recourse; lot-sizing has none.
            Err(Error::NotNonnegative) => {}
            Err(e) => failures.push(format!("{id}: fast affine failed: {e}")),
        }
    }
    outcome(
        failures.is_empty() && worst_violation <= 1e-6,
        format!(
            "{} instances, {ar_checked} adjustable and {alg_checked} fast comparisons, max violation {worst_violation:.1e}{}",
            corpus.len(),
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

fn fast_versus_optimal() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for family in [Family::GaussianU1, Family::GaussianU2] {
        for m in [10, 20, 30] {
            let (mut t_aff, mut t_alg, mut ratios) = (0.0, 0.0, Vec::new());
            for seed in 0..20 {
                let (inst, u) = generate(&GenSpec::new(family, m, seed)).unwrap();
                let s = Instant::now();
                let aff = solve_optimal_affine(&inst, &u).unwrap();
                t_aff += s.elapsed().as_secs_f64();
                let s = Instant::now();
                let alg = solve_fast_affine(&inst, &u).unwrap();
                t_alg += s.elapsed().as_secs_f64();
                ratios.push(alg.objective / aff.objective);
            }
            let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
            pass &= (1.0..=1.35).contains(&mean);
            if m == 30 {
                pass &= t_alg < t_aff;
            }
            parts.push(format!("{family} m={m}: mean {mean:.3}, T_aff {:.3} s, T_alg {:.3} s", t_aff / 20.0, t_alg / 20.0));
        }
    }
    let t = start.elapsed().as_secs_f64();
    pass &= t < 600.0;
    outcome(pass, format!("{}; total {t:.1} s", parts.join("; ")))
}

fn budget_construction() -> Outcome {
    let start = Instant::now();
    let (mut worst_violation, mut worst_bound_ratio, mut failures, mut count) = (0.0f64, 0.0f64, Vec::new(), 0);
    for family in [Family::GaussianU1, Family::GaussianU2] {
        for m in [4, 6, 8] {
            for seed in 0..20 {
                let spec = GenSpec::new(family, m, seed);
                let (inst, u) = generate(&spec).unwrap();
                let adj = solve_adjustable(&inst, &u).unwrap();
                let (pol, st) = construct_affine_budget(&inst, &u, &adj.x, adj.objective).unwrap();
                let rep = evaluate_policy(&inst, &u, &pol).unwrap();
                let cost = rep.worst_case_objective;
                let bound = (1.0 + 2.0 * st.threshold_scale) * adj.objective;
                worst_violation = worst_violation.max(rep.max_violation());
                worst_bound_ratio = worst_bound_ratio.max(cost / bound);
                if cost > bound + 1e-6 {
                    failures.push(format!("{}: cost {cost} > {bound}", spec.id()));
                }
                let aff = solve_optimal_affine(&inst, &u).unwrap().objective;
                if !rel_le(aff, cost, 1e-6) {
                    failures.push(format!("{}: z_Aff {aff} > cost {cost}", spec.id()));
                }
                count += 1;
            }
        }
    }
    let t = start.elapsed().as_secs_f64();
    outcome(
        failures.is_empty() && worst_violation <= 1e-6 && t < 300.0,
        format!(
            "{count} instances, max violation {worst_violation:.1e}, max cost/((1+2β)OPT) {worst_bound_ratio:.3}, {t:.1} s{}",
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

/// `max z(W)` over `W ⊆ rows` with `Σ_W w ≤ 1`, by enumeration.
fn worst_feasible_subset(cp: &CoveringProblem, w: &[f64]) -> f64 {
    let m = cp.m();
    let mut worst = 0.0f64;
    for mask in 1u32..(1 << m) {
        let members: Vec<usize> = (0..m).filter(|&i| mask >> i & 1 == 1).collect();
        if members.iter().map(|&i| w[i]).sum::<f64>() <= 1.0 {
            worst = worst.max(cover_cost(cp, &cp.indicator(&members)).unwrap().0);
        }
    }
    worst
}

fn structural_certificates() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut bounded, mut draws, mut failures) = (0, 0, Vec::new());
    while bounded < 20 {
        draws += 1;
        assert!(draws < 100_000, "could not synthesize condition-2 instances");
        let m = rng.gen_range(2..=8);
        let n = rng.gen_range(2..=8);
        let cp = random_cp(&mut rng, m, n, 0.4);
        let w: Vec<f64> = (0..m).map(|_| rng.gen_range(0.01..0.12)).collect();
        let rows: Vec<usize> = (0..m).collect();
        let cond1 = (0..m).map(|i| cp.unit_cost(i).unwrap() / (certificate_scale(n) * w[i])).fold(f64::INFINITY, f64::min);
        let cond2 = worst_feasible_subset(&cp, &w);
        if cond2 >= cond1 {
            continue;
        }
        // Any γ in [cond2, cond1) satisfies both conditions.
        let threshold = 0.5 * (cond1 + cond2);
        bounded += 1;
        match structural_certificate(&cp, &rows, &w, threshold, bounded).map(|c| c.verdict) {
            Ok(Verdict::Bounded { cover_cost: z }) if z <= certificate_scale(n) * threshold * (1.0 + 1e-9) => {}
            other => failures.push(format!("condition-2 instance {bounded}: {other:?}")),
        }
    }
    let mut violators = 0;
    for k in 0..10u64 {
        let n = 8;
        let mut b = Matrix::from_fn(n, n, |_, _| if rng.gen_bool(0.2) { rng.gen_range(0.0..0.3) } else { 0.0 });
        for i in 0..n {
            b[(i, i)] += 1.0;
        }
        let cp = CoveringProblem::new(b, (0..n).map(|_| rng.gen_range(2.0..4.0)).collect()).unwrap();
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..0.4)).collect();
        let rows: Vec<usize> = (0..n).collect();
        let cond1 = (0..n).map(|i| cp.unit_cost(i).unwrap() / (certificate_scale(n) * w[i])).fold(f64::INFINITY, f64::min);
        let threshold = 0.9 * cond1;
        match structural_certificate(&cp, &rows, &w, threshold, k) {
            Ok(c) => match c.verdict {
                Verdict::ViolatingScenario { members, .. } => {
                    let zw = cover_cost(&cp, &cp.indicator(&members)).unwrap().0;
                    let weight: f64 = members.iter().map(|&i| w[i]).sum();
                    if zw > threshold && weight <= 1.0 {
                        violators += 1;
                    } else {
                        failures.push(format!("violator {k}: z(W) = {zw}, Σw = {weight}"));
                    }
                }
                v => failures.push(format!("violator {k}: {v:?}")),
            },
            Err(e) => failures.push(format!("violator {k}: {e}")),
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{} bounded of 20 ({draws} draws), {violators} violating scenarios of 10{}",
            20 - failures.iter().filter(|f| f.starts_with("condition")).count(),
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

fn online_competitiveness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst, mut worst_slack, mut pass) = (0.0f64, 0.0f64, true);
    for _ in 0..100 {
        let m = rng.gen_range(3..=40);
        let n = rng.gen_range(2..=50);
        let cp = random_cp(&mut rng, m, n, 0.15);
        let mut state = OnlineCoveringState::new(n);
        let mut requested = vec![false; m];
        for _ in 0..rng.gen_range(1..=2 * m) {
            let rows: Vec<usize> = (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(0..m)).collect();
            for &i in &rows {
                requested[i] = true;
            }
            state.step(&cp, &rows).unwrap();
        }
        let members: Vec<usize> = (0..m).filter(|&i| requested[i]).collect();
        let offline = cover_cost(&cp, &cp.indicator(&members)).unwrap().0;
        let ratio = state.cost / offline;
        let bound = 4.0 * (1.0 + (n as f64).ln());
        worst = worst.max(ratio);
        worst_slack = worst_slack.max(ratio / bound);
        pass &= ratio <= bound;
    }
    outcome(pass, format!("max online/offline ratio {worst:.3}, max ratio/bound {worst_slack:.3}"))
}

fn rounding_frequencies() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut pass = true;
    let mut parts = Vec::new();
    let mut used = 0;
    while used < 5 {
        let n = rng.gen_range(20..=40);
        let m = rng.gen_range(10..=30);
        let cp = random_cp(&mut rng, m, n, 0.2);
        let rows: Vec<usize> = (0..m).collect();
        let w: Vec<f64> = (0..m).map(|_| rng.gen_range(0.2..1.0)).collect();
        let e = certificate_scale(n);
        let threshold = 0.5 * (0..m).map(|i| cp.unit_cost(i).unwrap() / (e * w[i])).fold(f64::INFINITY, f64::min);
        let norm = normalize_rows(&cp, &rows, &w, threshold).unwrap();
        let (value, pi) = norm.packing_dual().unwrap();
        // Rounding only runs when the fractional dual exceeds 1.
        if value <= 1.0 {
            continue;
        }
        used += 1;
        let st = rounding_statistics(&norm, &pi, e, 200, used);
        let feasible = st.dual_feasible as f64 / 200.0;
        let heavy = st.heavy as f64 / 200.0;
        pass &= feasible >= 0.5 && heavy >= 0.1;
        parts.push(format!("n={n}: feasible {feasible:.2}, heavy {heavy:.2}"));
    }
    outcome(pass, parts.join("; "))
}

fn reductions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut failures = Vec::new();
    for k in 0..20u64 {
        let m = rng.gen_range(3..=8);
        let l = rng.gen_range(1..=5);
        let blocks: Vec<Block> = (0..l)
            .map(|_| {
                let support: Vec<usize> = (0..m).filter(|_| rng.gen_bool(0.6)).collect();
                let support = if support.is_empty() { vec![rng.gen_range(0..m)] } else { support };
                let weights = support.iter().map(|_| rng.gen_range(0.1..1.0)).collect();
                Block::new(support, weights)
            })
            .collect();
        let u = UncertaintySet::intersection(m, blocks, false).unwrap();
        let (v, cert) = reduce_average(&u).unwrap();
        if !cert.holds() || !cert.verify(&u).unwrap() || (cert.inner_scale - 1.0 / l as f64).abs() > 1e-15 {
            failures.push(format!("average {k}: inclusions fail"));
            continue;
        }
        let (inst, _) = generate(&GenSpec::new(Family::GaussianU1, m, k)).unwrap();
        assert!(inst.first_stage.is_cone());
        let zu = solve_optimal_affine(&inst, &u).unwrap().objective;
        let zv = solve_optimal_affine(&inst, &v).unwrap().objective;
        if !rel_le(zu, zv, 1e-6) {
            failures.push(format!("average {k}: z_Aff(U) {zu} > z_Aff(V) {zv}"));
        }
    }
    let mut sampled = Vec::new();
    for (m, k, cap) in [(6, 2, 1.0), (6, 3, 1.5), (6, 2, 1.3), (10, 2, 1.0), (10, 3, 2.0), (10, 4, 2.0)] {
        let u = UncertaintySet::clt(m, k, cap).unwrap();
        match reduce_permutation_invariant(&u, m as u64 * 100 + k as u64, 200) {
            Ok((_, cert)) if cert.verify(&u).unwrap() => {
                sampled.push(format!("m={m},k={k}: {} retries", cert.sampling.unwrap().retries))
            }
            Ok(_) => failures.push(format!("clt m={m} k={k}: re-verification failed")),
            Err(e) => failures.push(format!("clt m={m} k={k}: {e}")),
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "20 averaged sets checked; sampling {}{}",
            sampled.join(", "),
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

fn lp_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut mismatches = Vec::new();
    for k in 0..1000 {
        let p = common::random_small_lp(&mut rng);
        let (status, obj) = common::vertex_oracle(&p);
        match solve_lp(&p) {
            Ok(s) if s.status != status => mismatches.push(format!("lp {k}: {:?} vs {status:?}", s.status)),
            Ok(s) if status == LpStatus::Optimal && (s.objective - obj).abs() > 1e-6 => {
                mismatches.push(format!("lp {k}: {} vs {obj}", s.objective))
            }
            Ok(s) if status == LpStatus::Optimal => {
                let act = p.row_activity(&s.primal);
                for (r, a) in p.rows.iter().zip(act) {
                    let v = match r.sense {
                        RowSense::Ge => r.rhs - a,
                        RowSense::Le => a - r.rhs,
                        RowSense::Eq => (a - r.rhs).abs(),
                    };
                    if v > 1e-6 {
                        mismatches.push(format!("lp {k}: row violation {v}"));
                    }
                }
            }
            Ok(_) => {}
            Err(e) => mismatches.push(format!("lp {k}: {e}")),
        }
    }
    outcome(mismatches.is_empty(), format!("1000 LPs, {} mismatches {}", mismatches.len(), mismatches.join("; ")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("lot-sizing gap", lot_sizing_gap),
        ("simplex optimality", simplex_optimality),
        ("policy ordering", policy_ordering),
        ("fast versus optimal affine", fast_versus_optimal),
        ("budget construction", budget_construction),
        ("structural certificate", structural_certificates),
        ("online covering", online_competitiveness),
        ("dual rounding", rounding_frequencies),
        ("set reductions", reductions),
        ("lp kernel oracle", lp_oracle),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|e| outcome(false, format!("panicked: {}", panic_message(e.as_ref()))));
        let verdict = if res.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!res.pass);
        println!("criterion {:>2} {verdict} {name} [{:.1} s]: {}", k + 1, start.elapsed().as_secs_f64(), res.detail.trim());
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn panic_message(e: &(dyn std::any::Any + Send)) -> String {
    e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()
}
