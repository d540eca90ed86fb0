use super::*;
use crate::adjustable::solve_adjustable;
use crate::affine::solve_optimal_affine;
use crate::instances::{generate, Family, GenSpec};
use crate::model::{evaluate_policy, Block, FirstStageSet};

fn check_policy(inst: &TwoStageInstance, u: &UncertaintySet, pol: &AffinePolicy, claimed: f64) {
    let rep = evaluate_policy(inst, u, pol).unwrap();
    assert!(rep.max_violation() <= 1e-6, "violation {}", rep.max_violation());
    assert!((rep.worst_case_objective - claimed).abs() <= 1e-6 * (1.0 + claimed.abs()));
}

#[test]
fn one_dimensional_bound() {
    let inst =
        TwoStageInstance::new(Matrix::identity(1), Matrix::identity(1), vec![1.0], vec![1.0], FirstStageSet::orthant(1)).unwrap();
    let u = UncertaintySet::budget(vec![1.0]).unwrap();
    let adj = solve_adjustable(&inst, &u).unwrap();
    let (pol, st) = construct_affine_budget(&inst, &u, &adj.x, adj.objective).unwrap();
    check_policy(&inst, &u, &pol, st.total_cost());
    assert!(st.total_cost() <= (1.0 + 2.0 * st.threshold_scale) * adj.objective + 1e-9);
}

#[test]
fn fully_covered_first_stage_gives_static_policy() {
    let inst =
        TwoStageInstance::new(Matrix::identity(2), Matrix::identity(2), vec![1.0, 1.0], vec![5.0, 5.0], FirstStageSet::orthant(2))
            .unwrap();
    let u = UncertaintySet::budget(vec![1.0, 1.0]).unwrap();
    let (pol, st) = construct_affine_budget(&inst, &u, &[1.0, 1.0], 2.0).unwrap();
    assert!(st.inexpensive.is_empty());
    assert!(pol.p.as_slice().iter().all(|&v| v == 0.0));
    assert_eq!(st.linear_cost, 0.0);
    check_policy(&inst, &u, &pol, st.total_cost());
}

#[test]
fn budget_construction_on_gaussian() {
    for seed in 0..3 {
        let (inst, u) = generate(&GenSpec::new(Family::GaussianU1, 6, seed)).unwrap();
        let adj = solve_adjustable(&inst, &u).unwrap();
        let (pol, st) = construct_affine_budget(&inst, &u, &adj.x, adj.objective).unwrap();
        check_policy(&inst, &u, &pol, st.total_cost());
        assert!(st.total_cost() <= (1.0 + 2.0 * st.threshold_scale) * adj.objective * (1.0 + 1e-9));
        let aff = solve_optimal_affine(&inst, &u).unwrap();
        assert!(aff.objective <= st.total_cost() * (1.0 + 1e-6) + 1e-6);
    }
}

#[test]
fn rows_split_by_threshold() {
    let (inst, u) = generate(&GenSpec::new(Family::GaussianU1, 5, 7)).unwrap();
    let adj = solve_adjustable(&inst, &u).unwrap();
    let (_, st) = construct_affine_budget(&inst, &u, &adj.x, adj.objective).unwrap();
    let mut all: Vec<usize> = st.inexpensive.iter().chain(&st.expensive).copied().collect();
    all.sort_unstable();
    assert_eq!(all, (0..5).collect::<Vec<_>>());
    for &i in &st.inexpensive {
        assert!(st.alpha[i] > 0.0);
        assert!((st.static_target[i] - (1.0 - st.alpha[i]).max(0.0)).abs() < 1e-15);
    }
    for &i in &st.expensive {
        assert_eq!(st.static_target[i], 1.0);
    }
}

#[test]
fn budget_rejects_other_sets() {
    let (inst, _) = generate(&GenSpec::new(Family::GaussianU1, 4, 0)).unwrap();
    let u = UncertaintySet::intersection(4, vec![Block::new(vec![0, 1, 2, 3], vec![1.0; 4])], true).unwrap();
    assert!(matches!(construct_affine_budget(&inst, &u, &[0.0; 4], 1.0), Err(Error::Unsupported(_))));
}

#[test]
fn negative_recourse_rejected() {
    let (inst, u) = generate(&GenSpec::new(Family::LotSizing, 4, 0)).unwrap();
    let x = vec![0.0; inst.n_first()];
    assert!(matches!(construct_affine_budget(&inst, &u, &x, 1.0), Err(Error::NotNonnegative)));
}

fn disjoint_case(m: usize, seed: u64, split: usize) -> (TwoStageInstance, UncertaintySet) {
    let (inst, _) = generate(&GenSpec::new(Family::GaussianU1, m, seed)).unwrap();
    let mut blocks = vec![Block::new((0..split).collect(), vec![1.0; split])];
    if split < m {
        blocks.push(Block::new((split..m).collect(), vec![1.0; m - split]));
    }
    (inst, UncertaintySet::intersection(m, blocks, true).unwrap())
}

#[test]
fn disjoint_construction_bound() {
    for (seed, split) in [(0, 6), (1, 3), (2, 2)] {
        let (inst, u) = disjoint_case(6, seed, split);
        let adj = solve_adjustable(&inst, &u).unwrap();
        let (pol, st) = construct_affine_disjoint(&inst, &u, &adj.x).unwrap();
        check_policy(&inst, &u, &pol, st.total_cost());
        let nu = st.sequence_cost();
        assert!(st.linear_cost <= st.threshold_scale * nu * (1.0 + 1e-9) + 1e-9, "{} > β·{nu}", st.linear_cost);
        let bound = adj.objective + (2.0 + 2.0 * st.threshold_scale) * nu;
        assert!(st.total_cost() <= bound * (1.0 + 1e-9), "{} > {bound}", st.total_cost());
    }
}

#[test]
fn disjoint_partition_is_consistent() {
    let (inst, u) = disjoint_case(6, 3, 3);
    let adj = solve_adjustable(&inst, &u).unwrap();
    let (_, st) = construct_affine_disjoint(&inst, &u, &adj.x).unwrap();
    assert_eq!(st.thresholds.len(), 2);
    assert_eq!(st.inexpensive.len() + st.expensive.len(), 6);
    for &i in &st.remaining {
        assert!(!st.half_covered.contains(&i) && !st.nonpositive.contains(&i) && st.expensive.contains(&i));
    }
    assert!(st.inexpensive.iter().all(|i| !st.nonpositive.contains(i)));
}

#[test]
fn disjoint_rejects_budget() {
    let (inst, u) = generate(&GenSpec::new(Family::GaussianU1, 4, 0)).unwrap();
    assert!(matches!(construct_affine_disjoint(&inst, &u, &[0.0; 4]), Err(Error::Unsupported(_))));
}
