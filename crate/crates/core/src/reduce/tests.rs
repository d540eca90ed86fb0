use super::*;
use crate::affine::solve_optimal_affine;
use crate::instances::{generate, Family, GenSpec};
use crate::model::Block;

#[test]
fn single_row_average_is_identity() {
    let u = UncertaintySet::budget(vec![0.5, 0.25, 1.0]).unwrap();
    let (v, cert) = reduce_average(&u).unwrap();
    assert_eq!(v, u);
    assert_eq!((cert.inner_scale, cert.outer_scale), (1.0, 1.0));
    assert!(cert.holds());
}

#[test]
fn two_axis_blocks_average() {
    let blocks = vec![Block::new(vec![0], vec![1.0]), Block::new(vec![1], vec![1.0])];
    let u = UncertaintySet::intersection(2, blocks, true).unwrap();
    let (v, cert) = reduce_average(&u).unwrap();
    assert_eq!(v, UncertaintySet::Budget { w: vec![0.5, 0.5] });
    assert_eq!(cert.inner_scale, 0.5);
    assert!(cert.holds() && cert.verify(&u).unwrap());
}

#[test]
fn subset_sum_average_is_uniform() {
    let u = UncertaintySet::clt(4, 2, 1.0).unwrap();
    let (v, cert) = reduce_average(&u).unwrap();
    let UncertaintySet::Budget { w } = &v else { panic!() };
    // Each coordinate lies in 3 of the 6 pairs.
    assert!(w.iter().all(|&x| (x - 0.5).abs() < 1e-15));
    assert!((cert.inner_scale - 1.0 / 6.0).abs() < 1e-15);
    assert!(cert.holds());
}

#[test]
fn inclusion_detects_failure() {
    let big = UncertaintySet::budget(vec![0.5, 0.5]).unwrap();
    let small = UncertaintySet::budget(vec![1.0, 1.0]).unwrap();
    assert!(check_inclusion(&small, 1.0, &big, 1.0).unwrap().holds());
    let c = check_inclusion(&big, 1.0, &small, 1.0).unwrap();
    assert!(!c.holds());
    assert!((c.worst_excess - 1.0).abs() < 1e-9);
}

#[test]
fn subset_sum_gamma_is_half() {
    let u = UncertaintySet::clt(4, 2, 1.0).unwrap();
    let (_, cert) = reduce_permutation_invariant(&u, 3, 200).unwrap();
    let s = cert.sampling.as_ref().unwrap();
    assert!((s.inclusion_prob - 0.5).abs() < 1e-9);
    assert!((cert.inner_scale - 1.0 / (4.0 * 6f64.ln())).abs() < 1e-15);
    assert_eq!(cert.outer_scale, 2.0);
    assert!(cert.verify(&u).unwrap());
}

#[test]
fn uniform_budget_reduces_to_itself_up_to_constants() {
    let u = UncertaintySet::budget(vec![1.0 / 3.0; 6]).unwrap();
    let (v, cert) = reduce_permutation_invariant(&u, 0, 200).unwrap();
    let UncertaintySet::Budget { w } = &v else { panic!() };
    let k = (1.0 / w[0]).round();
    assert!((2.0..=6.0).contains(&k), "Σξ = {k}");
    assert_eq!(cert.inner_scale, 0.25);
    assert!(cert.verify(&u).unwrap());
}

#[test]
fn asymmetric_set_rejected() {
    let u = UncertaintySet::budget(vec![1.0, 0.1, 0.1]).unwrap();
    assert!(matches!(reduce_permutation_invariant(&u, 0, 10), Err(Error::NotPermutationInvariant)));
}

#[test]
fn zero_retries_exhausts() {
    let u = UncertaintySet::clt(4, 2, 1.0).unwrap();
    assert!(matches!(reduce_permutation_invariant(&u, 0, 0), Err(Error::SamplingExhausted(0))));
}

#[test]
fn sampling_is_seeded() {
    let u = UncertaintySet::clt(6, 3, 1.5).unwrap();
    let a = reduce_permutation_invariant(&u, 11, 200).unwrap();
    let b = reduce_permutation_invariant(&u, 11, 200).unwrap();
    assert_eq!(a, b);
}

#[test]
fn affine_cost_is_monotone_under_averaging() {
    let (inst, _) = generate(&GenSpec::new(Family::GaussianU1, 5, 2)).unwrap();
    assert!(inst.first_stage.is_cone());
    let blocks = vec![
        Block::new(vec![0, 1, 2], vec![0.6, 0.3, 0.9]),
        Block::new(vec![2, 3, 4], vec![0.5, 1.0, 0.2]),
    ];
    let u = UncertaintySet::intersection(5, blocks, false).unwrap();
    let (v, cert) = reduce_average(&u).unwrap();
    assert!(cert.holds());
    let zu = solve_optimal_affine(&inst, &u).unwrap().objective;
    let zv = solve_optimal_affine(&inst, &v).unwrap().objective;
    assert!(zu <= zv + 1e-6 * (1.0 + zv.abs()), "{zu} > {zv}");
}
