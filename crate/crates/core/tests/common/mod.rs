//! Independent oracles shared by integration tests.
#![allow(dead_code)]

use aro_core::lpkernel::{LpProblem, LpStatus, RowSense};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Solves a square system by Gaussian elimination; `None` when singular.
pub fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-10 {
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

pub fn combinations(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), &mut f);
}

/// Brute-force vertex enumeration for problems whose variables all have
/// `lo = 0`. Returns status and optimal objective.
pub fn vertex_oracle(p: &LpProblem) -> (LpStatus, f64) {
    const BIG: f64 = 1e6;
    let n = p.num_vars();
    // Hyperplanes (a, b): rows, lower bounds, and upper bounds (or the big box).
    let mut planes: Vec<(Vec<f64>, f64, bool)> = Vec::new();
    for r in &p.rows {
        let mut a = vec![0.0; n];
        for &(j, v) in &r.coeffs {
            a[j] = v;
        }
        planes.push((a, r.rhs, false));
    }
    for j in 0..n {
        let mut a = vec![0.0; n];
        a[j] = 1.0;
        planes.push((a.clone(), 0.0, false));
        let (ub, boxed) = if p.upper[j].is_finite() { (p.upper[j], false) } else { (BIG, true) };
        planes.push((a, ub, boxed));
    }
    let feasible = |x: &[f64]| -> bool {
        for (j, &xj) in x.iter().enumerate() {
            if xj < -1e-9 || xj > p.upper[j].min(BIG) + 1e-9 {
                return false;
            }
        }
        p.rows.iter().all(|r| {
            let ax: f64 = r.coeffs.iter().map(|&(j, v)| v * x[j]).sum();
            match r.sense {
                RowSense::Ge => ax >= r.rhs - 1e-9,
                RowSense::Le => ax <= r.rhs + 1e-9,
                RowSense::Eq => (ax - r.rhs).abs() <= 1e-9,
            }
        })
    };
    let mut best_orig = f64::INFINITY;
    let mut best_boxed = f64::INFINITY;
    combinations(planes.len(), n, |idx| {
        let a: Vec<Vec<f64>> = idx.iter().map(|&i| planes[i].0.clone()).collect();
        let b: Vec<f64> = idx.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = solve_square(a, b) {
            if feasible(&x) {
                let obj: f64 = p.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
                let uses_box = x
                    .iter()
                    .enumerate()
                    .any(|(j, &v)| !p.upper[j].is_finite() && v > BIG - 1e-3);
                best_boxed = best_boxed.min(obj);
                if !uses_box {
                    best_orig = best_orig.min(obj);
                }
            }
        }
    });
    if best_boxed == f64::INFINITY {
        (LpStatus::Infeasible, f64::INFINITY)
    } else if best_boxed < best_orig - 1e-6 {
        (LpStatus::Unbounded, f64::NEG_INFINITY)
    } else {
        (LpStatus::Optimal, best_orig)
    }
}

/// Random LP with `nv, nc ∈ [1, 6]` and integer data in `[-5, 5]`.
pub fn random_small_lp(rng: &mut ChaCha8Rng) -> LpProblem {
    let nv = rng.gen_range(1..=6);
    let nc = rng.gen_range(1..=6);
    let cost = (0..nv).map(|_| rng.gen_range(-5..=5) as f64).collect();
    let mut p = LpProblem::with_cost(cost);
    for j in 0..nv {
        if rng.gen_bool(0.3) {
            p.set_bounds(j, 0.0, rng.gen_range(0..=5) as f64);
        }
    }
    for _ in 0..nc {
        let coeffs: Vec<(usize, f64)> =
            (0..nv).map(|j| (j, rng.gen_range(-5..=5) as f64)).collect();
        let sense = match rng.gen_range(0..5) {
            0 | 1 => RowSense::Ge,
            2 | 3 => RowSense::Le,
            _ => RowSense::Eq,
        };
        p.add_row(coeffs, sense, rng.gen_range(-5..=5) as f64);
    }
    p
}
