use crate::error::{Error, Result};
use crate::lpkernel::{solve_lp, LpProblem, LpStatus, RowSense};

use super::Matrix;

/// Weighted budget row restricted to a support: `Σ_{i∈S} w_i h_i ≤ 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub support: Vec<usize>,
    pub weights: Vec<f64>,
}

impl Block {
    pub fn new(support: Vec<usize>, weights: Vec<f64>) -> Self {
        Self { support, weights }
    }

    pub fn load(&self, h: &[f64]) -> f64 {
        self.support.iter().zip(&self.weights).map(|(&i, &w)| w * h[i]).sum()
    }

    /// The block as a dense row of length `m`.
    pub fn dense(&self, m: usize) -> Vec<f64> {
        let mut row = vec![0.0; m];
        for (&i, &w) in self.support.iter().zip(&self.weights) {
            row[i] = w;
        }
        row
    }
}

/// Uncertainty set, always intersected with the box `[0,1]^m`.
#[derive(Clone, Debug, PartialEq)]
pub enum UncertaintySet {
    /// `{h ∈ [0,1]^m : w·h ≤ 1}`.
    Budget { w: Vec<f64> },
    /// `{h ∈ [0,1]^m : each block's load ≤ 1}`.
    IntersectionBudgets { m: usize, blocks: Vec<Block>, disjoint: bool },
    /// `{h ∈ [0,1]^m : R h ≤ r}` with `R ≥ 0`, `r > 0`.
    GeneralPolyhedral { rmat: Matrix, r: Vec<f64> },
}

fn check_weights(w: &[f64], what: &str) -> Result<()> {
    if let Some(v) = w.iter().find(|&&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::InvalidSet(format!("{what} weight {v} outside [0, 1]")));
    }
    Ok(())
}

impl UncertaintySet {
    pub fn budget(w: Vec<f64>) -> Result<Self> {
        check_weights(&w, "budget")?;
        Ok(Self::Budget { w })
    }

    /// Blocks are normalized to sorted supports; the disjoint flag is checked.
    pub fn intersection(m: usize, blocks: Vec<Block>, disjoint: bool) -> Result<Self> {
        let mut seen = vec![false; m];
        let mut overlap = false;
        let mut norm = Vec::with_capacity(blocks.len());
        for b in blocks {
            if b.support.len() != b.weights.len() {
                return Err(Error::InvalidSet("block support and weights differ in length".into()));
            }
            check_weights(&b.weights, "block")?;
            let mut pairs: Vec<(usize, f64)> = b.support.into_iter().zip(b.weights).collect();
            pairs.sort_by_key(|&(i, _)| i);
            if pairs.windows(2).any(|p| p[0].0 == p[1].0) {
                return Err(Error::InvalidSet("block support repeats an index".into()));
            }
            for &(i, _) in &pairs {
                if i >= m {
                    return Err(Error::InvalidSet(format!("block index {i} outside [0, {m})")));
                }
                overlap |= seen[i];
                seen[i] = true;
            }
            let (support, weights) = pairs.into_iter().unzip();
            norm.push(Block { support, weights });
        }
        if disjoint && overlap {
            return Err(Error::InvalidSet("blocks flagged disjoint share an index".into()));
        }
        Ok(Self::IntersectionBudgets { m, blocks: norm, disjoint })
    }

    pub fn polyhedral(rmat: Matrix, r: Vec<f64>) -> Result<Self> {
        if rmat.rows() != r.len() {
            return Err(Error::DimensionMismatch("R rows and r length differ".into()));
        }
        if rmat.as_slice().iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidSet("R must be finite and nonnegative".into()));
        }
        if r.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidSet("r must be finite and positive".into()));
        }
        for l in 0..rmat.rows() {
            if let Some(i) = (0..rmat.cols()).find(|&i| rmat[(l, i)] > r[l]) {
                return Err(Error::InvalidSet(format!("unit vector e_{i} violates row {l}")));
            }
        }
        Ok(Self::GeneralPolyhedral { rmat, r })
    }

    /// Set with every `k`-subset budget `Σ_{i∈S} h_i ≤ Γ`, as intersecting blocks.
    pub fn clt(m: usize, k: usize, cap: f64) -> Result<Self> {
        if k == 0 || k > m || !(cap >= 1.0) {
            return Err(Error::InvalidSet(format!("subset-sum set needs 1 ≤ k ≤ m and Γ ≥ 1 (k={k}, Γ={cap})")));
        }
        let mut blocks = Vec::new();
        let mut cur = Vec::with_capacity(k);
        fn rec(start: usize, m: usize, k: usize, cap: f64, cur: &mut Vec<usize>, out: &mut Vec<Block>) {
            if cur.len() == k {
                out.push(Block::new(cur.clone(), vec![1.0 / cap; k]));
                return;
            }
            for i in start..m {
                cur.push(i);
                rec(i + 1, m, k, cap, cur, out);
                cur.pop();
            }
        }
        rec(0, m, k, cap, &mut cur, &mut blocks);
        Self::intersection(m, blocks, k == 1)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Budget { w } => w.len(),
            Self::IntersectionBudgets { m, .. } => *m,
            Self::GeneralPolyhedral { rmat, .. } => rmat.cols(),
        }
    }

    /// Non-box defining rows normalized to right-hand side 1.
    pub fn budget_rows(&self) -> Vec<Vec<f64>> {
        let m = self.dim();
        match self {
            Self::Budget { w } => vec![w.clone()],
            Self::IntersectionBudgets { blocks, .. } => blocks.iter().map(|b| b.dense(m)).collect(),
            Self::GeneralPolyhedral { rmat, r } => (0..rmat.rows())
                .map(|l| rmat.row(l).iter().map(|v| v / r[l]).collect())
                .collect(),
        }
    }

    /// Membership by the variant's algebraic definition.
    pub fn contains(&self, h: &[f64], tol: f64) -> bool {
        if h.len() != self.dim() || h.iter().any(|&v| v < -tol || v > 1.0 + tol) {
            return false;
        }
        match self {
            Self::Budget { w } => super::dot(w, h) <= 1.0 + tol,
            Self::IntersectionBudgets { blocks, .. } => blocks.iter().all(|b| b.load(h) <= 1.0 + tol),
            Self::GeneralPolyhedral { rmat, r } => {
                rmat.mul_vec(h).iter().zip(r).all(|(lhs, &rhs)| *lhs <= rhs + tol)
            }
        }
    }
}

/// Row system `{h ≥ 0 : R h ≤ r}` equal to `u`, box rows last.
pub fn as_polyhedron(u: &UncertaintySet) -> (Matrix, Vec<f64>) {
    let m = u.dim();
    let (mut rows, mut rhs): (Vec<Vec<f64>>, Vec<f64>) = match u {
        UncertaintySet::Budget { w } => (vec![w.clone()], vec![1.0]),
        UncertaintySet::IntersectionBudgets { blocks, .. } => {
            (blocks.iter().map(|b| b.dense(m)).collect(), vec![1.0; blocks.len()])
        }
        UncertaintySet::GeneralPolyhedral { rmat, r } => (rmat.to_rows(), r.clone()),
    };
    for i in 0..m {
        let mut e = vec![0.0; m];
        e[i] = 1.0;
        rows.push(e);
        rhs.push(1.0);
    }
    let rmat = Matrix::from_rows(&rows, m).expect("rows have uniform length");
    (rmat, rhs)
}

/// Reusable LP for maximizing linear functions over one set.
#[derive(Clone, Debug)]
pub struct SetMaximizer {
    lp: LpProblem,
}

impl SetMaximizer {
    pub fn new(u: &UncertaintySet) -> Self {
        let (rmat, r) = as_polyhedron(u);
        Self::from_rows(&rmat, &r)
    }

    pub fn from_rows(rmat: &Matrix, r: &[f64]) -> Self {
        let mut lp = LpProblem::new(rmat.cols());
        for l in 0..rmat.rows() {
            let coeffs = rmat.row(l).iter().copied().enumerate().filter(|&(_, v)| v != 0.0);
            lp.add_row(coeffs, RowSense::Le, r[l]);
        }
        Self { lp }
    }

    /// `max a·h` over the set and a maximizer.
    pub fn maximize(&self, a: &[f64]) -> Result<(f64, Vec<f64>)> {
        if a.len() != self.lp.num_vars() {
            return Err(Error::DimensionMismatch("objective length differs from set dimension".into()));
        }
        let mut lp = self.lp.clone();
        for (c, &v) in lp.cost.iter_mut().zip(a) {
            *c = -v;
        }
        let sol = solve_lp(&lp)?;
        match sol.status {
            LpStatus::Optimal => {
                let h = sol.primal.iter().map(|&v| v.clamp(0.0, 1.0)).collect();
                Ok((-sol.objective, h))
            }
            // The set contains 0 and lies in the box, so neither can occur.
            LpStatus::Infeasible | LpStatus::Unbounded => Err(Error::InvalidSet(format!(
                "maximization over the set returned {:?}",
                sol.status
            ))),
        }
    }
}

pub fn max_linear(u: &UncertaintySet, a: &[f64]) -> Result<(f64, Vec<f64>)> {
    SetMaximizer::new(u).maximize(a)
}
