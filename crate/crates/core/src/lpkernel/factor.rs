//! Sparse LU factorization of the basis with product-form updates.
//!
//! Unit columns (slacks, artificials) pivot first on their own rows; the
//! remaining submatrix is eliminated right-looking with Markowitz pivot
//! choice under a threshold test. Basis changes after a factorization are
//! kept as eta columns.

pub(super) enum BasisColumn<'a> {
    Unit { row: usize, sign: f64 },
    Sparse { rows: &'a [usize], vals: &'a [f64] },
}

/// Basis positions that could not be pivoted, and the rows left uncovered.
/// Both lists have the same length.
#[derive(Debug)]
pub(super) struct Singular {
    pub(super) positions: Vec<usize>,
    pub(super) rows: Vec<usize>,
}

const NONE: usize = usize::MAX;
/// Candidates within this fraction of the largest entry may be chosen as pivot.
const THRESHOLD: f64 = 0.1;
const TOL_SINGULAR: f64 = 1e-11;
const TOL_DROP: f64 = 1e-14;

/// Compressed list of sparse vectors.
#[derive(Default)]
struct Columns {
    start: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
}

impl Columns {
    fn with_capacity(n: usize) -> Self {
        let mut c = Self { start: Vec::with_capacity(n + 1), idx: Vec::new(), val: Vec::new() };
        c.start.push(0);
        c
    }

    fn push(&mut self, i: usize, v: f64) {
        self.idx.push(i);
        self.val.push(v);
    }

    fn close(&mut self) {
        self.start.push(self.idx.len());
    }

    #[cfg(test)]
    fn len(&self) -> usize {
        self.start.len() - 1
    }

    fn get(&self, k: usize) -> (&[usize], &[f64]) {
        let r = self.start[k]..self.start[k + 1];
        (&self.idx[r.clone()], &self.val[r])
    }

    fn nnz(&self) -> usize {
        self.idx.len()
    }
}

/// Markowitz search: among the few sparsest active columns, the entry
/// passing the threshold test with the least `(r - 1)(c - 1)`; row
/// singletons are tried as well. Columns whose entries are all negligible
/// are removed through `drop_col`.
fn choose_pivot(
    active: &mut [Vec<(usize, f64)>],
    row_cols: &mut [Vec<usize>],
    col_live: &mut [bool],
    drop_col: &mut impl FnMut(usize),
) -> Option<(usize, usize)> {
    const SEARCH: usize = 4;
    loop {
        let mut cand: [(usize, usize); SEARCH] = [(usize::MAX, NONE); SEARCH];
        for (c, col) in active.iter().enumerate() {
            if !col_live[c] {
                continue;
            }
            let key = (col.len(), c);
            if key < cand[SEARCH - 1] {
                let mut t = SEARCH - 1;
                while t > 0 && key < cand[t - 1] {
                    cand[t] = cand[t - 1];
                    t -= 1;
                }
                cand[t] = key;
            }
        }
        if cand[0].1 == NONE {
            return None;
        }
        let mut best: Option<(usize, usize)> = None;
        let mut best_cost = usize::MAX;
        let mut removed = false;
        for &(len, c) in cand.iter().filter(|k| k.1 != NONE) {
            let big = active[c].iter().fold(0.0f64, |a, e| a.max(e.1.abs()));
            if big < TOL_SINGULAR {
                for &(i, _) in &active[c] {
                    if let Some(at) = row_cols[i].iter().position(|&j| j == c) {
                        row_cols[i].swap_remove(at);
                    }
                }
                active[c].clear();
                col_live[c] = false;
                drop_col(c);
                removed = true;
                continue;
            }
            for &(i, v) in &active[c] {
                if v.abs() >= THRESHOLD * big {
                    let cost = (row_cols[i].len() - 1) * (len - 1);
                    if cost < best_cost {
                        best_cost = cost;
                        best = Some((c, i));
                    }
                }
            }
        }
        if removed {
            continue;
        }
        if best_cost > 0 {
            for (i, cols) in row_cols.iter().enumerate() {
                if cols.len() != 1 {
                    continue;
                }
                let c = cols[0];
                let big = active[c].iter().fold(0.0f64, |a, e| a.max(e.1.abs()));
                let v = active[c].iter().find(|e| e.0 == i).map_or(0.0, |e| e.1);
                if v.abs() >= THRESHOLD * big && big >= TOL_SINGULAR {
                    return Some((c, i));
                }
            }
        }
        return best;
    }
}

/// `B = L U` up to permutations, followed by eta columns.
///
/// Step `k` pivots on row `pivot_row[k]` for the basis column at position
/// `position[k]`. `L` stores per step the multipliers of unpivoted rows;
/// `U` stores per step the entries on earlier pivot rows, diagonal apart.
pub(super) struct Factor {
    m: usize,
    pivot_row: Vec<usize>,
    position: Vec<usize>,
    diag: Vec<f64>,
    lower: Columns,
    /// Steps with a nonempty `L` column, in order.
    lower_steps: Vec<usize>,
    upper: Columns,
    eta_pos: Vec<usize>,
    eta_piv: Vec<f64>,
    etas: Columns,
}

impl Factor {
    pub(super) fn new(m: usize, cols: &[BasisColumn<'_>]) -> Result<Self, Singular> {
        debug_assert_eq!(cols.len(), m);
        let mut f = Factor {
            m,
            pivot_row: Vec::with_capacity(m),
            position: Vec::with_capacity(m),
            diag: Vec::with_capacity(m),
            lower: Columns::with_capacity(m),
            lower_steps: Vec::new(),
            upper: Columns::with_capacity(m),
            eta_pos: Vec::new(),
            eta_piv: Vec::new(),
            etas: Columns::with_capacity(128),
        };
        let mut step_of_row = vec![NONE; m];
        let mut dropped = Vec::new();
        let mut structural = Vec::new();
        for (p, col) in cols.iter().enumerate() {
            match *col {
                BasisColumn::Unit { row, sign } => {
                    if step_of_row[row] != NONE {
                        dropped.push(p);
                        continue;
                    }
                    step_of_row[row] = f.pivot_row.len();
                    f.pivot_row.push(row);
                    f.position.push(p);
                    f.diag.push(sign);
                    f.lower.close();
                }
                BasisColumn::Sparse { .. } => structural.push(p),
            }
        }

        // Active submatrix: values by column, patterns by row. Entries on
        // rows owned by unit columns go straight to `U`.
        let nc = structural.len();
        let mut upper_of: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nc];
        let mut active: Vec<Vec<(usize, f64)>> = Vec::with_capacity(nc);
        let mut row_cols: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (c, &p) in structural.iter().enumerate() {
            let BasisColumn::Sparse { rows, vals } = cols[p] else { unreachable!() };
            let mut col = Vec::with_capacity(rows.len());
            for (&i, &v) in rows.iter().zip(vals) {
                if v == 0.0 {
                    continue;
                }
                if step_of_row[i] == NONE {
                    col.push((i, v));
                    row_cols[i].push(c);
                } else {
                    upper_of[c].push((i, v));
                }
            }
            active.push(col);
        }
        let mut col_live = vec![true; nc];
        let mut step_of_col = vec![NONE; nc];
        let mut slot = vec![NONE; m];
        let mut mult: Vec<(usize, f64)> = Vec::new();

        for _ in 0..nc {
            let Some((c, pr)) = choose_pivot(&mut active, &mut row_cols, &mut col_live, &mut |c| dropped.push(structural[c]))
            else {
                break;
            };
            let piv = active[c].iter().find(|&&(i, _)| i == pr).map(|&(_, v)| v).expect("pivot entry present");
            let k = f.pivot_row.len();
            mult.clear();
            for &(i, v) in &active[c] {
                if i != pr {
                    mult.push((i, v / piv));
                }
                if let Some(at) = row_cols[i].iter().position(|&j| j == c) {
                    row_cols[i].swap_remove(at);
                }
            }
            for &(i, l) in &mult {
                if l.abs() > TOL_DROP {
                    f.lower.push(i, l);
                }
            }
            f.lower.close();
            if f.lower.start[k + 1] > f.lower.start[k] {
                f.lower_steps.push(k);
            }
            active[c].clear();
            col_live[c] = false;
            step_of_col[c] = k;
            step_of_row[pr] = k;
            f.pivot_row.push(pr);
            f.position.push(structural[c]);
            f.diag.push(piv);

            // Eliminate the pivot row from every other column touching it.
            let others = std::mem::take(&mut row_cols[pr]);
            for &j in &others {
                let col = &mut active[j];
                let Some(at) = col.iter().position(|&(i, _)| i == pr) else { continue };
                let (_, arj) = col.swap_remove(at);
                upper_of[j].push((pr, arj));
                for (t, &(i, _)) in col.iter().enumerate() {
                    slot[i] = t;
                }
                for &(i, l) in &mult {
                    let delta = -l * arj;
                    if slot[i] != NONE {
                        col[slot[i]].1 += delta;
                    } else {
                        slot[i] = col.len();
                        col.push((i, delta));
                        row_cols[i].push(j);
                    }
                }
                for &(i, _) in col.iter() {
                    slot[i] = NONE;
                }
            }
        }
        for (c, &live) in col_live.iter().enumerate() {
            if live {
                dropped.push(structural[c]);
            }
        }

        // `U` columns in step order.
        let mut by_step: Vec<usize> = (0..nc).filter(|&c| step_of_col[c] != NONE).collect();
        by_step.sort_unstable_by_key(|&c| step_of_col[c]);
        let units = f.pivot_row.len() - by_step.len();
        f.upper = Columns::with_capacity(m);
        for _ in 0..units {
            f.upper.close();
        }
        for &c in &by_step {
            for &(i, u) in &upper_of[c] {
                if u.abs() > TOL_DROP {
                    f.upper.push(i, u);
                }
            }
            f.upper.close();
        }
        debug_assert!(by_step.iter().enumerate().all(|(t, &c)| step_of_col[c] == units + t));

        if !dropped.is_empty() {
            dropped.sort_unstable();
            let rows = (0..m).filter(|&i| step_of_row[i] == NONE).collect();
            return Err(Singular { positions: dropped, rows });
        }
        Ok(f)
    }

    fn apply_lower(&self, z: &mut [f64]) {
        for &k in &self.lower_steps {
            let v = z[self.pivot_row[k]];
            if v != 0.0 {
                let (idx, val) = self.lower.get(k);
                for (&i, &l) in idx.iter().zip(val) {
                    z[i] -= l * v;
                }
            }
        }
    }

    /// Solves `B x = a`. `z` holds `a` by row and is consumed; `x` receives
    /// the solution by basis position.
    pub(super) fn ftran(&self, z: &mut [f64], x: &mut [f64]) {
        self.apply_lower(z);
        for k in (0..self.m).rev() {
            let pr = self.pivot_row[k];
            let v = std::mem::take(&mut z[pr]);
            let xk = if v == 0.0 { 0.0 } else { v / self.diag[k] };
            x[self.position[k]] = xk;
            if xk != 0.0 {
                let (idx, val) = self.upper.get(k);
                for (&i, &u) in idx.iter().zip(val) {
                    z[i] -= u * xk;
                }
            }
        }
        for e in 0..self.eta_pos.len() {
            let r = self.eta_pos[e];
            let xr = x[r] / self.eta_piv[e];
            x[r] = xr;
            if xr != 0.0 {
                let (idx, val) = self.etas.get(e);
                for (&p, &a) in idx.iter().zip(val) {
                    x[p] -= a * xr;
                }
            }
        }
    }

    /// Solves `Bᵀ y = c`. `c` holds the right side by basis position and is
    /// consumed; `y` receives the solution by row.
    pub(super) fn btran(&self, c: &mut [f64], y: &mut [f64]) {
        for e in (0..self.eta_pos.len()).rev() {
            let r = self.eta_pos[e];
            let (idx, val) = self.etas.get(e);
            let s: f64 = idx.iter().zip(val).map(|(&p, &a)| a * c[p]).sum();
            c[r] = (c[r] - s) / self.eta_piv[e];
        }
        for k in 0..self.m {
            let (idx, val) = self.upper.get(k);
            let s: f64 = idx.iter().zip(val).map(|(&i, &u)| u * y[i]).sum();
            y[self.pivot_row[k]] = (c[self.position[k]] - s) / self.diag[k];
        }
        for &k in self.lower_steps.iter().rev() {
            let (idx, val) = self.lower.get(k);
            let s: f64 = idx.iter().zip(val).map(|(&i, &l)| l * y[i]).sum();
            y[self.pivot_row[k]] -= s;
        }
    }

    /// Records that position `r` now holds a column whose ftran image is `alpha`.
    pub(super) fn update(&mut self, r: usize, alpha: &[f64], alpha_nz: &[usize]) {
        for &p in alpha_nz {
            if p != r {
                self.etas.push(p, alpha[p]);
            }
        }
        self.etas.close();
        self.eta_pos.push(r);
        self.eta_piv.push(alpha[r]);
    }

    #[cfg(test)]
    fn num_updates(&self) -> usize {
        self.eta_pos.len()
    }

    /// Nonzeros in the eta file relative to those in `L` and `U`.
    pub(super) fn eta_growth(&self) -> f64 {
        self.etas.nnz() as f64 / (self.lower.nnz() + self.upper.nnz() + self.m) as f64
    }

    #[cfg(test)]
    fn steps(&self) -> usize {
        self.lower.len()
    }
}
