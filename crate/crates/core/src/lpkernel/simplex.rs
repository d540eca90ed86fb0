//! Two-phase primal simplex with Devex pricing and a Harris ratio test.
//!
//! Variable layout: `0..n` structural, `n..n+m` slacks (`a·x + s = b`),
//! `n+m..n+2m` artificials (`± e_i`, used only in phase one).

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::factor::{BasisColumn, Factor};
use super::{LpError, LpOptions, LpProblem, LpSolution, LpStatus, RowSense, TOL_FEAS, TOL_PIVOT};


/// Entering candidates passed over for a small pivot before one is accepted.
const MAX_REJECTED: usize = 4;
const REFACTOR_INTERVAL: usize = 100;
const TOL_DUAL: f64 = 1e-9;
const TOL_ZERO: f64 = 1e-12;
/// Pivots smaller than this fraction of the largest entry of their column
/// are taken only when no other candidate exists.
const TOL_PREFERRED: f64 = 1e-5;
/// Disagreement between the row and column views of a pivot that forces a refactorization.
const TOL_DRIFT: f64 = 1e-7;
const MAX_REPAIRS: usize = 100;
/// Relative width of the random bound perturbation.
const PERTURB: f64 = 1e-6;
const PERTURB_SEED: u64 = 0x5eed;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
    /// Nonbasic away from its bounds, free to move either way: free
    /// variables resting at zero, or columns set aside by a basis repair.
    Interior,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

struct Simplex {
    m: usize,
    n: usize,
    col_ptr: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    art_sign: Vec<f64>,
    rhs: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    /// Artificials that may never (re-)enter the basis.
    excluded: Vec<bool>,
    head: Vec<usize>,
    factor: Option<Factor>,
    d: Vec<f64>,
    devex: Vec<f64>,
    iterations: usize,
    iteration_cap: usize,
    since_refactor: usize,
    degenerate_run: usize,
    bland_after: usize,
    repairs: usize,
    deadline: Option<Instant>,
    // Scratch buffers.
    alpha: Vec<f64>,
    alpha_nz: Vec<usize>,
    rho: Vec<f64>,
}

pub(super) fn solve(p: &LpProblem, opts: &LpOptions) -> Result<LpSolution, LpError> {
    let n = p.num_vars();
    let m = p.num_rows();
    let iteration_cap = opts.iteration_cap.unwrap_or(50 * (n + m) + 10_000);

    // Power-of-two row scaling keeps the scaled data exact.
    let scale: Vec<f64> = p
        .rows
        .iter()
        .map(|r| {
            let amax = r.coeffs.iter().fold(0.0f64, |a, &(_, v)| a.max(v.abs()));
            if amax > 0.0 {
                (-(amax.log2().round())).exp2()
            } else {
                1.0
            }
        })
        .collect();

    let mut counts = vec![0usize; n + 1];
    for r in &p.rows {
        for &(j, _) in &r.coeffs {
            counts[j + 1] += 1;
        }
    }
    for j in 0..n {
        counts[j + 1] += counts[j];
    }
    let col_ptr = counts.clone();
    let nnz = col_ptr[n];
    let mut fill = counts;
    let mut col_row = vec![0usize; nnz];
    let mut col_val = vec![0.0; nnz];
    for (i, r) in p.rows.iter().enumerate() {
        for &(j, v) in &r.coeffs {
            let at = fill[j];
            col_row[at] = i;
            col_val[at] = v * scale[i];
            fill[j] += 1;
        }
    }

    let total = n + 2 * m;
    let mut lo = vec![0.0; total];
    let mut hi = vec![0.0; total];
    lo[..n].copy_from_slice(&p.lower);
    hi[..n].copy_from_slice(&p.upper);
    let mut rhs = vec![0.0; m];
    for (i, r) in p.rows.iter().enumerate() {
        rhs[i] = r.rhs * scale[i];
        let (l, h) = match r.sense {
            RowSense::Le => (0.0, f64::INFINITY),
            RowSense::Ge => (f64::NEG_INFINITY, 0.0),
            RowSense::Eq => (0.0, 0.0),
        };
        lo[n + i] = l;
        hi[n + i] = h;
    }

    let mut s = Simplex {
        m,
        n,
        col_ptr,
        col_row,
        col_val,
        art_sign: vec![1.0; m],
        rhs,
        lo,
        hi,
        cost: vec![0.0; total],
        x: vec![0.0; total],
        state: vec![State::Lower; total],
        excluded: vec![false; total],
        head: vec![0; m],
        factor: None,
        d: vec![0.0; total],
        devex: vec![1.0; total],
        iterations: 0,
        iteration_cap,
        since_refactor: 0,
        degenerate_run: 0,
        bland_after: 5 * (n + m),
        repairs: 0,
        deadline: opts.deadline,
        alpha: vec![0.0; m],
        alpha_nz: Vec::with_capacity(m),
        rho: vec![0.0; m],
    };
    let (true_lo, true_hi) = (s.lo[..n + m].to_vec(), s.hi[..n + m].to_vec());
    s.perturb_bounds();
    let needs_phase_one = s.initial_basis();
    s.refactor()?;
    if needs_phase_one {
        s.set_phase_one_costs();
        s.recompute_duals();
        if !matches!(s.run_phase()?, PhaseEnd::Optimal) {
            return Err(LpError::NumericalFailure("phase one reported unbounded".into()));
        }
        let infeasibility: f64 = (n + m..total).map(|j| s.x[j].max(0.0)).sum();
        if infeasibility > TOL_FEAS {
            return Ok(terminal(p, LpStatus::Infeasible, s.iterations));
        }
        for j in n + m..total {
            s.excluded[j] = true;
            s.lo[j] = s.x[j].min(0.0);
            s.hi[j] = s.x[j].max(0.0);
        }
    }

    for j in 0..total {
        s.cost[j] = if j < n { p.cost[j] } else { 0.0 };
    }
    s.devex.iter_mut().for_each(|w| *w = 1.0);
    s.recompute_duals();
    match s.run_phase()? {
        PhaseEnd::Optimal => {}
        PhaseEnd::Unbounded => return Ok(terminal(p, LpStatus::Unbounded, s.iterations)),
    }
    s.remove_perturbation(&true_lo, &true_hi)?;
    if !s.dual_cleanup()? {
        return Ok(terminal(p, LpStatus::Infeasible, s.iterations));
    }
    match s.run_phase()? {
        PhaseEnd::Optimal => {}
        PhaseEnd::Unbounded => return Ok(terminal(p, LpStatus::Unbounded, s.iterations)),
    }

    let y = s.duals();
    let primal: Vec<f64> = s.x[..n].to_vec();
    let objective = p.cost.iter().zip(&primal).map(|(c, x)| c * x).sum();
    let dual: Vec<f64> = p
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let v = y[i] * scale[i];
            match r.sense {
                RowSense::Le => -v,
                _ => v,
            }
        })
        .collect();
    let reduced_costs = (0..n).map(|j| s.d[j]).collect();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective,
        primal,
        dual,
        reduced_costs,
        iterations: s.iterations,
    })
}

fn terminal(p: &LpProblem, status: LpStatus, iterations: usize) -> LpSolution {
    let objective = match status {
        LpStatus::Infeasible => f64::INFINITY,
        LpStatus::Unbounded => f64::NEG_INFINITY,
        LpStatus::Optimal => unreachable!("terminal is only built for non-optimal outcomes"),
    };
    LpSolution {
        status,
        objective,
        primal: vec![0.0; p.num_vars()],
        dual: vec![0.0; p.num_rows()],
        reduced_costs: vec![0.0; p.num_vars()],
        iterations,
    }
}

impl Simplex {
    fn total(&self) -> usize {
        self.n + 2 * self.m
    }

    fn check_limits(&self) -> Result<(), LpError> {
        if self.iterations >= self.iteration_cap {
            return Err(LpError::NumericalFailure(format!("iteration cap {} reached", self.iteration_cap)));
        }
        if self.iterations % 64 == 0 {
            if let Some(dl) = self.deadline {
                if Instant::now() >= dl {
                    return Err(LpError::TimeLimit);
                }
            }
        }
        Ok(())
    }

    fn set_phase_one_costs(&mut self) {
        let first_art = self.n + self.m;
        for j in 0..self.total() {
            self.cost[j] = if j >= first_art && !self.excluded[j] { 1.0 } else { 0.0 };
        }
    }

    /// Places every structural at a bound, then covers each row by its slack
    /// when the slack value is within bounds and by an artificial otherwise.
    /// Returns whether any artificial is in use.
    fn initial_basis(&mut self) -> bool {
        let (n, m) = (self.n, self.m);
        for j in 0..n {
            let (st, v) = if self.lo[j].is_finite() {
                (State::Lower, self.lo[j])
            } else if self.hi[j].is_finite() {
                (State::Upper, self.hi[j])
            } else {
                (State::Interior, 0.0)
            };
            self.state[j] = st;
            self.x[j] = v;
        }
        let mut resid = self.rhs.clone();
        for j in 0..n {
            if self.x[j] != 0.0 {
                for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                    resid[self.col_row[k]] -= self.col_val[k] * self.x[j];
                }
            }
        }
        let mut any = false;
        for i in 0..m {
            let s = n + i;
            let a = n + m + i;
            let r = resid[i];
            if r >= self.lo[s] && r <= self.hi[s] {
                self.state[s] = State::Basic;
                self.x[s] = r;
                self.head[i] = s;
                self.excluded[a] = true;
                self.state[a] = State::Lower;
                self.hi[a] = 0.0;
            } else {
                let (st, sv) = if r < self.lo[s] {
                    (State::Lower, self.lo[s])
                } else {
                    (State::Upper, self.hi[s])
                };
                self.state[s] = st;
                self.x[s] = sv;
                let rest = r - sv;
                self.art_sign[i] = if rest >= 0.0 { 1.0 } else { -1.0 };
                self.state[a] = State::Basic;
                self.x[a] = rest.abs();
                self.hi[a] = f64::INFINITY;
                self.head[i] = a;
                any = true;
            }
        }
        any
    }

    fn for_col(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                f(self.col_row[k], self.col_val[k]);
            }
        } else if j < self.n + self.m {
            f(j - self.n, 1.0);
        } else {
            let i = j - self.n - self.m;
            f(i, self.art_sign[i]);
        }
    }

    /// Factorizes the basis. Columns found dependent are swapped for the
    /// slacks of the uncovered rows; every variable keeps its value, so the
    /// point stays feasible.
    fn refactor(&mut self) -> Result<(), LpError> {
        loop {
            let result = {
                let (n, m) = (self.n, self.m);
                let cols: Vec<BasisColumn<'_>> = self
                    .head
                    .iter()
                    .map(|&j| {
                        if j < n {
                            let r = self.col_ptr[j]..self.col_ptr[j + 1];
                            BasisColumn::Sparse { rows: &self.col_row[r.clone()], vals: &self.col_val[r] }
                        } else if j < n + m {
                            BasisColumn::Unit { row: j - n, sign: 1.0 }
                        } else {
                            let i = j - n - m;
                            BasisColumn::Unit { row: i, sign: self.art_sign[i] }
                        }
                    })
                    .collect();
                Factor::new(m, &cols)
            };
            match result {
                Ok(f) => {
                    self.factor = Some(f);
                    break;
                }
                Err(singular) => {
                    self.repairs += 1;
                    if self.repairs > MAX_REPAIRS {
                        return Err(LpError::NumericalFailure("basis matrix became singular".into()));
                    }
                    log::debug!("basis repair replaces {} columns", singular.positions.len());
                    for (&pos, &row) in singular.positions.iter().zip(&singular.rows) {
                        self.set_aside(self.head[pos]);
                        let s = self.n + row;
                        self.state[s] = State::Basic;
                        self.head[pos] = s;
                    }
                }
            }
        }
        self.since_refactor = 0;
        self.recompute_primal();
        Ok(())
    }

    fn set_aside(&mut self, j: usize) {
        let x = self.x[j];
        self.state[j] = if x == self.lo[j] {
            State::Lower
        } else if x == self.hi[j] {
            State::Upper
        } else {
            State::Interior
        };
    }

    /// `x_B = B⁻¹ (b − N x_N)`.
    fn recompute_primal(&mut self) {
        let m = self.m;
        let mut resid = self.rhs.clone();
        for j in 0..self.total() {
            if self.state[j] != State::Basic && self.x[j] != 0.0 {
                let xj = self.x[j];
                self.for_col(j, |i, v| resid[i] -= v * xj);
            }
        }
        let mut xb = vec![0.0; m];
        self.lu().ftran(&mut resid, &mut xb);
        for (p, &j) in self.head.iter().enumerate() {
            self.x[j] = xb[p];
        }
    }

    /// `y = c_B B⁻¹` in scaled row space.
    fn duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut cb: Vec<f64> = self.head.iter().map(|&j| self.cost[j]).collect();
        let mut y = vec![0.0; m];
        self.lu().btran(&mut cb, &mut y);
        y
    }

    fn lu(&self) -> &Factor {
        self.factor.as_ref().expect("basis factorized before use")
    }

    fn recompute_duals(&mut self) {
        let y = self.duals();
        for j in 0..self.total() {
            if self.state[j] == State::Basic {
                self.d[j] = 0.0;
                continue;
            }
            let mut dj = self.cost[j];
            self.for_col(j, |i, v| dj -= y[i] * v);
            self.d[j] = dj;
        }
    }

    /// Entering candidate and its direction (+1 increase, −1 decrease).
    fn price(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.total() {
            if self.excluded[j] || self.lo[j] == self.hi[j] {
                continue;
            }
            let dj = self.d[j];
            let dir = match self.state[j] {
                State::Basic => continue,
                State::Lower if dj < -TOL_DUAL => 1.0,
                State::Upper if dj > TOL_DUAL => -1.0,
                State::Interior if dj.abs() > TOL_DUAL => -dj.signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            let score = dj * dj / self.devex[j];
            if score > best_score {
                best_score = score;
                best = Some((j, dir));
            }
        }
        best
    }

    fn ftran(&mut self, q: usize) {
        let m = self.m;
        let mut alpha = std::mem::take(&mut self.alpha);
        let mut z = std::mem::take(&mut self.rho);
        z.iter_mut().for_each(|v| *v = 0.0);
        self.for_col(q, |i, v| z[i] += v);
        self.lu().ftran(&mut z, &mut alpha);
        self.rho = z;
        debug_assert_eq!(alpha.len(), m);
        self.alpha_nz.clear();
        for (p, &a) in alpha.iter().enumerate() {
            if a.abs() > TOL_ZERO {
                self.alpha_nz.push(p);
            }
        }
        self.alpha = alpha;
    }

    /// Ratio of basic position `p` when the entering variable moves by `dir`;
    /// `None` when the position does not limit the step.
    fn ratio(&self, p: usize, dir: f64, slack: f64) -> Option<f64> {
        let a = dir * self.alpha[p];
        if a.abs() < TOL_PIVOT {
            return None;
        }
        let j = self.head[p];
        let r = if a > 0.0 {
            (self.x[j] - self.lo[j] + slack) / a
        } else {
            (self.hi[j] - self.x[j] + slack) / -a
        };
        r.is_finite().then_some(r)
    }

    /// Leaving position and step length. Devex mode uses the Harris two-pass
    /// test; Bland mode takes the smallest variable index among minimum ratios.
    fn ratio_test(&self, dir: f64, bland: bool) -> (Option<usize>, f64) {
        let mut leave: Option<usize> = None;
        if bland {
            let mut best = f64::INFINITY;
            for &p in &self.alpha_nz {
                if let Some(r) = self.ratio(p, dir, 0.0) {
                    let r = r.max(0.0);
                    let ties = leave.is_some_and(|l| r <= best + TOL_ZERO && self.head[p] < self.head[l]);
                    if r < best - TOL_ZERO || ties || leave.is_none() {
                        best = best.min(r);
                        leave = Some(p);
                    }
                }
            }
            return (leave, best);
        }
        let theta_max = self
            .alpha_nz
            .iter()
            .filter_map(|&p| self.ratio(p, dir, TOL_FEAS))
            .fold(f64::INFINITY, f64::min);
        let mut step = f64::INFINITY;
        let mut mag = 0.0;
        for &p in &self.alpha_nz {
            if let Some(r) = self.ratio(p, dir, 0.0) {
                let a = self.alpha[p].abs();
                if r <= theta_max && a > mag {
                    mag = a;
                    leave = Some(p);
                    step = r.max(0.0);
                }
            }
        }
        (leave, step)
    }

    fn run_phase(&mut self) -> Result<PhaseEnd, LpError> {
        let mut rechecks = 0;
        let mut rejected: Vec<usize> = Vec::new();
        let mut relaxed = false;
        loop {
            self.check_limits()?;
            let bland = self.degenerate_run > self.bland_after;
            for &j in &rejected {
                self.excluded[j] = true;
            }
            let choice = self.price(bland);
            for &j in &rejected {
                self.excluded[j] = false;
            }
            let Some((q, dir)) = choice else {
                if !rejected.is_empty() {
                    // Only small pivots remain; accept the best of them.
                    rejected.clear();
                    relaxed = true;
                    continue;
                }
                // Confirm optimality on a fresh factorization.
                if self.since_refactor > 0 && rechecks < 3 {
                    rechecks += 1;
                    self.refactor()?;
                    self.recompute_duals();
                    continue;
                }
                return Ok(PhaseEnd::Optimal);
            };
            self.iterations += 1;
            self.ftran(q);

            let (leave, leave_ratio) = self.ratio_test(dir, bland);
            let range = if dir > 0.0 { self.hi[q] - self.x[q] } else { self.x[q] - self.lo[q] };
            let flip = range.is_finite() && range <= leave_ratio;
            let Some(r) = leave.filter(|_| !flip) else {
                if !flip {
                    return Ok(PhaseEnd::Unbounded);
                }
                self.degenerate_run = 0;
                for &p in &self.alpha_nz {
                    let j = self.head[p];
                    self.x[j] -= range * dir * self.alpha[p];
                }
                self.state[q] = if dir > 0.0 { State::Upper } else { State::Lower };
                self.x[q] = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
                continue;
            };

            // Small pivots compound into an ill-conditioned basis; prefer any
            // other entering candidate.
            let alpha_max = self.alpha_nz.iter().fold(1.0f64, |a, &p| a.max(self.alpha[p].abs()));
            if !relaxed && rejected.len() < MAX_REJECTED && self.alpha[r].abs() < TOL_PREFERRED * alpha_max {
                rejected.push(q);
                continue;
            }
            // The pivot seen from the row side must agree with the column side;
            // disagreement means the factor has drifted.
            let arq = self.btran_row(r, q);
            if (arq - self.alpha[r]).abs() > TOL_DRIFT * (1.0 + self.alpha[r].abs()) {
                if self.since_refactor > 0 {
                    self.refactor()?;
                    self.recompute_duals();
                } else {
                    rejected.push(q);
                }
                continue;
            }
            rejected.clear();
            relaxed = false;

            let theta = leave_ratio;
            if theta > TOL_ZERO {
                self.degenerate_run = 0;
            } else {
                self.degenerate_run += 1;
            }
            if theta != 0.0 {
                self.x[q] += dir * theta;
                for &p in &self.alpha_nz {
                    let j = self.head[p];
                    self.x[j] -= theta * dir * self.alpha[p];
                }
            }
            self.pivot(q, r, dir * self.alpha[r] > 0.0)?;
        }
    }

    /// Stores row `r` of `B⁻¹` in `rho` and returns its product with column `q`.
    fn btran_row(&mut self, r: usize, q: usize) -> f64 {
        let mut e = vec![0.0; self.m];
        e[r] = 1.0;
        let mut rho = std::mem::take(&mut self.rho);
        self.lu().btran(&mut e, &mut rho);
        self.rho = rho;
        self.rho_dot(q)
    }

    fn rho_dot(&self, q: usize) -> f64 {
        let mut v = 0.0;
        self.for_col(q, |i, a| v += self.rho[i] * a);
        v
    }

    /// Widens every finite bound of the structural and slack variables by a
    /// small random amount, which breaks the ties behind degenerate pivots.
    fn perturb_bounds(&mut self) {
        let mut rng = ChaCha8Rng::seed_from_u64(PERTURB_SEED);
        for j in 0..self.n + self.m {
            let mut widen = |b: f64| PERTURB * (1.0 + b.abs()) * (1.0 + rng.gen::<f64>());
            if self.lo[j].is_finite() {
                self.lo[j] -= widen(self.lo[j]);
            }
            if self.hi[j].is_finite() {
                self.hi[j] += widen(self.hi[j]);
            }
        }
    }

    /// Restores the true bounds (artificials fixed at zero) and moves every
    /// nonbasic variable onto them.
    fn remove_perturbation(&mut self, lo: &[f64], hi: &[f64]) -> Result<(), LpError> {
        for j in 0..self.total() {
            let (l, h) = if j < self.n + self.m { (lo[j], hi[j]) } else { (0.0, 0.0) };
            self.lo[j] = l;
            self.hi[j] = h;
            match self.state[j] {
                State::Basic => {}
                State::Lower => self.x[j] = l,
                State::Upper => self.x[j] = h,
                State::Interior => {
                    let x = self.x[j].clamp(l, h);
                    self.x[j] = x;
                    self.set_aside(j);
                }
            }
        }
        self.refactor()?;
        self.recompute_duals();
        Ok(())
    }

    /// Dual simplex passes that restore primal feasibility while keeping the
    /// reduced costs dual feasible. Returns `false` when a basic variable
    /// cannot be brought within its bounds, i.e. the problem is infeasible.
    fn dual_cleanup(&mut self) -> Result<bool, LpError> {
        let mut candidates: Vec<(usize, f64, f64)> = Vec::new();
        loop {
            self.check_limits()?;
            let mut leave = None;
            let mut worst = TOL_FEAS;
            for (p, &j) in self.head.iter().enumerate() {
                let v = self.x[j];
                let infeasibility = (self.lo[j] - v).max(v - self.hi[j]);
                if infeasibility > worst {
                    worst = infeasibility;
                    leave = Some(p);
                }
            }
            let Some(r) = leave else { return Ok(true) };
            let out = self.head[r];
            let below = self.x[out] < self.lo[out];
            self.iterations += 1;
            self.btran_row(r, out);

            // Entering candidates move the leaving variable toward its bound.
            candidates.clear();
            for j in 0..self.total() {
                if self.state[j] == State::Basic || self.excluded[j] || self.lo[j] == self.hi[j] {
                    continue;
                }
                let mut arj = 0.0;
                {
                    let rho = &self.rho;
                    self.for_col(j, |i, v| arj += rho[i] * v);
                }
                if arj.abs() < TOL_PIVOT {
                    continue;
                }
                let dir = if below { -arj.signum() } else { arj.signum() };
                let allowed = match self.state[j] {
                    State::Lower => dir > 0.0,
                    State::Upper => dir < 0.0,
                    State::Interior => true,
                    State::Basic => false,
                };
                if allowed {
                    candidates.push((j, arj, dir));
                }
            }
            let slack = |&(j, arj, dir): &(usize, f64, f64)| (self.d[j] * dir).max(0.0) / arj.abs();
            let bound = candidates
                .iter()
                .map(|c| slack(c) + TOL_DUAL / c.1.abs())
                .fold(f64::INFINITY, f64::min);
            let Some(&(q, _, dir)) = candidates
                .iter()
                .filter(|c| slack(c) <= bound)
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            else {
                return Ok(false);
            };

            self.ftran(q);
            let arq = self.rho_dot(q);
            if (arq - self.alpha[r]).abs() > TOL_DRIFT * (1.0 + self.alpha[r].abs()) && self.since_refactor > 0 {
                self.refactor()?;
                self.recompute_duals();
                continue;
            }
            let target = if below { self.lo[out] } else { self.hi[out] };
            let step = (self.x[out] - target) / (self.alpha[r] * dir);
            self.x[q] += dir * step;
            for &p in &self.alpha_nz {
                let j = self.head[p];
                self.x[j] -= self.alpha[p] * dir * step;
            }
            self.degenerate_run = 0;
            self.pivot(q, r, below)?;
        }
    }


    /// Replaces the basic variable at position `r` by `q`; expects `rho`
    /// to hold row `r` of `B⁻¹`. The leaving variable is placed at its lower
    /// or upper bound as directed.
    fn pivot(&mut self, q: usize, r: usize, leave_at_lower: bool) -> Result<(), LpError> {
        let m = self.m;
        let total = self.total();
        let alpha_r = self.alpha[r];
        let leaving = self.head[r];

        // Row r of B⁻¹.

        // Pivot row entries for nonbasic columns, then reduced-cost and Devex updates.
        let dq = self.d[q];
        let theta_d = dq / alpha_r;
        let wq = self.devex[q].max(1e-12);
        for j in 0..total {
            if self.state[j] == State::Basic || self.excluded[j] || j == q {
                continue;
            }
            let mut arj = 0.0;
            {
                let rho = &self.rho;
                self.for_col(j, |i, v| arj += rho[i] * v);
            }
            if arj != 0.0 {
                self.d[j] -= theta_d * arj;
                let ratio = arj / alpha_r;
                let cand = ratio * ratio * wq;
                if cand > self.devex[j] {
                    self.devex[j] = cand;
                }
            }
        }
        self.d[q] = 0.0;
        self.d[leaving] = -theta_d;
        self.devex[leaving] = (wq / (alpha_r * alpha_r)).max(1.0);

        // A leaving variable already past its bound shifts the bound instead
        // of jumping, so the point keeps satisfying the rows; the true bounds
        // come back in `remove_perturbation`.
        let x = self.x[leaving];
        if leave_at_lower {
            self.state[leaving] = State::Lower;
            self.lo[leaving] = self.lo[leaving].min(x);
            self.x[leaving] = self.lo[leaving];
        } else {
            self.state[leaving] = State::Upper;
            self.hi[leaving] = self.hi[leaving].max(x);
            self.x[leaving] = self.hi[leaving];
        }
        if !self.x[leaving].is_finite() {
            // A free basic variable never limits the step.
            return Err(LpError::NumericalFailure("free variable selected to leave".into()));
        }
        if leaving >= self.n + m {
            self.excluded[leaving] = true;
            self.hi[leaving] = self.x[leaving];
            self.lo[leaving] = self.x[leaving];
        }
        self.state[q] = State::Basic;
        self.head[r] = q;

        let (alpha, alpha_nz) = (&self.alpha, &self.alpha_nz);
        self.factor.as_mut().expect("basis factorized before use").update(r, alpha, alpha_nz);

        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_INTERVAL || self.lu().eta_growth() > 3.0 {
            self.refactor()?;
            self.recompute_duals();
        }
        Ok(())
    }
}
