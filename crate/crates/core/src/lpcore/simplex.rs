//! Bounded revised simplex (primal with a composite phase 1, and dual).
//!
//! Each row `r` gets a logical variable `s_r` with `a_r x - s_r = 0` and the
//! row range as bounds, so every constraint becomes a variable bound and the
//! all-logical basis is always available as a starting point.

use super::factor::BasisFactor;
use super::model::LinearProgram;

/// Primal feasibility tolerance used inside the pivoting loop.
const PRIMAL_TOL: f64 = 1e-9;
/// Reduced-cost optimality tolerance.
const DUAL_TOL: f64 = 1e-9;
/// Feasibility tolerance for the final independent check.
pub const FEASIBILITY_TOL: f64 = 1e-7;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_INTERVAL: usize = 64;
const DEGENERATE_LIMIT: usize = 1000;
const STALL_TOL: f64 = 1e-9;
/// Smallest pivot entry that still limits a primal step.
const TINY_PIVOT: f64 = 1e-11;
/// Bound violation tolerated by the two-pass ratio test.
const HARRIS_TOL: f64 = 0.5 * PRIMAL_TOL;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable held at zero.
    AtZero,
}

/// Simplex basis, stored as one status per column and per row logical so it
/// survives appended rows and columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Basis {
    pub col_status: Vec<VarStatus>,
    pub row_status: Vec<VarStatus>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub max_pivots: usize,
    pub warm_start: Option<Basis>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_pivots: 1_000_000,
            warm_start: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    /// Column values.
    pub primal: Vec<f64>,
    /// Row duals `y` with reduced costs `c - A^T y`.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub basis: Basis,
    pub pivots: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

pub fn solve(lp: &LinearProgram) -> LpSolution {
    solve_with(lp, &SolveOptions::default())
}

pub fn solve_with(lp: &LinearProgram, options: &SolveOptions) -> LpSolution {
    let mut s = Simplex::new(lp, options);
    let status = s.run(options.max_pivots);
    s.into_solution(status)
}

enum Step {
    Pivoted,
    Optimal,
    Unbounded,
    Infeasible,
}

struct Simplex<'a> {
    lp: &'a LinearProgram,
    n: usize,
    m: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    status: Vec<VarStatus>,
    head: Vec<usize>,
    x: Vec<f64>,
    factor: BasisFactor,
    pivots: usize,
    window_len: usize,
    window_gain: f64,
    bland: bool,
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a LinearProgram, options: &SolveOptions) -> Self {
        let n = lp.num_cols();
        let m = lp.num_rows();
        let mut lower = Vec::with_capacity(n + m);
        let mut upper = Vec::with_capacity(n + m);
        let mut cost = Vec::with_capacity(n + m);
        for c in lp.columns() {
            lower.push(c.lower);
            upper.push(c.upper);
            cost.push(c.cost);
        }
        for r in lp.rows() {
            let (lo, hi) = r.activity_bounds();
            lower.push(lo);
            upper.push(hi);
            cost.push(0.0);
        }
        let status = options
            .warm_start
            .as_ref()
            .and_then(|b| warm_status(b, n, m))
            .unwrap_or_else(|| cold_status(&lower, &upper, &cost, n, m));
        let mut s = Self {
            lp,
            n,
            m,
            lower,
            upper,
            cost,
            status,
            head: Vec::new(),
            x: vec![0.0; n + m],
            factor: BasisFactor::placeholder(),
            pivots: 0,
            window_len: 0,
            window_gain: 0.0,
            bland: false,
        };
        for j in 0..n + m {
            if s.status[j] != VarStatus::Basic {
                s.status[j] = s.normalized_nonbasic(j, s.status[j]);
            }
        }
        s.head = (0..n + m).filter(|&j| s.status[j] == VarStatus::Basic).collect();
        s.refactor();
        s
    }

    fn normalized_nonbasic(&self, j: usize, st: VarStatus) -> VarStatus {
        let (l, u) = (self.lower[j], self.upper[j]);
        match st {
            VarStatus::AtLower if l.is_finite() => VarStatus::AtLower,
            VarStatus::AtUpper if u.is_finite() => VarStatus::AtUpper,
            _ if l.is_finite() => VarStatus::AtLower,
            _ if u.is_finite() => VarStatus::AtUpper,
            _ => VarStatus::AtZero,
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.status[j] {
            VarStatus::AtLower => self.lower[j],
            VarStatus::AtUpper => self.upper[j],
            _ => 0.0,
        }
    }

    /// Rebuilds the factorization from `head`, repairing singular bases with
    /// logicals, and recomputes all variable values.
    fn refactor(&mut self) {
        loop {
            match BasisFactor::new(self.lp, &self.head) {
                Ok(f) => {
                    self.factor = f;
                    break;
                }
                Err(sing) => {
                    for (&pos, &row) in sing.positions.iter().zip(&sing.rows) {
                        let old = self.head[pos];
                        let st = if self.x[old] >= self.upper[old] {
                            VarStatus::AtUpper
                        } else {
                            VarStatus::AtLower
                        };
                        self.status[old] = self.normalized_nonbasic(old, st);
                        self.head[pos] = self.n + row;
                        self.status[self.n + row] = VarStatus::Basic;
                    }
                }
            }
        }
        self.recompute_primal();
    }

    fn recompute_primal(&mut self) {
        let mut rhs = vec![0.0; self.m];
        for j in 0..self.n + self.m {
            if self.status[j] == VarStatus::Basic {
                continue;
            }
            let v = self.nonbasic_value(j);
            self.x[j] = v;
            if v == 0.0 {
                continue;
            }
            if j < self.n {
                for &(r, a) in self.lp.columns()[j].entries() {
                    rhs[r] -= a * v;
                }
            } else {
                rhs[j - self.n] += v;
            }
        }
        let xb = self.factor.ftran(self.lp, &rhs);
        for (p, &v) in self.head.iter().enumerate() {
            self.x[v] = xb[p];
        }
    }

    fn column(&self, j: usize) -> Vec<f64> {
        let mut a = vec![0.0; self.m];
        if j < self.n {
            for &(r, v) in self.lp.columns()[j].entries() {
                a[r] = v;
            }
        } else {
            a[j - self.n] = -1.0;
        }
        a
    }

    fn dot_column(&self, y: &[f64], j: usize) -> f64 {
        if j < self.n {
            self.lp.columns()[j].entries().iter().map(|&(r, v)| v * y[r]).sum()
        } else {
            -y[j - self.n]
        }
    }

    fn infeasibility(&self, v: usize) -> f64 {
        let x = self.x[v];
        (self.lower[v] - x).max(x - self.upper[v]).max(0.0)
    }

    fn primal_infeasible(&self) -> bool {
        self.head.iter().any(|&v| self.infeasibility(v) > PRIMAL_TOL)
    }

    fn duals(&self) -> Vec<f64> {
        let cb: Vec<f64> = self.head.iter().map(|&v| self.cost[v]).collect();
        self.factor.btran(self.lp, &cb)
    }

    fn reduced_cost(&self, y: &[f64], j: usize) -> f64 {
        self.cost[j] - self.dot_column(y, j)
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.lower[j] == self.upper[j]
    }

    fn dual_feasible(&self) -> bool {
        let y = self.duals();
        (0..self.n + self.m).all(|j| {
            if self.status[j] == VarStatus::Basic || self.is_fixed(j) {
                return true;
            }
            let d = self.reduced_cost(&y, j);
            match self.status[j] {
                VarStatus::AtLower => d >= -DUAL_TOL,
                VarStatus::AtUpper => d <= DUAL_TOL,
                _ => d.abs() <= DUAL_TOL,
            }
        })
    }

    fn run(&mut self, max_pivots: usize) -> LpStatus {
        let mut dual_mode = self.primal_infeasible() && self.dual_feasible();
        // True while the values come from a fresh factorization.
        let mut fresh = true;
        loop {
            if self.pivots >= max_pivots {
                return LpStatus::IterationLimit;
            }
            if self.factor.num_etas() >= REFACTOR_INTERVAL {
                self.refactor();
                fresh = true;
            }
            let step = if dual_mode {
                self.dual_iteration()
            } else {
                let phase1 = self.primal_infeasible();
                match self.primal_iteration(phase1) {
                    Step::Optimal if phase1 => Step::Infeasible,
                    s => s,
                }
            };
            match step {
                Step::Pivoted => {
                    self.pivots += 1;
                    fresh = false;
                }
                // Confirm every verdict on a fresh factorization.
                _ if !fresh => {
                    self.refactor();
                    fresh = true;
                }
                // The dual loop hands over to the primal one, which either
                // confirms optimality at once or repairs residual errors.
                _ if dual_mode => dual_mode = false,
                Step::Optimal => return LpStatus::Optimal,
                Step::Infeasible => return LpStatus::Infeasible,
                Step::Unbounded => return LpStatus::Unbounded,
            }
        }
    }

    fn primal_iteration(&mut self, phase1: bool) -> Step {
        let cb: Vec<f64> = self
            .head
            .iter()
            .map(|&v| {
                if !phase1 {
                    self.cost[v]
                } else if self.x[v] < self.lower[v] - PRIMAL_TOL {
                    -1.0
                } else if self.x[v] > self.upper[v] + PRIMAL_TOL {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let y = self.factor.btran(self.lp, &cb);

        let mut entering: Option<(usize, f64, f64)> = None;
        let mut best = 0.0;
        for j in 0..self.n + self.m {
            if self.status[j] == VarStatus::Basic || self.is_fixed(j) {
                continue;
            }
            let c = if phase1 { 0.0 } else { self.cost[j] };
            let d = c - self.dot_column(&y, j);
            let dir = match self.status[j] {
                VarStatus::AtLower if d < -DUAL_TOL => 1.0,
                VarStatus::AtUpper if d > DUAL_TOL => -1.0,
                VarStatus::AtZero if d.abs() > DUAL_TOL => -d.signum(),
                _ => continue,
            };
            if self.bland {
                entering = Some((j, dir, d.abs()));
                break;
            }
            if d.abs() > best {
                best = d.abs();
                entering = Some((j, dir, d.abs()));
            }
        }
        let Some((q, dir, rate)) = entering else {
            return Step::Optimal;
        };

        let alpha = self.factor.ftran(self.lp, &self.column(q));
        let range = self.upper[q] - self.lower[q];
        let limits: Vec<(usize, f64, f64, f64)> = alpha
            .iter()
            .enumerate()
            .filter(|(_, a)| a.abs() >= TINY_PIVOT)
            .filter_map(|(p, &a)| {
                let v = self.head[p];
                let delta = -dir * a;
                let (xv, l, u) = (self.x[v], self.lower[v], self.upper[v]);
                let (dist, target) = if phase1 && xv < l - PRIMAL_TOL {
                    (delta > 0.0).then(|| (l - xv, l))?
                } else if phase1 && xv > u + PRIMAL_TOL {
                    (delta < 0.0).then(|| (xv - u, u))?
                } else if delta < 0.0 && l.is_finite() {
                    ((xv - l).max(0.0), l)
                } else if delta > 0.0 && u.is_finite() {
                    ((u - xv).max(0.0), u)
                } else {
                    return None;
                };
                Some((p, dist / delta.abs(), (dist + HARRIS_TOL) / delta.abs(), target))
            })
            .collect();
        // Harris: bound the step with relaxed bounds, then take the largest
        // pivot among the rows that block within it.
        let relaxed = limits.iter().map(|l| l.2).fold(f64::INFINITY, f64::min);
        let mut theta = range;
        let mut leaving: Option<(usize, f64)> = None;
        if relaxed < range {
            let mut pivot = 0.0;
            for &(p, ratio, _, target) in &limits {
                let a = alpha[p].abs();
                if ratio > relaxed {
                    continue;
                }
                let better = if self.bland {
                    leaving.is_none_or(|(lp, _)| self.head[p] < self.head[lp])
                } else {
                    a > pivot
                };
                if better {
                    pivot = a;
                    theta = ratio;
                    leaving = Some((p, target));
                }
            }
        }
        if theta.is_infinite() {
            return Step::Unbounded;
        }
        self.track_progress(rate * theta);

        self.x[q] += dir * theta;
        for (p, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                let v = self.head[p];
                self.x[v] -= dir * a * theta;
            }
        }
        match leaving {
            None => {
                self.status[q] = if dir > 0.0 {
                    VarStatus::AtUpper
                } else {
                    VarStatus::AtLower
                };
                self.x[q] = self.nonbasic_value(q);
            }
            Some((p, target)) => {
                let v = self.head[p];
                self.x[v] = target;
                self.status[v] = if target == self.lower[v] {
                    VarStatus::AtLower
                } else {
                    VarStatus::AtUpper
                };
                self.status[q] = VarStatus::Basic;
                self.head[p] = q;
                self.factor.push_eta(p, &alpha);
            }
        }
        Step::Pivoted
    }

    fn dual_iteration(&mut self) -> Step {
        let mut leave: Option<usize> = None;
        let mut worst = PRIMAL_TOL;
        for (p, &v) in self.head.iter().enumerate() {
            let inf = self.infeasibility(v);
            if self.bland {
                if inf > PRIMAL_TOL && leave.is_none_or(|l| v < self.head[l]) {
                    leave = Some(p);
                }
            } else if inf > worst {
                worst = inf;
                leave = Some(p);
            }
        }
        let Some(p) = leave else {
            return Step::Optimal;
        };
        let v = self.head[p];
        let going_up = self.x[v] < self.lower[v];
        let target = if going_up { self.lower[v] } else { self.upper[v] };

        let mut unit = vec![0.0; self.m];
        unit[p] = 1.0;
        let rho = self.factor.btran(self.lp, &unit);
        let y = self.duals();

        let mut entering: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        let mut best_pivot = 0.0;
        for j in 0..self.n + self.m {
            if self.status[j] == VarStatus::Basic || self.is_fixed(j) {
                continue;
            }
            let a = self.dot_column(&rho, j);
            if a.abs() < PIVOT_TOL {
                continue;
            }
            // x_v changes by -a * dx_j.
            let eligible = match self.status[j] {
                VarStatus::AtLower => (a < 0.0) == going_up,
                VarStatus::AtUpper => (a > 0.0) == going_up,
                _ => true,
            };
            if !eligible {
                continue;
            }
            let d = self.reduced_cost(&y, j);
            let d = match self.status[j] {
                VarStatus::AtLower => d.max(0.0),
                VarStatus::AtUpper => (-d).max(0.0),
                _ => d.abs(),
            };
            let ratio = d / a.abs();
            let better = if ratio < best_ratio - 1e-12 {
                true
            } else if ratio <= best_ratio + 1e-12 {
                if self.bland {
                    entering.is_none_or(|e| j < e)
                } else {
                    a.abs() > best_pivot
                }
            } else {
                false
            };
            if better {
                best_ratio = ratio;
                best_pivot = a.abs();
                entering = Some(j);
            }
        }
        let Some(q) = entering else {
            return Step::Infeasible;
        };
        let alpha = self.factor.ftran(self.lp, &self.column(q));
        if alpha[p].abs() < PIVOT_TOL {
            // Inconsistent row/column pivot: refresh and retry.
            self.refactor();
            return Step::Pivoted;
        }
        let dx = (self.x[v] - target) / alpha[p];
        self.track_progress(best_ratio * (self.x[v] - target).abs());
        self.x[q] += dx;
        for (i, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                let b = self.head[i];
                self.x[b] -= a * dx;
            }
        }
        self.x[v] = target;
        self.status[v] = if going_up {
            VarStatus::AtLower
        } else {
            VarStatus::AtUpper
        };
        self.status[q] = VarStatus::Basic;
        self.head[p] = q;
        self.factor.push_eta(p, &alpha);
        Step::Pivoted
    }

    /// Switches to Bland's rule once a window of pivots gains almost
    /// nothing in the objective; tiny nonzero steps can cycle too.
    fn track_progress(&mut self, gain: f64) {
        self.window_gain += gain;
        self.window_len += 1;
        if self.window_len >= DEGENERATE_LIMIT {
            let obj: f64 = (0..self.n).map(|j| self.cost[j] * self.x[j]).sum();
            if self.window_gain <= STALL_TOL * obj.abs().max(1.0) {
                self.bland = true;
            }
            self.window_len = 0;
            self.window_gain = 0.0;
        }
    }

    fn into_solution(self, status: LpStatus) -> LpSolution {
        let y = self.duals();
        let reduced_costs = (0..self.n).map(|j| self.reduced_cost(&y, j)).collect();
        let primal = self.x[..self.n].to_vec();
        let objective = self.lp.objective_value(&primal);
        LpSolution {
            status,
            objective,
            primal,
            duals: y,
            reduced_costs,
            basis: Basis {
                col_status: self.status[..self.n].to_vec(),
                row_status: self.status[self.n..].to_vec(),
            },
            pivots: self.pivots,
        }
    }
}

fn cold_status(lower: &[f64], upper: &[f64], cost: &[f64], n: usize, m: usize) -> Vec<VarStatus> {
    let mut status = Vec::with_capacity(n + m);
    for j in 0..n {
        let st = if cost[j] < 0.0 && upper[j].is_finite() {
            VarStatus::AtUpper
        } else if lower[j].is_finite() {
            VarStatus::AtLower
        } else if upper[j].is_finite() {
            VarStatus::AtUpper
        } else {
            VarStatus::AtZero
        };
        status.push(st);
    }
    status.extend(std::iter::repeat(VarStatus::Basic).take(m));
    status
}

/// Adapts a stored basis to the current dimensions: appended rows get basic
/// logicals, appended columns start nonbasic. Returns `None` when the
/// stored basis does not fit.
fn warm_status(b: &Basis, n: usize, m: usize) -> Option<Vec<VarStatus>> {
    if b.col_status.len() > n || b.row_status.len() > m {
        return None;
    }
    let mut status = b.col_status.clone();
    status.resize(n, VarStatus::AtLower);
    status.extend_from_slice(&b.row_status);
    status.resize(n + m, VarStatus::Basic);
    let basics = status.iter().filter(|&&s| s == VarStatus::Basic).count();
    (basics == m).then_some(status)
}
