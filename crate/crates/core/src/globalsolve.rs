//! Spatial branch-and-bound on the proportions `q` of the pq-formulation.
//!
//! Each node carries bounds on every `q[i,l]`; its relaxation is the root LP
//! with the McCormick rows rebuilt over those bounds. Nodes are processed
//! best-bound first, ties in creation order.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::cuts::{build_cjjj_lp, separate_root, SeparationReport, Tolerances};
use crate::error::Result;
use crate::lpcore::{solve_with, Basis, ColId, LinearProgram, LpSolution, LpStatus, SolveOptions};
use crate::pqmodel::{McCormickRows, PqModel};

/// Bilinear terms at or below this violation count as exact.
pub const FEASIBILITY_TOL: f64 = 1e-6;
/// Intervals narrower than this are not split further.
const MIN_WIDTH: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct SolveConfig {
    pub use_cjjj_root: bool,
    pub rel_gap: f64,
    pub node_limit: Option<usize>,
    pub time_limit: Option<Duration>,
    pub trace: bool,
    pub tolerances: Tolerances,
    pub branching: Branching,
}

/// Rule picking the proportion to split.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branching {
    /// Largest total bilinear violation.
    MostViolated,
    /// Among the `candidates` most violated, the one whose two children
    /// raise the bound most (product of the two gains).
    Strong { candidates: usize },
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            use_cjjj_root: false,
            rel_gap: 1e-6,
            node_limit: None,
            time_limit: None,
            trace: false,
            tolerances: Tolerances::default(),
            branching: Branching::Strong { candidates: 4 },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    NodeLimit,
    TimeLimit,
}

impl SolveStatus {
    pub fn hit_limit(self) -> bool {
        matches!(self, SolveStatus::NodeLimit | SolveStatus::TimeLimit)
    }
}

#[derive(Clone, Debug)]
pub struct BnbNode {
    pub id: usize,
    pub parent: Option<usize>,
    /// `(lower, upper)` per proportion, in the order of [`PqModel::q`].
    pub bounds: Vec<(f64, f64)>,
    /// Bound inherited from the parent.
    pub bound: f64,
    pub depth: usize,
    basis: Option<Basis>,
}

struct Queued(BnbNode);

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    // max-heap order: smaller bound first, then smaller id
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.bound.total_cmp(&self.0.bound).then(other.0.id.cmp(&self.0.id))
    }
}

/// One processed node, as written to the trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub node: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    pub bound: Option<f64>,
    pub branch: Option<String>,
    pub split: Option<f64>,
    pub incumbent: Option<f64>,
    pub open: usize,
}

#[derive(Clone, Debug)]
pub struct GlobalResult {
    pub status: SolveStatus,
    /// Objective of the incumbent.
    pub objective: Option<f64>,
    /// Full LP vector of the incumbent, with `w = q x` exactly.
    pub incumbent: Option<Vec<f64>>,
    pub dual_bound: f64,
    pub root_bound: f64,
    pub nodes: usize,
    pub separation: Option<SeparationReport>,
    pub separation_time: Duration,
    pub wall_time: Duration,
    /// Node LPs that ended neither optimal nor infeasible.
    pub lp_failures: usize,
    pub trace: Vec<TraceEvent>,
}

impl GlobalResult {
    pub fn trace_json_lines(&self) -> String {
        self.trace
            .iter()
            .map(|e| serde_json::to_string(e).expect("plain data") + "\n")
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeStatistics {
    pub nodes: usize,
    /// Seconds, separation included.
    pub wall_time: f64,
    /// Percent gap of the root bound to the incumbent.
    pub root_gap: Option<f64>,
}

pub fn node_statistics(run: &GlobalResult) -> NodeStatistics {
    NodeStatistics {
        nodes: run.nodes,
        wall_time: run.wall_time.as_secs_f64(),
        root_gap: run.objective.and_then(|opt| crate::report::gap(opt, run.root_bound)),
    }
}

struct Tree<'a> {
    model: &'a PqModel,
    lp: LinearProgram,
    mccormick: Vec<McCormickRows>,
    q_cols: Vec<ColId>,
    /// index into `q_cols` per bilinear term
    q_of: Vec<usize>,
    /// per proportion `q[i,l]`: flow on `i -> l` and flows out of `l`
    flow_share: Vec<(ColId, Vec<ColId>)>,
}

impl Tree<'_> {
    fn apply(&mut self, bounds: &[(f64, f64)]) {
        for (k, &(lo, hi)) in bounds.iter().enumerate() {
            self.lp.set_col_bounds(self.q_cols[k], lo, hi).expect("bounds ordered");
        }
        for b in 0..self.mccormick.len() {
            let (lo, hi) = bounds[self.q_of[b]];
            self.model.set_mccormick_bounds(&mut self.lp, b, &self.mccormick[b], lo, hi);
        }
    }

    fn solve(&self, warm: Option<Basis>) -> LpSolution {
        let sol = solve_with(
            &self.lp,
            &SolveOptions {
                warm_start: warm.clone(),
                ..Default::default()
            },
        );
        if warm.is_some() && !matches!(sol.status, LpStatus::Optimal | LpStatus::Infeasible) {
            return solve_with(&self.lp, &SolveOptions::default());
        }
        sol
    }

    /// Fixes every proportion at `q` (clamped to the node) and solves for
    /// flows; the result satisfies `w = q x` exactly.
    fn fixed_q(&mut self, node: &[(f64, f64)], q: &[f64], basis: &Basis) -> Option<(f64, Vec<f64>)> {
        let fixed: Vec<(f64, f64)> = q
            .iter()
            .zip(node)
            .map(|(&v, &(lo, hi))| {
                let v = v.clamp(lo, hi);
                (v, v)
            })
            .collect();
        self.apply(&fixed);
        let fix = self.solve(Some(basis.clone()));
        self.apply(node);
        (fix.status == LpStatus::Optimal && self.model.bilinear_violation(&fix.primal) <= FEASIBILITY_TOL)
            .then(|| (fix.objective, fix.primal))
    }

    /// Best of fixing `q` at its LP value and at the proportions implied by
    /// the LP flows.
    fn heuristic(&mut self, node: &[(f64, f64)], sol: &LpSolution) -> Option<(f64, Vec<f64>)> {
        let lp_q: Vec<f64> = self.q_cols.iter().map(|c| sol.primal[c.0]).collect();
        let flow_q: Vec<f64> = self
            .flow_share
            .iter()
            .zip(&lp_q)
            .map(|((inflow, outflows), &q)| {
                let out: f64 = outflows.iter().map(|c| sol.primal[c.0]).sum();
                if out > 1e-9 {
                    sol.primal[inflow.0] / out
                } else {
                    q
                }
            })
            .collect();
        let a = self.fixed_q(node, &lp_q, &sol.basis);
        let b = if flow_q.iter().zip(&lp_q).any(|(a, b)| (a - b).abs() > 1e-12) {
            self.fixed_q(node, &flow_q, &sol.basis)
        } else {
            None
        };
        match (a, b) {
            (Some(a), Some(b)) => Some(if b.0 < a.0 { b } else { a }),
            (a, b) => a.or(b),
        }
    }

    /// Splittable proportions by decreasing total bilinear violation.
    fn candidates(&self, primal: &[f64], bounds: &[(f64, f64)]) -> Vec<usize> {
        let mut score = vec![0.0; self.q_cols.len()];
        for (b, bl) in self.model.bilinear.iter().enumerate() {
            score[self.q_of[b]] += (primal[bl.w.0] - primal[bl.q.0] * primal[bl.x.0]).abs();
        }
        let mut ks: Vec<usize> = (0..score.len())
            .filter(|&k| bounds[k].1 - bounds[k].0 > MIN_WIDTH && score[k] > FEASIBILITY_TOL)
            .collect();
        // stable: ties keep index order
        ks.sort_by(|&a, &b| score[b].total_cmp(&score[a]));
        ks
    }

    fn split_point(&self, primal: &[f64], bounds: &[(f64, f64)], k: usize) -> f64 {
        let (lo, hi) = bounds[k];
        let d = hi - lo;
        primal[self.q_cols[k].0].clamp(lo + 0.1 * d, hi - 0.1 * d)
    }

    fn children(bounds: &[(f64, f64)], k: usize, split: f64) -> [Vec<(f64, f64)>; 2] {
        let (lo, hi) = bounds[k];
        [(lo, split), (split, hi)].map(|iv| {
            let mut b = bounds.to_vec();
            b[k] = iv;
            b
        })
    }

    /// Branching decision: proportion, split point and, under strong
    /// branching, the LP bounds of both children.
    fn branch(&mut self, rule: Branching, sol: &LpSolution, bounds: &[(f64, f64)], bound: f64) -> Option<(usize, f64, [f64; 2])> {
        let ks = self.candidates(&sol.primal, bounds);
        let first = *ks.first()?;
        let n = match rule {
            Branching::MostViolated => 0,
            Branching::Strong { candidates } => candidates.min(ks.len()),
        };
        if n <= 1 {
            return Some((first, self.split_point(&sol.primal, bounds, first), [bound; 2]));
        }
        let mut best: Option<(f64, usize, f64, [f64; 2])> = None;
        for &k in &ks[..n] {
            let split = self.split_point(&sol.primal, bounds, k);
            let mut child = [bound; 2];
            for (c, b) in Self::children(bounds, k, split).iter().enumerate() {
                self.apply(b);
                let s = self.solve(Some(sol.basis.clone()));
                child[c] = match s.status {
                    LpStatus::Optimal => s.objective.max(bound),
                    LpStatus::Infeasible => f64::INFINITY,
                    _ => bound,
                };
            }
            let gain = |v: f64| (v - bound).clamp(1e-6, 1e12);
            let score = gain(child[0]) * gain(child[1]);
            if best.map_or(true, |(bs, ..)| score > bs) {
                best = Some((score, k, split, child));
            }
        }
        self.apply(bounds);
        best.map(|(_, k, split, child)| (k, split, child))
    }
}

fn gap_closed(incumbent: f64, bound: f64, rel_gap: f64) -> bool {
    incumbent - bound <= rel_gap * incumbent.abs().max(1.0)
}

pub fn solve_global(model: &PqModel, config: &SolveConfig) -> Result<GlobalResult> {
    let start = Instant::now();
    let (lp, mccormick, separation) = if config.use_cjjj_root {
        let mut cjjj = build_cjjj_lp(model)?;
        let report = separate_root(&mut cjjj.lp, &cjjj.contexts, &config.tolerances);
        (cjjj.lp, cjjj.mccormick, Some(report))
    } else {
        let mut lp = model.lp.clone();
        let rows = model.add_mccormick(&mut lp)?;
        (lp, rows, None)
    };
    let separation_time = start.elapsed();

    let q_cols: Vec<ColId> = model.q.values().copied().collect();
    let index: BTreeMap<ColId, usize> = q_cols.iter().enumerate().map(|(k, &c)| (c, k)).collect();
    let q_of = model.bilinear.iter().map(|b| index[&b.q]).collect();
    let inst = &model.instance;
    let arcs = inst.arc_map();
    let flow_share = model
        .q
        .keys()
        .map(|&(i, l)| (model.x[arcs[&(i, l)]], inst.out_arcs(l).iter().map(|&a| model.x[a]).collect()))
        .collect();
    let mut tree = Tree {
        model,
        lp,
        mccormick,
        q_cols,
        q_of,
        flow_share,
    };

    let q_names: Vec<String> = tree.q_cols.iter().map(|&c| tree.lp.column(c).name.clone()).collect();
    let root_bounds: Vec<(f64, f64)> = tree.q_cols.iter().map(|&c| (tree.lp.column(c).lower, tree.lp.column(c).upper)).collect();

    let mut heap = BinaryHeap::new();
    heap.push(Queued(BnbNode {
        id: 0,
        parent: None,
        bounds: root_bounds,
        bound: f64::NEG_INFINITY,
        depth: 0,
        basis: None,
    }));
    let mut next_id = 1;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut nodes = 0;
    let mut root_bound = f64::NEG_INFINITY;
    let mut lp_failures = 0;
    let mut trace = Vec::new();
    let mut status = SolveStatus::Optimal;

    while let Some(Queued(node)) = heap.peek() {
        if let Some((inc, _)) = &incumbent {
            if gap_closed(*inc, node.bound, config.rel_gap) {
                break;
            }
        }
        if config.node_limit.is_some_and(|l| nodes >= l) {
            status = SolveStatus::NodeLimit;
            break;
        }
        if config.time_limit.is_some_and(|l| start.elapsed() >= l) {
            status = SolveStatus::TimeLimit;
            break;
        }
        let Some(Queued(node)) = heap.pop() else {
            break;
        };
        nodes += 1;
        tree.apply(&node.bounds);
        let sol = tree.solve(node.basis.clone());
        let mut event = TraceEvent {
            node: node.id,
            parent: node.parent,
            depth: node.depth,
            bound: None,
            branch: None,
            split: None,
            incumbent: None,
            open: 0,
        };
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => {
                if node.id == 0 {
                    root_bound = f64::INFINITY;
                }
                event.open = heap.len();
                event.incumbent = incumbent.as_ref().map(|i| i.0);
                if config.trace {
                    trace.push(event);
                }
                continue;
            }
            _ => {
                lp_failures += 1;
                continue;
            }
        }
        // children inherit the parent's bound, which never exceeds this one
        let bound = sol.objective.max(node.bound);
        if node.id == 0 {
            root_bound = bound;
        }
        event.bound = Some(bound);

        let prunable = |inc: &Option<(f64, Vec<f64>)>| inc.as_ref().is_some_and(|(v, _)| gap_closed(*v, bound, config.rel_gap));
        if !prunable(&incumbent) {
            let candidate = if model.bilinear_violation(&sol.primal) <= FEASIBILITY_TOL {
                Some((sol.objective, sol.primal.clone()))
            } else {
                tree.heuristic(&node.bounds, &sol)
            };
            if let Some((v, x)) = candidate {
                if incumbent.as_ref().map_or(true, |(iv, _)| v < *iv) {
                    incumbent = Some((v, x));
                }
            }
        }
        if !prunable(&incumbent) {
            if let Some((k, split, child_bounds)) = tree.branch(config.branching, &sol, &node.bounds, bound) {
                event.branch = Some(q_names[k].clone());
                event.split = Some(split);
                for (bounds, cb) in Tree::children(&node.bounds, k, split).into_iter().zip(child_bounds) {
                    let pruned = cb == f64::INFINITY || incumbent.as_ref().is_some_and(|(v, _)| gap_closed(*v, cb, config.rel_gap));
                    if !pruned {
                        heap.push(Queued(BnbNode {
                            id: next_id,
                            parent: Some(node.id),
                            bounds,
                            bound: cb,
                            depth: node.depth + 1,
                            basis: Some(sol.basis.clone()),
                        }));
                    }
                    next_id += 1;
                }
            }
        }
        event.open = heap.len();
        event.incumbent = incumbent.as_ref().map(|i| i.0);
        if config.trace {
            trace.push(event);
        }
    }

    let open_bound = heap.iter().map(|Queued(n)| n.bound).fold(f64::INFINITY, f64::min);
    let dual_bound = match &incumbent {
        Some((v, _)) => open_bound.min(*v),
        None => open_bound,
    };
    if status == SolveStatus::Optimal && incumbent.is_none() {
        status = SolveStatus::Infeasible;
    }
    let (objective, incumbent) = match incumbent {
        Some((v, x)) => (Some(v), Some(x)),
        None => (None, None),
    };
    Ok(GlobalResult {
        status,
        objective,
        incumbent,
        dual_bound,
        root_bound,
        nodes,
        separation,
        separation_time,
        wall_time: start.elapsed(),
        lp_failures,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::haverly;
    use crate::pqmodel::build_pq;

    #[test]
    fn haverly1_both_modes() {
        let model = build_pq(&haverly(1)).unwrap();
        for cjjj in [false, true] {
            let cfg = SolveConfig {
                use_cjjj_root: cjjj,
                ..Default::default()
            };
            let r = solve_global(&model, &cfg).unwrap();
            assert_eq!(r.status, SolveStatus::Optimal);
            assert!((r.objective.unwrap() + 400.0).abs() < 1e-6 * 400.0);
            if cjjj {
                assert_eq!(r.nodes, 1);
            }
        }
    }

    #[test]
    fn node_limit_reports_limit() {
        let model = build_pq(&haverly(3)).unwrap();
        let cfg = SolveConfig {
            node_limit: Some(1),
            ..Default::default()
        };
        let r = solve_global(&model, &cfg).unwrap();
        assert_eq!(r.nodes, 1);
        assert!(r.status == SolveStatus::NodeLimit || r.status == SolveStatus::Optimal);
        assert!(r.dual_bound <= r.objective.unwrap_or(f64::INFINITY));
    }
}
