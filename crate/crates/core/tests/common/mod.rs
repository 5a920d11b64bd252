#![allow(dead_code)]

use pooling_core::instance::{NodeKind, PoolingInstance};
use pooling_core::lpcore::{solve, ColId, LpStatus};
use pooling_core::pqmodel::PqModel;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Independent check of every pq constraint with `w = q x` enforced.
/// `flow[a]` is the arc flow and `prop(i, l)` the proportion.
pub fn pq_violation(inst: &PoolingInstance, flow: &[f64], prop: &dyn Fn(usize, usize) -> f64) -> f64 {
    let mut worst = 0.0_f64;
    let arcs = inst.arc_map();
    for (a, arc) in inst.arcs.iter().enumerate() {
        worst = worst.max(-flow[a]);
        if let Some(c) = arc.capacity {
            worst = worst.max(flow[a] - c);
        }
    }
    for n in 0..inst.num_nodes() {
        let total: f64 = match inst.kind(n) {
            NodeKind::Output => inst.in_arcs(n).iter().map(|&a| flow[a]).sum(),
            _ => inst.out_arcs(n).iter().map(|&a| flow[a]).sum(),
        };
        worst = worst.max(total - inst.nodes[n].capacity);
    }
    for l in inst.pools() {
        let ins: Vec<usize> = inst.in_arcs(l).iter().map(|&a| inst.arcs[a].from).collect();
        let outflow: f64 = inst.out_arcs(l).iter().map(|&a| flow[a]).sum();
        worst = worst.max((ins.iter().map(|&i| prop(i, l)).sum::<f64>() - 1.0).abs());
        for &i in &ins {
            let q = prop(i, l);
            worst = worst.max(-q).max(q - 1.0);
            worst = worst.max((flow[arcs[&(i, l)]] - q * outflow).abs());
        }
    }
    for k in 0..inst.attributes.len() {
        for j in inst.outputs() {
            let mut excess = 0.0;
            for a in inst.in_arcs(j) {
                let from = inst.arcs[a].from;
                if inst.kind(from) == NodeKind::Input {
                    excess += inst.gamma(k, from, j) * flow[a];
                } else {
                    for b in inst.in_arcs(from) {
                        let i = inst.arcs[b].from;
                        excess += inst.gamma(k, i, j) * prop(i, from) * flow[a];
                    }
                }
            }
            worst = worst.max(excess);
        }
    }
    worst
}

/// `pq_violation` of a full LP vector of `model`.
pub fn model_violation(model: &PqModel, p: &[f64]) -> f64 {
    let flow: Vec<f64> = model.x.iter().map(|c| p[c.0]).collect();
    let prop = |i: usize, l: usize| p[model.q[&(i, l)].0];
    pq_violation(&model.instance, &flow, &prop)
}

/// Objective of the pq-formulation computed from arc costs.
pub fn flow_cost(model: &PqModel, p: &[f64]) -> f64 {
    model.instance.arcs.iter().zip(&model.x).map(|(a, c)| a.cost * p[c.0]).sum()
}

/// Feasible pq points: fix random proportions, pick a random objective and
/// solve the resulting LP, in which McCormick forces `w = q x`.
pub fn sample_points(model: &PqModel, rng: &mut ChaCha8Rng, count: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    while out.len() < count {
        let mut lp = model.lp.clone();
        let rows = model.add_mccormick(&mut lp).unwrap();
        for l in model.instance.pools() {
            let cols: Vec<_> = model.q.iter().filter(|((_, p), _)| *p == l).map(|(_, &c)| c).collect();
            let raw: Vec<f64> = cols.iter().map(|_| rng.gen::<f64>()).collect();
            let s: f64 = raw.iter().sum();
            // make the simplex row exact by giving the last column the remainder
            let mut acc = 0.0;
            for (k, &c) in cols.iter().enumerate() {
                let v = if k + 1 == cols.len() { 1.0 - acc } else { raw[k] / s };
                acc += v;
                lp.set_col_bounds(c, v, v).unwrap();
            }
        }
        for (b, r) in rows.iter().enumerate() {
            let v = lp.column(model.bilinear[b].q).lower;
            model.set_mccormick_bounds(&mut lp, b, r, v, v);
        }
        for c in 0..lp.num_cols() {
            lp.set_cost(ColId(c), rng.gen_range(-1.0..1.0));
        }
        let sol = solve(&lp);
        if sol.status == LpStatus::Optimal {
            out.push(sol.primal);
        }
    }
    out
}
