//! The pq-formulation and its McCormick relaxation.
//!
//! Columns: `x[i,j]` per arc, `q[i,l]` per input-to-pool arc, `w[i,l,j]`
//! per path. The bilinear equalities `w = q x` never enter the LP; they are
//! kept in [`PqModel::bilinear`] and replaced by McCormick rows.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::instance::{NodeKind, PoolingInstance};
use crate::lpcore::{ColId, LinearProgram, RowId, Sense};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RowFamily {
    InputCapacity,
    PoolCapacity,
    OutputCapacity,
    Convexity,
    FlowBalance,
    Quality,
    /// Path flows through a pool add up to the pool-output arc flow.
    PathToArc,
    /// Path flows of one input through a pool are bounded by `C_l q`.
    PathCapacity,
}

/// One bilinear relation `w = q x` on the path `input -> pool -> output`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bilinear {
    pub input: usize,
    pub pool: usize,
    pub output: usize,
    pub w: ColId,
    pub q: ColId,
    /// Flow on the arc `pool -> output`.
    pub x: ColId,
    /// Upper bound `C_lj` of that flow.
    pub cap: f64,
}

#[derive(Clone, Debug)]
pub struct PqModel {
    pub instance: PoolingInstance,
    /// LP holding every linear row of the formulation, without McCormick rows.
    pub lp: LinearProgram,
    /// Flow column per arc, indexed like `instance.arcs`.
    pub x: Vec<ColId>,
    pub q: BTreeMap<(usize, usize), ColId>,
    pub w: BTreeMap<(usize, usize, usize), ColId>,
    pub bilinear: Vec<Bilinear>,
    pub rows: BTreeMap<RowFamily, Vec<RowId>>,
}

/// The four McCormick rows of one bilinear term, in the order
/// `w >= ql x`, `w >= qh x + C q - C qh`, `w <= qh x`, `w <= ql x + C q - C ql`.
pub type McCormickRows = [RowId; 4];

pub fn build_pq(instance: &PoolingInstance) -> Result<PqModel> {
    let violations = instance.validate();
    if !violations.is_empty() {
        return Err(Error::Invalid(violations.join("; ")));
    }
    let inst = instance;
    let id = |n: usize| inst.nodes[n].id.as_str();
    let mut lp = LinearProgram::new();
    let mut rows: BTreeMap<RowFamily, Vec<RowId>> = BTreeMap::new();
    let push = |rows: &mut BTreeMap<RowFamily, Vec<RowId>>, fam, r| rows.entry(fam).or_default().push(r);

    let mut x = Vec::with_capacity(inst.arcs.len());
    for (a, arc) in inst.arcs.iter().enumerate() {
        let col = lp.add_column(format!("x[{},{}]", id(arc.from), id(arc.to)), 0.0, inst.arc_bound(a), arc.cost)?;
        x.push(col);
    }
    let arc_of = inst.arc_map();

    let mut q = BTreeMap::new();
    let mut w = BTreeMap::new();
    let mut bilinear = Vec::new();
    for l in inst.pools() {
        let ins: Vec<usize> = inst.in_arcs(l).into_iter().map(|a| inst.arcs[a].from).collect();
        let outs: Vec<usize> = inst.out_arcs(l).into_iter().map(|a| inst.arcs[a].to).collect();
        if ins.is_empty() || outs.is_empty() {
            return Err(Error::Model(format!("pool '{}' needs inputs and outputs", id(l))));
        }
        for &i in &ins {
            q.insert((i, l), lp.add_column(format!("q[{},{}]", id(i), id(l)), 0.0, 1.0, 0.0)?);
        }
        for &i in &ins {
            for &j in &outs {
                let xa = arc_of[&(l, j)];
                let cap = inst.arc_bound(xa);
                let wc = lp.add_column(format!("w[{},{},{}]", id(i), id(l), id(j)), 0.0, cap, 0.0)?;
                w.insert((i, l, j), wc);
                bilinear.push(Bilinear {
                    input: i,
                    pool: l,
                    output: j,
                    w: wc,
                    q: q[&(i, l)],
                    x: x[xa],
                    cap,
                });
            }
        }
    }

    for n in 0..inst.num_nodes() {
        let node = &inst.nodes[n];
        let (fam, arcs) = match node.kind {
            NodeKind::Input => (RowFamily::InputCapacity, inst.out_arcs(n)),
            NodeKind::Pool => (RowFamily::PoolCapacity, inst.out_arcs(n)),
            NodeKind::Output => (RowFamily::OutputCapacity, inst.in_arcs(n)),
        };
        let coeffs: Vec<(ColId, f64)> = arcs.iter().map(|&a| (x[a], 1.0)).collect();
        let r = lp.add_row(format!("cap[{}]", node.id), Sense::Le, node.capacity, &coeffs)?;
        push(&mut rows, fam, r);
    }

    for l in inst.pools() {
        let ins: Vec<usize> = inst.in_arcs(l).into_iter().map(|a| inst.arcs[a].from).collect();
        let outs: Vec<usize> = inst.out_arcs(l).into_iter().map(|a| inst.arcs[a].to).collect();
        let coeffs: Vec<(ColId, f64)> = ins.iter().map(|&i| (q[&(i, l)], 1.0)).collect();
        let r = lp.add_row(format!("convex[{}]", id(l)), Sense::Eq, 1.0, &coeffs)?;
        push(&mut rows, RowFamily::Convexity, r);
        for &i in &ins {
            let mut coeffs: Vec<(ColId, f64)> = outs.iter().map(|&j| (w[&(i, l, j)], 1.0)).collect();
            coeffs.push((x[arc_of[&(i, l)]], -1.0));
            let r = lp.add_row(format!("balance[{},{}]", id(i), id(l)), Sense::Eq, 0.0, &coeffs)?;
            push(&mut rows, RowFamily::FlowBalance, r);

            let mut coeffs: Vec<(ColId, f64)> = outs.iter().map(|&j| (w[&(i, l, j)], 1.0)).collect();
            coeffs.push((q[&(i, l)], -inst.nodes[l].capacity));
            let r = lp.add_row(format!("pathcap[{},{}]", id(i), id(l)), Sense::Le, 0.0, &coeffs)?;
            push(&mut rows, RowFamily::PathCapacity, r);
        }
        for &j in &outs {
            let mut coeffs: Vec<(ColId, f64)> = ins.iter().map(|&i| (w[&(i, l, j)], 1.0)).collect();
            coeffs.push((x[arc_of[&(l, j)]], -1.0));
            let r = lp.add_row(format!("paths[{},{}]", id(l), id(j)), Sense::Eq, 0.0, &coeffs)?;
            push(&mut rows, RowFamily::PathToArc, r);
        }
    }

    for (k, attr) in inst.attributes.iter().enumerate() {
        for j in inst.outputs() {
            let mut coeffs = Vec::new();
            for a in inst.in_arcs(j) {
                let from = inst.arcs[a].from;
                match inst.kind(from) {
                    NodeKind::Input => coeffs.push((x[a], inst.gamma(k, from, j))),
                    _ => {
                        for b in inst.in_arcs(from) {
                            let i = inst.arcs[b].from;
                            coeffs.push((w[&(i, from, j)], inst.gamma(k, i, j)));
                        }
                    }
                }
            }
            let r = lp.add_row(format!("quality[{},{}]", attr, id(j)), Sense::Le, 0.0, &coeffs)?;
            push(&mut rows, RowFamily::Quality, r);
        }
    }

    Ok(PqModel {
        instance: inst.clone(),
        lp,
        x,
        q,
        w,
        bilinear,
        rows,
    })
}

impl PqModel {
    /// Appends the McCormick rows of every bilinear term over `q in [0,1]`.
    pub fn add_mccormick(&self, lp: &mut LinearProgram) -> Result<Vec<McCormickRows>> {
        let mut out = Vec::with_capacity(self.bilinear.len());
        for b in &self.bilinear {
            if !b.cap.is_finite() {
                return Err(Error::Model(format!("no finite bound for {}", lp.column(b.x).name)));
            }
            let tag = &lp.column(b.w).name[1..];
            let tag = tag.to_string();
            let c = b.cap;
            let r1 = lp.add_row(format!("mc1{tag}"), Sense::Ge, 0.0, &[(b.w, 1.0), (b.x, 0.0)])?;
            let r2 = lp.add_row(format!("mc2{tag}"), Sense::Ge, -c, &[(b.w, 1.0), (b.x, -1.0), (b.q, -c)])?;
            let r3 = lp.add_row(format!("mc3{tag}"), Sense::Le, 0.0, &[(b.w, 1.0), (b.x, -1.0)])?;
            let r4 = lp.add_row(format!("mc4{tag}"), Sense::Le, 0.0, &[(b.w, 1.0), (b.x, 0.0), (b.q, -c)])?;
            out.push([r1, r2, r3, r4]);
        }
        Ok(out)
    }

    /// Rewrites McCormick rows of term `b` for proportion bounds `[ql, qh]`.
    pub fn set_mccormick_bounds(&self, lp: &mut LinearProgram, b: usize, rows: &McCormickRows, ql: f64, qh: f64) {
        let bl = &self.bilinear[b];
        let c = bl.cap;
        lp.set_coefficient(rows[0], bl.x, -ql);
        lp.set_coefficient(rows[1], bl.x, -qh);
        lp.set_rhs(rows[1], -c * qh);
        lp.set_coefficient(rows[2], bl.x, -qh);
        lp.set_coefficient(rows[3], bl.x, -ql);
        lp.set_rhs(rows[3], -c * ql);
    }

    /// Largest `|w - q x|` over the bilinear terms at `primal`.
    pub fn bilinear_violation(&self, primal: &[f64]) -> f64 {
        self.bilinear
            .iter()
            .map(|b| (primal[b.w.0] - primal[b.q.0] * primal[b.x.0]).abs())
            .fold(0.0, f64::max)
    }
}

/// McCormick relaxation of the pq-formulation.
pub fn build_mccormick_lp(model: &PqModel) -> Result<LinearProgram> {
    let mut lp = model.lp.clone();
    model.add_mccormick(&mut lp)?;
    Ok(lp)
}
