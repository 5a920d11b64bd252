//! Aggregated variables for one (attribute, pool, output) triple.
//!
//! For output `j` and pool `l`: `x` is the flow `l -> j`, `z` the flow into
//! `j` that bypasses `l`, `u` and `y` the excess carried by those two flows,
//! and `t` the excess quality of the pool relative to `j`. Every feasible
//! pq point maps to a point with `u = x t` in the set T of [`crate::tset`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cuts::Cut;
use crate::error::{Error, Result};
use crate::instance::NodeKind;
use crate::lpcore::{ColId, LinearProgram, Sense};
use crate::pqmodel::PqModel;
use crate::tset::{Linear, Params, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TripleKey {
    pub attribute: usize,
    pub pool: usize,
    pub output: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    /// `gamma_lo < 0 < gamma_hi`
    Case1,
    /// `gamma_lo < gamma_hi < 0`
    Case2,
    /// `0 < gamma_lo < gamma_hi`
    Case3,
    Degenerate,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::Case1 => "case1",
            Case::Case2 => "case2",
            Case::Case3 => "case3",
            Case::Degenerate => "degenerate",
        })
    }
}

/// Case of the hull theorems that applies to `params`.
pub fn classify(params: &Params, bypass_empty: bool) -> Case {
    let p = params;
    if bypass_empty || !(p.gamma_lo < p.gamma_hi) || !(p.beta_lo < 0.0 && 0.0 < p.beta_hi) {
        return Case::Degenerate;
    }
    if p.gamma_lo < 0.0 && 0.0 < p.gamma_hi {
        Case::Case1
    } else if p.gamma_hi < 0.0 {
        Case::Case2
    } else if p.gamma_lo > 0.0 {
        Case::Case3
    } else {
        Case::Degenerate
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TripleContext {
    pub key: TripleKey,
    /// Human-readable `attribute,pool,output`.
    pub label: String,
    pub x: ColId,
    pub u: ColId,
    pub y: ColId,
    pub z: ColId,
    pub t: ColId,
    pub params: Params,
    /// Capacity `C` with `z + x <= C`; cut algebra works on flows divided by it.
    pub scale: f64,
    pub case: Case,
    pub bypass_empty: bool,
}

impl TripleContext {
    /// Columns in the coordinate order of [`Point`].
    pub fn columns(&self) -> [ColId; 5] {
        [self.x, self.u, self.y, self.z, self.t]
    }

    /// Point of T (unit capacity) read from an LP solution.
    pub fn scaled_point(&self, primal: &[f64]) -> Point {
        let c = self.scale;
        [
            primal[self.x.0] / c,
            primal[self.u.0] / c,
            primal[self.y.0] / c,
            primal[self.z.0] / c,
            primal[self.t.0],
        ]
    }

    /// Maps an inequality on unit-capacity coordinates to model columns:
    /// flow coefficients are divided by `C`, the `t` coefficient and the
    /// right-hand side are kept.
    pub fn unscale(&self, ineq: &Linear) -> Cut {
        let inv = 1.0 / self.scale;
        let cols = self.columns();
        let coefficients = (0..5)
            .filter(|&k| ineq.coef[k] != 0.0)
            .map(|k| (cols[k], if k == 4 { ineq.coef[k] } else { ineq.coef[k] * inv }))
            .collect();
        Cut::new(coefficients, ineq.rhs)
    }
}

/// Returns a copy of `ctx` working at capacity `scale`.
pub fn scale_context(ctx: &TripleContext, scale: f64) -> Result<TripleContext> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::NonPositiveScale(scale));
    }
    Ok(TripleContext { scale, ..ctx.clone() })
}

fn extremes(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

/// Appends the aggregated columns and their linking rows for every triple
/// with an arc `pool -> output`, and returns one context per triple.
pub fn enumerate_triples(model: &PqModel, lp: &mut LinearProgram) -> Result<Vec<TripleContext>> {
    let inst = &model.instance;
    let arc_of = inst.arc_map();
    let id = |n: usize| inst.nodes[n].id.as_str();
    let mut out = Vec::new();

    for (k, attr) in inst.attributes.iter().enumerate() {
        for l in inst.pools() {
            let pool_inputs: Vec<usize> = inst.in_arcs(l).iter().map(|&a| inst.arcs[a].from).collect();
            for la in inst.out_arcs(l) {
                let j = inst.arcs[la].to;
                let label = format!("{attr},{},{}", id(l), id(j));
                let gamma = |i: usize| inst.gamma(k, i, j);

                // inflow to j other than through l: direct arcs and other pools
                let mut direct = Vec::new();
                let mut other_pools = Vec::new();
                for a in inst.in_arcs(j) {
                    let from = inst.arcs[a].from;
                    match inst.kind(from) {
                        NodeKind::Input => direct.push(a),
                        NodeKind::Pool if from != l => other_pools.push(a),
                        _ => {}
                    }
                }
                let bypass_inputs = direct.iter().map(|&a| inst.arcs[a].from).chain(
                    other_pools
                        .iter()
                        .flat_map(|&a| inst.in_arcs(inst.arcs[a].from).into_iter().map(|b| inst.arcs[b].from)),
                );
                let (gamma_lo, gamma_hi) = extremes(pool_inputs.iter().map(|&i| gamma(i))).expect("pool has inputs");
                let beta = extremes(bypass_inputs.map(gamma));
                let bypass_empty = beta.is_none();
                let (beta_lo, beta_hi) = beta.unwrap_or((0.0, 0.0));

                let inflow_bound: f64 = inst.in_arcs(j).iter().map(|&a| inst.arc_bound(a)).sum();
                let cap = inst.nodes[j].capacity.min(inflow_bound);
                let mut params = Params::new(gamma_lo, gamma_hi, beta_lo, beta_hi);
                let scale = if cap > 0.0 {
                    cap
                } else {
                    // nothing can reach j; switch every inequality off
                    params.beta_lo = 0.0;
                    params.beta_hi = 0.0;
                    1.0
                };

                let tag = format!("[{label}]");
                let x = model.x[la];
                let t = lp.add_column(format!("t{tag}"), gamma_lo, gamma_hi, 0.0)?;
                let u = lp.add_column(format!("u{tag}"), f64::NEG_INFINITY, f64::INFINITY, 0.0)?;
                let (zb, yb) = if bypass_empty {
                    ((0.0, 0.0), (0.0, 0.0))
                } else {
                    ((0.0, cap.max(0.0)), (f64::NEG_INFINITY, f64::INFINITY))
                };
                let z = lp.add_column(format!("z{tag}"), zb.0, zb.1, 0.0)?;
                let y = lp.add_column(format!("y{tag}"), yb.0, yb.1, 0.0)?;

                let mut row = vec![(t, 1.0)];
                row.extend(pool_inputs.iter().map(|&i| (model.q[&(i, l)], -gamma(i))));
                lp.add_row(format!("def_t{tag}"), Sense::Eq, 0.0, &row)?;

                let mut row = vec![(u, 1.0)];
                row.extend(pool_inputs.iter().map(|&i| (model.w[&(i, l, j)], -gamma(i))));
                lp.add_row(format!("def_u{tag}"), Sense::Eq, 0.0, &row)?;

                if !bypass_empty {
                    let mut row = vec![(z, 1.0)];
                    row.extend(direct.iter().chain(&other_pools).map(|&a| (model.x[a], -1.0)));
                    lp.add_row(format!("def_z{tag}"), Sense::Eq, 0.0, &row)?;

                    let mut row = vec![(y, 1.0)];
                    row.extend(direct.iter().map(|&a| (model.x[a], -gamma(inst.arcs[a].from))));
                    for &a in &other_pools {
                        let p = inst.arcs[a].from;
                        for b in inst.in_arcs(p) {
                            let i = inst.arcs[b].from;
                            row.push((model.w[&(i, p, j)], -gamma(i)));
                        }
                    }
                    lp.add_row(format!("def_y{tag}"), Sense::Eq, 0.0, &row)?;
                    lp.add_row(format!("beta_lo{tag}"), Sense::Le, 0.0, &[(z, beta_lo), (y, -1.0)])?;
                    lp.add_row(format!("beta_hi{tag}"), Sense::Le, 0.0, &[(y, 1.0), (z, -beta_hi)])?;
                }
                debug_assert!(arc_of.contains_key(&(l, j)));

                out.push(TripleContext {
                    key: TripleKey {
                        attribute: k,
                        pool: l,
                        output: j,
                    },
                    label,
                    x,
                    u,
                    y,
                    z,
                    t,
                    case: classify(&params, bypass_empty),
                    params,
                    scale,
                    bypass_empty,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::haverly;
    use crate::pqmodel::{build_mccormick_lp, build_pq};

    fn contexts(variant: usize) -> Vec<TripleContext> {
        let m = build_pq(&haverly(variant)).unwrap();
        let mut lp = build_mccormick_lp(&m).unwrap();
        enumerate_triples(&m, &mut lp).unwrap()
    }

    #[test]
    fn haverly1_bounds() {
        let ctx = contexts(1);
        assert_eq!(ctx.len(), 2);
        let x = ctx.iter().find(|c| c.label.ends_with(",X")).unwrap();
        assert_eq!(x.params, Params::new(-1.5, 0.5, -0.5, -0.5));
        assert_eq!(x.case, Case::Degenerate);
        assert!(x.params.conic_applies() && !x.params.yikes_applies());
        let y = ctx.iter().find(|c| c.label.ends_with(",Y")).unwrap();
        assert_eq!(y.params, Params::new(-0.5, 1.5, 0.5, 0.5));
        assert_eq!(y.case, Case::Degenerate);
        assert!(!y.params.conic_applies() && y.params.yikes_applies());
        assert_eq!((x.scale, y.scale), (100.0, 200.0));
    }

    #[test]
    fn classification() {
        assert_eq!(classify(&Params::new(-1.0, 1.0, -1.0, 1.0), false), Case::Case1);
        assert_eq!(classify(&Params::new(-1.0, -0.5, -1.0, 1.0), false), Case::Case2);
        assert_eq!(classify(&Params::new(0.5, 1.0, -1.0, 1.0), false), Case::Case3);
        assert_eq!(classify(&Params::new(0.5, 0.5, -1.0, 1.0), false), Case::Degenerate);
        assert_eq!(classify(&Params::new(-1.0, 1.0, -1.0, 1.0), true), Case::Degenerate);
    }

    #[test]
    fn unit_scale_is_identity() {
        let ctx = &contexts(1)[0];
        let unit = scale_context(ctx, 1.0).unwrap();
        let ineq = Linear {
            coef: [1.0, 2.0, 3.0, 4.0, 5.0],
            rhs: 6.0,
        };
        let cut = unit.unscale(&ineq);
        let vals: Vec<f64> = cut.coefficients.iter().map(|&(_, v)| v).collect();
        assert_eq!(vals, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(scale_context(ctx, 0.0).is_err());
    }

    #[test]
    fn boundary_flow_scales_to_one() {
        let ctx = scale_context(&contexts(1)[0], 100.0).unwrap();
        let mut primal = vec![0.0; 100];
        primal[ctx.x.0] = 100.0;
        primal[ctx.t.0] = 0.25;
        let p = ctx.scaled_point(&primal);
        assert_eq!((p[0], p[3], p[4]), (1.0, 0.0, 0.25));
    }
}
