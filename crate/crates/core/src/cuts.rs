//! Valid inequalities for T and the root separation loop.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::aggregation::{enumerate_triples, TripleContext, TripleKey};
use crate::error::Result;
use crate::lpcore::{solve_with, ColId, LinearProgram, LpStatus, SolveOptions};
use crate::pqmodel::{McCormickRows, PqModel};
use crate::tset::Point;

/// Inequality family a cut comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    /// Tangent of the conic inequality, needs `beta_lo < 0`.
    Conic,
    /// Tangent of the extended inequality, needs `beta_hi > 0`, `gamma_lo < 0`.
    Yikes,
    /// Linear inequality valid when `beta_hi > 0`.
    PosBypass,
    /// Linear inequality valid when `beta_lo < 0`.
    NegBypass,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Conic, Family::Yikes, Family::PosBypass, Family::NegBypass];

    pub fn tag(self) -> &'static str {
        match self {
            Family::Conic => "I13-conic",
            Family::Yikes => "I16-yikes",
            Family::PosBypass => "I20-linear",
            Family::NegBypass => "I22-linear",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Where a cut came from. `point` is in unit-capacity coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub triple: TripleKey,
    pub label: String,
    pub family: Family,
    pub round: usize,
    pub point: Option<Point>,
    pub violation: f64,
}

/// A `<=` inequality over model columns.
#[derive(Clone, Debug)]
pub struct Cut {
    pub coefficients: Vec<(ColId, f64)>,
    pub rhs: f64,
    pub provenance: Option<Provenance>,
}

impl Cut {
    pub fn new(coefficients: Vec<(ColId, f64)>, rhs: f64) -> Self {
        Self {
            coefficients,
            rhs,
            provenance: None,
        }
    }

    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.coefficients.iter().map(|&(c, v)| v * x[c.0]).sum()
    }

    pub fn violation(&self, x: &[f64]) -> f64 {
        self.lhs(x) - self.rhs
    }
}

/// Violation of the conic inequality at a unit-capacity point.
pub fn eval_conic(ctx: &TripleContext, point: &Point) -> f64 {
    ctx.params.conic_violation(point)
}

/// Violation of the extended inequality at a unit-capacity point.
pub fn eval_yikes(ctx: &TripleContext, point: &Point) -> f64 {
    ctx.params.yikes_violation(point)
}

/// Violation used by separation; for the linear families this is the
/// violation of the fixed row.
pub fn separation_violation(family: Family, ctx: &TripleContext, point: &Point) -> Option<f64> {
    let p = &ctx.params;
    match family {
        Family::Conic => p.conic_applies().then(|| p.conic_violation(point)),
        Family::Yikes => p.yikes_applies().then(|| p.yikes_cut_violation(point)),
        Family::PosBypass => p.ineq_pos_bypass().map(|l| l.violation(point)),
        Family::NegBypass => p.ineq_neg_bypass().map(|l| l.violation(point)),
    }
}

/// Tangent cut at `point`, mapped to model columns. `None` when the family
/// does not apply or the gradient is undefined there.
pub fn gradient_cut(family: Family, ctx: &TripleContext, point: &Point, round: usize) -> Option<Cut> {
    let p = &ctx.params;
    let linear = match family {
        Family::Conic if p.conic_applies() => p.conic_cut(point)?,
        Family::Yikes if p.yikes_applies() => p.yikes_cut(point)?,
        Family::PosBypass => p.ineq_pos_bypass()?,
        Family::NegBypass => p.ineq_neg_bypass()?,
        _ => return None,
    };
    if linear.coef.iter().chain([&linear.rhs]).any(|v| !v.is_finite()) {
        return None;
    }
    let mut cut = ctx.unscale(&linear);
    cut.provenance = Some(Provenance {
        triple: ctx.key,
        label: ctx.label.clone(),
        family,
        round,
        point: Some(*point),
        violation: linear.violation(point),
    });
    Some(cut)
}

/// Adds the two linear inequalities wherever they are valid; returns the
/// number of rows added.
pub fn add_linear_inequalities(ctx: &TripleContext, lp: &mut LinearProgram) -> Result<usize> {
    let mut added = 0;
    for (family, ineq) in [
        (Family::PosBypass, ctx.params.ineq_pos_bypass()),
        (Family::NegBypass, ctx.params.ineq_neg_bypass()),
    ] {
        if let Some(ineq) = ineq {
            let mut cut = ctx.unscale(&ineq);
            cut.provenance = Some(Provenance {
                triple: ctx.key,
                label: ctx.label.clone(),
                family,
                round: 0,
                point: None,
                violation: 0.0,
            });
            if lp.add_cut(&cut)?.is_some() {
                added += 1;
            }
        }
    }
    Ok(added)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub conic: f64,
    pub yikes: f64,
    pub max_rounds: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            conic: 1e-4,
            yikes: 1e-5,
            max_rounds: 200,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SeparationReport {
    /// LP solves after the first one.
    pub rounds: usize,
    pub cuts_per_family: BTreeMap<Family, usize>,
    pub objective: f64,
    /// Objective of every LP solve, starting with the one before any cut.
    pub trace: Vec<f64>,
    pub status: LpStatus,
    pub hit_round_cap: bool,
    pub primal: Vec<f64>,
    pub cuts: Vec<Cut>,
}

impl SeparationReport {
    pub fn total_cuts(&self) -> usize {
        self.cuts_per_family.values().sum()
    }
}

/// Solves `lp` and adds tangent cuts of violated nonlinear inequalities
/// until none exceeds its tolerance or the round cap is reached.
pub fn separate_root(lp: &mut LinearProgram, contexts: &[TripleContext], tol: &Tolerances) -> SeparationReport {
    let mut opts = SolveOptions::default();
    let mut sol = solve_with(lp, &opts);
    let mut report = SeparationReport {
        rounds: 0,
        cuts_per_family: BTreeMap::new(),
        objective: sol.objective,
        trace: vec![sol.objective],
        status: sol.status,
        hit_round_cap: false,
        primal: Vec::new(),
        cuts: Vec::new(),
    };
    while sol.status == LpStatus::Optimal {
        let mut added = 0;
        for ctx in contexts {
            let point = ctx.scaled_point(&sol.primal);
            for (family, threshold) in [(Family::Conic, tol.conic), (Family::Yikes, tol.yikes)] {
                let Some(viol) = separation_violation(family, ctx, &point) else {
                    continue;
                };
                if viol <= threshold {
                    continue;
                }
                let Some(cut) = gradient_cut(family, ctx, &point, report.rounds + 1) else {
                    continue;
                };
                // adding a row cannot fail for columns of this program
                if lp.add_cut(&cut).ok().flatten().is_some() {
                    *report.cuts_per_family.entry(family).or_default() += 1;
                    report.cuts.push(cut);
                    added += 1;
                }
            }
        }
        if added == 0 {
            break;
        }
        if report.rounds == tol.max_rounds {
            report.hit_round_cap = true;
            break;
        }
        opts.warm_start = Some(sol.basis.clone());
        sol = solve_with(lp, &opts);
        report.rounds += 1;
        report.trace.push(sol.objective);
        report.status = sol.status;
    }
    report.objective = sol.objective;
    report.primal = sol.primal;
    report
}

/// McCormick LP extended with aggregated columns and the static linear
/// inequalities.
#[derive(Clone, Debug)]
pub struct CjjjModel {
    pub lp: LinearProgram,
    pub mccormick: Vec<McCormickRows>,
    pub contexts: Vec<TripleContext>,
    pub linear_rows: usize,
}

pub fn build_cjjj_lp(model: &PqModel) -> Result<CjjjModel> {
    let mut lp = model.lp.clone();
    let mccormick = model.add_mccormick(&mut lp)?;
    let contexts = enumerate_triples(model, &mut lp)?;
    let mut linear_rows = 0;
    for ctx in &contexts {
        linear_rows += add_linear_inequalities(ctx, &mut lp)?;
    }
    Ok(CjjjModel {
        lp,
        mccormick,
        contexts,
        linear_rows,
    })
}

/// Root bound of the CJJJ relaxation.
pub fn cjjj_bound(model: &PqModel, tol: &Tolerances) -> Result<(CjjjModel, SeparationReport)> {
    let mut cjjj = build_cjjj_lp(model)?;
    let report = separate_root(&mut cjjj.lp, &cjjj.contexts, tol);
    Ok((cjjj, report))
}

/// CSV of the cut pool: `triple,family,round,violation,rhs,coefficients`
/// where coefficients are `name:value` pairs separated by spaces.
pub fn cut_pool_csv(lp: &LinearProgram, cuts: &[Cut]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["triple", "family", "round", "violation", "rhs", "coefficients"])
        .expect("in-memory write");
    for cut in cuts {
        let (label, family, round, viol) = match &cut.provenance {
            Some(p) => (p.label.clone(), p.family.tag().to_string(), p.round.to_string(), format!("{:e}", p.violation)),
            None => (String::new(), String::new(), String::new(), String::new()),
        };
        let coefs = cut
            .coefficients
            .iter()
            .map(|&(c, v)| format!("{}:{v:e}", lp.column(c).name))
            .collect::<Vec<_>>()
            .join(" ");
        w.write_record([label, family, round, viol, format!("{:e}", cut.rhs), coefs])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregation::{classify, scale_context};
    use crate::instance::haverly;
    use crate::pqmodel::build_pq;
    use crate::tset::Params;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn context(params: Params) -> TripleContext {
        let model = build_pq(&haverly(1)).unwrap();
        let mut lp = model.lp.clone();
        let mut ctx = enumerate_triples(&model, &mut lp).unwrap().remove(0);
        ctx.params = params;
        ctx.case = classify(&params, false);
        scale_context(&ctx, 1.0).unwrap()
    }

    #[test]
    fn conic_hand_example() {
        let ctx = context(Params::new(-1.0, 1.0, -1.0, 1.0));
        let p = [0.5, 0.5, 0.0, 0.0, 0.0];
        // (u - bl x)(u - gl x) = 1 > -bl x (t - gl) = 0.5
        assert!((ctx.params.conic_product(&p) - 0.5).abs() < 1e-12);
        assert!(eval_conic(&ctx, &p) > 0.0);
        assert!(eval_conic(&ctx, &[0.0; 5]) <= 0.0);
    }

    #[test]
    fn yikes_vanishing_h() {
        let ctx = context(Params::new(-1.0, 1.0, -1.0, 1.0));
        let p = [0.5, 0.25, -0.1, 0.3, 0.5];
        let bh = 1.0;
        let expected = bh * (p[0] - p[1]) - bh * (1.0 - p[4]);
        assert!((eval_yikes(&ctx, &p) - expected).abs() < 1e-12);
        assert!(expected <= 0.0);
    }

    #[test]
    fn gradient_cuts_are_tangent_and_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for params in [
            Params::new(-1.0, 1.0, -0.8, 0.6),
            Params::new(-2.0, -0.5, -1.0, 1.5),
            Params::new(0.5, 2.0, -1.0, 0.7),
        ] {
            let ctx = context(params);
            let mut checked = 0;
            for _ in 0..200 {
                // points of R0 that need not satisfy u = x t
                let mut p = params.sample(&mut rng);
                let (lo, hi) = (params.gamma_lo * p[0], params.gamma_hi * p[0]);
                p[1] = lo + (hi - lo) * rand::Rng::gen::<f64>(&mut rng);
                for family in [Family::Conic, Family::Yikes] {
                    let (Some(v), Some(cut)) = (separation_violation(family, &ctx, &p), gradient_cut(family, &ctx, &p, 1)) else {
                        continue;
                    };
                    let cols = ctx.columns();
                    let mut full = vec![0.0; cols.iter().map(|c| c.0).max().unwrap() + 1];
                    let sample = |q: &Point, full: &mut Vec<f64>| {
                        for k in 0..5 {
                            full[cols[k].0] = q[k];
                        }
                    };
                    sample(&p, &mut full);
                    assert!((cut.violation(&full) - v).abs() < 1e-9);
                    for _ in 0..50 {
                        let q = params.sample(&mut rng);
                        sample(&q, &mut full);
                        assert!(cut.violation(&full) <= 1e-9, "{family} {params:?} {q:?}");
                    }
                    checked += 1;
                }
            }
            assert!(checked > 0);
        }
    }

    #[test]
    fn linear_row_counts() {
        let model = build_pq(&haverly(1)).unwrap();
        let mut lp = model.lp.clone();
        let ctx = enumerate_triples(&model, &mut lp).unwrap();
        let mut both = ctx[0].clone();
        both.params = Params::new(-1.0, 1.0, -1.0, 1.0);
        assert_eq!(add_linear_inequalities(&both, &mut lp).unwrap(), 2);
        let mut neg = ctx[0].clone();
        neg.params = Params::new(-1.0, 1.0, -1.0, -0.5);
        let mut lp2 = model.lp.clone();
        enumerate_triples(&model, &mut lp2).unwrap();
        assert_eq!(add_linear_inequalities(&neg, &mut lp2).unwrap(), 1);
    }
}
