//! Numerical checks of the convex hull of T on the standalone set.
//!
//! `brute_force_max` maximizes a linear objective over T itself by gridding
//! `t`, for which the rest of T is a polytope in `(x, y, z)` solved exactly. `cutting_plane_max` maximizes over R⁰ strengthened
//! with a chosen set of valid inequalities. Their agreement certifies the
//! hull descriptions numerically.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregation::{classify, Case};
use crate::error::{Error, Result};
use crate::lpcore::{solve_with, ColId, LinearProgram, LpStatus, RowId, Sense, SolveOptions};
use crate::tset::{Linear, Params, Point, CONIC_X_GUARD, T, U, X, Y, Z};

pub type SetTParams = Params;

const GRID: usize = 400;
const REFINE_SEEDS: usize = 8;
const REFINE_LEVELS: usize = 3;
const REFINE_HALF: usize = 10;

pub const CUT_TOLERANCE: f64 = 1e-8;
pub const MAX_ROUNDS: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Maximum {
    pub value: f64,
    pub point: Point,
}

fn dot(c: &Point, p: &Point) -> f64 {
    c.iter().zip(p).map(|(a, b)| a * b).sum()
}

/// For fixed `t` the slice of T is the polytope
/// `{(x, y, z): y + t x <= 0, x + z <= 1, beta_lo z <= y <= beta_hi z, x in [0, 1], z >= 0}`
/// with `u = t x`; this LP solves it exactly.
struct Slice {
    lp: LinearProgram,
    flow: RowId,
    opts: SolveOptions,
}

impl Slice {
    fn new(p: &Params) -> Self {
        let mut lp = LinearProgram::new();
        let x = lp.add_column("x", 0.0, 1.0, 0.0).expect("fresh");
        let y = lp.add_column("y", f64::NEG_INFINITY, f64::INFINITY, 0.0).expect("fresh");
        let z = lp.add_column("z", 0.0, f64::INFINITY, 0.0).expect("fresh");
        let flow = lp.add_row("excess", Sense::Le, 0.0, &[(y, 1.0), (x, 1.0)]).expect("fresh");
        lp.add_row("cap", Sense::Le, 1.0, &[(x, 1.0), (z, 1.0)]).expect("fresh");
        lp.add_row("beta_lo", Sense::Le, 0.0, &[(z, p.beta_lo), (y, -1.0)]).expect("fresh");
        lp.add_row("beta_hi", Sense::Le, 0.0, &[(y, 1.0), (z, -p.beta_hi)]).expect("fresh");
        Self {
            lp,
            flow,
            opts: SolveOptions::default(),
        }
    }

    fn max(&mut self, c: &Point, t: f64) -> Option<Maximum> {
        let (x, y, z) = (ColId(0), ColId(1), ColId(2));
        self.lp.set_coefficient(self.flow, x, t);
        self.lp.set_cost(x, -(c[X] + c[U] * t));
        self.lp.set_cost(y, -c[Y]);
        self.lp.set_cost(z, -c[Z]);
        let sol = solve_with(&self.lp, &self.opts);
        if sol.status != LpStatus::Optimal {
            self.opts.warm_start = None;
            return None;
        }
        let (xv, yv, zv) = (sol.primal[0], sol.primal[1], sol.primal[2]);
        self.opts.warm_start = Some(sol.basis);
        let point = [xv, xv * t, yv, zv, t];
        Some(Maximum {
            value: dot(c, &point),
            point,
        })
    }
}

/// Maximum of `c . p` over T: the slice LP on a 401-point grid of `t`,
/// followed by three levels of local refinement around the best grid points.
pub fn brute_force_max(p: &Params, c: &Point) -> Option<Maximum> {
    let (gl, gh) = (p.gamma_lo, p.gamma_hi);
    let ht = (gh - gl) / GRID as f64;
    let mut slice = Slice::new(p);
    let mut seeds: Vec<Maximum> = (0..=GRID)
        .filter_map(|j| slice.max(c, if j == GRID { gh } else { gl + j as f64 * ht }))
        .collect();
    let k = REFINE_SEEDS.min(seeds.len());
    if k == 0 {
        return None;
    }
    seeds.select_nth_unstable_by(k - 1, |a, b| b.value.total_cmp(&a.value));
    seeds.truncate(k);

    let mut best = seeds[0];
    for seed in seeds {
        let mut cur = seed;
        let mut st = ht;
        for _ in 0..REFINE_LEVELS {
            let t0 = cur.point[T];
            let r = REFINE_HALF as f64;
            for b in 0..=2 * REFINE_HALF {
                let t = (t0 + (b as f64 - r) / r * st).clamp(gl, gh);
                if let Some(m) = slice.max(c, t) {
                    if m.value > cur.value {
                        cur = m;
                    }
                }
            }
            st *= 0.1;
        }
        if cur.value > best.value {
            best = cur;
        }
    }
    Some(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relaxation {
    R0,
    R1,
    R2,
    R3,
}

/// Which valid inequalities strengthen R⁰. A member whose sign condition
/// fails is skipped.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Members {
    pub conic: bool,
    pub yikes: bool,
    pub pos_bypass: bool,
    pub neg_bypass: bool,
}

impl Relaxation {
    pub fn members(self) -> Members {
        let m = Members::default();
        match self {
            Relaxation::R0 => m,
            Relaxation::R1 => Members { conic: true, yikes: true, ..m },
            Relaxation::R2 => Members { yikes: true, pos_bypass: true, ..m },
            Relaxation::R3 => Members { conic: true, neg_bypass: true, ..m },
        }
    }

    /// Relaxation claimed to equal conv(T) in `case`.
    pub fn for_case(case: Case) -> Option<Relaxation> {
        match case {
            Case::Case1 => Some(Relaxation::R1),
            Case::Case2 => Some(Relaxation::R2),
            Case::Case3 => Some(Relaxation::R3),
            Case::Degenerate => None,
        }
    }
}

/// Linear program of R⁰ in the five coordinates, columns in [`Point`] order.
pub fn r0_program(p: &Params) -> LinearProgram {
    let mut lp = LinearProgram::new();
    let names = ["x", "u", "y", "z", "t"];
    let cols: Vec<ColId> = p
        .boxes()
        .iter()
        .zip(names)
        .map(|(&(lo, hi), n)| lp.add_column(n, lo, hi, 0.0).expect("fresh column"))
        .collect();
    for (k, row) in p.r0_rows().iter().enumerate() {
        add_linear(&mut lp, &cols, row, &format!("r0_{k}"));
    }
    lp
}

fn add_linear(lp: &mut LinearProgram, cols: &[ColId], row: &Linear, name: &str) {
    let coefs: Vec<(ColId, f64)> = (0..5).filter(|&k| row.coef[k] != 0.0).map(|k| (cols[k], row.coef[k])).collect();
    lp.add_row(name, Sense::Le, row.rhs, &coefs).expect("columns exist");
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CuttingPlaneMax {
    pub value: f64,
    pub point: Point,
    pub rounds: usize,
    pub cuts: usize,
}

/// Maximum of `c . p` over R⁰ with `members`, nonlinear members enforced by
/// tangent cuts until their violation is below [`CUT_TOLERANCE`].
pub fn cutting_plane_max_with(p: &Params, c: &Point, members: Members) -> Result<CuttingPlaneMax> {
    let mut lp = r0_program(p);
    let cols: Vec<ColId> = (0..5).map(ColId).collect();
    for k in 0..5 {
        lp.set_cost(cols[k], -c[k]);
    }
    if members.pos_bypass {
        if let Some(row) = p.ineq_pos_bypass() {
            add_linear(&mut lp, &cols, &row, "pos_bypass");
        }
    }
    if members.neg_bypass {
        if let Some(row) = p.ineq_neg_bypass() {
            add_linear(&mut lp, &cols, &row, "neg_bypass");
        }
    }
    let conic = members.conic && p.conic_applies();
    let yikes = members.yikes && p.yikes_applies();

    let mut opts = SolveOptions::default();
    let mut cuts = 0;
    for round in 0..=MAX_ROUNDS {
        let sol = solve_with(&lp, &opts);
        if sol.status != LpStatus::Optimal {
            return Err(Error::Model(format!("R-program solve ended with {:?}", sol.status)));
        }
        let point: Point = std::array::from_fn(|k| sol.primal[k]);
        let mut worst = 0.0_f64;
        let mut new_rows = Vec::new();
        if conic {
            let viol = p.conic_violation(&point);
            if viol > CUT_TOLERANCE {
                worst = worst.max(viol);
                // the tangent depends only on the ray, so tiny x is harmless here
                let cut = if point[X] >= CONIC_X_GUARD {
                    p.conic_cut(&point)
                } else if point[X] > 0.0 {
                    Some(p.conic_cut_ratio((point[U] - p.gamma_lo * point[X]) / point[X]))
                } else {
                    None
                };
                new_rows.extend(cut);
            }
        }
        if yikes {
            let viol = p.yikes_cut_violation(&point);
            if viol > CUT_TOLERANCE {
                worst = worst.max(viol);
                new_rows.extend(p.yikes_cut(&point));
            }
        }
        if worst == 0.0 {
            return Ok(CuttingPlaneMax {
                value: -sol.objective,
                point,
                rounds: round,
                cuts,
            });
        }
        let mut added = 0;
        for row in &new_rows {
            let coefs: Vec<(ColId, f64)> = (0..5).filter(|&k| row.coef[k] != 0.0).map(|k| (cols[k], row.coef[k])).collect();
            if lp.add_cut(&crate::cuts::Cut::new(coefs, row.rhs))?.is_some() {
                added += 1;
            }
        }
        if added == 0 || round == MAX_ROUNDS {
            return Err(Error::NoConvergence {
                rounds: round,
                violation: worst,
            });
        }
        cuts += added;
        opts.warm_start = Some(sol.basis);
    }
    unreachable!("loop returns")
}

pub fn cutting_plane_max(p: &Params, c: &Point, relaxation: Relaxation) -> Result<CuttingPlaneMax> {
    cutting_plane_max_with(p, c, relaxation.members())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TightnessCheck {
    pub point: Point,
    pub on_bound: bool,
    pub residual: f64,
    pub passed: bool,
}

/// Vertices of R⁰ under random objectives; those with `x` or `t` at a bound
/// must satisfy `u = x t`.
pub fn mccormick_tightness_check<R: Rng>(p: &Params, samples: usize, rng: &mut R) -> Vec<TightnessCheck> {
    let mut lp = r0_program(p);
    let mut out = Vec::with_capacity(samples);
    for _ in 0..samples {
        let c = random_objective(rng);
        for k in 0..5 {
            lp.set_cost(ColId(k), -c[k]);
        }
        let sol = solve_with(&lp, &SolveOptions::default());
        if sol.status != LpStatus::Optimal {
            continue;
        }
        let point: Point = std::array::from_fn(|k| sol.primal[k]);
        let near = |a: f64, b: f64| (a - b).abs() <= 1e-9;
        let on_bound = near(point[X], 0.0) || near(point[X], 1.0) || near(point[T], p.gamma_lo) || near(point[T], p.gamma_hi);
        let residual = (point[U] - point[X] * point[T]).abs();
        out.push(TightnessCheck {
            point,
            on_bound,
            residual,
            passed: !on_bound || residual <= 1e-9,
        });
    }
    out
}

/// Uniform direction on the unit sphere.
pub fn random_objective<R: Rng>(rng: &mut R) -> Point {
    loop {
        let v: Point = std::array::from_fn(|_| rng.sample::<f64, _>(StandardNormal));
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.map(|a| a / n);
        }
    }
}

/// Parameters with the sign pattern of `case`: gammas signed uniforms on
/// [-2, 2] with a gap of at least 0.05, `beta_lo` in [-2, 0), `beta_hi` in (0, 2].
pub fn draw_params<R: Rng>(case: Case, rng: &mut R) -> Params {
    let neg = |rng: &mut R| -2.0 * (1.0 - rng.gen::<f64>());
    let pos = |rng: &mut R| 2.0 * (1.0 - rng.gen::<f64>());
    loop {
        let (a, b) = match case {
            Case::Case1 => (neg(rng), pos(rng)),
            Case::Case2 => (neg(rng), neg(rng)),
            Case::Case3 => (pos(rng), pos(rng)),
            Case::Degenerate => {
                let g = rng.gen_range(-2.0..2.0);
                (g, g)
            }
        };
        let (gl, gh) = (a.min(b), a.max(b));
        if case != Case::Degenerate && gh - gl < 0.05 {
            continue;
        }
        return Params::new(gl, gh, neg(rng), pos(rng));
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HullCertificate {
    pub params: Params,
    pub case: Case,
    pub objective: Point,
    pub brute_force: f64,
    pub cutting_plane: f64,
    pub relaxation: Relaxation,
    pub gap: f64,
}

pub fn certify(p: &Params, c: &Point, relaxation: Relaxation) -> Result<HullCertificate> {
    let bf = brute_force_max(p, c).ok_or_else(|| Error::Model("T is empty".into()))?;
    let cp = cutting_plane_max(p, c, relaxation)?;
    Ok(HullCertificate {
        params: *p,
        case: classify(p, false),
        objective: *c,
        brute_force: bf.value,
        cutting_plane: cp.value,
        relaxation,
        gap: (cp.value - bf.value).abs(),
    })
}

/// `draws` parameter sets of `case`, `objectives` directions each, against
/// the relaxation matching the case. Deterministic for a given seed.
pub fn certificate_batch(case: Case, draws: usize, objectives: usize, seed: u64) -> Result<Vec<HullCertificate>> {
    let relaxation = Relaxation::for_case(case).ok_or_else(|| Error::Model("no hull claim for degenerate case".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jobs = Vec::with_capacity(draws * objectives);
    for _ in 0..draws {
        let p = draw_params(case, &mut rng);
        for _ in 0..objectives {
            jobs.push((p, random_objective(&mut rng)));
        }
    }
    jobs.par_iter().map(|(p, c)| certify(p, c, relaxation)).collect()
}

/// One JSON object per line.
pub fn certificates_json_lines(certs: &[HullCertificate]) -> String {
    certs
        .iter()
        .map(|c| serde_json::to_string(c).expect("plain data") + "\n")
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: Params = Params {
        gamma_lo: -1.0,
        gamma_hi: 1.0,
        beta_lo: -1.0,
        beta_hi: 1.0,
    };

    #[test]
    fn brute_force_trivial_objectives() {
        let m = brute_force_max(&P, &[0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((m.value - 1.0).abs() < 1e-12);
        let m = brute_force_max(&P, &[1.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
        assert!((m.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn brute_force_beats_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..3 {
            let c = random_objective(&mut rng);
            let bf = brute_force_max(&P, &c).unwrap();
            let mc = (0..200_000).map(|_| dot(&c, &P.sample(&mut rng))).fold(f64::NEG_INFINITY, f64::max);
            assert!(bf.value >= mc - 1e-12);
            assert!(bf.value - mc <= 2e-2, "{} {}", bf.value, mc);
            assert!(P.contains(&bf.point, 1e-9));
        }
    }

    #[test]
    fn r1_inside_r0() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let c = random_objective(&mut rng);
            let r0 = cutting_plane_max(&P, &c, Relaxation::R0).unwrap().value;
            let r1 = cutting_plane_max(&P, &c, Relaxation::R1).unwrap().value;
            assert!(r1 <= r0 + 1e-9);
        }
    }

    #[test]
    fn draws_have_requested_signs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for case in [Case::Case1, Case::Case2, Case::Case3] {
            for _ in 0..50 {
                assert_eq!(classify(&draw_params(case, &mut rng), false), case);
            }
        }
    }

    #[test]
    fn tightness_on_vertices() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let checks = mccormick_tightness_check(&P, 100, &mut rng);
        assert!(checks.iter().any(|c| c.on_bound));
        assert!(checks.iter().all(|c| c.passed));
    }

    #[test]
    fn unit_objective_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = random_objective(&mut rng);
        assert!((dot(&c, &c) - 1.0).abs() < 1e-12);
    }
}
