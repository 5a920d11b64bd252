//! The aggregated set T in unit-capacity coordinates `p = (x, u, y, z, t)`:
//!
//! ```text
//! u = x t,  y + u <= 0,  z + x <= 1,  beta_lo z <= y <= beta_hi z,
//! x in [0, 1],  t in [gamma_lo, gamma_hi]
//! ```
//!
//! together with the linear and nonlinear inequalities valid for it.

use rand::Rng;
use serde::{Deserialize, Serialize};

pub const X: usize = 0;
pub const U: usize = 1;
pub const Y: usize = 2;
pub const Z: usize = 3;
pub const T: usize = 4;

pub type Point = [f64; 5];

/// Below this `x` the conic inequality is not linearized.
pub const CONIC_X_GUARD: f64 = 1e-6;
/// Below this `y + v` the extended inequality is not linearized.
pub const YIKES_SUM_GUARD: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub gamma_lo: f64,
    pub gamma_hi: f64,
    pub beta_lo: f64,
    pub beta_hi: f64,
}

/// `coef . p <= rhs`
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub coef: Point,
    pub rhs: f64,
}

impl Linear {
    pub fn lhs(&self, p: &Point) -> f64 {
        self.coef.iter().zip(p).map(|(a, b)| a * b).sum()
    }

    pub fn violation(&self, p: &Point) -> f64 {
        self.lhs(p) - self.rhs
    }
}

fn lin(coef: Point, rhs: f64) -> Linear {
    Linear { coef, rhs }
}

impl Params {
    pub fn new(gamma_lo: f64, gamma_hi: f64, beta_lo: f64, beta_hi: f64) -> Self {
        Self {
            gamma_lo,
            gamma_hi,
            beta_lo,
            beta_hi,
        }
    }

    /// Rows of R⁰ other than the variable bounds: the flow rows and the
    /// McCormick envelope of `u = x t`.
    pub fn r0_rows(&self) -> Vec<Linear> {
        let (gl, gh, bl, bh) = (self.gamma_lo, self.gamma_hi, self.beta_lo, self.beta_hi);
        vec![
            lin([0.0, 1.0, 1.0, 0.0, 0.0], 0.0),
            lin([1.0, 0.0, 0.0, 1.0, 0.0], 1.0),
            lin([0.0, 0.0, -1.0, bl, 0.0], 0.0),
            lin([0.0, 0.0, 1.0, -bh, 0.0], 0.0),
            lin([gl, -1.0, 0.0, 0.0, 0.0], 0.0),
            lin([-gh, 1.0, 0.0, 0.0, 0.0], 0.0),
            lin([-gl, 1.0, 0.0, 0.0, -1.0], -gl),
            lin([gh, -1.0, 0.0, 0.0, 1.0], gh),
        ]
    }

    /// Bounds `(lower, upper)` per coordinate implied by R⁰.
    pub fn boxes(&self) -> [(f64, f64); 5] {
        let inf = f64::INFINITY;
        [(0.0, 1.0), (-inf, inf), (-inf, inf), (0.0, inf), (self.gamma_lo, self.gamma_hi)]
    }

    /// `(gh - gl) y + gl (gh x - u) + bh (u - gl x) <= bh (t - gl)`, valid when `beta_hi > 0`.
    pub fn ineq_pos_bypass(&self) -> Option<Linear> {
        let (gl, gh, bh) = (self.gamma_lo, self.gamma_hi, self.beta_hi);
        (bh > 0.0).then(|| lin([gl * gh - bh * gl, bh - gl, gh - gl, 0.0, -bh], -bh * gl))
    }

    /// `(gl - bl)(gh x - u) <= -bl (gh - t)`, valid when `beta_lo < 0`.
    pub fn ineq_neg_bypass(&self) -> Option<Linear> {
        let (gl, gh, bl) = (self.gamma_lo, self.gamma_hi, self.beta_lo);
        (bl < 0.0).then(|| lin([(gl - bl) * gh, -(gl - bl), 0.0, 0.0, -bl], -bl * gh))
    }

    pub fn conic_applies(&self) -> bool {
        self.beta_lo < 0.0
    }

    pub fn yikes_applies(&self) -> bool {
        self.beta_hi > 0.0 && self.gamma_lo < 0.0
    }

    /// Second factor of the rotated-cone form, nonnegative on T.
    pub fn conic_factor(&self, p: &Point) -> f64 {
        let (gl, bl) = (self.gamma_lo, self.beta_lo);
        -bl * (p[T] - gl) + (bl - gl) * (p[U] - gl * p[X])
    }

    /// `(u - gl x)^2 / max(x, eps) - factor`; positive when the conic
    /// inequality is violated.
    pub fn conic_violation(&self, p: &Point) -> f64 {
        let v = p[U] - self.gamma_lo * p[X];
        v * v / p[X].max(CONIC_X_GUARD) - self.conic_factor(p)
    }

    /// Original product form `(u - bl x)(u - gl x) + bl x (t - gl)`.
    pub fn conic_product(&self, p: &Point) -> f64 {
        let (gl, bl) = (self.gamma_lo, self.beta_lo);
        (p[U] - bl * p[X]) * (p[U] - gl * p[X]) + bl * p[X] * (p[T] - gl)
    }

    /// Tangent cut of the conic inequality at `p`; `None` when `x` is below
    /// the guard.
    pub fn conic_cut(&self, p: &Point) -> Option<Linear> {
        if p[X] < CONIC_X_GUARD {
            return None;
        }
        Some(self.conic_cut_ratio((p[U] - self.gamma_lo * p[X]) / p[X]))
    }

    /// Tangent of the conic inequality along the ray `u - gl x = r x`;
    /// valid on T for every `r`.
    pub fn conic_cut_ratio(&self, r: f64) -> Linear {
        let (gl, bl) = (self.gamma_lo, self.beta_lo);
        lin([-r * r - 2.0 * r * gl + (bl - gl) * gl, 2.0 * r - (bl - gl), 0.0, 0.0, bl], bl * gl)
    }

    /// Convex extension `h(y, v)`.
    pub fn h(&self, y: f64, v: f64) -> f64 {
        if y <= 0.0 {
            0.0
        } else {
            (self.gamma_hi - self.gamma_lo) * y + self.gamma_lo * g(y, v)
        }
    }

    /// `bh (gh x - u) + h(y, u - gl x) - bh (gh - t)`.
    pub fn yikes_violation(&self, p: &Point) -> f64 {
        let (gl, gh, bh) = (self.gamma_lo, self.gamma_hi, self.beta_hi);
        bh * (gh * p[X] - p[U]) + self.h(p[Y], p[U] - gl * p[X]) - bh * (gh - p[T])
    }

    /// Largest weight `a` for which the linearization below stays valid on
    /// T. With `gamma_hi < 0`, `h` has a concave kink along `y = 0` and the
    /// coefficient of `y` must stay nonnegative.
    fn yikes_weight_cap(&self) -> f64 {
        if self.gamma_hi >= 0.0 {
            1.0
        } else {
            (1.0 - self.gamma_hi / self.gamma_lo).max(0.0).sqrt()
        }
    }

    /// Linearization using `g(y, v) <= a^2 y + (1-a)^2 v` for `a` in [0,1],
    /// with equality at `a = v / (y + v)`.
    fn yikes_linear(&self, a: f64) -> Linear {
        let (gl, gh, bh) = (self.gamma_lo, self.gamma_hi, self.beta_hi);
        let b = 1.0 - a;
        lin([bh * gh - gl * gl * b * b, -bh + gl * b * b, gh - gl + gl * a * a, 0.0, bh], bh * gh)
    }

    fn yikes_weight(&self, p: &Point) -> Option<f64> {
        let y = p[Y];
        let v = (p[U] - self.gamma_lo * p[X]).max(0.0);
        if y <= 0.0 || y + v < YIKES_SUM_GUARD {
            return None;
        }
        Some((v / (y + v)).min(self.yikes_weight_cap()))
    }

    /// Violation of the strongest valid linearization at `p`; equal to
    /// [`Params::yikes_violation`] whenever `gamma_hi >= 0` and `y > 0`.
    pub fn yikes_cut_violation(&self, p: &Point) -> f64 {
        match self.yikes_weight(p) {
            Some(a) => self.yikes_linear(a).violation(p),
            None => self.yikes_violation(p),
        }
    }

    /// Tangent cut of the extended inequality at `p`; `None` when `y <= 0`
    /// or `y + v` is below the guard.
    pub fn yikes_cut(&self, p: &Point) -> Option<Linear> {
        self.yikes_weight(p).map(|a| self.yikes_linear(a))
    }

    /// Uniform-ish sample of T: `x`, `t` uniform, `u = x t`, `z` uniform on
    /// `[0, 1-x]`, `y` uniform on its feasible interval. Rejects draws whose
    /// `y`-interval is empty.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Point {
        loop {
            let x: f64 = rng.gen();
            let t = self.gamma_lo + (self.gamma_hi - self.gamma_lo) * rng.gen::<f64>();
            let u = x * t;
            let z = (1.0 - x) * rng.gen::<f64>();
            let lo = self.beta_lo * z;
            let hi = (self.beta_hi * z).min(-u);
            if lo <= hi {
                let y = lo + (hi - lo) * rng.gen::<f64>();
                return [x, u, y, z, t];
            }
        }
    }

    /// Whether `p` lies in T up to `tol`.
    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        (p[U] - p[X] * p[T]).abs() <= tol
            && self.r0_rows().iter().all(|r| r.violation(p) <= tol)
            && self.boxes().iter().zip(p).all(|(&(lo, hi), &v)| v >= lo - tol && v <= hi + tol)
    }
}

/// `g(y, v) = y v / (y + v)`, concave on `y > 0, v >= 0`.
pub fn g(y: f64, v: f64) -> f64 {
    let s = y + v;
    if s <= 0.0 {
        0.0
    } else {
        y * v / s
    }
}

/// Gradient `(dg/dy, dg/dv)`.
pub fn g_gradient(y: f64, v: f64) -> (f64, f64) {
    let s2 = (y + v) * (y + v);
    (v * v / s2, y * y / s2)
}
