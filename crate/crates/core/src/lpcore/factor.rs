//! Basis factorization for the revised simplex.
//!
//! The basis matrix mixes structural columns with logical columns `-e_r`.
//! Only the kernel (structural columns restricted to rows whose logical is
//! nonbasic) is factorized densely; logical columns are eliminated
//! symbolically. Pivots after a refactorization are kept as product-form
//! eta columns.

use super::model::LinearProgram;

const SINGULAR_PIVOT: f64 = 1e-11;
const ETA_DROP: f64 = 1e-14;

/// Dense LU factorization with partial pivoting, `P A = L U`.
#[derive(Clone, Debug)]
pub(crate) struct DenseLu {
    n: usize,
    /// Row-major; strictly lower part holds L (unit diagonal), upper holds U.
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    /// Factorizes the row-major `n x n` matrix. On failure returns the index
    /// of the first column without an acceptable pivot.
    pub(crate) fn factorize(n: usize, mut a: Vec<f64>) -> Result<Self, usize> {
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut best = k;
            let mut best_abs = a[k * n + k].abs();
            for i in k + 1..n {
                let v = a[i * n + k].abs();
                if v > best_abs {
                    best = i;
                    best_abs = v;
                }
            }
            if best_abs < SINGULAR_PIVOT {
                return Err(k);
            }
            if best != k {
                for j in 0..n {
                    a.swap(k * n + j, best * n + j);
                }
                perm.swap(k, best);
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / pivot;
                if f == 0.0 {
                    continue;
                }
                a[i * n + k] = f;
                let (upper, lower) = a.split_at_mut(i * n);
                let src = &upper[k * n + k + 1..k * n + n];
                let dst = &mut lower[k + 1..n];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d -= f * s;
                }
            }
        }
        Ok(Self { n, lu: a, perm })
    }

    /// Solves `A x = b` in place.
    pub(crate) fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        let pb: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        b.copy_from_slice(&pb);
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: f64 = row.iter().zip(&b[..i]).map(|(l, x)| l * x).sum();
            b[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..i * n + n];
            let s: f64 = row.iter().zip(&b[i + 1..]).map(|(u, x)| u * x).sum();
            b[i] = (b[i] - s) / self.lu[i * n + i];
        }
    }

    /// Solves `A^T x = b` in place.
    pub(crate) fn solve_transpose(&self, b: &mut [f64]) {
        let n = self.n;
        // U^T z = b
        for i in 0..n {
            let zi = b[i] / self.lu[i * n + i];
            b[i] = zi;
            if zi != 0.0 {
                for j in i + 1..n {
                    b[j] -= self.lu[i * n + j] * zi;
                }
            }
        }
        // L^T w = z
        for i in (0..n).rev() {
            let wi = b[i];
            if wi != 0.0 {
                for j in 0..i {
                    b[j] -= self.lu[i * n + j] * wi;
                }
            }
        }
        let mut out = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            out[p] = b[k];
        }
        b.copy_from_slice(&out);
    }
}

#[derive(Clone, Debug)]
struct Eta {
    pos: usize,
    pivot: f64,
    /// Off-pivot entries of the transformed entering column.
    entries: Vec<(usize, f64)>,
}

/// Factorized simplex basis. Solutions are indexed by basis position.
#[derive(Clone, Debug)]
pub(crate) struct BasisFactor {
    m: usize,
    /// Structural basic columns: (basis position, column index).
    structural: Vec<(usize, usize)>,
    /// Kernel rows (rows whose logical is nonbasic), in kernel order.
    kernel_rows: Vec<usize>,
    /// Row -> basis position holding its logical, or usize::MAX.
    logical_pos: Vec<usize>,
    lu: DenseLu,
    etas: Vec<Eta>,
}

/// Error carrying the basis positions whose columns were found dependent.
#[derive(Debug)]
pub(crate) struct Singular {
    pub(crate) positions: Vec<usize>,
    /// Rows whose logicals can replace the dependent columns.
    pub(crate) rows: Vec<usize>,
}

impl BasisFactor {
    /// Factorizes the basis given by `head` (variable index per position;
    /// indices `>= n` are logicals of row `index - n`).
    pub(crate) fn new(lp: &LinearProgram, head: &[usize]) -> Result<Self, Singular> {
        let n = lp.num_cols();
        let m = lp.num_rows();
        let mut logical_pos = vec![usize::MAX; m];
        let mut structural = Vec::new();
        for (p, &v) in head.iter().enumerate() {
            if v >= n {
                logical_pos[v - n] = p;
            } else {
                structural.push((p, v));
            }
        }
        let kernel_rows: Vec<usize> = (0..m).filter(|&r| logical_pos[r] == usize::MAX).collect();
        debug_assert_eq!(kernel_rows.len(), structural.len());
        let k = kernel_rows.len();
        let mut kernel_index = vec![usize::MAX; m];
        for (i, &r) in kernel_rows.iter().enumerate() {
            kernel_index[r] = i;
        }
        let mut dense = vec![0.0; k * k];
        for (j, &(_, col)) in structural.iter().enumerate() {
            for &(r, v) in lp.columns()[col].entries() {
                let i = kernel_index[r];
                if i != usize::MAX {
                    dense[i * k + j] = v;
                }
            }
        }
        // On failure, eliminate the kernel columns greedily to find the
        // dependent ones and the rows left without a pivot.
        let lu = match DenseLu::factorize(k, dense.clone()) {
            Ok(lu) => lu,
            Err(_) => {
                let mut transposed = vec![0.0; k * k];
                for i in 0..k {
                    for j in 0..k {
                        transposed[j * k + i] = dense[i * k + j];
                    }
                }
                let (dependent, unused) = dependent_columns(k, transposed);
                return Err(Singular {
                    positions: dependent.into_iter().map(|j| structural[j].0).collect(),
                    rows: unused.into_iter().map(|i| kernel_rows[i]).collect(),
                });
            }
        };
        Ok(Self {
            m,
            structural,
            kernel_rows,
            logical_pos,
            lu,
            etas: Vec::new(),
        })
    }

    /// Empty factor used before the first real factorization.
    pub(crate) fn placeholder() -> Self {
        Self {
            m: 0,
            structural: Vec::new(),
            kernel_rows: Vec::new(),
            logical_pos: Vec::new(),
            lu: DenseLu {
                n: 0,
                lu: Vec::new(),
                perm: Vec::new(),
            },
            etas: Vec::new(),
        }
    }

    pub(crate) fn num_etas(&self) -> usize {
        self.etas.len()
    }

    /// Solves `B d = a` where `a` is a dense row-indexed vector.
    pub(crate) fn ftran(&self, lp: &LinearProgram, a: &[f64]) -> Vec<f64> {
        let k = self.kernel_rows.len();
        let mut z: Vec<f64> = self.kernel_rows.iter().map(|&r| a[r]).collect();
        self.lu.solve(&mut z);
        let mut d = vec![0.0; self.m];
        // Logical positions: d_p = (R z)_r - a_r.
        for (r, &p) in self.logical_pos.iter().enumerate() {
            if p != usize::MAX {
                d[p] = -a[r];
            }
        }
        for (j, &(p, col)) in self.structural.iter().enumerate() {
            let zj = z[j];
            d[p] = zj;
            if zj == 0.0 {
                continue;
            }
            for &(r, v) in lp.columns()[col].entries() {
                let lp_pos = self.logical_pos[r];
                if lp_pos != usize::MAX {
                    d[lp_pos] += v * zj;
                }
            }
        }
        debug_assert_eq!(k, self.structural.len());
        for eta in &self.etas {
            let dp = d[eta.pos] / eta.pivot;
            d[eta.pos] = dp;
            if dp != 0.0 {
                for &(i, v) in &eta.entries {
                    d[i] -= v * dp;
                }
            }
        }
        d
    }

    /// Solves `B^T y = c` where `c` is indexed by basis position; returns a
    /// row-indexed vector.
    pub(crate) fn btran(&self, lp: &LinearProgram, c: &[f64]) -> Vec<f64> {
        let mut w = c.to_vec();
        for eta in self.etas.iter().rev() {
            let s: f64 = eta.entries.iter().map(|&(i, v)| v * w[i]).sum();
            w[eta.pos] = (w[eta.pos] - s) / eta.pivot;
        }
        let mut y = vec![0.0; self.m];
        for (r, &p) in self.logical_pos.iter().enumerate() {
            if p != usize::MAX {
                y[r] = -w[p];
            }
        }
        let mut rhs: Vec<f64> = self.structural.iter().map(|&(p, _)| w[p]).collect();
        for (j, &(_, col)) in self.structural.iter().enumerate() {
            let mut s = 0.0;
            for &(r, v) in lp.columns()[col].entries() {
                if self.logical_pos[r] != usize::MAX {
                    s += v * y[r];
                }
            }
            rhs[j] -= s;
        }
        self.lu.solve_transpose(&mut rhs);
        for (i, &r) in self.kernel_rows.iter().enumerate() {
            y[r] = rhs[i];
        }
        y
    }

    /// Records the replacement of the column at `pos` by a column whose
    /// ftran result is `alpha`.
    pub(crate) fn push_eta(&mut self, pos: usize, alpha: &[f64]) {
        let entries = alpha
            .iter()
            .enumerate()
            .filter(|&(i, v)| i != pos && v.abs() > ETA_DROP)
            .map(|(i, &v)| (i, v))
            .collect();
        self.etas.push(Eta {
            pos,
            pivot: alpha[pos],
            entries,
        });
    }
}

/// Gaussian elimination with row pivoting on the transposed kernel; rows
/// that cannot be pivoted are the dependent columns of the original kernel.
fn dependent_columns(k: usize, mut a: Vec<f64>) -> (Vec<usize>, Vec<usize>) {
    // Here rows of `a` are the kernel's columns. Greedy elimination: keep a
    // row if it has a pivot after eliminating the previous kept rows.
    let mut kept: Vec<(usize, usize)> = Vec::new(); // (row, pivot col)
    let mut dependent = Vec::new();
    for i in 0..k {
        for &(r, c) in &kept {
            let f = a[i * k + c] / a[r * k + c];
            if f != 0.0 {
                for j in 0..k {
                    a[i * k + j] -= f * a[r * k + j];
                }
            }
        }
        let (mut best, mut best_abs) = (usize::MAX, SINGULAR_PIVOT);
        for j in 0..k {
            let v = a[i * k + j].abs();
            if v > best_abs {
                best = j;
                best_abs = v;
            }
        }
        if best == usize::MAX {
            dependent.push(i);
        } else {
            kept.push((i, best));
        }
    }
    let mut used = vec![false; k];
    for &(_, c) in &kept {
        used[c] = true;
    }
    (dependent, (0..k).filter(|&c| !used[c]).collect())
}
