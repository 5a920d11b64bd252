use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::cuts::Cut;
use crate::error::{Error, Result};

/// Handle of a column (variable) of a [`LinearProgram`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColId(pub usize);

/// Handle of a row (constraint) of a [`LinearProgram`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        })
    }
}

#[derive(Clone, Debug)]
pub struct Column {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
    pub(crate) entries: Vec<(usize, f64)>,
}

impl Column {
    /// Nonzero entries as `(row index, coefficient)`.
    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }
}

#[derive(Clone, Debug)]
pub struct Row {
    pub name: String,
    pub sense: Sense,
    pub rhs: f64,
    pub(crate) entries: Vec<(usize, f64)>,
}

impl Row {
    /// Nonzero entries as `(column index, coefficient)`.
    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    /// Range `[lo, hi]` the row activity must lie in.
    pub fn activity_bounds(&self) -> (f64, f64) {
        match self.sense {
            Sense::Le => (f64::NEG_INFINITY, self.rhs),
            Sense::Ge => (self.rhs, f64::INFINITY),
            Sense::Eq => (self.rhs, self.rhs),
        }
    }
}

/// Sparse minimization LP with named rows and columns.
#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    columns: Vec<Column>,
    rows: Vec<Row>,
    col_names: HashMap<String, usize>,
    row_names: HashMap<String, usize>,
    cut_signatures: HashSet<Vec<i64>>,
    objective_offset: f64,
}

const SIGNATURE_GRANULARITY: f64 = 1e-12;

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn column(&self, col: ColId) -> &Column {
        &self.columns[col.0]
    }

    pub fn row(&self, row: RowId) -> &Row {
        &self.rows[row.0]
    }

    pub fn col_by_name(&self, name: &str) -> Option<ColId> {
        self.col_names.get(name).copied().map(ColId)
    }

    pub fn row_by_name(&self, name: &str) -> Option<RowId> {
        self.row_names.get(name).copied().map(RowId)
    }

    /// Constant added to the objective value (not part of the LP proper).
    pub fn objective_offset(&self) -> f64 {
        self.objective_offset
    }

    pub fn set_objective_offset(&mut self, offset: f64) {
        self.objective_offset = offset;
    }

    pub fn add_column(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> Result<ColId> {
        let name = name.into();
        check_bounds(&name, lower, upper)?;
        if self.col_names.contains_key(&name) {
            return Err(Error::DuplicateName(name));
        }
        let id = self.columns.len();
        self.col_names.insert(name.clone(), id);
        self.columns.push(Column {
            name,
            lower,
            upper,
            cost,
            entries: Vec::new(),
        });
        Ok(ColId(id))
    }

    pub fn add_row(&mut self, name: impl Into<String>, sense: Sense, rhs: f64, coeffs: &[(ColId, f64)]) -> Result<RowId> {
        let name = name.into();
        if self.row_names.contains_key(&name) {
            return Err(Error::DuplicateName(name));
        }
        let mut seen = HashSet::with_capacity(coeffs.len());
        for &(col, _) in coeffs {
            if col.0 >= self.columns.len() {
                return Err(Error::UnknownColumn(format!("#{}", col.0)));
            }
            if !seen.insert(col.0) {
                return Err(Error::DuplicateEntry {
                    row: name,
                    column: self.columns[col.0].name.clone(),
                });
            }
        }
        let id = self.rows.len();
        let mut entries = Vec::with_capacity(coeffs.len());
        for &(col, value) in coeffs {
            if value != 0.0 {
                entries.push((col.0, value));
                self.columns[col.0].entries.push((id, value));
            }
        }
        self.row_names.insert(name.clone(), id);
        self.rows.push(Row { name, sense, rhs, entries });
        Ok(RowId(id))
    }

    /// Appends `cut` as a new `<=` row. Returns `None` and leaves the program
    /// untouched when an identical cut row is already present.
    pub fn add_cut(&mut self, cut: &Cut) -> Result<Option<RowId>> {
        for &(col, _) in &cut.coefficients {
            if col.0 >= self.columns.len() {
                return Err(Error::UnknownColumn(format!("#{}", col.0)));
            }
        }
        let signature = cut_signature(&cut.coefficients, cut.rhs);
        if self.cut_signatures.contains(&signature) {
            return Ok(None);
        }
        let name = format!("cut{}", self.rows.len());
        let row = self.add_row(name, Sense::Le, cut.rhs, &cut.coefficients)?;
        self.cut_signatures.insert(signature);
        Ok(Some(row))
    }

    pub fn set_cost(&mut self, col: ColId, cost: f64) {
        self.columns[col.0].cost = cost;
    }

    pub fn set_col_bounds(&mut self, col: ColId, lower: f64, upper: f64) -> Result<()> {
        check_bounds(&self.columns[col.0].name, lower, upper)?;
        let c = &mut self.columns[col.0];
        c.lower = lower;
        c.upper = upper;
        Ok(())
    }

    pub fn set_rhs(&mut self, row: RowId, rhs: f64) {
        self.rows[row.0].rhs = rhs;
    }

    /// Overwrites (or inserts, or removes when zero) a single matrix entry.
    pub fn set_coefficient(&mut self, row: RowId, col: ColId, value: f64) {
        upsert(&mut self.rows[row.0].entries, col.0, value);
        upsert(&mut self.columns[col.0].entries, row.0, value);
    }

    pub fn coefficient(&self, row: RowId, col: ColId) -> f64 {
        self.rows[row.0]
            .entries
            .iter()
            .find(|(c, _)| *c == col.0)
            .map_or(0.0, |&(_, v)| v)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_offset + self.columns.iter().zip(x).map(|(c, v)| c.cost * v).sum::<f64>()
    }

    pub fn row_activity(&self, row: RowId, x: &[f64]) -> f64 {
        self.rows[row.0].entries.iter().map(|&(c, v)| v * x[c]).sum()
    }

    /// Largest bound or row violation of `x`, evaluated directly from the
    /// row data.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0_f64;
        for (c, &v) in self.columns.iter().zip(x) {
            worst = worst.max(c.lower - v).max(v - c.upper);
        }
        for (i, r) in self.rows.iter().enumerate() {
            let a = self.row_activity(RowId(i), x);
            let (lo, hi) = r.activity_bounds();
            worst = worst.max(lo - a).max(a - hi);
        }
        worst
    }
}

fn check_bounds(name: &str, lower: f64, upper: f64) -> Result<()> {
    if lower.is_nan() || upper.is_nan() || lower > upper || lower == f64::INFINITY || upper == f64::NEG_INFINITY {
        return Err(Error::InvalidBounds {
            name: name.to_string(),
            lower,
            upper,
        });
    }
    Ok(())
}

fn upsert(entries: &mut Vec<(usize, f64)>, key: usize, value: f64) {
    match entries.iter().position(|(k, _)| *k == key) {
        Some(pos) if value == 0.0 => {
            entries.remove(pos);
        }
        Some(pos) => entries[pos].1 = value,
        None if value != 0.0 => entries.push((key, value)),
        None => {}
    }
}

fn cut_signature(coefficients: &[(ColId, f64)], rhs: f64) -> Vec<i64> {
    let mut sorted: Vec<(usize, f64)> = coefficients
        .iter()
        .filter(|(_, v)| *v != 0.0)
        .map(|&(c, v)| (c.0, v))
        .collect();
    sorted.sort_by_key(|&(c, _)| c);
    let q = |v: f64| (v / SIGNATURE_GRANULARITY).round() as i64;
    let mut sig = Vec::with_capacity(2 * sorted.len() + 1);
    for (c, v) in sorted {
        sig.push(c as i64);
        sig.push(q(v));
    }
    sig.push(q(rhs));
    sig
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicate_names_and_entries() {
        let mut lp = LinearProgram::new();
        let x = lp.add_column("x", 0.0, 1.0, 1.0).unwrap();
        assert!(matches!(lp.add_column("x", 0.0, 1.0, 0.0), Err(Error::DuplicateName(_))));
        assert!(matches!(
            lp.add_row("r", Sense::Le, 1.0, &[(x, 1.0), (x, 2.0)]),
            Err(Error::DuplicateEntry { .. })
        ));
        assert!(matches!(lp.add_column("y", 2.0, 1.0, 0.0), Err(Error::InvalidBounds { .. })));
    }

    #[test]
    fn set_coefficient_keeps_row_and_column_views_in_sync() {
        let mut lp = LinearProgram::new();
        let x = lp.add_column("x", 0.0, 1.0, 1.0).unwrap();
        let y = lp.add_column("y", 0.0, 1.0, 1.0).unwrap();
        let r = lp.add_row("r", Sense::Le, 1.0, &[(x, 1.0)]).unwrap();
        lp.set_coefficient(r, y, 3.0);
        lp.set_coefficient(r, x, 0.0);
        assert_eq!(lp.row(r).entries(), &[(1, 3.0)]);
        assert!(lp.column(x).entries().is_empty());
        assert_eq!(lp.column(y).entries(), &[(0, 3.0)]);
    }

    #[test]
    fn max_violation_reports_rows_and_bounds() {
        let mut lp = LinearProgram::new();
        let x = lp.add_column("x", 0.0, 1.0, 0.0).unwrap();
        let y = lp.add_column("y", 0.0, f64::INFINITY, 0.0).unwrap();
        lp.add_row("r", Sense::Ge, 2.0, &[(x, 1.0), (y, 1.0)]).unwrap();
        assert_eq!(lp.max_violation(&[1.0, 1.0]), 0.0);
        assert!((lp.max_violation(&[1.5, 1.0]) - 0.5).abs() < 1e-15);
        assert!((lp.max_violation(&[0.5, 0.5]) - 1.0).abs() < 1e-15);
    }
}
