//! Fixed-format MPS export.
//!
//! Row and column names are replaced by 8-character handles (`R0000001`,
//! `C0000001`); the mapping is returned as a CSV sidecar.

use std::fmt::Write as _;

use super::model::{LinearProgram, Sense};

const OBJECTIVE_ROW: &str = "OBJ";

#[derive(Clone, Debug)]
pub struct MpsExport {
    pub mps: String,
    /// `original,mangled` table covering every row and column.
    pub names_csv: String,
}

pub fn write_mps(lp: &LinearProgram, name: &str) -> MpsExport {
    let row_names: Vec<String> = (0..lp.num_rows()).map(|i| format!("R{:07}", i + 1)).collect();
    let col_names: Vec<String> = (0..lp.num_cols()).map(|j| format!("C{:07}", j + 1)).collect();

    let mut out = String::new();
    let _ = writeln!(out, "{:<14}{}", "NAME", truncate(name, 8));
    out.push_str("ROWS\n");
    out.push_str(&line("N", OBJECTIVE_ROW, "", "", "", ""));
    for (row, mangled) in lp.rows().iter().zip(&row_names) {
        let kind = match row.sense {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        out.push_str(&line(kind, mangled, "", "", "", ""));
    }

    out.push_str("COLUMNS\n");
    for (col, mangled) in lp.columns().iter().zip(&col_names) {
        let mut entries: Vec<(usize, f64)> = col.entries().to_vec();
        entries.sort_by_key(|&(r, _)| r);
        if col.cost != 0.0 || entries.is_empty() {
            out.push_str(&line("", mangled, OBJECTIVE_ROW, &number(col.cost), "", ""));
        }
        for (r, v) in entries {
            out.push_str(&line("", mangled, &row_names[r], &number(v), "", ""));
        }
    }

    out.push_str("RHS\n");
    for (row, mangled) in lp.rows().iter().zip(&row_names) {
        if row.rhs != 0.0 {
            out.push_str(&line("", "RHS", mangled, &number(row.rhs), "", ""));
        }
    }

    out.push_str("BOUNDS\n");
    for (col, mangled) in lp.columns().iter().zip(&col_names) {
        let (lo, up) = (col.lower, col.upper);
        if lo == up {
            out.push_str(&line("FX", "BND", mangled, &number(lo), "", ""));
            continue;
        }
        if lo == f64::NEG_INFINITY && up == f64::INFINITY {
            out.push_str(&line("FR", "BND", mangled, "", "", ""));
            continue;
        }
        if lo == f64::NEG_INFINITY {
            out.push_str(&line("MI", "BND", mangled, "", "", ""));
        } else if lo != 0.0 {
            out.push_str(&line("LO", "BND", mangled, &number(lo), "", ""));
        }
        if up.is_finite() {
            out.push_str(&line("UP", "BND", mangled, &number(up), "", ""));
        }
    }
    out.push_str("ENDATA\n");

    let mut sidecar = csv_writer();
    sidecar.write_record(["original", "mangled"]).expect("in-memory write");
    for (row, mangled) in lp.rows().iter().zip(&row_names) {
        sidecar.write_record([row.name.as_str(), mangled]).expect("in-memory write");
    }
    for (col, mangled) in lp.columns().iter().zip(&col_names) {
        sidecar.write_record([col.name.as_str(), mangled]).expect("in-memory write");
    }
    let names_csv = String::from_utf8(sidecar.into_inner().expect("in-memory flush")).expect("utf-8 names");

    MpsExport { mps: out, names_csv }
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn truncate(s: &str, n: usize) -> String {
    s.chars().take(n).collect()
}

/// Lays out one data line on the fixed MPS field columns 2, 5, 15, 25, 40
/// and 50 (1-based).
fn line(f1: &str, f2: &str, f3: &str, f4: &str, f5: &str, f6: &str) -> String {
    let mut s = format!(" {:<2} {:<8}  {:<8}  {:<12}   {:<8}  {:<12}", f1, f2, f3, f4, f5, f6);
    s.truncate(s.trim_end().len());
    s.push('\n');
    s
}

/// Formats `v` in at most 12 characters, picking the candidate with the
/// smallest round-off.
pub(crate) fn number(v: f64) -> String {
    let plain = format!("{v}");
    if plain.len() <= 12 {
        return plain;
    }
    let mut candidates: Vec<String> = Vec::new();
    for d in 0..=11 {
        candidates.push(format!("{v:.d$}"));
    }
    for d in 0..=10 {
        candidates.push(format!("{v:.d$E}"));
    }
    candidates
        .into_iter()
        .filter(|c| c.len() <= 12)
        .filter_map(|c| c.parse::<f64>().ok().map(|p| ((p - v).abs(), c)))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.len().cmp(&b.1.len())))
        .map(|(_, c)| c)
        .unwrap_or(plain)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_lp_has_all_sections() {
        let out = write_mps(&LinearProgram::new(), "empty").mps;
        let sections: Vec<&str> = out.lines().filter(|l| !l.starts_with(' ')).collect();
        assert_eq!(sections, ["NAME          empty", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"]);
    }

    #[test]
    fn single_column_has_one_columns_entry() {
        let mut lp = LinearProgram::new();
        lp.add_column("flow", 0.0, 1.0, -1.0).unwrap();
        let out = write_mps(&lp, "one");
        let body: Vec<&str> = out
            .mps
            .lines()
            .skip_while(|l| *l != "COLUMNS")
            .skip(1)
            .take_while(|l| l.starts_with(' '))
            .collect();
        assert_eq!(body, ["    C0000001  OBJ       -1"]);
        assert!(out.mps.contains(" UP BND       C0000001  1\n"));
        assert_eq!(out.names_csv, "original,mangled\nflow,C0000001\n");
    }

    #[test]
    fn fields_start_on_fixed_columns() {
        let l = line("UP", "BND", "C0000001", "1.5", "R0000002", "2");
        assert_eq!(&l[1..3], "UP");
        assert_eq!(&l[4..7], "BND");
        assert_eq!(&l[14..22], "C0000001");
        assert_eq!(&l[24..27], "1.5");
        assert_eq!(&l[39..47], "R0000002");
        assert_eq!(&l[49..50], "2");
    }

    #[test]
    fn numbers_fit_twelve_characters() {
        for v in [1.0 / 3.0, -2.0 / 3.0 * 1e-9, 123456789.123456, -1e300, 0.1, 600.0] {
            let s = number(v);
            assert!(s.len() <= 12, "{s}");
            let p: f64 = s.parse().unwrap();
            assert!((p - v).abs() <= 1e-5 * v.abs(), "{v} -> {s}");
        }
    }

    #[test]
    fn names_with_commas_are_quoted() {
        let mut lp = LinearProgram::new();
        lp.add_column("x[A,P]", 0.0, 1.0, 0.0).unwrap();
        let out = write_mps(&lp, "q");
        assert!(out.names_csv.contains("\"x[A,P]\",C0000001"));
    }
}
