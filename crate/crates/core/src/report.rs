//! Gap metrics, shifted geometric means and suite tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cuts::{cjjj_bound, Tolerances};
use crate::error::{Error, Result};
use crate::globalsolve::{solve_global, SolveConfig, SolveStatus};
use crate::instance::PoolingInstance;
use crate::lpcore::{solve, LpStatus};
use crate::pqmodel::{build_mccormick_lp, build_pq};

/// Percent gap of `bound` to `opt` for minimization; `None` when `opt == 0`.
pub fn gap(opt: f64, bound: f64) -> Option<f64> {
    (opt != 0.0 && opt.is_finite() && bound.is_finite()).then(|| 100.0 * (opt - bound) / opt.abs())
}

/// Percent of the pq gap closed by the stronger bound; `None` when the pq
/// bound already equals the optimum.
pub fn closed_gap(opt: f64, bound_pq: f64, bound_cjjj: f64) -> Option<f64> {
    (bound_pq < opt).then(|| 100.0 * (bound_cjjj - bound_pq) / (opt - bound_pq))
}

/// `exp(mean(ln(v + shift))) - shift`; `None` for an empty list.
pub fn shifted_geomean(values: &[f64], shift: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mean = values.iter().map(|v| (v + shift).ln()).sum::<f64>() / values.len() as f64;
    Some(mean.exp() - shift)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Pq,
    Cjjj,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Pq => "pq",
            Mode::Cjjj => "cjjj",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pq" => Ok(Mode::Pq),
            "cjjj" => Ok(Mode::Cjjj),
            _ => Err(Error::Model(format!("unknown mode `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub relaxation: Mode,
    pub root_bound: f64,
    pub best_primal: Option<f64>,
    pub root_gap: Option<f64>,
    pub closed_gap: Option<f64>,
    pub nodes: Option<usize>,
    pub wall_time: f64,
    pub status: String,
}

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub modes: Vec<Mode>,
    /// Run branch-and-bound; otherwise only root bounds.
    pub solve: bool,
    pub time_limit: Duration,
    pub node_limit: Option<usize>,
    pub rel_gap: f64,
    pub workers: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            modes: vec![Mode::Pq, Mode::Cjjj],
            solve: true,
            time_limit: Duration::from_secs(1000),
            node_limit: None,
            rel_gap: 1e-6,
            workers: 1,
        }
    }
}

/// Aggregate row over a group of instances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub group: String,
    pub relaxation: Mode,
    pub instances: usize,
    pub mean_root_gap: Option<f64>,
    pub time_limit_hits: usize,
    pub time_geomean: Option<f64>,
    /// Over instances where every mode finished.
    pub nodes_geomean: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct SuiteReport {
    pub records: Vec<RunRecord>,
    pub groups: Vec<GroupRow>,
}

/// Group key: `c{copies}_e{edges}` for generated instances, else the name.
pub fn group_of(instance: &str) -> String {
    let parts: Vec<&str> = instance.split('_').collect();
    match parts.as_slice() {
        ["rand", c, e, _] if c.starts_with('c') && e.starts_with('e') => format!("{c}_{e}"),
        _ => instance.to_string(),
    }
}

fn run_one(inst: &PoolingInstance, mode: Mode, opts: &SuiteOptions) -> RunRecord {
    let failed = |status: String| RunRecord {
        instance: inst.name.clone(),
        relaxation: mode,
        root_bound: f64::NAN,
        best_primal: None,
        root_gap: None,
        closed_gap: None,
        nodes: None,
        wall_time: 0.0,
        status,
    };
    let model = match build_pq(inst) {
        Ok(m) => m,
        Err(e) => return failed(format!("error: {e}")),
    };
    let start = std::time::Instant::now();
    if opts.solve {
        let cfg = SolveConfig {
            use_cjjj_root: mode == Mode::Cjjj,
            rel_gap: opts.rel_gap,
            node_limit: opts.node_limit,
            time_limit: Some(opts.time_limit),
            ..Default::default()
        };
        match solve_global(&model, &cfg) {
            Ok(r) => RunRecord {
                instance: inst.name.clone(),
                relaxation: mode,
                root_bound: r.root_bound,
                best_primal: r.objective,
                root_gap: None,
                closed_gap: None,
                nodes: Some(r.nodes),
                wall_time: r.wall_time.as_secs_f64(),
                status: status_name(r.status).into(),
            },
            Err(e) => failed(format!("error: {e}")),
        }
    } else {
        let bound = match mode {
            Mode::Pq => build_mccormick_lp(&model).map(|lp| {
                let s = solve(&lp);
                (s.objective, s.status)
            }),
            Mode::Cjjj => cjjj_bound(&model, &Tolerances::default()).map(|(_, r)| (r.objective, r.status)),
        };
        match bound {
            Ok((b, LpStatus::Optimal)) => RunRecord {
                root_bound: b,
                wall_time: start.elapsed().as_secs_f64(),
                status: "root".into(),
                ..failed(String::new())
            },
            Ok((_, s)) => failed(format!("{s:?}").to_lowercase()),
            Err(e) => failed(format!("error: {e}")),
        }
    }
}

pub fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Optimal => "optimal",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::NodeLimit => "node_limit",
        SolveStatus::TimeLimit => "time_limit",
    }
}

/// Fills gaps from the best primal value known per instance across records
/// (and `known_optima`, if given).
pub fn fill_gaps(records: &mut [RunRecord], known_optima: &BTreeMap<String, f64>) {
    let mut best: BTreeMap<String, f64> = known_optima.clone();
    for r in records.iter() {
        if let Some(v) = r.best_primal {
            let e = best.entry(r.instance.clone()).or_insert(v);
            *e = e.min(v);
        }
    }
    let mut pq_bound: BTreeMap<String, f64> = BTreeMap::new();
    for r in records.iter().filter(|r| r.relaxation == Mode::Pq && r.root_bound.is_finite()) {
        pq_bound.insert(r.instance.clone(), r.root_bound);
    }
    for r in records.iter_mut() {
        let Some(&opt) = best.get(&r.instance) else {
            continue;
        };
        r.root_gap = gap(opt, r.root_bound);
        r.closed_gap = match (r.relaxation, pq_bound.get(&r.instance)) {
            (Mode::Cjjj, Some(&pq)) => closed_gap(opt, pq, r.root_bound),
            _ => None,
        };
    }
}

pub fn aggregate(records: &[RunRecord]) -> Vec<GroupRow> {
    let mut groups: BTreeMap<(String, Mode), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((group_of(&r.instance), r.relaxation)).or_default().push(r);
    }
    let finished = |inst: &str| {
        records
            .iter()
            .filter(|r| r.instance == inst)
            .all(|r| r.status == "optimal" || r.status == "infeasible")
    };
    groups
        .into_iter()
        .map(|((group, mode), rs)| {
            let gaps: Vec<f64> = rs.iter().filter_map(|r| r.root_gap).collect();
            let times: Vec<f64> = rs.iter().filter(|r| r.nodes.is_some()).map(|r| r.wall_time).collect();
            let nodes: Vec<f64> = rs
                .iter()
                .filter(|r| finished(&r.instance))
                .filter_map(|r| r.nodes.map(|n| n as f64))
                .collect();
            GroupRow {
                group,
                relaxation: mode,
                instances: rs.len(),
                mean_root_gap: (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64),
                time_limit_hits: rs.iter().filter(|r| r.status == "time_limit").count(),
                time_geomean: shifted_geomean(&times, 2.0),
                nodes_geomean: shifted_geomean(&nodes, 100.0),
            }
        })
        .collect()
}

/// Runs every instance in every mode; failures are recorded, not raised.
pub fn run_suite(instances: &[PoolingInstance], opts: &SuiteOptions) -> SuiteReport {
    let jobs: Vec<(usize, Mode)> = (0..instances.len())
        .flat_map(|i| opts.modes.iter().map(move |&m| (i, m)))
        .collect();
    let run = || -> Vec<RunRecord> { jobs.par_iter().map(|&(i, m)| run_one(&instances[i], m, opts)).collect() };
    let mut records = match rayon::ThreadPoolBuilder::new().num_threads(opts.workers.max(1)).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    };
    fill_gaps(&mut records, &BTreeMap::new());
    let groups = aggregate(&records);
    SuiteReport { records, groups }
}

fn opt_num(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.prec$}"))
}

impl SuiteReport {
    pub fn records_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
    }

    pub fn groups_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for g in &self.groups {
            w.serialize(g).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
    }

    /// Aligned text built from the same numbers as the CSV.
    pub fn text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<22} {:<5} {:>14} {:>14} {:>8} {:>8} {:>9} {:>10} {}",
            "instance", "mode", "root_bound", "best_primal", "gap%", "closed%", "nodes", "time_s", "status"
        );
        for r in &self.records {
            let _ = writeln!(
                s,
                "{:<22} {:<5} {:>14.4} {:>14} {:>8} {:>8} {:>9} {:>10.3} {}",
                r.instance,
                r.relaxation.as_str(),
                r.root_bound,
                opt_num(r.best_primal, 4),
                opt_num(r.root_gap, 1),
                opt_num(r.closed_gap, 1),
                r.nodes.map_or_else(|| "n/a".into(), |n| n.to_string()),
                r.wall_time,
                r.status
            );
        }
        if !self.groups.is_empty() {
            let _ = writeln!(s);
            let _ = writeln!(
                s,
                "{:<22} {:<5} {:>5} {:>8} {:>4} {:>10} {:>10}",
                "group", "mode", "n", "gap%", "TL", "time_sgm", "nodes_sgm"
            );
            for g in &self.groups {
                let _ = writeln!(
                    s,
                    "{:<22} {:<5} {:>5} {:>8} {:>4} {:>10} {:>10}",
                    g.group,
                    g.relaxation.as_str(),
                    g.instances,
                    opt_num(g.mean_root_gap, 1),
                    g.time_limit_hits,
                    opt_num(g.time_geomean, 2),
                    opt_num(g.nodes_geomean, 1)
                );
            }
        }
        s
    }
}

/// Parses records written by [`SuiteReport::records_csv`].
pub fn read_records(text: &str) -> Result<Vec<RunRecord>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(|e| Error::Model(format!("bad record: {e}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_values() {
        assert!((gap(-400.0, -500.0).unwrap() - 25.0).abs() < 1e-12);
        assert!((gap(-600.0, -1000.0).unwrap() - 66.666_666_666_666_67).abs() < 1e-9);
        assert_eq!(gap(-5.0, -5.0), Some(0.0));
        assert_eq!(gap(0.0, -1.0), None);
    }

    #[test]
    fn closed_gap_values() {
        let c = closed_gap(-750.0, -800.0, -791.7).unwrap();
        assert!((16.5..=16.7).contains(&c), "{c}");
        assert!((closed_gap(-549.8, -766.3, -697.0).unwrap() - 32.0).abs() < 0.05);
        assert_eq!(closed_gap(-1.0, -2.0, -1.0), Some(100.0));
        assert_eq!(closed_gap(-1.0, -1.0, -1.0), None);
    }

    #[test]
    fn geomean_values() {
        assert!((shifted_geomean(&[7.0], 2.0).unwrap() - 7.0).abs() < 1e-12);
        assert!(shifted_geomean(&[0.0, 0.0], 2.0).unwrap().abs() < 1e-12);
        let expected = (12.0_f64 * 1002.0).sqrt() - 2.0;
        assert!((shifted_geomean(&[10.0, 1000.0], 2.0).unwrap() - expected).abs() < 1e-9);
        assert_eq!(shifted_geomean(&[], 2.0), None);
    }

    #[test]
    fn groups_from_names() {
        assert_eq!(group_of("rand_c10_e20_s3"), "c10_e20");
        assert_eq!(group_of("haverly1"), "haverly1");
    }

    #[test]
    fn empty_suite() {
        let r = run_suite(&[], &SuiteOptions::default());
        assert!(r.records.is_empty() && r.groups.is_empty());
    }

    #[test]
    fn csv_round_trip() {
        let rec = RunRecord {
            instance: "haverly1".into(),
            relaxation: Mode::Cjjj,
            root_bound: -400.0,
            best_primal: Some(-400.0),
            root_gap: Some(0.0),
            closed_gap: None,
            nodes: Some(1),
            wall_time: 0.01,
            status: "optimal".into(),
        };
        let report = SuiteReport {
            records: vec![rec.clone()],
            groups: vec![],
        };
        assert_eq!(read_records(&report.records_csv()).unwrap(), vec![rec]);
    }
}
