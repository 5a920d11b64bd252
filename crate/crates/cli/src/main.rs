use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use pooling_core::aggregation::Case;
use pooling_core::cuts::{build_cjjj_lp, cjjj_bound, cut_pool_csv, Tolerances};
use pooling_core::globalsolve::{node_statistics, solve_global, SolveConfig};
use pooling_core::hulllab::{certificate_batch, certificates_json_lines};
use pooling_core::instance::{generate_random, parse_instance, write_instance, GeneratorConfig, PoolingInstance};
use pooling_core::lpcore::{solve, write_mps};
use pooling_core::pqmodel::{build_mccormick_lp, build_pq};
use pooling_core::report::{run_suite, status_name, SuiteOptions};

const EXIT_LIMIT: u8 = 2;
const EXIT_PARSE: u8 = 3;

#[derive(Parser)]
#[command(name = "pooling", version, about = "Pooling-problem relaxations and global solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Pq,
    Cjjj,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Mps,
}

#[derive(Subcommand)]
enum Command {
    /// Generate random instances from joined Haverly copies.
    Gen {
        #[arg(long)]
        copies: usize,
        #[arg(long)]
        edges: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Number of instances, with seeds `seed, seed+1, ...`.
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Root bound of the pq McCormick relaxation or of the cut-strengthened one.
    Relax {
        #[arg(long, value_enum, default_value = "pq")]
        mode: ModeArg,
        /// Write the separated cut pool as CSV.
        #[arg(long)]
        cuts: Option<PathBuf>,
        file: PathBuf,
    },
    /// Solve to global optimality by spatial branch-and-bound.
    Solve {
        #[arg(long, value_enum, default_value = "pq")]
        mode: ModeArg,
        #[arg(long, default_value_t = 1e-6)]
        rel_gap: f64,
        /// Seconds.
        #[arg(long, default_value_t = 1000.0)]
        time_limit: f64,
        #[arg(long)]
        node_limit: Option<usize>,
        /// Write one JSON line per node.
        #[arg(long)]
        trace: Option<PathBuf>,
        file: PathBuf,
    },
    /// Compare cutting-plane and brute-force maxima over the set T.
    HullCheck {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        case: u8,
        #[arg(long, default_value_t = 100)]
        draws: usize,
        #[arg(long, default_value_t = 100)]
        objectives: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
        /// Write certificates as JSON lines.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run every `.pool` file in a directory in both modes and write tables.
    Report {
        #[arg(long)]
        dir: PathBuf,
        /// Only root bounds, no branch-and-bound.
        #[arg(long)]
        root_only: bool,
        #[arg(long, default_value_t = 1000.0)]
        time_limit: f64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Output directory; defaults to `dir`.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Export the root relaxation.
    Export {
        #[arg(long, value_enum, default_value = "mps")]
        format: ExportFormat,
        #[arg(long, value_enum, default_value = "pq")]
        mode: ModeArg,
        /// Output path; the column/row name map goes next to it as `.names.csv`.
        #[arg(short, long)]
        out: Option<PathBuf>,
        file: PathBuf,
    },
}

/// Failure to read or validate an instance.
#[derive(Debug)]
struct ParseFailure(String);

impl std::fmt::Display for ParseFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ParseFailure {}

fn load(path: &Path) -> Result<PoolingInstance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_instance(&text).map_err(|e| ParseFailure(format!("{}: {e}", path.display())).into())
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Gen {
            copies,
            edges,
            seed,
            count,
            out,
        } => {
            fs::create_dir_all(&out)?;
            for s in seed..seed + count {
                let inst = generate_random(&GeneratorConfig::new(copies, edges, s))?;
                let path = out.join(format!("{}.pool", inst.name));
                fs::write(&path, write_instance(&inst))?;
                println!("{} nodes={} arcs={}", path.display(), inst.num_nodes(), inst.num_arcs());
            }
            Ok(0)
        }
        Command::Relax { mode, cuts, file } => {
            let model = build_pq(&load(&file)?)?;
            match mode {
                ModeArg::Pq => {
                    let sol = solve(&build_mccormick_lp(&model)?);
                    println!("mode=pq status={:?} bound={}", sol.status, sol.objective);
                }
                ModeArg::Cjjj => {
                    let (cjjj, report) = cjjj_bound(&model, &Tolerances::default())?;
                    let per_family: Vec<String> = report.cuts_per_family.iter().map(|(f, n)| format!("{f}={n}")).collect();
                    println!(
                        "mode=cjjj status={:?} bound={} rounds={} linear_rows={} cuts=[{}]{}",
                        report.status,
                        report.objective,
                        report.rounds,
                        cjjj.linear_rows,
                        per_family.join(" "),
                        if report.hit_round_cap { " round_cap" } else { "" }
                    );
                    if let Some(path) = cuts {
                        fs::write(path, cut_pool_csv(&cjjj.lp, &report.cuts))?;
                    }
                }
            }
            Ok(0)
        }
        Command::Solve {
            mode,
            rel_gap,
            time_limit,
            node_limit,
            trace,
            file,
        } => {
            let model = build_pq(&load(&file)?)?;
            let cfg = SolveConfig {
                use_cjjj_root: matches!(mode, ModeArg::Cjjj),
                rel_gap,
                node_limit,
                time_limit: Some(Duration::from_secs_f64(time_limit)),
                trace: trace.is_some(),
                ..Default::default()
            };
            let r = solve_global(&model, &cfg)?;
            if let Some(path) = trace {
                fs::write(path, r.trace_json_lines())?;
            }
            let stats = node_statistics(&r);
            let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| x.to_string());
            println!(
                "status={} objective={} dual_bound={} root_bound={} root_gap%={} nodes={} time={:.3}s",
                status_name(r.status),
                fmt(r.objective),
                r.dual_bound,
                r.root_bound,
                fmt(stats.root_gap),
                stats.nodes,
                stats.wall_time
            );
            Ok(if r.status.hit_limit() { EXIT_LIMIT } else { 0 })
        }
        Command::HullCheck {
            case,
            draws,
            objectives,
            seed,
            tolerance,
            out,
        } => {
            let case = [Case::Case1, Case::Case2, Case::Case3][case as usize - 1];
            let certs = certificate_batch(case, draws, objectives, seed)?;
            if let Some(path) = out {
                fs::write(path, certificates_json_lines(&certs))?;
            }
            let within = certs.iter().filter(|c| c.gap <= tolerance).count();
            let worst = certs.iter().map(|c| c.gap).fold(0.0, f64::max);
            println!("case={case} trials={} within={within} max_gap={worst:e}", certs.len());
            Ok(if within == certs.len() { 0 } else { 1 })
        }
        Command::Report {
            dir,
            root_only,
            time_limit,
            workers,
            out,
        } => {
            let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
                .with_context(|| format!("reading {}", dir.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "pool"))
                .collect();
            paths.sort();
            let insts = paths.iter().map(|p| load(p)).collect::<Result<Vec<_>>>()?;
            let opts = SuiteOptions {
                solve: !root_only,
                time_limit: Duration::from_secs_f64(time_limit),
                workers,
                ..Default::default()
            };
            let report = run_suite(&insts, &opts);
            let out = out.unwrap_or(dir);
            fs::create_dir_all(&out)?;
            fs::write(out.join("records.csv"), report.records_csv())?;
            fs::write(out.join("groups.csv"), report.groups_csv())?;
            let text = report.text();
            fs::write(out.join("report.txt"), &text)?;
            print!("{text}");
            let limited = report.records.iter().any(|r| r.status.ends_with("_limit"));
            Ok(if limited { EXIT_LIMIT } else { 0 })
        }
        Command::Export { format, mode, out, file } => {
            let inst = load(&file)?;
            let model = build_pq(&inst)?;
            let lp = match mode {
                ModeArg::Pq => build_mccormick_lp(&model)?,
                ModeArg::Cjjj => build_cjjj_lp(&model)?.lp,
            };
            let ExportFormat::Mps = format;
            let export = write_mps(&lp, &inst.name);
            match out {
                Some(path) => {
                    fs::write(&path, &export.mps)?;
                    fs::write(path.with_extension("names.csv"), &export.names_csv)?;
                }
                None => print!("{}", export.mps),
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ParseFailure>().is_some() {
                ExitCode::from(EXIT_PARSE)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
