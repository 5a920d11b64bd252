mod common;

use std::collections::BTreeMap;
use std::time::Duration;

use common::{flow_cost, model_violation};
use pooling_core::globalsolve::{node_statistics, solve_global, Branching, SolveConfig, SolveStatus};
use pooling_core::instance::{fixture, generate_random, GeneratorConfig};
use pooling_core::pqmodel::build_pq;

const OPTIMA: [(&str, f64); 4] = [("haverly1", -400.0), ("haverly2", -600.0), ("haverly3", -750.0), ("bental4", -450.0)];

fn config(cjjj: bool) -> SolveConfig {
    SolveConfig {
        use_cjjj_root: cjjj,
        trace: true,
        ..Default::default()
    }
}

#[test]
fn fixture_optima_in_both_modes() {
    for (name, opt) in OPTIMA {
        let model = build_pq(&fixture(name).unwrap()).unwrap();
        for cjjj in [false, true] {
            let r = solve_global(&model, &config(cjjj)).unwrap();
            assert_eq!(r.status, SolveStatus::Optimal, "{name}");
            let v = r.objective.unwrap();
            assert!((v - opt).abs() <= 1e-6 * opt.abs(), "{name} cjjj={cjjj}: {v}");
        }
    }
}

#[test]
fn haverly1_closes_at_the_root_with_cuts() {
    let model = build_pq(&fixture("haverly1").unwrap()).unwrap();
    let r = solve_global(&model, &config(true)).unwrap();
    let stats = node_statistics(&r);
    assert_eq!(stats.nodes, 1);
    assert!(stats.root_gap.unwrap().abs() < 1e-6);
}

#[test]
fn incumbents_are_feasible_and_priced_correctly() {
    for seed in 0..3 {
        let model = build_pq(&generate_random(&GeneratorConfig::new(4, 4, seed)).unwrap()).unwrap();
        for cjjj in [false, true] {
            let r = solve_global(&model, &config(cjjj)).unwrap();
            let x = r.incumbent.as_ref().unwrap();
            assert!(model_violation(&model, x) <= 1e-6);
            assert!(model.bilinear_violation(x) <= 1e-6);
            assert!((flow_cost(&model, x) - r.objective.unwrap()).abs() <= 1e-6 * (1.0 + r.objective.unwrap().abs()));
            assert!(r.dual_bound <= r.objective.unwrap() + 1e-9);
        }
    }
}

#[test]
fn both_modes_agree_and_cuts_raise_the_root() {
    for seed in 0..4 {
        let model = build_pq(&generate_random(&GeneratorConfig::new(3, 5, seed)).unwrap()).unwrap();
        let pq = solve_global(&model, &config(false)).unwrap();
        let cj = solve_global(&model, &config(true)).unwrap();
        assert!(cj.root_bound >= pq.root_bound - 1e-7 * (1.0 + pq.root_bound.abs()));
        let (a, b) = (pq.objective.unwrap(), cj.objective.unwrap());
        assert!((a - b).abs() <= 2e-6 * a.abs().max(1.0), "{a} {b}");
    }
}

#[test]
fn bounds_never_drop_along_a_path() {
    let model = build_pq(&generate_random(&GeneratorConfig::new(4, 6, 1)).unwrap()).unwrap();
    for branching in [Branching::MostViolated, Branching::Strong { candidates: 4 }] {
        let cfg = SolveConfig {
            branching,
            ..config(false)
        };
        let r = solve_global(&model, &cfg).unwrap();
        let bound: BTreeMap<usize, f64> = r.trace.iter().filter_map(|e| e.bound.map(|b| (e.node, b))).collect();
        for e in &r.trace {
            if let (Some(p), Some(b)) = (e.parent, e.bound) {
                assert!(b >= bound[&p] - 1e-9, "node {} below parent {p}", e.node);
            }
        }
        assert!(r.trace_json_lines().lines().count() == r.trace.len());
    }
}

#[test]
fn runs_are_deterministic() {
    let model = build_pq(&generate_random(&GeneratorConfig::new(5, 5, 2)).unwrap()).unwrap();
    let a = solve_global(&model, &config(true)).unwrap();
    let b = solve_global(&model, &config(true)).unwrap();
    assert_eq!(a.nodes, b.nodes);
    assert_eq!(a.objective, b.objective);
}

#[test]
fn limits_are_reported() {
    let model = build_pq(&generate_random(&GeneratorConfig::new(10, 10, 1)).unwrap()).unwrap();
    let r = solve_global(
        &model,
        &SolveConfig {
            node_limit: Some(3),
            ..config(false)
        },
    )
    .unwrap();
    assert_eq!(r.status, SolveStatus::NodeLimit);
    assert!(r.nodes <= 3);
    let r = solve_global(
        &model,
        &SolveConfig {
            time_limit: Some(Duration::ZERO),
            ..config(false)
        },
    )
    .unwrap();
    assert_eq!(r.status, SolveStatus::TimeLimit);
    assert!(r.status.hit_limit());
}
