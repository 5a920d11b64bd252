use pooling_core::cuts::{cjjj_bound, cut_pool_csv, Family, Tolerances};
use pooling_core::instance::{fixture, generate_random, GeneratorConfig};
use pooling_core::lpcore::LpStatus;
use pooling_core::pqmodel::{build_mccormick_lp, build_pq};
use pooling_core::tset::Params;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bound(name: &str) -> f64 {
    let model = build_pq(&fixture(name).unwrap()).unwrap();
    let (_, report) = cjjj_bound(&model, &Tolerances::default()).unwrap();
    assert_eq!(report.status, LpStatus::Optimal);
    report.objective
}

#[test]
fn haverly_root_bounds() {
    for (name, expected, tol) in [("haverly1", -400.0, 1e-4), ("haverly2", -600.0, 1e-4), ("haverly3", -791.7, 0.1)] {
        let value = bound(name);
        assert!((value - expected).abs() <= tol, "{name}: {value}");
    }
}

#[test]
fn trace_is_monotone_and_never_below_mccormick() {
    for seed in 0..4 {
        let model = build_pq(&generate_random(&GeneratorConfig::new(4, 6, seed)).unwrap()).unwrap();
        let mc = pooling_core::lpcore::solve(&build_mccormick_lp(&model).unwrap()).objective;
        let (_, report) = cjjj_bound(&model, &Tolerances::default()).unwrap();
        assert!(report.trace[0] >= mc - 1e-7 * (1.0 + mc.abs()));
        for w in report.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * (1.0 + w[0].abs()), "{:?}", report.trace);
        }
    }
}

#[test]
fn emitted_cuts_are_valid_on_sampled_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let model = build_pq(&generate_random(&GeneratorConfig::new(3, 5, 4)).unwrap()).unwrap();
    let (cjjj, report) = cjjj_bound(&model, &Tolerances::default()).unwrap();
    let mut checked = 0;
    for cut in &report.cuts {
        let prov = cut.provenance.as_ref().unwrap();
        assert!(matches!(prov.family, Family::Conic | Family::Yikes));
        let ctx = cjjj.contexts.iter().find(|c| c.key == prov.triple).unwrap();
        let params: Params = ctx.params;
        let cols = ctx.columns();
        let mut full = vec![0.0; cjjj.lp.num_cols()];
        for _ in 0..2000 {
            let p = params.sample(&mut rng);
            for k in 0..5 {
                full[cols[k].0] = if k == 4 { p[k] } else { p[k] * ctx.scale };
            }
            assert!(cut.violation(&full) <= 1e-9 * (1.0 + ctx.scale), "{}", prov.label);
        }
        checked += 1;
    }
    let csv = cut_pool_csv(&cjjj.lp, &report.cuts);
    assert_eq!(csv.lines().count(), report.cuts.len() + 1);
    assert!(checked > 0 || report.cuts.is_empty());
}
