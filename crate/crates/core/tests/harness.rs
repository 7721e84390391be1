use std::path::PathBuf;

use geoconsensus::harness::config::ExperimentConfig;
use geoconsensus::harness::experiment::{loss_stream, repetition_seed, run_experiment, run_repetition};
use geoconsensus::harness::output::{parse_rows, render_csv};
use geoconsensus::harness::comparator::total_loss;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn golden_trace_is_stable() {
    let cfg = ExperimentConfig::load(&fixture("golden.conf")).unwrap();
    let csv = render_csv(&run_experiment(&cfg).unwrap());
    let want = std::fs::read_to_string(fixture("golden.csv")).unwrap();
    assert_eq!(csv, want);
}

#[test]
fn golden_first_round_matches_hand_computation() {
    // both agents start at the center, so round-1 regret is
    // mean_i |z_i|^2 - mean_i |x* - z_i|^2
    let cfg = ExperimentConfig::load(&fixture("golden.conf")).unwrap();
    let prep = cfg.prepare().unwrap();
    let rep = run_repetition(&prep, 0).unwrap();
    let stream = loss_stream(&prep, repetition_seed(cfg.seed, 0)).unwrap();
    let xs = rep.comparator.point.coords();
    let (mut at_center, mut at_best) = (0.0, 0.0);
    for z in stream.round_targets(1) {
        let z = z.coords();
        at_center += (z[0] * z[0] + z[1] * z[1]) / 2.0;
        at_best += ((xs[0] - z[0]).powi(2) + (xs[1] - z[1]).powi(2)) / 2.0;
    }
    assert!((rep.rows[0].inst_regret - (at_center - at_best)).abs() < 1e-12);
    assert!((total_loss(&stream, &rep.comparator.point, 2, 5) - rep.comparator.total_loss).abs() < 1e-12);
}

#[test]
fn config_is_recovered_from_csv_metadata() {
    let cfg = ExperimentConfig::load(&fixture("golden.conf")).unwrap();
    let csv = render_csv(&run_experiment(&cfg).unwrap());
    let back = ExperimentConfig::from_csv_metadata(&csv).unwrap();
    assert_eq!(back.to_text(), cfg.to_text());
    assert_eq!(render_csv(&run_experiment(&back).unwrap()), csv);
}

#[test]
fn shipped_config_round_trips_through_text() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/sphere_frechet.conf");
    let cfg = ExperimentConfig::load(&path).unwrap();
    assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap().to_text(), cfg.to_text());
    cfg.prepare().unwrap();
}

#[test]
fn cumulative_column_is_running_sum() {
    let mut cfg = ExperimentConfig::load(&fixture("golden.conf")).unwrap();
    cfg.apply_overrides(&["manifold=hyperboloid", "dim=3", "n=4", "horizon=40", "repetitions=3", "algorithm=bandit", "delta=0.05"])
        .unwrap();
    let rows = parse_rows(&render_csv(&run_experiment(&cfg).unwrap())).unwrap();
    assert_eq!(rows.len(), 40);
    let mut sum = 0.0;
    for (k, r) in rows.iter().enumerate() {
        sum += r[1];
        assert_eq!(r[0], (k + 1) as f64);
        assert!((r[2] - sum).abs() < 1e-9 * sum.abs().max(1.0));
        assert!(r[3] >= 0.0 && r[4] >= 0.0);
    }
}
