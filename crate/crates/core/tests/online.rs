mod common;

use std::f64::consts::PI;

use geoconsensus::harness::loss::frechet_loss_stream;
use geoconsensus::online::{bandit_round, full_info_round, AgentState, EtaRule, LossOracle, StepSchedule};
use geoconsensus::seed::{child_rng, rng_from_seed, TAG_AGENT};
use geoconsensus::{ManifoldChart, WeightMatrix};

#[test]
fn full_information_matches_flat_reference() {
    for seed in [31, 32] {
        let gap = common::reduction::full_gap(seed, 100);
        assert!(gap < 1e-10, "{gap:e}");
    }
}

#[test]
fn bandit_matches_flat_reference() {
    for seed in [33, 34] {
        let gap = common::reduction::bandit_gap(seed, 100);
        assert!(gap < 1e-10, "{gap:e}");
    }
}

#[test]
fn curved_runs_stay_feasible() {
    for (m, ball) in common::charts(5).into_iter().take(2) {
        let mut rng = rng_from_seed(36);
        let n = 6;
        let stream = frechet_loss_stream(&m, &ball, n, 200, 0.3, &mut rng).unwrap();
        let w = WeightMatrix::build_ring(n, 2).unwrap();
        let delta = 0.02;
        let sched = StepSchedule {
            eta: EtaRule::Adaptive { scale: 0.5 },
            s: 0.5,
            delta,
            tau: 0.2,
        };
        let start = vec![AgentState::new(&m, ball.center().clone()); n];
        let mut full = start.clone();
        let mut bandit = start;
        let mut rngs: Vec<_> = (0..n).map(|i| child_rng(37, TAG_AGENT, i as u64)).collect();
        let shrunk = ball.shrink(0.2).unwrap();
        for t in 1..=200 {
            full = full_info_round(&m, &full, &stream, &w, &ball, &sched, t).unwrap();
            let (next, queries) = bandit_round(&m, &bandit, &stream, &w, &ball, &sched, t, &mut rngs).unwrap();
            bandit = next;
            for s in &full {
                assert!(m.dist(ball.center(), &s.x) <= ball.radius() * (1.0 + 1e-9));
            }
            for (s, (q1, q2)) in bandit.iter().zip(&queries) {
                assert!(m.dist(shrunk.center(), &s.x) <= shrunk.radius() * (1.0 + 1e-9));
                assert!(m.dist(ball.center(), q1) <= ball.radius() * (1.0 + 1e-9));
                assert!(m.dist(ball.center(), q2) <= ball.radius() * (1.0 + 1e-9));
                let g = m.norm(&s.last_gradient);
                assert!(g <= m.dim() as f64 * stream.lipschitz() + 1e-9);
            }
        }
    }
}

#[test]
fn agent_streams_are_reproducible() {
    let m = ManifoldChart::sphere(3);
    let ball = m.ball(m.origin(), PI / 4.0).unwrap();
    let stream = frechet_loss_stream(&m, &ball, 4, 20, 0.2, &mut rng_from_seed(38)).unwrap();
    let w = WeightMatrix::build_complete(4).unwrap();
    let sched = StepSchedule {
        eta: EtaRule::Adaptive { scale: 0.3 },
        s: 0.5,
        delta: 0.05,
        tau: 0.1,
    };
    let run = || {
        let mut rngs: Vec<_> = (0..4).map(|i| child_rng(39, TAG_AGENT, i as u64)).collect();
        let mut st = vec![AgentState::new(&m, m.origin()); 4];
        for t in 1..=20 {
            st = bandit_round(&m, &st, &stream, &w, &ball, &sched, t, &mut rngs).unwrap().0;
        }
        coords(&st)
    };
    assert_eq!(run(), run());
}

fn coords(states: &[AgentState]) -> Vec<Vec<f64>> {
    states.iter().map(|s| s.x.coords().to_vec()).collect()
}
