#![allow(dead_code)]

use std::f64::consts::PI;

use geoconsensus::seed::SimRng;
use geoconsensus::{GeodesicBall, ManifoldChart, Point, TangentVector};
use rand::Rng;

/// The three charts with an admissible ball around the origin.
pub fn charts(dim: usize) -> Vec<(ManifoldChart, GeodesicBall)> {
    [
        (ManifoldChart::sphere(dim), PI / 4.0),
        (ManifoldChart::hyperboloid(dim), 1.0),
        (ManifoldChart::euclidean(dim), 1.0),
    ]
    .into_iter()
    .map(|(m, r)| {
        let b = m.ball(m.origin(), r).unwrap();
        (m, b)
    })
    .collect()
}

/// Tangent vector at `x` with uniform direction and norm uniform in `[0, max]`.
pub fn tangent(m: &ManifoldChart, x: &Point, max: f64, rng: &mut SimRng) -> TangentVector {
    let len = max * rng.random::<f64>();
    m.sample_unit_tangent(x, rng).scaled(len)
}

pub fn points(m: &ManifoldChart, ball: &GeodesicBall, n: usize, rng: &mut SimRng) -> Vec<Point> {
    (0..n).map(|_| m.sample_uniform_ball(ball, rng)).collect()
}

pub fn close(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Plain-vector reference implementation of both algorithms in flat space
/// with losses `|x - z_{i,t}|^2`.
pub mod flat {
    pub type V = Vec<f64>;

    fn project(c: &[f64], r: f64, p: &[f64]) -> V {
        let d: f64 = p.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if d <= r {
            return p.to_vec();
        }
        c.iter().zip(p).map(|(ci, pi)| ci + (pi - ci) * r / d).collect()
    }

    fn mix(ys: &[V], w: &[Vec<f64>], s: f64) -> Vec<V> {
        (0..ys.len())
            .map(|i| {
                (0..ys[i].len())
                    .map(|k| ys[i][k] + s * (0..ys.len()).map(|j| w[i][j] * (ys[j][k] - ys[i][k])).sum::<f64>())
                    .collect()
            })
            .collect()
    }

    pub fn loss(x: &[f64], z: &[f64]) -> f64 {
        x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    #[allow(clippy::too_many_arguments)]
    pub fn full_round(xs: &[V], z: &[V], w: &[Vec<f64>], c: &[f64], r: f64, eta: f64, s: f64) -> Vec<V> {
        let ys: Vec<V> = xs
            .iter()
            .zip(z)
            .map(|(x, zi)| {
                let step: V = x.iter().zip(zi).map(|(a, b)| a - eta * 2.0 * (a - b)).collect();
                project(c, r, &step)
            })
            .collect();
        mix(&ys, w, s)
    }

    /// `us[i]` is agent i's unit direction for this round.
    #[allow(clippy::too_many_arguments)]
    pub fn bandit_round(
        xs: &[V],
        us: &[V],
        z: &[V],
        w: &[Vec<f64>],
        c: &[f64],
        r: f64,
        eta: f64,
        s: f64,
        delta: f64,
        tau: f64,
    ) -> Vec<V> {
        let d = c.len() as f64;
        let ys: Vec<V> = (0..xs.len())
            .map(|i| {
                let q1: V = xs[i].iter().zip(&us[i]).map(|(a, u)| a + delta * u).collect();
                let q2: V = xs[i].iter().zip(&us[i]).map(|(a, u)| a - delta * u).collect();
                let coef = d / (2.0 * delta) * (loss(&q1, &z[i]) - loss(&q2, &z[i]));
                let step: V = xs[i].iter().zip(&us[i]).map(|(a, u)| a - eta * coef * u).collect();
                project(c, (1.0 - tau) * r, &step)
            })
            .collect();
        mix(&ys, w, s)
    }
}

/// Runs the library on a flat chart next to [`flat`] and reports the largest
/// coordinate gap over all rounds (n = 3, d = 4).
pub mod reduction {
    use geoconsensus::harness::loss::{frechet_loss_stream, FrechetLossStream};
    use geoconsensus::online::{bandit_round, full_info_round, AgentState, EtaRule, StepSchedule};
    use geoconsensus::seed::{child_rng, derive, rng_from_seed, TAG_AGENT};
    use geoconsensus::{GeodesicBall, ManifoldChart, WeightMatrix};

    const N: usize = 3;
    const R: f64 = 1.5;

    fn setup(seed: u64, rounds: usize) -> (ManifoldChart, GeodesicBall, FrechetLossStream, WeightMatrix, Vec<Vec<f64>>) {
        let m = ManifoldChart::euclidean(4);
        let center = m.point(vec![0.3, -0.2, 0.1, 0.0]).unwrap();
        let ball = m.ball(center, R).unwrap();
        let stream = frechet_loss_stream(&m, &ball, N, rounds, 0.8, &mut rng_from_seed(seed)).unwrap();
        let rows = vec![vec![0.5, 0.25, 0.25], vec![0.25, 0.5, 0.25], vec![0.25, 0.25, 0.5]];
        (m, ball, stream, WeightMatrix::from_rows(&rows).unwrap(), rows)
    }

    fn coords(states: &[AgentState]) -> Vec<Vec<f64>> {
        states.iter().map(|s| s.x.coords().to_vec()).collect()
    }

    fn gap(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
        a.iter().zip(b).map(|(x, y)| super::close(x, y)).fold(0.0, f64::max)
    }

    fn targets(stream: &FrechetLossStream, t: usize) -> Vec<Vec<f64>> {
        stream.round_targets(t).iter().map(|p| p.coords().to_vec()).collect()
    }

    pub fn full_gap(seed: u64, rounds: usize) -> f64 {
        let (m, ball, stream, w, rows) = setup(seed, rounds);
        let sched = StepSchedule {
            eta: EtaRule::Adaptive { scale: 0.4 },
            s: 0.7,
            delta: 0.0,
            tau: 0.0,
        };
        let mut rng = rng_from_seed(derive(seed, 1, 0));
        let mut states: Vec<AgentState> = super::points(&m, &ball, N, &mut rng)
            .into_iter()
            .map(|x| AgentState::new(&m, x))
            .collect();
        let mut reference = coords(&states);
        let mut worst: f64 = 0.0;
        for t in 1..=rounds {
            states = full_info_round(&m, &states, &stream, &w, &ball, &sched, t).unwrap();
            reference = super::flat::full_round(&reference, &targets(&stream, t), &rows, ball.center().coords(), R, sched.eta(t), sched.s);
            worst = worst.max(gap(&coords(&states), &reference));
        }
        worst
    }

    pub fn bandit_gap(seed: u64, rounds: usize) -> f64 {
        let (m, ball, stream, w, rows) = setup(seed, rounds);
        let (delta, tau) = (0.05, 0.1);
        let sched = StepSchedule {
            eta: EtaRule::Adaptive { scale: 0.05 },
            s: 0.6,
            delta,
            tau,
        };
        let shrunk = ball.shrink(tau).unwrap();
        let mut rng = rng_from_seed(derive(seed, 1, 0));
        let mut states: Vec<AgentState> = super::points(&m, &shrunk, N, &mut rng)
            .into_iter()
            .map(|x| AgentState::new(&m, x))
            .collect();
        let mut rngs: Vec<_> = (0..N).map(|i| child_rng(seed, TAG_AGENT, i as u64)).collect();
        let mut reference = coords(&states);
        let mut worst: f64 = 0.0;
        for t in 1..=rounds {
            let (next, queries) = bandit_round(&m, &states, &stream, &w, &ball, &sched, t, &mut rngs).unwrap();
            // the direction is the only randomness; read it back from the first query
            let us: Vec<Vec<f64>> = queries
                .iter()
                .zip(&states)
                .map(|((q1, _), st)| q1.coords().iter().zip(st.x.coords()).map(|(a, b)| (a - b) / delta).collect())
                .collect();
            for u in &us {
                let len: f64 = u.iter().map(|v| v * v).sum::<f64>().sqrt();
                worst = worst.max((len - 1.0).abs());
            }
            reference = super::flat::bandit_round(
                &reference,
                &us,
                &targets(&stream, t),
                &rows,
                ball.center().coords(),
                R,
                sched.eta(t),
                sched.s,
                delta,
                tau,
            );
            states = next;
            worst = worst.max(gap(&coords(&states), &reference));
        }
        worst
    }
}
