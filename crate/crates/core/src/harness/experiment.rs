//! Experiment runner and regret accounting.

use rayon::prelude::*;

use crate::consensus::{mean, Configuration};
use crate::error::{Error, Result};
use crate::harness::comparator::{comparator, Comparator};
use crate::harness::config::{Algorithm, ExperimentConfig, Prepared};
use crate::harness::loss::{frechet_loss_stream, FrechetLossStream};
use crate::harness::output::fmt_g;
use crate::manifold::Point;
use crate::online::{bandit_round, full_info_round, AgentState};
use crate::seed::{child_rng, derive, TAG_AGENT, TAG_COMPARATOR, TAG_LOSS, TAG_REPETITION};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub inst_regret: f64,
    pub cum_regret: f64,
    /// Variance of the decisions `{x_{i,t}}` about their Fréchet mean.
    pub variance: f64,
    /// `max_i d(x_{i,t}, xbar_t)`.
    pub network_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    /// Metadata lines without the leading `# `.
    pub metadata: Vec<String>,
    pub rows: Vec<TraceRow>,
}

/// One seeded run.
#[derive(Debug, Clone)]
pub struct Repetition {
    pub seed: u64,
    pub comparator: Comparator,
    pub rows: Vec<TraceRow>,
}

pub fn repetition_seed(master: u64, rep: usize) -> u64 {
    derive(master, TAG_REPETITION, rep as u64)
}

fn decision_stats(prep: &Prepared, xs: &[Point], t: usize) -> Result<(f64, f64)> {
    let cfg = Configuration::new(prep.chart, xs.to_vec())?;
    let xbar = mean(&cfg).map_err(|e| e.at_round(t, None))?.point;
    let mut sum = 0.0;
    let mut worst: f64 = 0.0;
    for x in xs {
        let d = prep.chart.dist(x, &xbar);
        sum += d * d;
        worst = worst.max(d);
    }
    Ok((sum / xs.len() as f64, worst))
}

/// Generates the loss stream of one repetition. Streams depend only on the
/// repetition seed, so runs that differ only in algorithm or step sizes see
/// identical losses.
pub fn loss_stream(prep: &Prepared, seed: u64) -> Result<FrechetLossStream> {
    let cfg = &prep.config;
    let mut rng = child_rng(seed, TAG_LOSS, 0);
    frechet_loss_stream(&prep.chart, &prep.ball, cfg.n, cfg.horizon, cfg.base_spread, &mut rng)
}

pub fn run_repetition(prep: &Prepared, rep: usize) -> Result<Repetition> {
    let cfg = &prep.config;
    let seed = repetition_seed(cfg.seed, rep);
    let stream = loss_stream(prep, seed)?;
    let mut crng = child_rng(seed, TAG_COMPARATOR, 0);
    let best = comparator(&prep.chart, &stream, cfg.n, cfg.horizon, &prep.ball, &mut crng)?;
    let w = &prep.weights;
    let start = prep.ball.center().clone();
    let mut states: Vec<AgentState> = (0..cfg.n)
        .map(|_| AgentState::new(&prep.chart, start.clone()))
        .collect();
    let mut agent_rngs: Vec<_> = (0..cfg.n)
        .map(|i| child_rng(seed, TAG_AGENT, i as u64))
        .collect();

    let mut rows = Vec::with_capacity(cfg.horizon);
    let mut cum = 0.0;
    for t in 1..=cfg.horizon {
        let xs: Vec<Point> = states.iter().map(|s| s.x.clone()).collect();
        let (variance, network_error) = decision_stats(prep, &xs, t)?;
        let opt = stream.global_value(&best.point, t);
        let played = match cfg.algorithm {
            Algorithm::Full => {
                let next = full_info_round(&prep.chart, &states, &stream, w, &prep.ball, &prep.schedule, t)?;
                states = next;
                xs.iter().map(|x| stream.global_value(x, t)).sum::<f64>() / cfg.n as f64
            }
            Algorithm::Bandit => {
                let (next, queries) = bandit_round(
                    &prep.chart,
                    &states,
                    &stream,
                    w,
                    &prep.ball,
                    &prep.schedule,
                    t,
                    &mut agent_rngs,
                )?;
                states = next;
                queries
                    .iter()
                    .map(|(a, b)| 0.5 * (stream.global_value(a, t) + stream.global_value(b, t)))
                    .sum::<f64>()
                    / cfg.n as f64
            }
        };
        let inst = played - opt;
        cum += inst;
        rows.push(TraceRow {
            t,
            inst_regret: inst,
            cum_regret: cum,
            variance,
            network_error,
        });
    }
    Ok(Repetition {
        seed,
        comparator: best,
        rows,
    })
}

/// Pointwise average over repetitions; the cumulative column is the prefix
/// sum of the averaged instantaneous regret.
pub fn average_rows(reps: &[Repetition]) -> Vec<TraceRow> {
    let Some(first) = reps.first() else {
        return Vec::new();
    };
    let k = reps.len() as f64;
    let mut cum = 0.0;
    (0..first.rows.len())
        .map(|j| {
            let avg = |f: fn(&TraceRow) -> f64| reps.iter().map(|r| f(&r.rows[j])).sum::<f64>() / k;
            let inst = avg(|r| r.inst_regret);
            cum += inst;
            TraceRow {
                t: first.rows[j].t,
                inst_regret: inst,
                cum_regret: cum,
                variance: avg(|r| r.variance),
                network_error: avg(|r| r.network_error),
            }
        })
        .collect()
}

pub fn metadata(prep: &Prepared, reps: &[Repetition]) -> Vec<String> {
    let mut lines = vec![format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))];
    lines.extend(prep.config.to_text().lines().map(|l| format!("config {l}")));
    lines.push(format!("network sigma2 = {}", fmt_g(prep.sigma2)));
    let ctx = &prep.context;
    for (k, v) in [
        ("K_min", ctx.k_min),
        ("K_max", ctx.k_max),
        ("D", ctx.diameter),
        ("C3", ctx.c3),
        ("C4", ctx.c4),
        ("C8", ctx.c8),
    ] {
        lines.push(format!("context {k} = {}", fmt_g(v)));
    }
    for (k, v) in prep.constants.entries() {
        lines.push(format!("constant {k} = {}", fmt_g(v)));
    }
    let sch = &prep.schedule;
    lines.push(format!("schedule s = {}", fmt_g(sch.s)));
    if prep.config.algorithm == Algorithm::Bandit {
        lines.push(format!("schedule delta = {}", fmt_g(sch.delta)));
        lines.push(format!("schedule tau = {}", fmt_g(sch.tau)));
    }
    lines.push(format!("loss lipschitz = {}", fmt_g(prep.lipschitz)));
    for (k, r) in reps.iter().enumerate() {
        lines.push(format!(
            "repetition {k} seed = {} comparator_loss = {}",
            r.seed,
            fmt_g(r.comparator.total_loss)
        ));
    }
    lines
}

/// Runs all repetitions (concurrently) and averages them.
pub fn run_prepared(prep: &Prepared) -> Result<RegretTrace> {
    let reps = (0..prep.config.repetitions)
        .into_par_iter()
        .map(|r| run_repetition(prep, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(RegretTrace {
        metadata: metadata(prep, &reps),
        rows: average_rows(&reps),
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RegretTrace> {
    run_prepared(&cfg.prepare()?)
}

/// Validates one configuration per value of `key`.
pub fn prepare_sweep(cfg: &ExperimentConfig, key: &str, values: &[String]) -> Result<Vec<Prepared>> {
    if values.is_empty() {
        return Err(Error::Parse(format!("sweep over {key} has no values")));
    }
    values
        .iter()
        .map(|v| {
            let mut c = cfg.clone();
            c.set(key, v)?;
            c.prepare()
        })
        .collect()
}

/// Runs every sweep point (concurrently), in input order.
pub fn run_sweep(points: &[Prepared]) -> Result<Vec<RegretTrace>> {
    points.par_iter().map(run_prepared).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_overrides(&[
            "manifold=sphere",
            "dim=3",
            "n=5",
            "ring_k=2",
            "horizon=30",
            "diameter=pi/4",
            "s=0.8",
            "seed=11",
        ])
        .unwrap();
        cfg
    }

    #[test]
    fn cumulative_is_prefix_sum() {
        let trace = run_experiment(&tiny()).unwrap();
        assert_eq!(trace.rows.len(), 30);
        let mut cum = 0.0;
        for (j, r) in trace.rows.iter().enumerate() {
            assert_eq!(r.t, j + 1);
            cum += r.inst_regret;
            assert!((r.cum_regret - cum).abs() < 1e-12);
        }
    }

    #[test]
    fn single_static_agent_at_optimum_has_zero_regret() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_overrides(&[
            "manifold=euclidean",
            "dim=2",
            "radius=1",
            "n=2",
            "topology=complete",
            "horizon=1",
            "base_spread=0",
            "s=1",
        ])
        .unwrap();
        let prep = cfg.prepare().unwrap();
        let rep = run_repetition(&prep, 0).unwrap();
        // with one round, x* is the mean of the two targets; the agents start
        // at the center, so regret is the squared offset of that mean
        let zbar = rep.comparator.point.coords().to_vec();
        let expected = zbar.iter().map(|c| c * c).sum::<f64>();
        assert!((rep.rows[0].inst_regret - expected).abs() < 1e-10);
    }

    #[test]
    fn matched_losses_across_algorithms() {
        let full = tiny().prepare().unwrap();
        let mut b = tiny();
        b.apply_overrides(&["algorithm=bandit"]).unwrap();
        let bandit = b.prepare().unwrap();
        let s1 = loss_stream(&full, repetition_seed(11, 0)).unwrap();
        let s2 = loss_stream(&bandit, repetition_seed(11, 0)).unwrap();
        assert_eq!(s1.target(3, 17), s2.target(3, 17));
    }
}
