//! Drifting squared-distance losses `f_{i,t}(x) = d^2(x, z_{i,t})`.

use rand::Rng;

use crate::error::Result;
use crate::manifold::{GeodesicBall, ManifoldChart, Point, TangentVector};
use crate::online::LossOracle;

/// A fully materialized stream of targets `z_{i,t}`.
#[derive(Debug, Clone)]
pub struct FrechetLossStream {
    chart: ManifoldChart,
    base: Vec<Point>,
    /// `targets[t - 1][i]`
    targets: Vec<Vec<Point>>,
    lipschitz: f64,
}

/// Draws base points `z_i` uniformly on `ball`, then for every round a target
/// uniform in the `base_spread`-ball around `z_i`, pulled back into `ball`
/// when it falls outside.
pub fn frechet_loss_stream<R: Rng + ?Sized>(
    chart: &ManifoldChart,
    ball: &GeodesicBall,
    n: usize,
    horizon: usize,
    base_spread: f64,
    rng: &mut R,
) -> Result<FrechetLossStream> {
    let base: Vec<Point> = (0..n).map(|_| chart.sample_uniform_ball(ball, rng)).collect();
    let around: Vec<Option<GeodesicBall>> = if base_spread > 0.0 {
        base.iter()
            .map(|z| chart.ball(z.clone(), base_spread).map(Some))
            .collect::<Result<_>>()?
    } else {
        vec![None; n]
    };
    let mut targets = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let row = around
            .iter()
            .zip(&base)
            .map(|(b, z)| match b {
                Some(b) => chart.project_ball(ball, &chart.sample_uniform_ball(b, rng)),
                None => Ok(z.clone()),
            })
            .collect::<Result<Vec<_>>>()?;
        targets.push(row);
    }
    Ok(FrechetLossStream {
        chart: *chart,
        base,
        targets,
        // gradient norm 2 d(x, z) is at most twice the ball's diameter
        lipschitz: 4.0 * ball.radius(),
    })
}

impl FrechetLossStream {
    pub fn from_targets(chart: ManifoldChart, targets: Vec<Vec<Point>>, lipschitz: f64) -> Self {
        let base = targets.first().cloned().unwrap_or_default();
        FrechetLossStream {
            chart,
            base,
            targets,
            lipschitz,
        }
    }

    pub fn chart(&self) -> &ManifoldChart {
        &self.chart
    }

    pub fn base(&self) -> &[Point] {
        &self.base
    }

    pub fn horizon(&self) -> usize {
        self.targets.len()
    }

    pub fn agents(&self) -> usize {
        self.base.len()
    }

    pub fn target(&self, agent: usize, round: usize) -> &Point {
        &self.targets[round - 1][agent]
    }

    pub fn round_targets(&self, round: usize) -> &[Point] {
        &self.targets[round - 1]
    }

    pub fn all_targets(&self) -> impl Iterator<Item = &Point> {
        self.targets.iter().flatten()
    }

    /// Network loss `f_t(x) = (1/n) sum_i f_{i,t}(x)`.
    pub fn global_value(&self, x: &Point, round: usize) -> f64 {
        let row = self.round_targets(round);
        let sum: f64 = row.iter().map(|z| self.chart.dist(x, z).powi(2)).sum();
        sum / row.len() as f64
    }
}

impl LossOracle for FrechetLossStream {
    fn value(&self, x: &Point, agent: usize, round: usize) -> f64 {
        self.chart.dist(x, self.target(agent, round)).powi(2)
    }

    fn gradient(&self, x: &Point, agent: usize, round: usize) -> Result<TangentVector> {
        Ok(self.chart.log(x, self.target(agent, round))?.scaled(-2.0))
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn accumulate_gradient(&self, x: &Point, agent: usize, round: usize, acc: &mut [f64]) -> Result<()> {
        self.chart
            .log_accumulate(x.coords(), self.target(agent, round).coords(), -2.0, acc)
    }
}
