//! Best fixed decision in hindsight, `argmin_{x in X} sum_t f_t(x)`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::KahanSum;
use crate::manifold::{GeodesicBall, ManifoldChart, Point, TangentVector};
use crate::online::LossOracle;

pub const RESTARTS: usize = 10;
pub const RESIDUAL_TOL: f64 = 1e-8;
pub const MAX_ITER: usize = 5000;
/// Step on the averaged objective `(1/(nT)) sum_{t,i} f_{i,t}`.
pub const STEP: f64 = 0.45;

#[derive(Debug, Clone, PartialEq)]
pub struct Comparator {
    pub point: Point,
    /// `sum_t f_t(x*)` with `f_t = (1/n) sum_i f_{i,t}`.
    pub total_loss: f64,
    pub residual: f64,
}

fn mean_gradient<O: LossOracle + ?Sized>(
    chart: &ManifoldChart,
    oracle: &O,
    x: &Point,
    n: usize,
    horizon: usize,
) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; chart.ambient_dim()];
    for t in 1..=horizon {
        for i in 0..n {
            oracle.accumulate_gradient(x, i, t, &mut acc)?;
        }
    }
    let scale = 1.0 / (n * horizon) as f64;
    acc.iter_mut().for_each(|a| *a *= scale);
    Ok(chart.tangent_part(x.coords(), &acc))
}

/// `sum_t (1/n) sum_i f_{i,t}(x)`.
pub fn total_loss<O: LossOracle + ?Sized>(oracle: &O, x: &Point, n: usize, horizon: usize) -> f64 {
    let mut sum = KahanSum::new();
    for t in 1..=horizon {
        for i in 0..n {
            sum.add(oracle.value(x, i, t));
        }
    }
    sum.value() / n as f64
}

/// Projected Riemannian gradient descent from `start` until the
/// gradient-mapping norm `d(x, x+) / STEP` drops below `RESIDUAL_TOL`.
pub fn descend<O: LossOracle + ?Sized>(
    chart: &ManifoldChart,
    oracle: &O,
    n: usize,
    horizon: usize,
    ball: &GeodesicBall,
    start: Point,
) -> Result<(Point, f64)> {
    let mut x = chart.project_ball(ball, &start)?;
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_ITER {
        let g = mean_gradient(chart, oracle, &x, n, horizon)?;
        let step = TangentVector::from_raw(x.clone(), g).scaled(-STEP);
        let next = chart.project_ball(ball, &chart.exp_unbounded(&step))?;
        residual = chart.dist(&x, &next) / STEP;
        x = next;
        if residual < RESIDUAL_TOL {
            return Ok((x, residual));
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITER,
        residual,
    })
}

/// Best of `RESTARTS` descents started uniformly on `ball`.
pub fn comparator<O: LossOracle + ?Sized, R: Rng + ?Sized>(
    chart: &ManifoldChart,
    oracle: &O,
    n: usize,
    horizon: usize,
    ball: &GeodesicBall,
    rng: &mut R,
) -> Result<Comparator> {
    let mut best: Option<Comparator> = None;
    for _ in 0..RESTARTS {
        let start = chart.sample_uniform_ball(ball, rng);
        let (point, residual) = descend(chart, oracle, n, horizon, ball, start)?;
        let total = total_loss(oracle, &point, n, horizon);
        if best.as_ref().is_none_or(|b| total < b.total_loss) {
            best = Some(Comparator {
                point,
                total_loss: total,
                residual,
            });
        }
    }
    best.ok_or(Error::NoConvergence {
        iterations: 0,
        residual: f64::INFINITY,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::loss::FrechetLossStream;
    use crate::seed::rng_from_seed;
    use std::f64::consts::PI;

    #[test]
    fn single_static_target() {
        let m = ManifoldChart::sphere(3);
        let ball = m.ball(m.origin(), PI / 4.0).unwrap();
        let z = m.project_point(vec![1.0, 0.3, -0.2, 0.1]).unwrap();
        let s = FrechetLossStream::from_targets(m, vec![vec![z.clone()]], PI);
        let c = comparator(&m, &s, 1, 1, &ball, &mut rng_from_seed(1)).unwrap();
        assert!(m.dist(&c.point, &z) < 1e-8);
        assert!(c.total_loss < 1e-15);
    }

    #[test]
    fn two_static_targets_give_midpoint() {
        let m = ManifoldChart::hyperboloid(2);
        let ball = m.ball(m.origin(), 1.0).unwrap();
        let mut rng = rng_from_seed(2);
        let a = m.sample_uniform_ball(&ball, &mut rng);
        let b = m.sample_uniform_ball(&ball, &mut rng);
        let s = FrechetLossStream::from_targets(m, vec![vec![a.clone(), b.clone()]], 4.0);
        let c = comparator(&m, &s, 2, 1, &ball, &mut rng).unwrap();
        let mid = m.exp(&m.log(&a, &b).unwrap().scaled(0.5)).unwrap();
        assert!(m.dist(&c.point, &mid) < 1e-7);
    }

    #[test]
    fn outside_target_projects_to_boundary() {
        let m = ManifoldChart::euclidean(2);
        let ball = m.ball(m.origin(), 1.0).unwrap();
        let z = Point::from_raw(vec![3.0, 0.0]);
        let s = FrechetLossStream::from_targets(m, vec![vec![z]], 8.0);
        let c = comparator(&m, &s, 1, 1, &ball, &mut rng_from_seed(3)).unwrap();
        assert!((c.point.coords()[0] - 1.0).abs() < 1e-9);
        assert!(c.point.coords()[1].abs() < 1e-9);
    }
}
