//! Curvature-aware consensus: the step
//! `x_i(s) = Exp_{y_i}(s * sum_j w_ij Log_{y_i} y_j)`, weighted Fréchet means
//! and the variance diagnostics used to measure contraction.

use crate::error::{Error, Result};
use crate::linalg::{axpy, scale};
use crate::manifold::{GeodesicBall, ManifoldChart, Point};
use crate::network::WeightMatrix;

pub const FRECHET_TOL: f64 = 1e-10;
pub const FRECHET_MAX_ITER: usize = 200;

/// One point per agent on a common manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    chart: ManifoldChart,
    points: Vec<Point>,
}

impl Configuration {
    pub fn new(chart: ManifoldChart, points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::DegenerateConfiguration);
        }
        for p in &points {
            if p.coords().len() != chart.ambient_dim() {
                return Err(Error::DimensionMismatch {
                    expected: chart.ambient_dim(),
                    got: p.coords().len(),
                });
            }
        }
        Ok(Configuration { chart, points })
    }

    pub fn chart(&self) -> &ManifoldChart {
        &self.chart
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Every point lies in `ball` (up to roundoff).
    pub fn within(&self, ball: &GeodesicBall) -> bool {
        self.points
            .iter()
            .all(|p| self.chart.dist(ball.center(), p) <= ball.radius() * (1.0 + 1e-9))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrechetMean {
    pub point: Point,
    /// `|sum_j w_j Log_x(y_j)|` at the returned point.
    pub residual: f64,
    pub iterations: usize,
}

/// Weighted Fréchet mean `argmin_x sum_j w_j d^2(x, y_j)` by the unit-step
/// fixed-point iteration `x <- Exp_x(sum_j w_j Log_x y_j)` started at the
/// first point.
pub fn frechet_mean(
    cfg: &Configuration,
    weights: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<FrechetMean> {
    let m = &cfg.chart;
    if weights.len() != cfg.len() {
        return Err(Error::DimensionMismatch {
            expected: cfg.len(),
            got: weights.len(),
        });
    }
    let mut x = cfg.points[0].coords().to_vec();
    let mut residual = f64::INFINITY;
    for iter in 0..=max_iter {
        let step = weighted_log_sum(m, &x, cfg.points.iter().map(Point::coords), weights)?;
        residual = m.norm_raw(&step);
        if residual < tol {
            return Ok(FrechetMean {
                point: Point::from_raw(x),
                residual,
                iterations: iter,
            });
        }
        if iter == max_iter {
            break;
        }
        x = m.exp_raw(&x, &step);
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

/// Uniform-weight Fréchet mean with the default tolerance.
pub fn mean(cfg: &Configuration) -> Result<FrechetMean> {
    let w = vec![1.0 / cfg.len() as f64; cfg.len()];
    frechet_mean(cfg, &w, FRECHET_TOL, FRECHET_MAX_ITER)
}

/// `sum_j w_j Log_x(y_j)`.
pub(crate) fn weighted_log_sum<'a>(
    m: &ManifoldChart,
    x: &[f64],
    ys: impl Iterator<Item = &'a [f64]>,
    weights: &[f64],
) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; x.len()];
    for (y, &w) in ys.zip(weights) {
        if w != 0.0 {
            axpy(w, &m.log_raw(x, y)?, &mut acc);
        }
    }
    Ok(acc)
}

/// `(1/n) sum_i d^2(y_i, ybar)` with `ybar` the uniform Fréchet mean.
pub fn variance(cfg: &Configuration) -> Result<f64> {
    Ok(variance_about(cfg, &mean(cfg)?.point))
}

/// `(1/n) sum_i d^2(y_i, p)`.
pub fn variance_about(cfg: &Configuration, p: &Point) -> f64 {
    let sum: f64 = cfg
        .points
        .iter()
        .map(|y| cfg.chart.dist(y, p).powi(2))
        .sum();
    sum / cfg.len() as f64
}

/// `sum_i sum_j w_ij d^2(y_i, y_j)`.
pub fn weighted_dispersion(cfg: &Configuration, w: &WeightMatrix) -> Result<f64> {
    check_size(cfg, w)?;
    let mut total = 0.0;
    for i in 0..cfg.len() {
        for &j in w.neighbors(i) {
            total += w.weight(i, j) * cfg.chart.dist(&cfg.points[i], &cfg.points[j]).powi(2);
        }
    }
    Ok(total)
}

/// Right-hand side of the variance/dispersion inequality:
/// `(1 + C4 D^2)^2 / (2 (1 - sigma2)) * dispersion`, an upper bound on
/// `n * Var`.
pub fn variance_dispersion_bound(dispersion: f64, c4: f64, diameter: f64, sigma2: f64) -> f64 {
    (1.0 + c4 * diameter * diameter).powi(2) / (2.0 * (1.0 - sigma2)) * dispersion
}

fn check_size(cfg: &Configuration, w: &WeightMatrix) -> Result<()> {
    if w.n() != cfg.len() {
        return Err(Error::DimensionMismatch {
            expected: cfg.len(),
            got: w.n(),
        });
    }
    Ok(())
}

/// One synchronous consensus round. Every output point reads only the input
/// snapshot.
pub fn consensus_step(cfg: &Configuration, w: &WeightMatrix, s: f64) -> Result<Configuration> {
    check_size(cfg, w)?;
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidStepSize(s));
    }
    let m = &cfg.chart;
    let points = (0..cfg.len())
        .map(|i| {
            let y = cfg.points[i].coords();
            let mut dir = vec![0.0; y.len()];
            for &j in w.neighbors(i) {
                axpy(w.weight(i, j), &m.log_raw(y, cfg.points[j].coords())?, &mut dir);
            }
            let step = scale(&dir, s);
            if m.kind() == crate::manifold::ManifoldKind::Sphere {
                let len = m.norm_raw(&step);
                if len >= m.injectivity_radius() {
                    return Err(Error::BeyondInjectivity {
                        length: len,
                        radius: m.injectivity_radius(),
                    });
                }
            }
            Ok(Point::from_raw(m.exp_raw(y, &step)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Configuration {
        chart: cfg.chart,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contraction {
    /// `(1/n) sum_i d^2(x_i(s), ybar) / Var({y_i})`, with `ybar` the
    /// pre-step mean.
    pub ratio: f64,
    /// `Var({x_i(s)}) / Var({y_i})`; never above `ratio`.
    pub variance_ratio: f64,
    pub variance_before: f64,
}

/// Measured one-step variance contraction.
pub fn contraction_ratio(cfg: &Configuration, w: &WeightMatrix, s: f64) -> Result<Contraction> {
    let ybar = mean(cfg)?.point;
    let before = variance_about(cfg, &ybar);
    if before <= 1e-300 {
        return Err(Error::DegenerateConfiguration);
    }
    let next = consensus_step(cfg, w, s)?;
    let about_old = variance_about(&next, &ybar);
    let after = variance(&next)?;
    Ok(Contraction {
        ratio: about_old / before,
        variance_ratio: after / before,
        variance_before: before,
    })
}
