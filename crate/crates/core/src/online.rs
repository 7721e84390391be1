//! Full-information and two-point bandit decentralized online gradient
//! descent, plus Monte Carlo oracles for the smoothed objective.

use rand::Rng;

use crate::consensus::{consensus_step, Configuration};
use crate::error::{Error, Result};
use crate::linalg::{axpy, scale, MeanAccumulator};
use crate::manifold::{sn, GeodesicBall, ManifoldChart, Point, TangentVector};
use crate::network::WeightMatrix;

/// Relative slack allowed when asserting ball membership.
const FEASIBILITY_TOL: f64 = 1e-9;

/// A time-varying family of local losses `f_{i,t}`. Rounds are numbered from 1.
pub trait LossOracle {
    fn value(&self, x: &Point, agent: usize, round: usize) -> f64;
    fn gradient(&self, x: &Point, agent: usize, round: usize) -> Result<TangentVector>;
    /// Lipschitz constant of every `f_{i,t}` on the feasible set.
    fn lipschitz(&self) -> f64;
    /// `acc += grad f_{i,t}(x)` in ambient coordinates.
    fn accumulate_gradient(&self, x: &Point, agent: usize, round: usize, acc: &mut [f64]) -> Result<()> {
        axpy(1.0, self.gradient(x, agent, round)?.coords(), acc);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub x: Point,
    pub y_next: Point,
    pub last_gradient: TangentVector,
}

impl AgentState {
    pub fn new(chart: &ManifoldChart, x: Point) -> Self {
        AgentState {
            last_gradient: chart.zero_tangent(&x),
            y_next: x.clone(),
            x,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaRule {
    /// `eta_t = scale / sqrt(t)`
    Adaptive { scale: f64 },
    /// `eta_t = value` for every round
    Constant { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    pub eta: EtaRule,
    pub s: f64,
    pub delta: f64,
    pub tau: f64,
}

impl StepSchedule {
    pub fn eta(&self, t: usize) -> f64 {
        match self.eta {
            EtaRule::Adaptive { scale } => scale / (t.max(1) as f64).sqrt(),
            EtaRule::Constant { value } => value,
        }
    }

    /// `eta = c / sqrt(T)` held fixed over the horizon.
    pub fn constant_for_horizon(c: f64, horizon: usize) -> EtaRule {
        EtaRule::Constant {
            value: c / (horizon.max(1) as f64).sqrt(),
        }
    }

    /// Checks `eta > 0`, `s` in (0, 1], and for bandit runs `delta > 0`,
    /// `tau` in [0, 1) and `delta <= theta * r * tau`.
    pub fn validate(&self, chart: &ManifoldChart, ball: &GeodesicBall, bandit: bool, diameter: f64) -> Result<()> {
        let eta_ok = match self.eta {
            EtaRule::Adaptive { scale } => scale > 0.0 && scale.is_finite(),
            EtaRule::Constant { value } => value > 0.0 && value.is_finite(),
        };
        if !eta_ok {
            return Err(Error::InvalidSchedule("step size eta must be positive".into()));
        }
        if !(self.s > 0.0 && self.s <= 1.0) {
            return Err(Error::InvalidSchedule(format!(
                "consensus step s = {} outside (0, 1]",
                self.s
            )));
        }
        if !bandit {
            return Ok(());
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidSchedule(format!(
                "smoothing radius delta = {} must be positive",
                self.delta
            )));
        }
        if !(0.0..1.0).contains(&self.tau) {
            return Err(Error::InvalidSchedule(format!(
                "shrinkage tau = {} outside [0, 1)",
                self.tau
            )));
        }
        let limit = shrink_theta(chart, ball.radius(), diameter) * ball.radius() * self.tau;
        if self.delta > limit * (1.0 + 1e-12) {
            return Err(Error::InvalidSchedule(format!(
                "delta = {} exceeds theta * r * tau = {limit}; query points would leave the ball",
                self.delta
            )));
        }
        Ok(())
    }
}

/// `c11(K_max, D + r) / c11(K_min, D + r)`.
pub fn shrink_theta(chart: &ManifoldChart, radius: f64, diameter: f64) -> f64 {
    sn(chart.k_max(), diameter + radius) / sn(chart.k_min(), diameter + radius)
}

/// The shrinkage that makes `delta`-queries from the shrunk ball just
/// feasible: `tau = delta / (r theta)`.
pub fn coupled_tau(chart: &ManifoldChart, radius: f64, diameter: f64, delta: f64) -> f64 {
    delta / (radius * shrink_theta(chart, radius, diameter))
}

fn within(chart: &ManifoldChart, ball: &GeodesicBall, x: &Point) -> Result<()> {
    let d = chart.dist(ball.center(), x);
    if d > ball.radius() * (1.0 + FEASIBILITY_TOL) {
        return Err(Error::InfeasibleQuery {
            distance: d,
            radius: ball.radius(),
        });
    }
    Ok(())
}

fn consensus_update(
    chart: &ManifoldChart,
    ys: Vec<Point>,
    w: &WeightMatrix,
    s: f64,
    feasible: &GeodesicBall,
    t: usize,
) -> Result<Vec<Point>> {
    let cfg = Configuration::new(*chart, ys).map_err(|e| e.at_round(t, None))?;
    let next = consensus_step(&cfg, w, s).map_err(|e| e.at_round(t, None))?;
    let points = next.into_points();
    for (i, x) in points.iter().enumerate() {
        within(chart, feasible, x).map_err(|e| e.at_round(t, Some(i)))?;
    }
    Ok(points)
}

/// One round of full-information decentralized online gradient descent:
/// gradient step, projection onto `ball`, then one consensus step.
pub fn full_info_round<O: LossOracle + ?Sized>(
    chart: &ManifoldChart,
    states: &[AgentState],
    oracle: &O,
    w: &WeightMatrix,
    ball: &GeodesicBall,
    sched: &StepSchedule,
    t: usize,
) -> Result<Vec<AgentState>> {
    let eta = sched.eta(t);
    let limit = 10.0 * oracle.lipschitz();
    let mut ys = Vec::with_capacity(states.len());
    let mut grads = Vec::with_capacity(states.len());
    for (i, st) in states.iter().enumerate() {
        let step = || -> Result<(Point, TangentVector)> {
            let g = oracle.gradient(&st.x, i, t)?;
            let gn = chart.norm(&g);
            if gn > limit {
                return Err(Error::GradientBlowup { norm: gn, limit });
            }
            let z = chart.exp_unbounded(&g.scaled(-eta));
            Ok((chart.project_ball(ball, &z)?, g))
        };
        let (y, g) = step().map_err(|e| e.at_round(t, Some(i)))?;
        ys.push(y);
        grads.push(g);
    }
    let xs = consensus_update(chart, ys.clone(), w, sched.s, ball, t)?;
    Ok(xs
        .into_iter()
        .zip(ys)
        .zip(grads)
        .map(|((x, y_next), last_gradient)| AgentState {
            x,
            y_next,
            last_gradient,
        })
        .collect())
}

/// Output of the two-point estimator at one agent.
#[derive(Debug, Clone)]
pub struct TwoPointSample {
    pub gradient: Vec<f64>,
    pub queries: (Point, Point),
    pub values: (f64, f64),
}

/// `g = d / (2 delta) * (f(Exp_x(delta u)) - f(Exp_x(-delta u))) * u`.
#[allow(clippy::too_many_arguments)]
pub fn two_point_gradient<O: LossOracle + ?Sized>(
    chart: &ManifoldChart,
    oracle: &O,
    agent: usize,
    t: usize,
    x: &Point,
    u: &[f64],
    delta: f64,
) -> TwoPointSample {
    let q1 = Point::from_raw(chart.exp_raw(x.coords(), &scale(u, delta)));
    let q2 = Point::from_raw(chart.exp_raw(x.coords(), &scale(u, -delta)));
    let f1 = oracle.value(&q1, agent, t);
    let f2 = oracle.value(&q2, agent, t);
    let coef = chart.dim() as f64 / (2.0 * delta) * (f1 - f2);
    TwoPointSample {
        gradient: scale(u, coef),
        queries: (q1, q2),
        values: (f1, f2),
    }
}

/// One round of the two-point bandit algorithm. Agent `i` draws its search
/// direction from `rngs[i]`. Returns the new states and the query pairs.
#[allow(clippy::too_many_arguments)]
pub fn bandit_round<O: LossOracle + ?Sized, R: Rng>(
    chart: &ManifoldChart,
    states: &[AgentState],
    oracle: &O,
    w: &WeightMatrix,
    ball: &GeodesicBall,
    sched: &StepSchedule,
    t: usize,
    rngs: &mut [R],
) -> Result<(Vec<AgentState>, Vec<(Point, Point)>)> {
    if rngs.len() != states.len() {
        return Err(Error::DimensionMismatch {
            expected: states.len(),
            got: rngs.len(),
        });
    }
    let shrunk = ball.shrink(sched.tau)?;
    let eta = sched.eta(t);
    let mut ys = Vec::with_capacity(states.len());
    let mut grads = Vec::with_capacity(states.len());
    let mut queries = Vec::with_capacity(states.len());
    for (i, (st, rng)) in states.iter().zip(rngs.iter_mut()).enumerate() {
        let mut step = || -> Result<()> {
            let u = chart.sample_unit_tangent_raw(st.x.coords(), rng);
            let sample = two_point_gradient(chart, oracle, i, t, &st.x, &u, sched.delta);
            within(chart, ball, &sample.queries.0)?;
            within(chart, ball, &sample.queries.1)?;
            let g = TangentVector::from_raw(st.x.clone(), sample.gradient);
            let z = chart.exp_unbounded(&g.scaled(-eta));
            ys.push(chart.project_ball(&shrunk, &z)?);
            grads.push(g);
            queries.push(sample.queries);
            Ok(())
        };
        step().map_err(|e| e.at_round(t, Some(i)))?;
    }
    let xs = consensus_update(chart, ys.clone(), w, sched.s, &shrunk, t)?;
    let states = xs
        .into_iter()
        .zip(ys)
        .zip(grads)
        .map(|((x, y_next), last_gradient)| AgentState {
            x,
            y_next,
            last_gradient,
        })
        .collect();
    Ok((states, queries))
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl From<&MeanAccumulator> for Estimate {
    fn from(acc: &MeanAccumulator) -> Self {
        Estimate {
            mean: acc.mean(),
            std_error: acc.std_error(),
        }
    }
}

/// `f^delta(x) = E_u f(Exp_x(delta u))` over uniform unit tangents `u`.
#[allow(clippy::too_many_arguments)]
pub fn smoothed_value<O: LossOracle + ?Sized, R: Rng + ?Sized>(
    chart: &ManifoldChart,
    oracle: &O,
    agent: usize,
    t: usize,
    x: &Point,
    delta: f64,
    rng: &mut R,
    m: usize,
) -> Estimate {
    let mut acc = MeanAccumulator::default();
    for _ in 0..m.max(1) {
        let u = chart.sample_unit_tangent_raw(x.coords(), rng);
        let q = Point::from_raw(chart.exp_raw(x.coords(), &scale(&u, delta)));
        acc.push(oracle.value(&q, agent, t));
    }
    Estimate::from(&acc)
}

/// Orthonormal basis of the tangent space at `x` (Gram-Schmidt on the
/// projected ambient coordinate axes).
pub fn tangent_basis(chart: &ManifoldChart, x: &[f64]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(chart.dim());
    for k in 0..chart.ambient_dim() {
        if basis.len() == chart.dim() {
            break;
        }
        let mut e = vec![0.0; chart.ambient_dim()];
        e[k] = 1.0;
        let mut v = chart.tangent_part(x, &e);
        for _ in 0..2 {
            for b in &basis {
                let c = chart.inner_raw(b, &v);
                axpy(-c, b, &mut v);
            }
        }
        let n = chart.norm_raw(&v);
        if n > 1e-6 {
            basis.push(scale(&v, 1.0 / n));
        }
    }
    basis
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorReport {
    /// Monte Carlo mean of the two-point estimator (ambient coordinates).
    pub estimator_mean: Vec<f64>,
    /// Per-coordinate standard error of `estimator_mean`.
    pub estimator_se: Vec<f64>,
    /// Finite-difference gradient of the ball-smoothed pullback.
    pub reference: Vec<f64>,
    pub reference_se: Vec<f64>,
    /// `|estimator_mean - reference| / |reference|`, or the absolute
    /// difference when the reference vanishes.
    pub relative_error: f64,
}

/// Compares the mean of the two-point estimator with an independent
/// reference: the central finite-difference gradient of
/// `h(v) = E_{w ~ B_delta} f(Exp_x(v + w))`, where `B_delta` is the
/// `delta`-ball of the tangent space, estimated by nested Monte Carlo with
/// common random numbers for the two sides of each difference.
#[allow(clippy::too_many_arguments)]
pub fn estimator_mean_check<O: LossOracle + ?Sized, R: Rng + ?Sized>(
    chart: &ManifoldChart,
    oracle: &O,
    agent: usize,
    t: usize,
    x: &Point,
    delta: f64,
    rng: &mut R,
    m: usize,
) -> EstimatorReport {
    let n = chart.ambient_dim();
    let d = chart.dim();
    let m = m.max(2);

    let mut est: Vec<MeanAccumulator> = vec![MeanAccumulator::default(); n];
    for _ in 0..m {
        let u = chart.sample_unit_tangent_raw(x.coords(), rng);
        let g = two_point_gradient(chart, oracle, agent, t, x, &u, delta).gradient;
        for (acc, gk) in est.iter_mut().zip(&g) {
            acc.push(*gk);
        }
    }

    let basis = tangent_basis(chart, x.coords());
    let h = 1e-4 * delta;
    let mut fd: Vec<MeanAccumulator> = vec![MeanAccumulator::default(); d];
    for _ in 0..m {
        let dir = chart.sample_unit_tangent_raw(x.coords(), rng);
        let radius = delta * rng.random::<f64>().powf(1.0 / d as f64);
        let w = scale(&dir, radius);
        for (acc, e) in fd.iter_mut().zip(&basis) {
            let mut plus = w.clone();
            axpy(h, e, &mut plus);
            let mut minus = w.clone();
            axpy(-h, e, &mut minus);
            let fp = oracle.value(&Point::from_raw(chart.exp_raw(x.coords(), &plus)), agent, t);
            let fm = oracle.value(&Point::from_raw(chart.exp_raw(x.coords(), &minus)), agent, t);
            acc.push((fp - fm) / (2.0 * h));
        }
    }

    let estimator_mean: Vec<f64> = est.iter().map(|a| a.mean()).collect();
    let estimator_se: Vec<f64> = est.iter().map(|a| a.std_error()).collect();
    // directional derivatives along an orthonormal basis -> tangent vector
    let mut reference = vec![0.0; n];
    let mut reference_var = vec![0.0; n];
    for (acc, e) in fd.iter().zip(&basis) {
        axpy(acc.mean(), e, &mut reference);
        for (rv, ek) in reference_var.iter_mut().zip(e) {
            *rv += (acc.std_error() * ek).powi(2);
        }
    }
    let reference_se: Vec<f64> = reference_var.iter().map(|v| v.sqrt()).collect();
    let diff: Vec<f64> = estimator_mean
        .iter()
        .zip(&reference)
        .map(|(a, b)| a - b)
        .collect();
    let dn = chart.norm_raw(&diff);
    let rn = chart.norm_raw(&reference);
    let relative_error = if rn > 0.0 { dn / rn } else { dn };
    EstimatorReport {
        estimator_mean,
        estimator_se,
        reference,
        reference_se,
        relative_error,
    }
}

/// Monte Carlo estimate of
/// `f^delta(y) - f^delta(x) - <E g^delta(x), Log_x y>`.
#[allow(clippy::too_many_arguments)]
pub fn subconvexity_defect<O: LossOracle + ?Sized, R: Rng + ?Sized>(
    chart: &ManifoldChart,
    oracle: &O,
    agent: usize,
    t: usize,
    x: &Point,
    y: &Point,
    delta: f64,
    rng: &mut R,
    m: usize,
) -> Result<Estimate> {
    let v = chart.log_raw(x.coords(), y.coords())?;
    let fy = smoothed_value(chart, oracle, agent, t, y, delta, rng, m);
    let fx = smoothed_value(chart, oracle, agent, t, x, delta, rng, m);
    let mut slope = MeanAccumulator::default();
    for _ in 0..m.max(1) {
        let u = chart.sample_unit_tangent_raw(x.coords(), rng);
        let g = two_point_gradient(chart, oracle, agent, t, x, &u, delta).gradient;
        slope.push(chart.inner_raw(&g, &v));
    }
    Ok(Estimate {
        mean: fy.mean - fx.mean - slope.mean(),
        std_error: (fy.std_error.powi(2) + fx.std_error.powi(2) + slope.std_error().powi(2)).sqrt(),
    })
}
