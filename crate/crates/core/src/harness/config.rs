//! Flat `key = value` experiment configuration.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::constants::{derive, CurvatureContext, DerivedConstants};
use crate::error::{Error, Result};
use crate::manifold::{GeodesicBall, ManifoldChart, ManifoldKind};
use crate::network::{validate, RingWeights, WeightMatrix};
use crate::online::{coupled_tau, EtaRule, StepSchedule};

/// Names used when a configuration is rejected.
pub const NETWORK: &str = "network";
pub const CURVATURE: &str = "curvature";
pub const LOSS: &str = "loss";
pub const SCHEDULE: &str = "schedule";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Full,
    Bandit,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Full => "full",
            Algorithm::Bandit => "bandit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtaKind {
    /// `eta_t = eta_scale / sqrt(t)`
    Adaptive,
    /// `eta = eta_scale / sqrt(T)`
    Constant,
}

/// Consensus step choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepChoice {
    Value(f64),
    /// `C2 / (2 C1)`, the variance-optimal step.
    Theorem,
    /// `alpha (1 - sigma2) / (4 C1)`, the step used in the network-error bound.
    Lemma,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauChoice {
    Value(f64),
    /// `delta / (r theta)`
    Coupled,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    Ring { k: usize, weights: RingWeights },
    Complete,
    Matrix(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub manifold: ManifoldKind,
    pub dim: usize,
    /// Ambient coordinates of the ball center; `None` is the chart origin.
    pub center: Option<Vec<f64>>,
    pub radius: f64,
    /// `D` used for the curvature constants; defaults to `2 * radius`.
    pub diameter: Option<f64>,
    pub n: usize,
    pub topology: Topology,
    pub horizon: usize,
    pub algorithm: Algorithm,
    pub eta: EtaKind,
    pub eta_scale: f64,
    pub s: StepChoice,
    pub delta: f64,
    pub tau: TauChoice,
    pub base_spread: f64,
    pub seed: u64,
    pub repetitions: usize,
    pub c3: Option<f64>,
    pub c4: Option<f64>,
    pub c8: Option<f64>,
    /// Not part of the echoed configuration.
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            manifold: ManifoldKind::Sphere,
            dim: 15,
            center: None,
            radius: PI / 4.0,
            diameter: None,
            n: 50,
            topology: Topology::Ring {
                k: 10,
                weights: RingWeights::Uniform,
            },
            horizon: 2000,
            algorithm: Algorithm::Full,
            eta: EtaKind::Adaptive,
            eta_scale: 1.0,
            s: StepChoice::Value(1.0),
            delta: PI / 50.0,
            tau: TauChoice::Coupled,
            base_spread: PI / 16.0,
            seed: 1,
            repetitions: 1,
            c3: None,
            c4: None,
            c8: None,
            output: None,
        }
    }
}

/// Parses a real number, also accepting `pi`, `pi/N`, `a*pi` and `a*pi/N`.
pub fn parse_real(text: &str) -> Result<f64> {
    let t = text.trim();
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    let bad = || Error::Parse(format!("not a number: {t:?}"));
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim().parse::<f64>().map_err(|_| bad())?),
        None => (t, 1.0),
    };
    let coef = match num.strip_suffix("pi") {
        Some("") => 1.0,
        Some(c) => c
            .trim()
            .strip_suffix('*')
            .ok_or_else(bad)?
            .trim()
            .parse::<f64>()
            .map_err(|_| bad())?,
        None => return Err(bad()),
    };
    Ok(coef * PI / den)
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse()
        .map_err(|_| Error::Parse(format!("{key}: expected a non-negative integer, got {v:?}")))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut ring_k: Option<usize> = None;
        let mut weights = RingWeights::Uniform;
        let mut topology: Option<String> = None;
        let mut matrix: Option<PathBuf> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "ring_k" => ring_k = Some(parse_usize(key, value)?),
                "weights" => {
                    weights = match value {
                        "uniform" => RingWeights::Uniform,
                        "metropolis" => RingWeights::Metropolis,
                        _ => return Err(Error::Parse(format!("weights: unknown value {value:?}"))),
                    }
                }
                "topology" => topology = Some(value.to_string()),
                "matrix" => matrix = Some(PathBuf::from(value)),
                _ => cfg.set(key, value)?,
            }
        }
        cfg.topology = match (topology.as_deref(), matrix) {
            (Some("complete"), _) => Topology::Complete,
            (Some("matrix"), Some(p)) | (None, Some(p)) => Topology::Matrix(p),
            (Some("matrix"), None) => {
                return Err(Error::Parse("topology = matrix requires `matrix = <path>`".into()))
            }
            (Some("ring") | None, None) | (Some("ring"), Some(_)) => Topology::Ring {
                k: ring_k.unwrap_or(10),
                weights,
            },
            (Some(other), _) => return Err(Error::Parse(format!("topology: unknown value {other:?}"))),
        };
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        // relative matrix paths are resolved against the config file
        if let Topology::Matrix(p) = &cfg.topology {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.topology = Topology::Matrix(dir.join(p));
                }
            }
        }
        Ok(cfg)
    }

    /// Re-reads the configuration echoed into a CSV file's metadata.
    pub fn from_csv_metadata(csv: &str) -> Result<Self> {
        let body: String = csv
            .lines()
            .take_while(|l| l.starts_with('#'))
            .filter_map(|l| l.strip_prefix("# config "))
            .map(|l| format!("{l}\n"))
            .collect();
        if body.is_empty() {
            return Err(Error::Parse("no configuration lines in CSV metadata".into()));
        }
        Self::parse(&body)
    }

    /// Applies one `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let opt_real = |v: &str| -> Result<Option<f64>> {
            if v == "default" {
                Ok(None)
            } else {
                parse_real(v).map(Some)
            }
        };
        match key.trim() {
            "manifold" => self.manifold = v.parse()?,
            "dim" => self.dim = parse_usize(key, v)?,
            "center" => {
                self.center = if v == "origin" {
                    None
                } else {
                    Some(v.split(',').map(parse_real).collect::<Result<Vec<_>>>()?)
                }
            }
            "radius" => self.radius = parse_real(v)?,
            "diameter" => self.diameter = opt_real(v)?,
            "n" => self.n = parse_usize(key, v)?,
            "ring_k" => match &mut self.topology {
                Topology::Ring { k, .. } => *k = parse_usize(key, v)?,
                _ => {
                    self.topology = Topology::Ring {
                        k: parse_usize(key, v)?,
                        weights: RingWeights::Uniform,
                    }
                }
            },
            "topology" | "weights" | "matrix" => {
                let mut text = self.to_text();
                text.push_str(&format!("{key} = {v}\n"));
                let output = self.output.take();
                *self = Self::parse(&text)?;
                self.output = output;
            }
            "horizon" => self.horizon = parse_usize(key, v)?,
            "algorithm" => {
                self.algorithm = match v {
                    "full" => Algorithm::Full,
                    "bandit" => Algorithm::Bandit,
                    _ => return Err(Error::Parse(format!("algorithm: unknown value {v:?}"))),
                }
            }
            "eta" => {
                self.eta = match v {
                    "adaptive" => EtaKind::Adaptive,
                    "constant" => EtaKind::Constant,
                    _ => return Err(Error::Parse(format!("eta: unknown value {v:?}"))),
                }
            }
            "eta_scale" => self.eta_scale = parse_real(v)?,
            "s" => {
                self.s = match v {
                    "theorem" => StepChoice::Theorem,
                    "lemma" => StepChoice::Lemma,
                    _ => StepChoice::Value(parse_real(v)?),
                }
            }
            "delta" => self.delta = parse_real(v)?,
            "tau" => {
                self.tau = match v {
                    "coupled" => TauChoice::Coupled,
                    _ => TauChoice::Value(parse_real(v)?),
                }
            }
            "base_spread" => self.base_spread = parse_real(v)?,
            "seed" => {
                self.seed = v
                    .parse()
                    .map_err(|_| Error::Parse(format!("seed: expected an unsigned integer, got {v:?}")))?
            }
            "repetitions" => self.repetitions = parse_usize(key, v)?,
            "c3" => self.c3 = opt_real(v)?,
            "c4" => self.c4 = opt_real(v)?,
            "c8" => self.c8 = opt_real(v)?,
            "output" => self.output = Some(PathBuf::from(v)),
            other => return Err(Error::Parse(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key=value` strings in order.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let (k, v) = o
                .as_ref()
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("override {:?} is not key=value", o.as_ref())))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Canonical text form. Reals use the shortest representation that reads
    /// back to the same `f64`. The output path is omitted.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        line("manifold", self.manifold.name().to_string());
        line("dim", self.dim.to_string());
        line(
            "center",
            match &self.center {
                None => "origin".into(),
                Some(c) => c.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(","),
            },
        );
        line("radius", format!("{:?}", self.radius));
        line("diameter", self.diameter.map_or("default".into(), |d| format!("{d:?}")));
        line("n", self.n.to_string());
        match &self.topology {
            Topology::Ring { k, weights } => {
                line("topology", "ring".into());
                line("ring_k", k.to_string());
                line(
                    "weights",
                    match weights {
                        RingWeights::Uniform => "uniform".into(),
                        RingWeights::Metropolis => "metropolis".into(),
                    },
                );
            }
            Topology::Complete => line("topology", "complete".into()),
            Topology::Matrix(p) => {
                line("topology", "matrix".into());
                line("matrix", p.display().to_string());
            }
        }
        line("horizon", self.horizon.to_string());
        line("algorithm", self.algorithm.name().into());
        line(
            "eta",
            match self.eta {
                EtaKind::Adaptive => "adaptive".into(),
                EtaKind::Constant => "constant".into(),
            },
        );
        line("eta_scale", format!("{:?}", self.eta_scale));
        line(
            "s",
            match self.s {
                StepChoice::Value(v) => format!("{v:?}"),
                StepChoice::Theorem => "theorem".into(),
                StepChoice::Lemma => "lemma".into(),
            },
        );
        line("delta", format!("{:?}", self.delta));
        line(
            "tau",
            match self.tau {
                TauChoice::Value(v) => format!("{v:?}"),
                TauChoice::Coupled => "coupled".into(),
            },
        );
        line("base_spread", format!("{:?}", self.base_spread));
        line("seed", self.seed.to_string());
        line("repetitions", self.repetitions.to_string());
        for (k, v) in [("c3", self.c3), ("c4", self.c4), ("c8", self.c8)] {
            line(k, v.map_or("default".into(), |x| format!("{x:?}")));
        }
        out
    }

    /// Builds every run-time object, rejecting the configuration at the first
    /// failed check.
    pub fn prepare(&self) -> Result<Prepared> {
        // curvature / domain
        let chart = ManifoldChart::new(self.manifold, self.dim)
            .map_err(|e| Error::config(CURVATURE, e.to_string()))?;
        let center = match &self.center {
            None => chart.origin(),
            Some(c) => chart
                .point(c.clone())
                .map_err(|e| Error::config(CURVATURE, format!("center: {e}")))?,
        };
        let ball = chart
            .ball(center, self.radius)
            .map_err(|e| Error::config(CURVATURE, e.to_string()))?;
        let diameter = self.diameter.unwrap_or(2.0 * self.radius);

        // network
        if self.n < 2 {
            return Err(Error::config(NETWORK, format!("need at least 2 agents, got {}", self.n)));
        }
        let w = match &self.topology {
            Topology::Ring { k, weights } => WeightMatrix::ring(self.n, *k, *weights),
            Topology::Complete => WeightMatrix::build_complete(self.n),
            Topology::Matrix(p) => WeightMatrix::load(p),
        }
        .map_err(|e| Error::config(NETWORK, e.to_string()))?;
        if w.n() != self.n {
            return Err(Error::config(
                NETWORK,
                format!("matrix has {} agents but n = {}", w.n(), self.n),
            ));
        }
        let report = validate(&w);
        if !report.passed() {
            return Err(Error::config(
                NETWORK,
                format!("weight matrix fails: {}", report.failures().join(", ")),
            ));
        }
        let w = w.validated().map_err(|e| Error::config(NETWORK, e.to_string()))?;
        let sigma2 = w.sigma2()?;

        let mut ctx = CurvatureContext::new(chart.k_min(), chart.k_max(), diameter, self.n, sigma2);
        if let Some(c) = self.c3 {
            ctx.c3 = c;
        }
        if let Some(c) = self.c4 {
            ctx.c4 = c;
        }
        if let Some(c) = self.c8 {
            ctx.c8 = c;
        }
        if self.algorithm == Algorithm::Bandit {
            ctx = ctx.with_delta(self.delta);
        }
        ctx.validate().map_err(|e| Error::config(CURVATURE, e.to_string()))?;
        let constants = derive(&ctx).map_err(|e| Error::config(CURVATURE, e.to_string()))?;

        // loss family: squared distance must be geodesically convex on the ball
        if chart.kind() == ManifoldKind::Sphere && self.radius > PI / 4.0 + 1e-15 {
            return Err(Error::config(
                LOSS,
                format!(
                    "squared distance is not geodesically convex on a sphere ball of radius {} > pi/4",
                    self.radius
                ),
            ));
        }
        if !(self.base_spread >= 0.0 && self.base_spread.is_finite()) {
            return Err(Error::config(LOSS, "base_spread must be non-negative"));
        }
        if chart.kind() == ManifoldKind::Sphere && self.base_spread >= PI / 2.0 {
            return Err(Error::config(LOSS, "base_spread must be below pi/2 on the sphere"));
        }
        let lipschitz = 4.0 * self.radius;

        // schedule
        if self.horizon == 0 {
            return Err(Error::config(SCHEDULE, "horizon must be at least 1"));
        }
        if self.repetitions == 0 {
            return Err(Error::config(SCHEDULE, "repetitions must be at least 1"));
        }
        let s = match self.s {
            StepChoice::Value(v) => v,
            StepChoice::Theorem => constants.s_consensus,
            StepChoice::Lemma => constants.s_network,
        };
        let tau = match self.tau {
            TauChoice::Value(v) => v,
            TauChoice::Coupled => coupled_tau(&chart, self.radius, diameter, self.delta),
        };
        let eta = match self.eta {
            EtaKind::Adaptive => EtaRule::Adaptive {
                scale: self.eta_scale,
            },
            EtaKind::Constant => StepSchedule::constant_for_horizon(self.eta_scale, self.horizon),
        };
        let schedule = StepSchedule {
            eta,
            s,
            delta: self.delta,
            tau,
        };
        schedule
            .validate(&chart, &ball, self.algorithm == Algorithm::Bandit, diameter)
            .map_err(|e| Error::config(SCHEDULE, e.to_string()))?;

        Ok(Prepared {
            config: self.clone(),
            chart,
            ball,
            weights: w,
            sigma2,
            context: ctx,
            constants,
            schedule,
            lipschitz,
        })
    }
}

/// A validated configuration with its derived objects.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub chart: ManifoldChart,
    pub ball: GeodesicBall,
    pub weights: WeightMatrix,
    pub sigma2: f64,
    pub context: CurvatureContext,
    pub constants: DerivedConstants,
    pub schedule: StepSchedule,
    pub lipschitz: f64,
}

impl Prepared {
    /// Feasible set for the decisions.
    pub fn feasible(&self) -> Result<GeodesicBall> {
        match self.config.algorithm {
            Algorithm::Full => Ok(self.ball.clone()),
            Algorithm::Bandit => self.ball.shrink(self.schedule.tau),
        }
    }
}
