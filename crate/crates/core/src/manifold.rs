//! Closed-form geometry on the three constant-curvature model spaces.
//!
//! Points and tangent vectors live in ambient coordinates:
//!
//! - `Sphere`: the unit sphere S^d in R^{d+1}, curvature +1.
//! - `Hyperboloid`: the upper sheet {x : <x,x>_L = -1, x_0 > 0} in Minkowski
//!   space R^{1,d}, curvature -1. Tangent spaces carry the restriction of the
//!   Lorentz form, which is positive definite there.
//! - `Euclidean`: R^d, curvature 0.
//!
//! Every operation is a pure function of its inputs. Results of `exp` and
//! `parallel_transport` are re-projected onto the manifold (resp. tangent
//! space) so that iterates do not drift over long runs.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, lincomb, lorentz, norm, scale, sub};

/// Tolerance of the on-manifold and tangency invariants.
pub const INVARIANT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ManifoldKind {
    Sphere,
    Hyperboloid,
    Euclidean,
}

impl ManifoldKind {
    pub fn name(self) -> &'static str {
        match self {
            ManifoldKind::Sphere => "sphere",
            ManifoldKind::Hyperboloid => "hyperboloid",
            ManifoldKind::Euclidean => "euclidean",
        }
    }
}

impl fmt::Display for ManifoldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ManifoldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sphere" => Ok(ManifoldKind::Sphere),
            "hyperboloid" | "hyperbolic" => Ok(ManifoldKind::Hyperboloid),
            "euclidean" => Ok(ManifoldKind::Euclidean),
            other => Err(Error::Parse(format!("unknown manifold kind `{other}`"))),
        }
    }
}

/// A point in ambient coordinates. Construct through [`ManifoldChart::point`].
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }
}

/// A tangent vector anchored at `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    base: Point,
    coords: Vec<f64>,
}

impl TangentVector {
    pub(crate) fn from_raw(base: Point, coords: Vec<f64>) -> Self {
        TangentVector { base, coords }
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Same base point, coordinates multiplied by `s`.
    pub fn scaled(&self, s: f64) -> TangentVector {
        TangentVector {
            base: self.base.clone(),
            coords: scale(&self.coords, s),
        }
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

/// Closed geodesic ball `{x : d(center, x) <= radius}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicBall {
    center: Point,
    radius: f64,
}

impl GeodesicBall {
    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// The set `{Exp_p((1 - tau) Log_p y) : y in ball}`, which for a ball
    /// centered at `p` is the concentric ball of radius `(1 - tau) r`.
    pub fn shrink(&self, tau: f64) -> Result<GeodesicBall> {
        if !(0.0..1.0).contains(&tau) {
            return Err(Error::InvalidShrinkage(tau));
        }
        Ok(GeodesicBall {
            center: self.center.clone(),
            radius: (1.0 - tau) * self.radius,
        })
    }
}

/// A model manifold of constant sectional curvature and given intrinsic
/// dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldChart {
    kind: ManifoldKind,
    dim: usize,
}

impl ManifoldChart {
    pub fn new(kind: ManifoldKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        Ok(ManifoldChart { kind, dim })
    }

    pub fn sphere(dim: usize) -> Self {
        Self::new(ManifoldKind::Sphere, dim).expect("positive dimension")
    }

    pub fn hyperboloid(dim: usize) -> Self {
        Self::new(ManifoldKind::Hyperboloid, dim).expect("positive dimension")
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::new(ManifoldKind::Euclidean, dim).expect("positive dimension")
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    /// Intrinsic dimension d.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient_dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Euclidean => self.dim,
            _ => self.dim + 1,
        }
    }

    /// The constant sectional curvature.
    pub fn curvature(&self) -> f64 {
        match self.kind {
            ManifoldKind::Sphere => 1.0,
            ManifoldKind::Hyperboloid => -1.0,
            ManifoldKind::Euclidean => 0.0,
        }
    }

    pub fn k_min(&self) -> f64 {
        self.curvature()
    }

    pub fn k_max(&self) -> f64 {
        self.curvature()
    }

    pub fn injectivity_radius(&self) -> f64 {
        match self.kind {
            ManifoldKind::Sphere => PI,
            _ => f64::INFINITY,
        }
    }

    /// `(1, 0, ..., 0)` on the sphere and hyperboloid, the zero vector in R^d.
    pub fn origin(&self) -> Point {
        let mut c = vec![0.0; self.ambient_dim()];
        if self.kind != ManifoldKind::Euclidean {
            c[0] = 1.0;
        }
        Point(c)
    }

    /// Validates `coords` against the manifold invariant.
    pub fn point(&self, coords: Vec<f64>) -> Result<Point> {
        self.check_len(coords.len())?;
        match self.kind {
            ManifoldKind::Sphere => {
                let n = norm(&coords);
                if (n - 1.0).abs() > INVARIANT_TOL {
                    return Err(Error::InvalidPoint(format!("|x| = {n}")));
                }
            }
            ManifoldKind::Hyperboloid => {
                let q = lorentz(&coords, &coords);
                let tol = INVARIANT_TOL * coords[0].powi(2).max(1.0);
                if coords[0] <= 0.0 || (q + 1.0).abs() > tol {
                    return Err(Error::InvalidPoint(format!(
                        "<x,x>_L = {q}, x0 = {}",
                        coords[0]
                    )));
                }
            }
            ManifoldKind::Euclidean => {}
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint("non-finite coordinate".into()));
        }
        Ok(Point(coords))
    }

    /// Maps arbitrary ambient coordinates onto the manifold (normalization on
    /// the sphere, lifting `x_0` on the hyperboloid).
    pub fn project_point(&self, mut coords: Vec<f64>) -> Result<Point> {
        self.check_len(coords.len())?;
        if self.kind == ManifoldKind::Sphere && norm(&coords) == 0.0 {
            return Err(Error::InvalidPoint("cannot normalize the zero vector".into()));
        }
        self.renormalize(&mut coords);
        Ok(Point(coords))
    }

    /// Validates tangency of `coords` at `base`.
    pub fn tangent(&self, base: &Point, coords: Vec<f64>) -> Result<TangentVector> {
        self.check_len(base.0.len())?;
        self.check_len(coords.len())?;
        self.check_tangency(&base.0, &coords)?;
        Ok(TangentVector {
            base: base.clone(),
            coords,
        })
    }

    /// Orthogonal projection of ambient coordinates onto `T_base M`.
    pub fn project_tangent(&self, base: &Point, coords: &[f64]) -> TangentVector {
        TangentVector {
            base: base.clone(),
            coords: self.tangent_part(&base.0, coords),
        }
    }

    pub fn zero_tangent(&self, base: &Point) -> TangentVector {
        TangentVector {
            base: base.clone(),
            coords: vec![0.0; self.ambient_dim()],
        }
    }

    /// Builds a geodesic ball, enforcing `radius > 0` and, on the sphere,
    /// `radius < pi/2` so that the ball is uniquely geodesically convex.
    pub fn ball(&self, center: Point, radius: f64) -> Result<GeodesicBall> {
        self.check_len(center.0.len())?;
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidBall(format!("radius {radius} must be positive")));
        }
        if self.kind == ManifoldKind::Sphere && radius >= PI / 2.0 {
            return Err(Error::InvalidBall(format!(
                "sphere ball radius {radius} must be below pi/2"
            )));
        }
        Ok(GeodesicBall { center, radius })
    }

    // ---- typed operations -------------------------------------------------

    /// Riemannian exponential map. On the sphere the tangent must be shorter
    /// than the injectivity radius.
    pub fn exp(&self, v: &TangentVector) -> Result<Point> {
        self.check_len(v.coords.len())?;
        self.check_tangency(&v.base.0, &v.coords)?;
        let len = self.norm_raw(&v.coords);
        if self.kind == ManifoldKind::Sphere && len >= PI {
            return Err(Error::BeyondInjectivity {
                length: len,
                radius: PI,
            });
        }
        Ok(Point(self.exp_raw(&v.base.0, &v.coords)))
    }

    /// Follows the geodesic `t -> Exp_x(t v)` up to `t = 1` without the
    /// injectivity restriction. On the sphere a long step wraps around great
    /// circles; the endpoint is still a well-defined point of the manifold.
    pub fn exp_unbounded(&self, v: &TangentVector) -> Point {
        Point(self.exp_raw(&v.base.0, &v.coords))
    }

    /// Riemannian logarithm, `Exp_x(Log_x(y)) = y`. Coincident points give the
    /// zero tangent.
    pub fn log(&self, x: &Point, y: &Point) -> Result<TangentVector> {
        self.check_len(x.0.len())?;
        self.check_len(y.0.len())?;
        Ok(TangentVector {
            base: x.clone(),
            coords: self.log_raw(&x.0, &y.0)?,
        })
    }

    /// Geodesic distance.
    pub fn dist(&self, x: &Point, y: &Point) -> f64 {
        self.dist_raw(&x.0, &y.0)
    }

    /// Metric inner product of two tangents at the same base point.
    pub fn inner(&self, u: &TangentVector, v: &TangentVector) -> Result<f64> {
        if u.base != v.base {
            return Err(Error::BaseMismatch);
        }
        Ok(self.inner_raw(&u.coords, &v.coords))
    }

    pub fn norm(&self, v: &TangentVector) -> f64 {
        self.norm_raw(&v.coords)
    }

    /// Parallel transport of `v` along the minimizing geodesic from its base
    /// point to `to`.
    pub fn parallel_transport(&self, v: &TangentVector, to: &Point) -> Result<TangentVector> {
        self.check_len(to.0.len())?;
        Ok(TangentVector {
            base: to.clone(),
            coords: self.transport_raw(&v.base.0, &to.0, &v.coords)?,
        })
    }

    /// Metric projection onto a geodesic ball: points inside are returned
    /// unchanged, points outside are pulled back along the geodesic from the
    /// center.
    pub fn project_ball(&self, ball: &GeodesicBall, x: &Point) -> Result<Point> {
        Ok(Point(self.project_ball_raw(ball, &x.0)?))
    }

    /// Uniform unit tangent vector at `x` (uniform on the unit sphere of the
    /// d-dimensional tangent space).
    pub fn sample_unit_tangent<R: Rng + ?Sized>(&self, x: &Point, rng: &mut R) -> TangentVector {
        TangentVector {
            base: x.clone(),
            coords: self.sample_unit_tangent_raw(&x.0, rng),
        }
    }

    /// Sample from the normalized Riemannian volume measure on `ball`.
    ///
    /// Direction is uniform on the tangent unit sphere at the center; the
    /// geodesic radius has density proportional to `sn_K(t)^(d-1)` on
    /// `[0, r]` and is drawn by rejection against its value at `t = r`.
    pub fn sample_uniform_ball<R: Rng + ?Sized>(&self, ball: &GeodesicBall, rng: &mut R) -> Point {
        let r = ball.radius;
        let k = self.curvature();
        let power = (self.dim - 1) as i32;
        let envelope = sn(k, r).powi(power);
        let t = loop {
            let t = r * rng.random::<f64>();
            let accept: f64 = rng.random();
            if accept * envelope <= sn(k, t).powi(power) {
                break t;
            }
        };
        let u = self.sample_unit_tangent_raw(&ball.center.0, rng);
        Point(self.exp_raw(&ball.center.0, &scale(&u, t)))
    }

    // ---- slice kernels ----------------------------------------------------

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                got: len,
            });
        }
        Ok(())
    }

    fn check_tangency(&self, base: &[f64], v: &[f64]) -> Result<()> {
        let scale_ref = norm(v).max(1.0) * norm(base).max(1.0);
        let defect = match self.kind {
            ManifoldKind::Sphere => dot(base, v),
            ManifoldKind::Hyperboloid => lorentz(base, v),
            ManifoldKind::Euclidean => 0.0,
        };
        if defect.abs() > INVARIANT_TOL * scale_ref {
            return Err(Error::InvalidTangent(format!("<x, v> = {defect:e}")));
        }
        Ok(())
    }

    pub(crate) fn renormalize(&self, x: &mut [f64]) {
        match self.kind {
            ManifoldKind::Sphere => {
                let n = norm(x);
                x.iter_mut().for_each(|c| *c /= n);
            }
            ManifoldKind::Hyperboloid => {
                x[0] = (1.0 + dot(&x[1..], &x[1..])).sqrt();
            }
            ManifoldKind::Euclidean => {}
        }
    }

    pub(crate) fn tangent_part(&self, base: &[f64], v: &[f64]) -> Vec<f64> {
        match self.kind {
            ManifoldKind::Sphere => lincomb(1.0, v, -dot(base, v), base),
            ManifoldKind::Hyperboloid => lincomb(1.0, v, lorentz(base, v), base),
            ManifoldKind::Euclidean => v.to_vec(),
        }
    }

    pub(crate) fn inner_raw(&self, u: &[f64], v: &[f64]) -> f64 {
        match self.kind {
            ManifoldKind::Hyperboloid => lorentz(u, v),
            _ => dot(u, v),
        }
    }

    pub(crate) fn norm_raw(&self, v: &[f64]) -> f64 {
        self.inner_raw(v, v).max(0.0).sqrt()
    }

    pub(crate) fn exp_raw(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        match self.kind {
            ManifoldKind::Euclidean => lincomb(1.0, x, 1.0, v),
            ManifoldKind::Sphere | ManifoldKind::Hyperboloid => {
                let t = self.norm_raw(v);
                if t == 0.0 {
                    return x.to_vec();
                }
                let (c, s) = if self.kind == ManifoldKind::Sphere {
                    (t.cos(), t.sin())
                } else {
                    (t.cosh(), t.sinh())
                };
                let mut y = lincomb(c, x, s / t, v);
                self.renormalize(&mut y);
                y
            }
        }
    }

    pub(crate) fn log_raw(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        match self.kind {
            ManifoldKind::Euclidean => Ok(sub(y, x)),
            ManifoldKind::Sphere => {
                let c = dot(x, y);
                let w = lincomb(1.0, y, -c, x);
                let wn = norm(&w);
                if wn == 0.0 {
                    if c < 0.0 {
                        return Err(Error::BeyondInjectivity {
                            length: PI,
                            radius: PI,
                        });
                    }
                    return Ok(vec![0.0; x.len()]);
                }
                let d = wn.atan2(c);
                if c < 0.0 && wn < 1e-12 {
                    return Err(Error::BeyondInjectivity {
                        length: d,
                        radius: PI,
                    });
                }
                let mut out = scale(&w, d / wn);
                // keep the result exactly tangent
                let defect = dot(x, &out);
                axpy(-defect, x, &mut out);
                Ok(out)
            }
            ManifoldKind::Hyperboloid => {
                let c = -lorentz(x, y);
                let w = lincomb(1.0, y, -c, x);
                let wn = lorentz(&w, &w).max(0.0).sqrt();
                if wn == 0.0 {
                    return Ok(vec![0.0; x.len()]);
                }
                let d = wn.asinh();
                let mut out = scale(&w, d / wn);
                let defect = lorentz(x, &out);
                axpy(defect, x, &mut out);
                Ok(out)
            }
        }
    }

    /// `acc += alpha * Log_x(y)` without temporaries. The sum is not
    /// re-projected onto the tangent space.
    pub(crate) fn log_accumulate(&self, x: &[f64], y: &[f64], alpha: f64, acc: &mut [f64]) -> Result<()> {
        let (c, wn) = match self.kind {
            ManifoldKind::Euclidean => {
                axpy(alpha, y, acc);
                axpy(-alpha, x, acc);
                return Ok(());
            }
            ManifoldKind::Sphere => {
                let c = dot(x, y);
                let wn2: f64 = x.iter().zip(y).map(|(a, b)| (b - c * a).powi(2)).sum();
                (c, wn2.sqrt())
            }
            ManifoldKind::Hyperboloid => {
                let c = -lorentz(x, y);
                let w0 = y[0] - c * x[0];
                let wn2: f64 = x[1..].iter().zip(&y[1..]).map(|(a, b)| (b - c * a).powi(2)).sum::<f64>() - w0 * w0;
                (c, wn2.max(0.0).sqrt())
            }
        };
        if wn == 0.0 {
            if self.kind == ManifoldKind::Sphere && c < 0.0 {
                return Err(Error::BeyondInjectivity {
                    length: PI,
                    radius: PI,
                });
            }
            return Ok(());
        }
        let d = if self.kind == ManifoldKind::Sphere {
            if c < 0.0 && wn < 1e-12 {
                return Err(Error::BeyondInjectivity {
                    length: wn.atan2(c),
                    radius: PI,
                });
            }
            wn.atan2(c)
        } else {
            wn.asinh()
        };
        let k = alpha * d / wn;
        for ((a, xi), yi) in acc.iter_mut().zip(x).zip(y) {
            *a += k * (yi - c * xi);
        }
        Ok(())
    }

    pub(crate) fn dist_raw(&self, x: &[f64], y: &[f64]) -> f64 {
        let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        match self.kind {
            ManifoldKind::Euclidean => sq.sqrt(),
            // chord length 2 sin(d/2), argument clamped to the asin domain
            ManifoldKind::Sphere => 2.0 * (0.5 * sq.sqrt()).clamp(0.0, 1.0).asin(),
            // Minkowski chord 2 sinh(d/2), clamped at zero
            ManifoldKind::Hyperboloid => {
                let d0 = x[0] - y[0];
                2.0 * (0.5 * (sq - 2.0 * d0 * d0).max(0.0).sqrt()).asinh()
            }
        }
    }

    pub(crate) fn transport_raw(&self, x: &[f64], y: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        if self.kind == ManifoldKind::Euclidean {
            return Ok(v.to_vec());
        }
        let u = self.log_raw(x, y)?;
        let d = self.norm_raw(&u);
        if d < 1e-15 {
            return Ok(self.tangent_part(y, v));
        }
        let e = scale(&u, 1.0 / d);
        let ev = self.inner_raw(&e, v);
        let mut out = v.to_vec();
        match self.kind {
            ManifoldKind::Sphere => {
                axpy(ev * (d.cos() - 1.0), &e, &mut out);
                axpy(-ev * d.sin(), x, &mut out);
            }
            ManifoldKind::Hyperboloid => {
                axpy(ev * (d.cosh() - 1.0), &e, &mut out);
                axpy(ev * d.sinh(), x, &mut out);
            }
            ManifoldKind::Euclidean => unreachable!(),
        }
        Ok(self.tangent_part(y, &out))
    }

    pub(crate) fn project_ball_raw(&self, ball: &GeodesicBall, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        let p = &ball.center.0;
        let d = self.dist_raw(p, x);
        if d <= ball.radius * (1.0 + 1e-12) {
            return Ok(x.to_vec());
        }
        let u = self.log_raw(p, x)?;
        let un = self.norm_raw(&u);
        Ok(self.exp_raw(p, &scale(&u, ball.radius / un)))
    }

    pub(crate) fn sample_unit_tangent_raw<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Vec<f64> {
        loop {
            let v = match self.kind {
                ManifoldKind::Euclidean => gaussian(self.dim, rng),
                ManifoldKind::Sphere => self.tangent_part(x, &gaussian(self.dim + 1, rng)),
                ManifoldKind::Hyperboloid => {
                    // isotropic at the origin, then carried over by an isometry
                    let mut w = vec![0.0];
                    w.extend(gaussian(self.dim, rng));
                    let o = self.origin();
                    self.transport_raw(&o.0, x, &w)
                        .expect("hyperboloid transport is total")
                }
            };
            let n = self.norm_raw(&v);
            if n > 1e-8 {
                return scale(&v, 1.0 / n);
            }
        }
    }
}

/// `sin(sqrt(K) t)/sqrt(K)`, `t`, or `sinh(sqrt(-K) t)/sqrt(-K)`.
pub fn sn(k: f64, t: f64) -> f64 {
    if k > 0.0 {
        let s = k.sqrt();
        (s * t).sin() / s
    } else if k < 0.0 {
        let s = (-k).sqrt();
        (s * t).sinh() / s
    } else {
        t
    }
}

fn gaussian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}
