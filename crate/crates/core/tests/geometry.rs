mod common;

use std::f64::consts::PI;

use geoconsensus::constants::{c1, c2, log_distortion_factors, CurvatureContext};
use geoconsensus::manifold::sn;
use geoconsensus::seed::rng_from_seed;
use geoconsensus::{ManifoldChart, ManifoldKind};
use proptest::prelude::*;

fn max_step(m: &ManifoldChart) -> f64 {
    match m.kind() {
        ManifoldKind::Sphere => 0.9 * PI,
        ManifoldKind::Hyperboloid => 3.0,
        ManifoldKind::Euclidean => 10.0,
    }
}

fn chart_strategy() -> impl Strategy<Value = ManifoldChart> {
    (0usize..3, 1usize..16).prop_map(|(k, d)| match k {
        0 => ManifoldChart::sphere(d),
        1 => ManifoldChart::hyperboloid(d),
        _ => ManifoldChart::euclidean(d),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn exp_log_roundtrip(m in chart_strategy(), seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let ball = m.ball(m.origin(), 1.0).unwrap();
        let x = m.sample_uniform_ball(&ball, &mut rng);
        let v = common::tangent(&m, &x, max_step(&m), &mut rng);
        let y = m.exp(&v).unwrap();
        let back = m.log(&x, &y).unwrap();
        prop_assert!(common::close(back.coords(), v.coords()) < 1e-8);
        prop_assert!((m.dist(&x, &y) - m.norm(&v)).abs() < 1e-10);
    }

    #[test]
    fn transport_preserves_inner_products(m in chart_strategy(), seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let ball = m.ball(m.origin(), 1.0).unwrap();
        let x = m.sample_uniform_ball(&ball, &mut rng);
        let y = m.sample_uniform_ball(&ball, &mut rng);
        let u = common::tangent(&m, &x, 2.0, &mut rng);
        let v = common::tangent(&m, &x, 2.0, &mut rng);
        let pu = m.parallel_transport(&u, &y).unwrap();
        let pv = m.parallel_transport(&v, &y).unwrap();
        let before = m.inner(&u, &v).unwrap();
        let after = m.inner(&pu, &pv).unwrap();
        prop_assert!((before - after).abs() < 1e-9);
        prop_assert!((m.norm(&pu) - m.norm(&u)).abs() < 1e-9);
    }

    #[test]
    fn log_along_geodesic_transports_to_minus_log(m in chart_strategy(), seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let ball = m.ball(m.origin(), 1.0).unwrap();
        let x = m.sample_uniform_ball(&ball, &mut rng);
        let y = m.sample_uniform_ball(&ball, &mut rng);
        let v = m.log(&x, &y).unwrap();
        let w = m.log(&y, &x).unwrap();
        let moved = m.parallel_transport(&v, &y).unwrap();
        prop_assert!(common::close(moved.coords(), w.scaled(-1.0).coords()) < 1e-9);
    }

    #[test]
    fn projection_is_idempotent_and_feasible(m in chart_strategy(), seed in any::<u64>(), r in 0.1f64..0.7) {
        let mut rng = rng_from_seed(seed);
        let ball = m.ball(m.origin(), r).unwrap();
        let wide = m.ball(m.origin(), 1.5).unwrap();
        let x = m.sample_uniform_ball(&wide, &mut rng);
        let p = m.project_ball(&ball, &x).unwrap();
        prop_assert!(m.dist(ball.center(), &p) <= r * (1.0 + 1e-12));
        let q = m.project_ball(&ball, &p).unwrap();
        prop_assert!(m.dist(&p, &q) < 1e-12);
        if m.dist(ball.center(), &x) <= r {
            prop_assert!(m.dist(&p, &x) < 1e-12);
        }
    }

    #[test]
    fn projection_makes_obtuse_angle(m in chart_strategy(), seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let ball = m.ball(m.origin(), 0.5).unwrap();
        let wide = m.ball(m.origin(), 1.4).unwrap();
        let y = m.sample_uniform_ball(&wide, &mut rng);
        let p = m.project_ball(&ball, &y).unwrap();
        let inside = m.sample_uniform_ball(&ball, &mut rng);
        let a = m.log(&p, &y).unwrap();
        let b = m.log(&p, &inside).unwrap();
        prop_assert!(m.inner(&a, &b).unwrap() <= 1e-10);
    }
}

/// Slack of the upper and lower comparison inequalities at vertex `b`, with
/// the lower coefficient evaluated at `lower_arg`.
fn comparison_slack(m: &ManifoldChart, p: &[geoconsensus::Point], lower_arg: Option<f64>) -> (f64, f64) {
    let (a, b, c) = (&p[0], &p[1], &p[2]);
    let dab = m.dist(a, b);
    let dbc = m.dist(b, c);
    let dac = m.dist(a, c);
    let ip = m.inner(&m.log(b, a).unwrap(), &m.log(b, c).unwrap()).unwrap();
    let tail = dab * dab - 2.0 * ip;
    let up = c1(m.k_min(), dab) * dbc * dbc + tail - dac * dac;
    let lo = dac * dac - c2(m.k_max(), lower_arg.unwrap_or(dab)).unwrap() * dbc * dbc - tail;
    (up, lo)
}

#[test]
fn comparison_upper_bound_holds_everywhere() {
    for (m, ball) in common::charts(15) {
        let mut rng = rng_from_seed(11);
        for _ in 0..1000 {
            let p = common::points(&m, &ball, 3, &mut rng);
            let (up, _) = comparison_slack(&m, &p, None);
            assert!(up >= -1e-9, "{:?}: {up}", m.kind());
        }
    }
}

#[test]
fn comparison_lower_bound_with_domain_diameter() {
    for (m, ball) in common::charts(15) {
        let mut rng = rng_from_seed(12);
        for _ in 0..1000 {
            let p = common::points(&m, &ball, 3, &mut rng);
            let (_, lo) = comparison_slack(&m, &p, Some(2.0 * ball.radius()));
            assert!(lo >= -1e-9, "{:?}: {lo}", m.kind());
        }
    }
}

#[test]
fn comparison_lower_bound_with_side_length_fails_on_sphere() {
    // d(a,b) -> 0 with a right angle at b and d(b,c) = 1.5
    let m = ManifoldChart::sphere(2);
    let b = m.origin();
    let e1 = m.tangent(&b, vec![0.0, 1.0, 0.0]).unwrap();
    let e2 = m.tangent(&b, vec![0.0, 0.0, 1.0]).unwrap();
    let a = m.exp(&e1.scaled(0.01)).unwrap();
    let c = m.exp(&e2.scaled(1.5)).unwrap();
    let (_, lo) = comparison_slack(&m, &[a.clone(), b.clone(), c.clone()], None);
    assert!(lo < -1e-6, "{lo}");
    let (_, lo) = comparison_slack(&m, &[a, b, c], Some(PI / 2.0));
    assert!(lo >= 0.0);
}

#[test]
fn log_distortion_sandwich_with_default_constants() {
    for (m, ball) in common::charts(15) {
        let scale = m.k_min().abs().max(m.k_max());
        let mut ctx = CurvatureContext::new(m.k_min(), m.k_max(), 2.0 * ball.radius(), 2, 0.5);
        ctx.c3 = scale;
        ctx.c4 = scale;
        let (lo, hi) = log_distortion_factors(&ctx);
        let mut rng = rng_from_seed(13);
        for _ in 0..500 {
            let p = common::points(&m, &ball, 3, &mut rng);
            let u = m.log(&p[0], &p[1]).unwrap();
            let v = m.log(&p[0], &p[2]).unwrap();
            let diff = m.tangent(&p[0], u.coords().iter().zip(v.coords()).map(|(a, b)| a - b).collect()).unwrap();
            let len = m.norm(&diff);
            let d = m.dist(&p[1], &p[2]);
            assert!(len >= lo * d - 1e-12, "{:?}", m.kind());
            assert!(len <= hi * d + 1e-12, "{:?}", m.kind());
        }
    }
}

/// `P(T <= t) = int_0^t sn^(d-1) / int_0^r sn^(d-1)` by composite Simpson.
fn radial_cdf(k: f64, d: usize, r: f64, t: f64) -> f64 {
    let integral = |upper: f64| {
        let n = 2000;
        let h = upper / n as f64;
        let f = |s: f64| sn(k, s).powi(d as i32 - 1);
        let mut acc = f(0.0) + f(upper);
        for j in 1..n {
            acc += if j % 2 == 1 { 4.0 } else { 2.0 } * f(j as f64 * h);
        }
        acc * h / 3.0
    };
    integral(t) / integral(r)
}

#[test]
fn uniform_ball_radius_matches_volume_density() {
    let n = 100_000;
    for (m, r) in [
        (ManifoldChart::sphere(3), PI / 4.0),
        (ManifoldChart::hyperboloid(3), 1.5),
        (ManifoldChart::euclidean(3), 1.0),
        (ManifoldChart::sphere(1), 1.0),
    ] {
        let ball = m.ball(m.origin(), r).unwrap();
        let mut rng = rng_from_seed(14);
        let mut radii: Vec<f64> = (0..n)
            .map(|_| m.dist(ball.center(), &m.sample_uniform_ball(&ball, &mut rng)))
            .collect();
        radii.sort_by(f64::total_cmp);
        // CDF on a grid; the empirical CDF is a step function between grid points
        let grid = 400;
        let mut ks: f64 = 0.0;
        for g in 0..=grid {
            let t = r * g as f64 / grid as f64;
            let below = radii.partition_point(|&x| x <= t) as f64 / n as f64;
            ks = ks.max((below - radial_cdf(m.curvature(), m.dim(), r, t)).abs());
        }
        assert!(ks < 0.02, "{:?} d={}: KS {ks}", m.kind(), m.dim());
        assert!(radii.last().copied().unwrap() <= r * (1.0 + 1e-12));
    }
}

#[test]
fn unit_tangents_are_isotropic() {
    let n = 40_000;
    for (m, _) in common::charts(4) {
        let mut rng = rng_from_seed(15);
        let x = m.sample_uniform_ball(&m.ball(m.origin(), 0.6).unwrap(), &mut rng);
        let basis = geoconsensus::online::tangent_basis(&m, x.coords());
        let d = m.dim();
        let mut mean = vec![0.0; d];
        let mut cov = vec![vec![0.0; d]; d];
        for _ in 0..n {
            let u = m.sample_unit_tangent(&x, &mut rng);
            assert!((m.norm(&u) - 1.0).abs() < 1e-12);
            let c: Vec<f64> = basis
                .iter()
                .map(|e| m.inner(&u, &m.tangent(&x, e.clone()).unwrap()).unwrap())
                .collect();
            for i in 0..d {
                mean[i] += c[i] / n as f64;
                for j in 0..d {
                    cov[i][j] += c[i] * c[j] / n as f64;
                }
            }
        }
        // sd of a coordinate mean is 1/sqrt(d n) = 0.0025
        for i in 0..d {
            assert!(mean[i].abs() < 0.0125, "{:?} mean {}", m.kind(), mean[i]);
            for j in 0..d {
                let want = if i == j { 1.0 / d as f64 } else { 0.0 };
                assert!((cov[i][j] - want).abs() < 0.01, "{:?} cov[{i}][{j}] = {}", m.kind(), cov[i][j]);
            }
        }
    }
}
