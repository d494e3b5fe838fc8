//! Conformal 2-D Riemannian models.
//!
//! A model is a chart (a subset of the plane) carrying the metric
//! `g = lambda(p)^2 (dx^2 + dy^2)`. Three kinds are supported:
//!
//! * `euclidean` with `lambda = 1`,
//! * `poincare_disk(b)` on the open unit disk with
//!   `lambda = (2 / sqrt(b)) / (1 - |p|^2)`, constant curvature `-b`,
//! * `custom_conformal` with `lambda` given by an expression in `x, y`.
//!
//! Geodesics are integrated in the chart with an adaptive Dormand-Prince
//! 4(5) scheme on the first-order system for `(p, p')`, parametrized by
//! metric arclength. The velocity is renormalized to metric unit speed
//! after every accepted step.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geom::{v, Vec2};

/// Chart of a custom conformal model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Chart {
    Plane,
    UnitDisk,
}

#[derive(Clone, Debug)]
pub enum Kind {
    Euclidean,
    PoincareDisk { b: f64 },
    CustomConformal { lambda: Expr, chart: Chart },
}

/// Distance inside the unit disk at which the chart is treated as exhausted
/// (the ideal boundary for hyperbolic-like models).
pub const CHART_EDGE: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct ManifoldModel {
    kind: Kind,
}

impl ManifoldModel {
    pub fn euclidean() -> ManifoldModel {
        ManifoldModel { kind: Kind::Euclidean }
    }

    pub fn poincare_disk(b: f64) -> Result<ManifoldModel> {
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::invalid(format!(
                "poincare_disk curvature parameter b must be positive and finite, got {b}"
            )));
        }
        Ok(ManifoldModel { kind: Kind::PoincareDisk { b } })
    }

    pub fn custom_conformal(lambda_src: &str, chart: Chart) -> Result<ManifoldModel> {
        let lambda = Expr::parse(lambda_src, &["x", "y"])?;
        Ok(ManifoldModel {
            kind: Kind::CustomConformal { lambda, chart },
        })
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self.kind, Kind::Euclidean)
    }

    pub fn is_poincare(&self) -> bool {
        matches!(self.kind, Kind::PoincareDisk { .. })
    }

    /// Curvature parameter of a constant-curvature hyperbolic model.
    pub fn hyperbolic_b(&self) -> Option<f64> {
        match self.kind {
            Kind::PoincareDisk { b } => Some(b),
            _ => None,
        }
    }

    /// Does the chart extend to the whole plane?
    pub fn chart_is_plane(&self) -> bool {
        match &self.kind {
            Kind::Euclidean => true,
            Kind::PoincareDisk { .. } => false,
            Kind::CustomConformal { chart, .. } => *chart == Chart::Plane,
        }
    }

    pub fn chart_contains(&self, p: Vec2) -> bool {
        if self.chart_is_plane() {
            p.x.is_finite() && p.y.is_finite()
        } else {
            p.norm2() < (1.0 - CHART_EDGE) * (1.0 - CHART_EDGE)
        }
    }

    /// Conformal factor `lambda(p)`. Errors outside the chart.
    pub fn conformal_factor(&self, p: Vec2) -> Result<f64> {
        if !self.chart_contains(p) {
            return Err(Error::OutsideChart(p.x, p.y));
        }
        Ok(self.lambda_unchecked(p))
    }

    /// `lambda(p)` without the chart check; callers must guarantee membership.
    pub fn lambda_unchecked(&self, p: Vec2) -> f64 {
        match &self.kind {
            Kind::Euclidean => 1.0,
            Kind::PoincareDisk { b } => (2.0 / b.sqrt()) / (1.0 - p.norm2()),
            Kind::CustomConformal { lambda, .. } => lambda.eval(&[p.x, p.y]),
        }
    }

    /// Gradient of `log lambda`; closed form where available, central
    /// differences with step 1e-6 for custom factors.
    pub fn grad_log_lambda(&self, p: Vec2) -> Vec2 {
        match &self.kind {
            Kind::Euclidean => Vec2::ZERO,
            Kind::PoincareDisk { .. } => {
                let s = 2.0 / (1.0 - p.norm2());
                p * s
            }
            Kind::CustomConformal { lambda, .. } => {
                let h = 1e-6;
                let lx1 = lambda.eval(&[p.x + h, p.y]).ln();
                let lx0 = lambda.eval(&[p.x - h, p.y]).ln();
                let ly1 = lambda.eval(&[p.x, p.y + h]).ln();
                let ly0 = lambda.eval(&[p.x, p.y - h]).ln();
                v((lx1 - lx0) / (2.0 * h), (ly1 - ly0) / (2.0 * h))
            }
        }
    }

    /// Gaussian curvature `K = -lambda^{-2} laplacian(log lambda)` by a
    /// 5-point stencil with step `h_k` (default 1e-4).
    pub fn curvature(&self, p: Vec2, h_k: Option<f64>) -> Result<f64> {
        let h = h_k.unwrap_or(1e-4);
        if !(h > 0.0) {
            return Err(Error::invalid("curvature stencil step must be positive"));
        }
        if !self.chart_contains(p) {
            return Err(Error::OutsideChart(p.x, p.y));
        }
        if !self.chart_is_plane() {
            let margin = 1.0 - p.norm();
            if margin < 2.0 * h {
                return Err(Error::StencilAtChartBoundary(p.x, p.y));
            }
        }
        let ll = |q: Vec2| self.lambda_unchecked(q).ln();
        let c = ll(p);
        let lap = (ll(v(p.x + h, p.y)) + ll(v(p.x - h, p.y)) + ll(v(p.x, p.y + h))
            + ll(v(p.x, p.y - h))
            - 4.0 * c)
            / (h * h);
        let lam = self.lambda_unchecked(p);
        Ok(-lap / (lam * lam))
    }

    /// Chart vector of metric unit length pointing at chart angle `theta`.
    pub fn unit_direction(&self, p: Vec2, theta: f64) -> Result<Vec2> {
        let lam = self.conformal_factor(p)?;
        Ok(Vec2::from_angle(theta) * (1.0 / lam))
    }

    /// Metric speed `lambda(p) |v|` of a chart velocity.
    pub fn metric_speed(&self, p: Vec2, vel: Vec2) -> f64 {
        self.lambda_unchecked(p) * vel.norm()
    }

    /// Closed-form metric distance, when the model has one.
    pub fn distance(&self, p: Vec2, q: Vec2) -> Option<f64> {
        match self.kind {
            Kind::Euclidean => Some(p.dist(q)),
            Kind::PoincareDisk { b } => Some(hyperbolic_distance(p, q) / b.sqrt()),
            Kind::CustomConformal { .. } => None,
        }
    }

    /// Metric length of the chart segment from `p` to `q` (composite
    /// Simpson on `lambda`). An upper bound for the metric distance; used
    /// as a distance surrogate where no closed form exists.
    pub fn chart_segment_length(&self, p: Vec2, q: Vec2) -> f64 {
        let n = 64;
        let d = q - p;
        let len = d.norm();
        if len == 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for i in 0..n {
            let a = i as f64 / n as f64;
            let b = (i + 1) as f64 / n as f64;
            let m = 0.5 * (a + b);
            let f = |t: f64| self.lambda_unchecked(p + d * t);
            acc += (f(a) + 4.0 * f(m) + f(b)) / 6.0;
        }
        acc * len / n as f64
    }

    /// Trace the unit-speed geodesic from `p` with initial chart velocity
    /// `vel` (must be metric unit) for metric time `t_max`.
    pub fn trace_geodesic(
        &self,
        p: Vec2,
        vel: Vec2,
        t_max: f64,
        opts: &TraceOptions,
    ) -> Result<GeodesicPath> {
        if !self.chart_contains(p) {
            return Err(Error::OutsideChart(p.x, p.y));
        }
        if !(t_max > 0.0) {
            return Err(Error::invalid("t_max must be positive"));
        }
        let speed = self.metric_speed(p, vel);
        if (speed - 1.0).abs() > 1e-8 {
            return Err(Error::NotUnitSpeed(speed));
        }
        Ok(self.integrate(p, vel, t_max, opts))
    }

    /// Geodesic ODE right-hand side in the chart:
    /// `x'' = -phi_x (x'^2 - y'^2) - 2 phi_y x' y'`,
    /// `y'' =  phi_y (x'^2 - y'^2) - 2 phi_x x' y'`,
    /// with `phi = log lambda`.
    fn accel(&self, p: Vec2, vel: Vec2) -> Vec2 {
        let g = self.grad_log_lambda(p);
        let d = vel.x * vel.x - vel.y * vel.y;
        let c = 2.0 * vel.x * vel.y;
        v(-g.x * d - g.y * c, g.y * d - g.x * c)
    }

    fn integrate(&self, p0: Vec2, v0: Vec2, t_max: f64, opts: &TraceOptions) -> GeodesicPath {
        // Dormand-Prince 5(4) tableau.
        const A: [[f64; 6]; 6] = [
            [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
            [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
            [
                19372.0 / 6561.0,
                -25360.0 / 2187.0,
                64448.0 / 6561.0,
                -212.0 / 729.0,
                0.0,
                0.0,
            ],
            [
                9017.0 / 3168.0,
                -355.0 / 33.0,
                46732.0 / 5247.0,
                49.0 / 176.0,
                -5103.0 / 18656.0,
                0.0,
            ],
            [
                35.0 / 384.0,
                0.0,
                500.0 / 1113.0,
                125.0 / 192.0,
                -2187.0 / 6784.0,
                11.0 / 84.0,
            ],
        ];
        const B5: [f64; 7] = [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
            0.0,
        ];
        const B4: [f64; 7] = [
            5179.0 / 57600.0,
            0.0,
            7571.0 / 16695.0,
            393.0 / 640.0,
            -92097.0 / 339200.0,
            187.0 / 2100.0,
            1.0 / 40.0,
        ];

        let rhs = |p: Vec2, vel: Vec2| (vel, self.accel(p, vel));

        let mut t = 0.0;
        let mut p = p0;
        let mut vel = v0;
        let mut samples = vec![PathSample { t, point: p, velocity: vel }];
        let mut h = opts.init_step.min(t_max).min(opts.max_step);
        let mut terminated_early = false;
        let h_min = 1e-14_f64.max(t_max * 1e-15);

        'outer: while t < t_max {
            if h > t_max - t {
                h = t_max - t;
            }
            let mut kp = [Vec2::ZERO; 7];
            let mut kv = [Vec2::ZERO; 7];
            let (dp, dv) = rhs(p, vel);
            kp[0] = dp;
            kv[0] = dv;
            let mut rejected_to_exit = false;
            for i in 0..6 {
                let mut sp = Vec2::ZERO;
                let mut sv = Vec2::ZERO;
                for j in 0..=i {
                    sp = sp + kp[j] * A[i][j];
                    sv = sv + kv[j] * A[i][j];
                }
                let q = p + sp * h;
                let w = vel + sv * h;
                if !self.chart_contains(q) {
                    rejected_to_exit = true;
                    break;
                }
                let (dq, dw) = rhs(q, w);
                kp[i + 1] = dq;
                kv[i + 1] = dw;
            }
            if rejected_to_exit {
                h *= 0.5;
                if h < h_min {
                    terminated_early = true;
                    break 'outer;
                }
                continue;
            }
            let mut p5 = Vec2::ZERO;
            let mut v5 = Vec2::ZERO;
            let mut p4 = Vec2::ZERO;
            let mut v4 = Vec2::ZERO;
            for i in 0..7 {
                p5 = p5 + kp[i] * B5[i];
                v5 = v5 + kv[i] * B5[i];
                p4 = p4 + kp[i] * B4[i];
                v4 = v4 + kv[i] * B4[i];
            }
            let pn = p + p5 * h;
            let vn = vel + v5 * h;
            if !self.chart_contains(pn) {
                h *= 0.5;
                if h < h_min {
                    terminated_early = true;
                    break 'outer;
                }
                continue;
            }
            let ep = (p5 - p4) * h;
            let ev = (v5 - v4) * h;
            let scale = opts.abs_tol
                + opts.rel_tol * (p.norm().max(pn.norm()) + vel.norm().max(vn.norm())).max(1.0);
            let err = (ep.norm2() + ev.norm2()).sqrt() / scale;
            if err <= 1.0 {
                t += h;
                p = pn;
                // Renormalize to metric unit speed; exact invariant of the flow.
                let sp = self.metric_speed(p, vn);
                vel = vn * (1.0 / sp);
                samples.push(PathSample { t, point: p, velocity: vel });
                let grow = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-0.2) };
                h = (h * grow.clamp(0.2, 5.0)).min(opts.max_step);
            } else {
                h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                if h < h_min {
                    terminated_early = true;
                    break 'outer;
                }
            }
        }

        GeodesicPath { samples, t_max, terminated_early }
    }
}

/// Hyperbolic distance in the curvature -1 Poincare disk.
pub fn hyperbolic_distance(p: Vec2, q: Vec2) -> f64 {
    let num = 2.0 * p.dist2(q);
    let den = (1.0 - p.norm2()) * (1.0 - q.norm2());
    let x = 1.0 + num / den;
    // acosh with a guard against roundoff just below 1
    x.max(1.0).acosh()
}

#[derive(Clone, Copy, Debug)]
pub struct TraceOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub init_step: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: f64::INFINITY,
            init_step: 1e-3,
        }
    }
}

impl TraceOptions {
    pub fn with_max_step(step: f64) -> TraceOptions {
        TraceOptions { max_step: step, ..TraceOptions::default() }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PathSample {
    pub t: f64,
    pub point: Vec2,
    pub velocity: Vec2,
}

/// Result of a geodesic trace. `terminated_early` marks chart exhaustion
/// (the path reached the ideal boundary before `t_max`).
#[derive(Clone, Debug)]
pub struct GeodesicPath {
    pub samples: Vec<PathSample>,
    pub t_max: f64,
    pub terminated_early: bool,
}

impl GeodesicPath {
    pub fn end(&self) -> &PathSample {
        self.samples.last().expect("path has at least the initial sample")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn conformal_factor_values() {
        let e = ManifoldModel::euclidean();
        assert_eq!(e.conformal_factor(v(3.0, -4.0)).unwrap(), 1.0);

        let h = ManifoldModel::poincare_disk(1.0).unwrap();
        assert!((h.conformal_factor(Vec2::ZERO).unwrap() - 2.0).abs() < 1e-15);
        assert!((h.conformal_factor(v(0.5, 0.0)).unwrap() - 8.0 / 3.0).abs() < 1e-14);
        assert!(matches!(
            h.conformal_factor(v(1.0, 0.0)),
            Err(Error::OutsideChart(..))
        ));
    }

    #[test]
    fn curvature_matches_model() {
        let e = ManifoldModel::euclidean();
        assert!(e.curvature(v(0.3, 0.7), None).unwrap().abs() < 1e-8);

        let h1 = ManifoldModel::poincare_disk(1.0).unwrap();
        assert!((h1.curvature(v(0.3, 0.4), None).unwrap() + 1.0).abs() < 1e-6);

        let h4 = ManifoldModel::poincare_disk(4.0).unwrap();
        assert!((h4.curvature(Vec2::ZERO, None).unwrap() + 4.0).abs() < 1e-6);
    }

    #[test]
    fn curvature_is_constant_at_random_points() {
        let h = ManifoldModel::poincare_disk(2.5).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let r = 0.9 * rng.gen::<f64>().sqrt();
            let a = TAU_ * rng.gen::<f64>();
            let p = Vec2::from_angle(a) * r;
            let k = h.curvature(p, None).unwrap();
            assert!((k + 2.5).abs() < 1e-5, "K={k} at {p:?}");
        }
    }

    const TAU_: f64 = std::f64::consts::TAU;

    #[test]
    fn custom_factor_reproduces_poincare() {
        let c = ManifoldModel::custom_conformal("2/(1-x^2-y^2)", Chart::UnitDisk).unwrap();
        let h = ManifoldModel::poincare_disk(1.0).unwrap();
        for p in [Vec2::ZERO, v(0.5, 0.0), v(-0.2, 0.6)] {
            assert!(
                (c.conformal_factor(p).unwrap() - h.conformal_factor(p).unwrap()).abs() < 1e-12
            );
            let gc = c.grad_log_lambda(p);
            let gh = h.grad_log_lambda(p);
            assert!(gc.dist(gh) < 1e-8, "{gc:?} vs {gh:?}");
        }
        assert!((c.curvature(v(0.3, 0.4), None).unwrap() + 1.0).abs() < 1e-5);
    }

    #[test]
    fn unit_direction_has_metric_unit_speed() {
        let h = ManifoldModel::poincare_disk(1.0).unwrap();
        let p = Vec2::ZERO;
        let d = h.unit_direction(p, 0.0).unwrap();
        assert!(d.dist(v(0.5, 0.0)) < 1e-15);
        let p2 = v(0.3, -0.2);
        for theta in [0.0, 1.0, 2.5, 4.0] {
            let u = h.unit_direction(p2, theta).unwrap();
            assert!((h.metric_speed(p2, u) - 1.0).abs() < 1e-14);
        }
        let e = ManifoldModel::euclidean();
        let u = e.unit_direction(v(5.0, 5.0), std::f64::consts::FRAC_PI_2).unwrap();
        assert!(u.dist(v(0.0, 1.0)) < 1e-15);
    }

    #[test]
    fn euclidean_geodesics_are_straight() {
        let e = ManifoldModel::euclidean();
        let path = e
            .trace_geodesic(v(1.0, 2.0), v(0.6, 0.8), 5.0, &TraceOptions::default())
            .unwrap();
        let end = path.end();
        assert!(end.point.dist(v(1.0 + 3.0, 2.0 + 4.0)) < 1e-9);
        assert!(!path.terminated_early);
    }

    #[test]
    fn poincare_radial_geodesic_reaches_tanh() {
        let h = ManifoldModel::poincare_disk(1.0).unwrap();
        let path = h
            .trace_geodesic(Vec2::ZERO, v(0.5, 0.0), 1.0, &TraceOptions::default())
            .unwrap();
        let end = path.end();
        let expect = 0.5_f64.tanh(); // tanh(t/2) at t = 1
        assert!(
            (end.point.x - expect).abs() < 1e-6,
            "x = {}, want {}",
            end.point.x,
            expect
        );
        assert!(end.point.y.abs() < 1e-9);
    }

    #[test]
    fn diameter_geodesics_stay_on_the_diameter() {
        let h = ManifoldModel::poincare_disk(1.0).unwrap();
        let p = v(0.3, 0.0);
        let u = h.unit_direction(p, 0.0).unwrap();
        let path = h.trace_geodesic(p, u, 2.0, &TraceOptions::default()).unwrap();
        for s in &path.samples {
            assert!(s.point.y.abs() < 1e-9);
        }
    }

    #[test]
    fn unit_speed_is_preserved() {
        let h = ManifoldModel::poincare_disk(3.0).unwrap();
        let p = v(0.2, 0.1);
        let u = h.unit_direction(p, 0.8).unwrap();
        let path = h.trace_geodesic(p, u, 3.0, &TraceOptions::default()).unwrap();
        for s in &path.samples {
            assert!((h.metric_speed(s.point, s.velocity) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn reversibility() {
        let h = ManifoldModel::poincare_disk(1.0).unwrap();
        let p = v(0.25, -0.15);
        let t = 1.7;
        let u = h.unit_direction(p, 1.1).unwrap();
        let fwd = h.trace_geodesic(p, u, t, &TraceOptions::default()).unwrap();
        let end = *fwd.end();
        let back = h
            .trace_geodesic(end.point, -end.velocity, t, &TraceOptions::default())
            .unwrap();
        let err = back.end().point.dist(p);
        assert!(err < 1e-6 * t, "reversibility error {err}");
    }

    #[test]
    fn chart_exit_terminates_early() {
        let h = ManifoldModel::poincare_disk(1.0).unwrap();
        // Radial escape: reaches the ideal boundary in infinite time, so the
        // integrator must stop at the chart edge with the early flag set.
        let path = h
            .trace_geodesic(Vec2::ZERO, v(0.5, 0.0), 60.0, &TraceOptions::default())
            .unwrap();
        assert!(path.terminated_early || path.end().point.norm() > 1.0 - 1e-6);
        assert!(path.end().point.norm() < 1.0);
    }

    #[test]
    fn hyperbolic_distance_closed_form() {
        // d(0, r) = 2 artanh(r) along a diameter.
        let r: f64 = 0.5;
        assert!((hyperbolic_distance(Vec2::ZERO, v(r, 0.0)) - 2.0 * r.atanh()).abs() < 1e-12);
        assert_eq!(hyperbolic_distance(v(0.1, 0.2), v(0.1, 0.2)), 0.0);
    }

    #[test]
    fn rejects_non_unit_speed() {
        let e = ManifoldModel::euclidean();
        assert!(matches!(
            e.trace_geodesic(Vec2::ZERO, v(2.0, 0.0), 1.0, &TraceOptions::default()),
            Err(Error::NotUnitSpeed(_))
        ));
    }
}
