//! Hitting radius of geodesic rays against the domain boundary.
//!
//! The radius at `(p, theta)` is the smaller of the two exit times of the
//! complete geodesic through `p` with direction angle `theta`, so it is
//! symmetric under `theta -> theta + pi` by construction (the angle is
//! folded into `[0, pi)` before casting). Flat and `poincare_disk` models
//! are cast analytically; custom conformal models integrate the geodesic
//! and locate the first boundary crossing by bisection on a cubic dense
//! interpolant of the traced path.

use crate::domain::{BoundarySegment, DomainSpec};
use crate::error::{Error, Result};
use crate::geom::{
    angle_in_sweep, circle_circle, line_circle, ray_curve_hits, ChartCurve, RayProbe, Vec2, PI, TAU,
};
use crate::manifold::{hyperbolic_distance, Kind, PathSample, TraceOptions};

#[derive(Clone, Copy, Debug)]
pub struct HitOptions {
    /// Cap on the traced-path search; analytic casts are exact and ignore it
    /// except to report escapes.
    pub t_max: f64,
    /// Only segments on the distinguished boundary portion are opaque.
    pub gamma_only: bool,
}

impl HitOptions {
    pub fn new(t_max: f64) -> HitOptions {
        HitOptions { t_max, gamma_only: false }
    }

    pub fn for_domain(dom: &DomainSpec) -> HitOptions {
        HitOptions::new(dom.auto_t_max())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RayHit {
    /// Metric hitting radius; `INFINITY` when both ray halves escape.
    pub r: f64,
    /// The reported value is a lower bound cut off by `t_max`.
    pub capped: bool,
    pub infinite: bool,
}

#[derive(Clone, Copy, Debug)]
struct CastResult {
    t: f64,
    capped: bool,
    degenerate: bool,
}

impl CastResult {
    fn escape() -> CastResult {
        CastResult { t: f64::INFINITY, capped: false, degenerate: false }
    }
}

/// Both half-casts of the folded direction, retried with a slight angular
/// offset on tangency or vertex grazing.
fn fold_casts(
    dom: &DomainSpec,
    p: Vec2,
    theta: f64,
    opts: &HitOptions,
) -> Result<(CastResult, CastResult)> {
    if !dom.contains(p) {
        return Err(Error::NotInterior(p.x, p.y));
    }
    let theta_f = theta.rem_euclid(PI);
    let mut pair = (CastResult::escape(), CastResult::escape());
    for attempt in 0..4 {
        let th = theta_f + attempt as f64 * 1e-7;
        let d = Vec2::from_angle(th);
        let fwd = cast_dir(dom, p, d, opts)?;
        let bwd = cast_dir(dom, p, -d, opts)?;
        let clean = !(fwd.degenerate || bwd.degenerate);
        pair = (fwd, bwd);
        if clean {
            break;
        }
    }
    Ok(pair)
}

/// Two-sided hitting radius at an interior point: the smaller of the two
/// half-cast exit times.
pub fn hitting_radius(dom: &DomainSpec, p: Vec2, theta: f64, opts: &HitOptions) -> Result<RayHit> {
    let (fwd, bwd) = fold_casts(dom, p, theta, opts)?;
    let (capped, r) = if fwd.t <= bwd.t { (fwd.capped, fwd.t) } else { (bwd.capped, bwd.t) };
    Ok(RayHit { r, capped, infinite: !r.is_finite() })
}

/// Full chord length of the maximal geodesic through `p` at angle `theta`:
/// the sum of the two half-cast exit times.
pub fn chord_length(dom: &DomainSpec, p: Vec2, theta: f64, opts: &HitOptions) -> Result<RayHit> {
    let (fwd, bwd) = fold_casts(dom, p, theta, opts)?;
    let l = fwd.t + bwd.t;
    Ok(RayHit { r: l, capped: fwd.capped || bwd.capped, infinite: !l.is_finite() })
}

/// One-sided hitting radius: exit time of the half-geodesic from `p` in
/// direction `theta` alone. Not folded, so opposite directions may differ.
pub fn forward_hitting_radius(
    dom: &DomainSpec,
    p: Vec2,
    theta: f64,
    opts: &HitOptions,
) -> Result<RayHit> {
    if !dom.contains(p) {
        return Err(Error::NotInterior(p.x, p.y));
    }
    let mut last = CastResult::escape();
    for attempt in 0..4 {
        let th = theta + attempt as f64 * 1e-7;
        let d = Vec2::from_angle(th);
        last = cast_dir(dom, p, d, opts)?;
        if !last.degenerate {
            break;
        }
    }
    Ok(RayHit { r: last.t, capped: last.capped, infinite: !last.t.is_finite() })
}

fn opaque<'a>(
    dom: &'a DomainSpec,
    gamma_only: bool,
) -> impl Iterator<Item = &'a BoundarySegment> + 'a {
    dom.all_segments().filter(move |s| !gamma_only || s.gamma)
}

fn cast_dir(dom: &DomainSpec, p: Vec2, d: Vec2, opts: &HitOptions) -> Result<CastResult> {
    match dom.model().kind() {
        Kind::Euclidean => Ok(cast_flat(dom, p, d, opts)),
        Kind::PoincareDisk { b } => Ok(cast_poincare(dom, p, d, *b, opts)),
        Kind::CustomConformal { .. } => cast_traced(dom, p, d, opts),
    }
}

fn cast_flat(dom: &DomainSpec, p: Vec2, d: Vec2, opts: &HitOptions) -> CastResult {
    let ray = RayProbe { o: p, d, t_lo: 1e-13, t_hi: f64::INFINITY };
    let mut hits = Vec::new();
    let mut degenerate = false;
    for s in opaque(dom, opts.gamma_only) {
        ray_curve_hits(&s.curve, &ray, &mut hits, &mut degenerate);
    }
    let t = hits.iter().map(|h| h.t).fold(f64::INFINITY, f64::min);
    CastResult { t, capped: false, degenerate }
}

fn cast_poincare(dom: &DomainSpec, p: Vec2, d: Vec2, b: f64, opts: &HitOptions) -> CastResult {
    let mut degenerate = false;
    let q_best = if p.cross(d).abs() < 1e-12 {
        // Diameter carrier: a straight chart ray.
        let ray = RayProbe { o: p, d, t_lo: 1e-13, t_hi: f64::INFINITY };
        let mut hits = Vec::new();
        for s in opaque(dom, opts.gamma_only) {
            ray_curve_hits(&s.curve, &ray, &mut hits, &mut degenerate);
        }
        let pd = p.dot(d);
        let t_exit = -pd + (pd * pd + 1.0 - p.norm2()).sqrt();
        hits.iter()
            .filter(|h| h.t < t_exit - 1e-12)
            .min_by(|a, b| a.t.total_cmp(&b.t))
            .map(|h| p + d * h.t)
    } else {
        // Orthocircle carrier through p tangent to d: c . d = p . d and
        // c . p = (1 + |p|^2) / 2.
        let c = match crate::geom::solve2(d, p.dot(d), p, (1.0 + p.norm2()) / 2.0) {
            Some(c) => c,
            None => return CastResult::escape(),
        };
        let rho = (c - p).norm();
        let omega = if d.dot((p - c).perp()) >= 0.0 { 1.0 } else { -1.0 };
        let phi_p = (p - c).angle();
        let s_of = |q: Vec2| ((q - c).angle() - phi_p) * omega;
        let s_norm = |raw: f64| raw.rem_euclid(TAU);

        let mut exit_degen = false;
        let exits = circle_circle(c, rho, Vec2::ZERO, 1.0, &mut exit_degen);
        let s_exit = exits
            .iter()
            .map(|e| s_norm(s_of(*e)))
            .fold(TAU, f64::min);

        let mut best: Option<(f64, Vec2)> = None;
        let mut consider = |q: Vec2, degen: &mut bool| {
            if q.norm() > 1.0 - 1e-12 {
                return;
            }
            let s = s_norm(s_of(q));
            if s < 1e-12 || s > s_exit - 1e-12 {
                return;
            }
            let _ = degen;
            if best.map(|(bs, _)| s < bs).unwrap_or(true) {
                best = Some((s, q));
            }
        };
        for seg in opaque(dom, opts.gamma_only) {
            carrier_circle_curve_hits(c, rho, &seg.curve, &mut degenerate, |q, dg| {
                consider(q, dg)
            });
        }
        best.map(|(_, q)| q)
    };
    match q_best {
        Some(q) => CastResult {
            t: hyperbolic_distance(p, q) / b.sqrt(),
            capped: false,
            degenerate,
        },
        None => CastResult { t: f64::INFINITY, capped: false, degenerate },
    }
}

/// Intersections of the carrier circle with one boundary curve, streamed to
/// `sink` in no particular order.
fn carrier_circle_curve_hits(
    c: Vec2,
    rho: f64,
    curve: &ChartCurve,
    degenerate: &mut bool,
    mut sink: impl FnMut(Vec2, &mut bool),
) {
    match curve {
        ChartCurve::Seg { a, b } => {
            let ab = *b - *a;
            let len = ab.norm();
            let dir = ab * (1.0 / len);
            for (t, q) in line_circle(*a, dir, c, rho, degenerate) {
                let u = t / len;
                if (-1e-12..=1.0 + 1e-12).contains(&u) {
                    if u < 1e-9 || u > 1.0 - 1e-9 {
                        *degenerate = true;
                    }
                    sink(q, degenerate);
                }
            }
        }
        ChartCurve::Line { origin, dir } => {
            for (_, q) in line_circle(*origin, *dir, c, rho, degenerate) {
                sink(q, degenerate);
            }
        }
        ChartCurve::HalfLine { origin, dir } => {
            for (t, q) in line_circle(*origin, *dir, c, rho, degenerate) {
                if t > -1e-12 {
                    if t < 1e-9 {
                        *degenerate = true;
                    }
                    sink(q, degenerate);
                }
            }
        }
        ChartCurve::Arc { center, radius, ang0, sweep } => {
            for q in circle_circle(c, rho, *center, *radius, degenerate) {
                let phi = (q - *center).angle();
                if let Some(frac) = angle_in_sweep(phi, *ang0, *sweep) {
                    if frac < 1e-9 || frac > 1.0 - 1e-9 {
                        *degenerate = true;
                    }
                    sink(q, degenerate);
                }
            }
        }
        ChartCurve::Circle { center, radius } => {
            for q in circle_circle(c, rho, *center, *radius, degenerate) {
                sink(q, degenerate);
            }
        }
        ChartCurve::Parametric { .. } => {
            // Sign of the carrier-circle residual along the curve.
            let g = |u: f64| curve.point_at(u).dist(c) - rho;
            let n = 512;
            let mut prev = g(0.0);
            for i in 1..=n {
                let u = i as f64 / n as f64;
                let cur = g(u);
                if prev == 0.0 || prev.signum() != cur.signum() {
                    let (mut lo, mut hi) = ((i - 1) as f64 / n as f64, u);
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        if g(lo).signum() == g(mid).signum() {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    sink(curve.point_at(0.5 * (lo + hi)), degenerate);
                }
                prev = cur;
            }
        }
    }
}

/// Cubic Hermite interpolation of a traced path between two samples.
fn hermite(s0: &PathSample, s1: &PathSample, t: f64) -> Vec2 {
    let h = s1.t - s0.t;
    let u = (t - s0.t) / h;
    let (u2, u3) = (u * u, u * u * u);
    let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
    let h10 = u3 - 2.0 * u2 + u;
    let h01 = -2.0 * u3 + 3.0 * u2;
    let h11 = u3 - u2;
    s0.point * h00 + s0.velocity * (h * h10) + s1.point * h01 + s1.velocity * (h * h11)
}

fn cast_traced(dom: &DomainSpec, p: Vec2, d: Vec2, opts: &HitOptions) -> Result<CastResult> {
    let model = dom.model();
    let lam = model.conformal_factor(p)?;
    let v0 = d * (1.0 / lam);
    let max_step = 0.02 * dom.bounding_box().diagonal().max(1.0);
    let path = model.trace_geodesic(p, v0, opts.t_max, &TraceOptions::with_max_step(max_step))?;

    if opts.gamma_only {
        return Ok(cast_traced_gamma(dom, &path.samples, path.terminated_early, opts));
    }

    for w in path.samples.windows(2) {
        let (s0, s1) = (&w[0], &w[1]);
        if dom.contains(s1.point) {
            continue;
        }
        // Bisect the membership flip on the dense interpolant.
        let (mut lo, mut hi) = (s0.t, s1.t);
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if dom.contains(hermite(s0, s1, mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return Ok(CastResult { t: 0.5 * (lo + hi), capped: false, degenerate: false });
    }
    if path.terminated_early {
        // Left the chart without meeting the boundary.
        return Ok(CastResult::escape());
    }
    Ok(CastResult { t: opts.t_max, capped: true, degenerate: false })
}

fn cast_traced_gamma(
    dom: &DomainSpec,
    samples: &[PathSample],
    terminated_early: bool,
    opts: &HitOptions,
) -> CastResult {
    // Signed side of a point relative to a curve carrier; crossings show as
    // sign changes between consecutive path samples. Parametric curves have
    // no signed side and are not supported here.
    let side = |curve: &ChartCurve, x: Vec2| -> Option<f64> {
        match curve {
            ChartCurve::Seg { a, b } => Some((*b - *a).cross(x - *a)),
            ChartCurve::Line { origin, dir } | ChartCurve::HalfLine { origin, dir } => {
                Some(dir.cross(x - *origin))
            }
            ChartCurve::Arc { center, radius, .. } | ChartCurve::Circle { center, radius } => {
                Some(x.dist(*center) - radius)
            }
            ChartCurve::Parametric { .. } => None,
        }
    };
    let on_curve = |curve: &ChartCurve, x: Vec2| -> bool {
        match curve {
            ChartCurve::Seg { a, b } => {
                let ab = *b - *a;
                let u = (x - *a).dot(ab) / ab.norm2();
                (-1e-9..=1.0 + 1e-9).contains(&u)
            }
            ChartCurve::HalfLine { origin, dir } => (x - *origin).dot(*dir) > -1e-9,
            ChartCurve::Arc { center, ang0, sweep, .. } => {
                angle_in_sweep((x - *center).angle(), *ang0, *sweep).is_some()
            }
            _ => true,
        }
    };

    for w in samples.windows(2) {
        let (s0, s1) = (&w[0], &w[1]);
        let mut first: Option<f64> = None;
        for seg in opaque(dom, true) {
            let Some(f) = side(&seg.curve, s0.point) else { continue };
            let g = side(&seg.curve, s1.point).unwrap();
            if f.signum() == g.signum() && f != 0.0 {
                continue;
            }
            let (mut lo, mut hi) = (s0.t, s1.t);
            let side_lo = f;
            while hi - lo > 1e-10 {
                let mid = 0.5 * (lo + hi);
                let sm = side(&seg.curve, hermite(s0, s1, mid)).unwrap();
                if sm.signum() == side_lo.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let t_cross = 0.5 * (lo + hi);
            if on_curve(&seg.curve, hermite(s0, s1, t_cross)) {
                first = Some(first.map_or(t_cross, |f: f64| f.min(t_cross)));
            }
        }
        if let Some(t) = first {
            return CastResult { t, capped: false, degenerate: false };
        }
    }
    if terminated_early {
        CastResult::escape()
    } else {
        CastResult { t: opts.t_max, capped: true, degenerate: false }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ideal_triangle, DomainSpec};
    use crate::geom::v;
    use crate::manifold::{Chart, ManifoldModel};

    fn hit(dom: &DomainSpec, p: Vec2, theta: f64) -> RayHit {
        hitting_radius(dom, p, theta, &HitOptions::for_domain(dom)).unwrap()
    }

    #[test]
    fn disk_radii() {
        let d = DomainSpec::unit_disk();
        for k in 0..12 {
            let theta = k as f64 * TAU / 12.0;
            let h = hit(&d, Vec2::ZERO, theta);
            assert!((h.r - 1.0).abs() < 1e-12, "theta {theta}: r {}", h.r);
        }
        let h = hit(&d, v(0.3, 0.0), 0.0);
        assert!((h.r - 0.7).abs() < 1e-12);
    }

    #[test]
    fn square_radii() {
        let s = DomainSpec::unit_square();
        let p = v(0.3, 0.5);
        assert!((hit(&s, p, 0.0).r - 0.3).abs() < 1e-12);
        assert!((hit(&s, p, PI / 2.0).r - 0.5).abs() < 1e-12);
        // The diagonal grazes the corners, so the cast retries with a small
        // angular offset; the radius is exact only to that offset.
        let c = v(0.5, 0.5);
        let r = hit(&s, c, PI / 4.0).r;
        assert!((r - 0.5 * 2.0_f64.sqrt()).abs() < 1e-6, "r {r}");
    }

    #[test]
    fn two_sided_symmetry() {
        let s = DomainSpec::unit_square();
        let p = v(0.23, 0.61);
        for k in 0..40 {
            let theta = k as f64 * 0.157;
            let a = hit(&s, p, theta).r;
            let b = hit(&s, p, theta + PI).r;
            assert!((a - b).abs() < 1e-11, "theta {theta}: {a} vs {b}");
        }
    }

    #[test]
    fn half_plane_escape() {
        let h = DomainSpec::half_plane();
        let p = v(2.0, 0.0);
        let along = hit(&h, p, 0.0);
        assert!((along.r - 2.0).abs() < 1e-12);
        let parallel = hit(&h, p, PI / 2.0);
        assert!(parallel.infinite);
        assert!(!parallel.capped);
    }

    #[test]
    fn strip_radii() {
        let s = DomainSpec::strip(1.0).unwrap();
        let p = v(0.25, 3.0);
        assert!((hit(&s, p, 0.0).r - 0.25).abs() < 1e-12);
        assert!(hit(&s, p, PI / 2.0).infinite);
    }

    #[test]
    fn geodesic_ball_radii_are_metric() {
        let m = ManifoldModel::poincare_disk(1.0).unwrap();
        let ball = DomainSpec::geodesic_ball(m, 1.0).unwrap();
        for k in 0..8 {
            let h = hit(&ball, Vec2::ZERO, k as f64 * 0.7);
            assert!((h.r - 1.0).abs() < 1e-9, "r {}", h.r);
        }
        // Off-center along the axis: metric distances 0.5 and 1.5.
        let q = v(0.25_f64.tanh(), 0.0);
        let h = hit(&ball, q, 0.0);
        assert!((h.r - 0.5).abs() < 1e-9, "r {}", h.r);
    }

    #[test]
    fn ball_scaling_with_curvature() {
        let m = ManifoldModel::poincare_disk(4.0).unwrap();
        let ball = DomainSpec::geodesic_ball(m, 0.5).unwrap();
        let h = hit(&ball, Vec2::ZERO, 1.234);
        assert!((h.r - 0.5).abs() < 1e-9, "r {}", h.r);
    }

    #[test]
    fn ideal_triangle_ray_toward_cusp_escapes() {
        let m = ManifoldModel::poincare_disk(1.0).unwrap();
        let t = ideal_triangle(m).unwrap();
        // The vertical line through the origin is tangent to both upper
        // sides at the ideal vertex, so the forward half escapes and the
        // backward half meets the bottom side at distance ln(3)/2.
        let h = hit(&t, Vec2::ZERO, PI / 2.0);
        assert!((h.r - 0.5 * 3.0_f64.ln()).abs() < 1e-6, "r {}", h.r);
        // A ray at a generic angle meets two sides.
        let g = hit(&t, Vec2::ZERO, 0.3);
        assert!(g.r.is_finite());
        assert!(g.r >= 0.5 * 3.0_f64.ln() - 1e-9);
    }

    #[test]
    fn gamma_restriction_sees_only_marked_sides() {
        let s = DomainSpec::rectangle(Vec2::ZERO, v(1.0, 1.0), [true, false, false, false]).unwrap();
        let p = v(0.5, 0.5);
        let o = HitOptions { t_max: 100.0, gamma_only: true };
        let down = hitting_radius(&s, p, PI / 2.0, &o).unwrap();
        assert!((down.r - 0.5).abs() < 1e-12);
        let across = hitting_radius(&s, p, 0.0, &o).unwrap();
        assert!(across.infinite);
    }

    #[test]
    fn traced_matches_analytic_on_flat_disk() {
        let custom = ManifoldModel::custom_conformal("1 + 0*x", Chart::Plane).unwrap();
        let d = DomainSpec::unit_disk().with_model(custom).unwrap();
        let p = v(0.3, 0.1);
        for k in 0..6 {
            let theta = 0.2 + k as f64 * 0.9;
            let h = hit(&d, p, theta);
            let exact = hit(&DomainSpec::unit_disk(), p, theta);
            assert!((h.r - exact.r).abs() < 1e-7, "theta {theta}: {} vs {}", h.r, exact.r);
        }
    }

    #[test]
    fn traced_cap_reports_lower_bound() {
        let custom = ManifoldModel::custom_conformal("1 + 0*x", Chart::Plane).unwrap();
        let d = DomainSpec::disk(Vec2::ZERO, 5.0).unwrap().with_model(custom).unwrap();
        let o = HitOptions { t_max: 1.0, gamma_only: false };
        let h = hitting_radius(&d, Vec2::ZERO, 0.0, &o).unwrap();
        assert!(h.capped);
        assert!((h.r - 1.0).abs() < 1e-9);
    }

    #[test]
    fn traced_gamma_restriction() {
        let custom = ManifoldModel::custom_conformal("1 + 0*x", Chart::Plane).unwrap();
        let s = DomainSpec::rectangle(Vec2::ZERO, v(1.0, 1.0), [true, false, false, false])
            .unwrap()
            .with_model(custom)
            .unwrap();
        let o = HitOptions { t_max: 3.0, gamma_only: true };
        let down = hitting_radius(&s, v(0.5, 0.5), PI / 2.0, &o).unwrap();
        assert!((down.r - 0.5).abs() < 1e-6, "r {}", down.r);
    }

    #[test]
    fn interior_precondition() {
        let d = DomainSpec::unit_disk();
        assert!(hitting_radius(&d, v(2.0, 0.0), 0.0, &HitOptions::new(10.0)).is_err());
    }

    #[test]
    fn forward_radius_is_one_sided() {
        let hp = DomainSpec::half_plane();
        let p = v(2.0, 0.0);
        let o = HitOptions::for_domain(&hp);
        // Toward the wall, away from it, and at 45 degrees.
        let toward = forward_hitting_radius(&hp, p, PI, &o).unwrap();
        assert!((toward.r - 2.0).abs() < 1e-9);
        let away = forward_hitting_radius(&hp, p, 0.0, &o).unwrap();
        assert!(away.infinite, "r {}", away.r);
        let slant = forward_hitting_radius(&hp, p, 3.0 * PI / 4.0, &o).unwrap();
        assert!((slant.r - 2.0 * 2.0f64.sqrt()).abs() < 1e-9);
        // The folded radius never exceeds either one-sided radius.
        let folded = hitting_radius(&hp, p, 0.0, &o).unwrap();
        assert!(folded.r <= toward.r + 1e-12);
    }
}
