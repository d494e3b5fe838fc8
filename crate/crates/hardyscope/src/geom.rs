//! Chart-plane primitives: 2-vectors, boundary curves, and the closed-form
//! ray and distance routines the casters are built on.

use serde::{Deserialize, Serialize};

use crate::expr::Expr;

pub const TAU: f64 = std::f64::consts::TAU;
pub const PI: f64 = std::f64::consts::PI;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

pub const fn v(x: f64, y: f64) -> Vec2 {
    Vec2 { x, y }
}

impl Vec2 {
    pub const ZERO: Vec2 = v(0.0, 0.0);

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn dist2(self, o: Vec2) -> f64 {
        (self - o).norm2()
    }

    /// Counterclockwise quarter turn.
    pub fn perp(self) -> Vec2 {
        v(-self.y, self.x)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        if n == 0.0 {
            Vec2::ZERO
        } else {
            self * (1.0 / n)
        }
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn from_angle(theta: f64) -> Vec2 {
        v(theta.cos(), theta.sin())
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        v(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        v(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        v(-self.x, -self.y)
    }
}

impl std::ops::Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        v(self.x * s, self.y * s)
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Rect {
    pub lo: Vec2,
    pub hi: Vec2,
}

impl Rect {
    pub fn new(lo: Vec2, hi: Vec2) -> Rect {
        Rect { lo, hi }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.lo.x && p.x <= self.hi.x && p.y >= self.lo.y && p.y <= self.hi.y
    }

    pub fn center(&self) -> Vec2 {
        (self.lo + self.hi) * 0.5
    }

    pub fn diagonal(&self) -> f64 {
        self.hi.dist(self.lo)
    }

    pub fn area(&self) -> f64 {
        (self.hi.x - self.lo.x) * (self.hi.y - self.lo.y)
    }

    pub fn grow_to(&mut self, p: Vec2) {
        self.lo.x = self.lo.x.min(p.x);
        self.lo.y = self.lo.y.min(p.y);
        self.hi.x = self.hi.x.max(p.x);
        self.hi.y = self.hi.y.max(p.y);
    }

    /// Distance from `p` to the rectangle's boundary (from either side).
    pub fn boundary_distance(&self, p: Vec2) -> f64 {
        let dx = (self.lo.x - p.x).max(p.x - self.hi.x);
        let dy = (self.lo.y - p.y).max(p.y - self.hi.y);
        if dx <= 0.0 && dy <= 0.0 {
            (-dx).min(-dy)
        } else {
            (dx.max(0.0).powi(2) + dy.max(0.0).powi(2)).sqrt()
        }
    }
}

/// Wrap `a` into `[0, 2pi)`.
pub fn wrap_tau(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r == TAU {
        0.0
    } else {
        r
    }
}

/// Wrap `a` into `(-pi, pi]`.
pub fn wrap_pi(a: f64) -> f64 {
    let r = wrap_tau(a);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Boundary curve in chart coordinates. `Line` and `HalfLine` are the
/// unbounded pieces used by flat half-plane and strip domains; everything
/// else is bounded.
#[derive(Clone, Debug)]
pub enum ChartCurve {
    Seg { a: Vec2, b: Vec2 },
    Line { origin: Vec2, dir: Vec2 },
    HalfLine { origin: Vec2, dir: Vec2 },
    /// Circular arc from angle `ang0` sweeping by `sweep` (signed, |sweep| <= 2pi).
    Arc { center: Vec2, radius: f64, ang0: f64, sweep: f64 },
    Circle { center: Vec2, radius: f64 },
    Parametric { x: Expr, y: Expr, t0: f64, t1: f64 },
}

/// Parameter window used when an unbounded curve has to be treated as a
/// bounded one (sampling, fallback minimization).
const LINE_WINDOW: f64 = 1e3;

impl ChartCurve {
    pub fn is_bounded(&self) -> bool {
        !matches!(self, ChartCurve::Line { .. } | ChartCurve::HalfLine { .. })
    }

    /// Point at normalized parameter `u` in [0, 1].
    pub fn point_at(&self, u: f64) -> Vec2 {
        match self {
            ChartCurve::Seg { a, b } => *a + (*b - *a) * u,
            ChartCurve::Line { origin, dir } => *origin + *dir * ((u - 0.5) * 2.0 * LINE_WINDOW),
            ChartCurve::HalfLine { origin, dir } => *origin + *dir * (u * LINE_WINDOW),
            ChartCurve::Arc {
                center,
                radius,
                ang0,
                sweep,
            } => *center + Vec2::from_angle(ang0 + sweep * u) * *radius,
            ChartCurve::Circle { center, radius } => {
                *center + Vec2::from_angle(TAU * u) * *radius
            }
            ChartCurve::Parametric { x, y, t0, t1 } => {
                let t = t0 + (t1 - t0) * u;
                v(x.eval(&[t]), y.eval(&[t]))
            }
        }
    }

    /// Unit tangent in the direction of increasing parameter.
    pub fn tangent_at(&self, u: f64) -> Vec2 {
        match self {
            ChartCurve::Seg { a, b } => (*b - *a).normalized(),
            ChartCurve::Line { dir, .. } | ChartCurve::HalfLine { dir, .. } => *dir,
            ChartCurve::Arc { ang0, sweep, .. } => {
                let t = Vec2::from_angle(ang0 + sweep * u).perp();
                if *sweep >= 0.0 {
                    t
                } else {
                    -t
                }
            }
            ChartCurve::Circle { .. } => Vec2::from_angle(TAU * u).perp(),
            ChartCurve::Parametric { .. } => {
                let du = 1e-6;
                let a = self.point_at((u - du).max(0.0));
                let b = self.point_at((u + du).min(1.0));
                (b - a).normalized()
            }
        }
    }

    pub fn chart_length(&self) -> f64 {
        match self {
            ChartCurve::Seg { a, b } => a.dist(*b),
            ChartCurve::Line { .. } | ChartCurve::HalfLine { .. } => f64::INFINITY,
            ChartCurve::Arc { radius, sweep, .. } => radius * sweep.abs(),
            ChartCurve::Circle { radius, .. } => TAU * radius,
            ChartCurve::Parametric { .. } => {
                let n = 256;
                let mut len = 0.0;
                let mut prev = self.point_at(0.0);
                for i in 1..=n {
                    let q = self.point_at(i as f64 / n as f64);
                    len += prev.dist(q);
                    prev = q;
                }
                len
            }
        }
    }

    /// Euclidean chart distance from `p` to the curve.
    pub fn chart_distance(&self, p: Vec2) -> f64 {
        match self {
            ChartCurve::Seg { a, b } => {
                let ab = *b - *a;
                let t = ((p - *a).dot(ab) / ab.norm2()).clamp(0.0, 1.0);
                p.dist(*a + ab * t)
            }
            ChartCurve::Line { origin, dir } => (p - *origin).cross(*dir).abs(),
            ChartCurve::HalfLine { origin, dir } => {
                let t = (p - *origin).dot(*dir).max(0.0);
                p.dist(*origin + *dir * t)
            }
            ChartCurve::Arc {
                center,
                radius,
                ang0,
                sweep,
            } => {
                let w = p - *center;
                let phi = w.angle();
                if angle_in_sweep(phi, *ang0, *sweep).is_some() {
                    (w.norm() - radius).abs()
                } else {
                    let e0 = *center + Vec2::from_angle(*ang0) * *radius;
                    let e1 = *center + Vec2::from_angle(ang0 + sweep) * *radius;
                    p.dist(e0).min(p.dist(e1))
                }
            }
            ChartCurve::Circle { center, radius } => (p.dist(*center) - radius).abs(),
            ChartCurve::Parametric { .. } => {
                let coarse = 256;
                let mut best_u = 0.0;
                let mut best = f64::INFINITY;
                for i in 0..=coarse {
                    let u = i as f64 / coarse as f64;
                    let d = p.dist(self.point_at(u));
                    if d < best {
                        best = d;
                        best_u = u;
                    }
                }
                let lo = (best_u - 1.0 / coarse as f64).max(0.0);
                let hi = (best_u + 1.0 / coarse as f64).min(1.0);
                let (_, d) = golden_min(|u| p.dist(self.point_at(u)), lo, hi, 1e-12);
                d
            }
        }
    }
}

/// Is chart angle `phi` within the arc `[ang0, ang0 + sweep]`? Returns the
/// normalized fraction along the sweep if it is.
pub fn angle_in_sweep(phi: f64, ang0: f64, sweep: f64) -> Option<f64> {
    if sweep == 0.0 {
        return None;
    }
    let delta = if sweep > 0.0 {
        wrap_tau(phi - ang0)
    } else {
        -wrap_tau(ang0 - phi)
    };
    let frac = delta / sweep;
    if (0.0..=1.0).contains(&frac) {
        Some(frac)
    } else {
        None
    }
}

/// A probe ray `o + t d` for `t` in `(t_lo, t_hi)`; `d` is unit length.
#[derive(Clone, Copy, Debug)]
pub struct RayProbe {
    pub o: Vec2,
    pub d: Vec2,
    pub t_lo: f64,
    pub t_hi: f64,
}

/// One ray/curve intersection. `u` is the curve parameter (normalized for
/// bounded curves, raw arclength for unbounded ones).
#[derive(Clone, Copy, Debug)]
pub struct RayHitParam {
    pub t: f64,
    pub u: f64,
}

/// Tolerance (as parameter slack) below which a hit counts as grazing a
/// curve endpoint or tangency and the caller should retry with a nudged ray.
const GRAZE_EPS: f64 = 1e-9;

/// Intersections of `ray` with `curve`. Appends to `hits`; sets
/// `*degenerate` when a tangency or endpoint graze was detected.
pub fn ray_curve_hits(
    curve: &ChartCurve,
    ray: &RayProbe,
    hits: &mut Vec<RayHitParam>,
    degenerate: &mut bool,
) {
    match curve {
        ChartCurve::Seg { a, b } => {
            let ab = *b - *a;
            let det = ray.d.cross(ab);
            let len = ab.norm();
            if det.abs() < 1e-14 * len.max(1.0) {
                // Parallel. If nearly collinear and in the t-window, flag it.
                if (ray.o - *a).cross(ab).abs() < GRAZE_EPS * len.max(1.0) {
                    *degenerate = true;
                }
                return;
            }
            // Solve o + t d = a + u ab by Cramer on the cross products.
            let w = *a - ray.o;
            let t = w.cross(ab) / det;
            let u = w.cross(ray.d) / det;
            if u < -GRAZE_EPS || u > 1.0 + GRAZE_EPS {
                return;
            }
            if u < GRAZE_EPS || u > 1.0 - GRAZE_EPS {
                *degenerate = true;
            }
            if t > ray.t_lo && t < ray.t_hi {
                hits.push(RayHitParam { t, u: u.clamp(0.0, 1.0) });
            }
        }
        ChartCurve::Line { origin, dir } => {
            let det = ray.d.cross(*dir);
            if det.abs() < 1e-14 {
                if (ray.o - *origin).cross(*dir).abs() < GRAZE_EPS {
                    *degenerate = true;
                }
                return;
            }
            let w = *origin - ray.o;
            let t = w.cross(*dir) / det;
            let s = w.cross(ray.d) / det;
            if t > ray.t_lo && t < ray.t_hi {
                hits.push(RayHitParam { t, u: s });
            }
        }
        ChartCurve::HalfLine { origin, dir } => {
            let det = ray.d.cross(*dir);
            if det.abs() < 1e-14 {
                if (ray.o - *origin).cross(*dir).abs() < GRAZE_EPS {
                    *degenerate = true;
                }
                return;
            }
            let w = *origin - ray.o;
            let t = w.cross(*dir) / det;
            let s = w.cross(ray.d) / det;
            if s < -GRAZE_EPS {
                return;
            }
            if s < GRAZE_EPS {
                *degenerate = true;
            }
            if t > ray.t_lo && t < ray.t_hi {
                hits.push(RayHitParam { t, u: s.max(0.0) });
            }
        }
        ChartCurve::Arc {
            center,
            radius,
            ang0,
            sweep,
        } => {
            for (t, q) in line_circle(ray.o, ray.d, *center, *radius, degenerate) {
                if t <= ray.t_lo || t >= ray.t_hi {
                    continue;
                }
                let phi = (q - *center).angle();
                match angle_in_sweep(phi, *ang0, *sweep) {
                    Some(frac) => {
                        if frac < GRAZE_EPS || frac > 1.0 - GRAZE_EPS {
                            *degenerate = true;
                        }
                        hits.push(RayHitParam { t, u: frac });
                    }
                    None => {
                        // Just off the arc end still counts as a graze.
                        let e0 = *center + Vec2::from_angle(*ang0) * *radius;
                        let e1 = *center + Vec2::from_angle(ang0 + sweep) * *radius;
                        if q.dist(e0) < GRAZE_EPS || q.dist(e1) < GRAZE_EPS {
                            *degenerate = true;
                        }
                    }
                }
            }
        }
        ChartCurve::Circle { center, radius } => {
            for (t, q) in line_circle(ray.o, ray.d, *center, *radius, degenerate) {
                if t > ray.t_lo && t < ray.t_hi {
                    let phi = wrap_tau((q - *center).angle());
                    hits.push(RayHitParam { t, u: phi / TAU });
                }
            }
        }
        ChartCurve::Parametric { .. } => {
            // Sampled crossing count with bisection refinement on the side
            // function of the probe line.
            let side = |q: Vec2| (q - ray.o).cross(ray.d);
            let n = 512;
            let mut u_prev = 0.0;
            let mut s_prev = side(curve.point_at(0.0));
            for i in 1..=n {
                let u = i as f64 / n as f64;
                let s = side(curve.point_at(u));
                if s_prev == 0.0 || s * s_prev < 0.0 {
                    let (mut lo, mut hi) = (u_prev, u);
                    let (mut slo, _) = (s_prev, s);
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        let sm = side(curve.point_at(mid));
                        if sm == 0.0 || sm * slo < 0.0 {
                            hi = mid;
                        } else {
                            lo = mid;
                            slo = sm;
                        }
                    }
                    let u_hit = 0.5 * (lo + hi);
                    let q = curve.point_at(u_hit);
                    let t = (q - ray.o).dot(ray.d);
                    if t > ray.t_lo && t < ray.t_hi {
                        if u_hit < GRAZE_EPS || u_hit > 1.0 - GRAZE_EPS {
                            *degenerate = true;
                        }
                        hits.push(RayHitParam { t, u: u_hit });
                    }
                }
                u_prev = u;
                s_prev = s;
            }
        }
    }
}

/// Intersections of the unit-direction line `o + t d` with a circle,
/// returned as `(t, point)` pairs in ascending `t`.
pub fn line_circle(
    o: Vec2,
    d: Vec2,
    center: Vec2,
    radius: f64,
    degenerate: &mut bool,
) -> Vec<(f64, Vec2)> {
    let w = o - center;
    let b = 2.0 * d.dot(w);
    let c = w.norm2() - radius * radius;
    let disc = b * b - 4.0 * c;
    let scale = radius * radius;
    if disc < 0.0 {
        if disc > -1e-12 * scale.max(1.0) {
            *degenerate = true;
        }
        return Vec::new();
    }
    if disc < 1e-12 * scale.max(1.0) {
        *degenerate = true;
    }
    let sq = disc.sqrt();
    let t0 = 0.5 * (-b - sq);
    let t1 = 0.5 * (-b + sq);
    vec![(t0, o + d * t0), (t1, o + d * t1)]
}

/// Intersection points of two circles, if any. Near-tangency sets the flag.
pub fn circle_circle(
    c1: Vec2,
    r1: f64,
    c2: Vec2,
    r2: f64,
    degenerate: &mut bool,
) -> Vec<Vec2> {
    let d = c1.dist(c2);
    if d < 1e-14 {
        return Vec::new();
    }
    let a = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
    let h2 = r1 * r1 - a * a;
    let scale = (r1 * r1).max(r2 * r2).max(1.0);
    if h2 < 0.0 {
        if h2 > -1e-12 * scale {
            *degenerate = true;
        }
        return Vec::new();
    }
    if h2 < 1e-12 * scale {
        *degenerate = true;
    }
    let u = (c2 - c1) * (1.0 / d);
    let mid = c1 + u * a;
    let h = h2.max(0.0).sqrt();
    let off = u.perp() * h;
    vec![mid + off, mid - off]
}

/// Golden-section minimization on [a, b].
pub fn golden_min(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INVPHI * (hi - lo);
    let mut x2 = lo + INVPHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INVPHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INVPHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let xm = 0.5 * (lo + hi);
    (xm, f(xm))
}

/// Coarse scan followed by golden-section refinement; robust against
/// multiple local minima at the scan resolution.
pub fn scan_min(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, n_coarse: usize, tol: f64) -> (f64, f64) {
    let n = n_coarse.max(2);
    let mut best_i = 0;
    let mut best = f64::INFINITY;
    for i in 0..=n {
        let x = a + (b - a) * i as f64 / n as f64;
        let fx = f(x);
        if fx < best {
            best = fx;
            best_i = i;
        }
    }
    let lo = a + (b - a) * best_i.saturating_sub(1) as f64 / n as f64;
    let hi = a + (b - a) * (best_i + 1).min(n) as f64 / n as f64;
    golden_min(f, lo, hi, tol)
}

/// Solve the 2x2 system `r1 . x = b1`, `r2 . x = b2`.
pub fn solve2(r1: Vec2, b1: f64, r2: Vec2, b2: f64) -> Option<Vec2> {
    let det = r1.x * r2.y - r1.y * r2.x;
    if det.abs() < 1e-14 {
        return None;
    }
    Some(v((b1 * r2.y - b2 * r1.y) / det, (r1.x * b2 - r2.x * b1) / det))
}
