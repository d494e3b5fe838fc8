//! Monte Carlo cross-check of the phase-space identity relating the
//! volume integral over unit tangent vectors to boundary-fiber orbit
//! integrals. Both sides estimate the same quantity for any bounded
//! integrand, so their agreement exercises the geodesic flow, the exit
//! times, and the boundary measure in one shot.
//!
//! The identity reads: integrating f over the unit tangent bundle against
//! the volume density equals integrating, over inward boundary directions
//! weighted by the inward cosine, the integral of f along each exit orbit.

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::geom::{v, Vec2, PI, TAU};
use crate::manifold::TraceOptions;
use crate::raycast::{forward_hitting_radius, HitOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const BATCH: usize = 8192;
/// Orbit quadrature panels; bias (1/64)^2 sits far below Monte Carlo
/// noise at the sample counts in use.
const ORBIT_PANELS: usize = 64;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BoundaryFiberSample {
    pub boundary_point: Vec2,
    /// Chart angle of the sampled inward direction.
    pub inward_angle: f64,
    /// Inner product of the inward normal with the direction; in (0, 1].
    pub cosine: f64,
    /// Metric time until the orbit exits the domain.
    pub exit_time: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SantaloReport {
    pub lhs: f64,
    pub rhs: f64,
    pub stderr_lhs: f64,
    pub stderr_rhs: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Degenerate events: clipped volume densities, capped or escaping
    /// orbits, unresolved normals. Zero on well-posed compact domains.
    pub critical_hits: u64,
    /// Gap between the sides in combined standard errors.
    pub sigma_gap: f64,
    pub agrees: bool,
}

/// Chart-length table over the bounded boundary segments, for sampling
/// uniformly in chart arclength.
struct SegTable {
    idx: Vec<usize>,
    cum: Vec<f64>,
    total: f64,
}

impl SegTable {
    fn build(dom: &DomainSpec) -> Result<SegTable> {
        let mut idx = Vec::new();
        let mut cum = Vec::new();
        let mut total = 0.0;
        for (i, s) in dom.segments().iter().enumerate() {
            if !s.curve.is_bounded() {
                continue;
            }
            let len = s.curve.chart_length();
            if !(len > 0.0) || !len.is_finite() {
                continue;
            }
            total += len;
            idx.push(i);
            cum.push(total);
        }
        if idx.is_empty() {
            return Err(Error::precondition(
                "domain has no bounded boundary segments to sample".to_string(),
            ));
        }
        Ok(SegTable { idx, cum, total })
    }

    fn pick(&self, r: f64) -> (usize, usize) {
        let target = r * self.total;
        let k = self.cum.partition_point(|&c| c < target).min(self.idx.len() - 1);
        (k, self.idx[k])
    }
}

fn require_compact(dom: &DomainSpec) -> Result<()> {
    if !dom.has_compact_closure() {
        return Err(Error::precondition(
            "flow comparison needs a compact domain closure".to_string(),
        ));
    }
    Ok(())
}

/// Upper bound for the squared conformal factor over the domain, from a
/// dense grid with a safety margin. Clipped draws are counted, so an
/// undershoot is detected rather than silently biasing the estimate.
fn density_cap(dom: &DomainSpec) -> Result<f64> {
    let bb = dom.bounding_box();
    let model = dom.model();
    let n = 96;
    let mut cap = 0.0f64;
    for i in 0..=n {
        for j in 0..=n {
            let p = v(
                bb.lo.x + (bb.hi.x - bb.lo.x) * i as f64 / n as f64,
                bb.lo.y + (bb.hi.y - bb.lo.y) * j as f64 / n as f64,
            );
            if dom.contains(p) {
                cap = cap.max(model.lambda_unchecked(p).powi(2));
            }
        }
    }
    if !(cap > 0.0) {
        return Err(Error::precondition(
            "volume density bound found no interior grid points".to_string(),
        ));
    }
    Ok(cap * 1.3)
}

/// Draws one boundary-fiber sample, also returning the interior start of
/// its orbit. The orbit starts a hair inside the boundary so interior
/// preconditions hold; the offset is far below the Monte Carlo
/// resolution.
fn draw_fiber(
    dom: &DomainSpec,
    table: &SegTable,
    opts: &HitOptions,
    rng: &mut ChaCha8Rng,
) -> (Option<(BoundaryFiberSample, Vec2)>, u64) {
    let r_seg: f64 = rng.gen();
    let u: f64 = rng.gen();
    let psi: f64 = rng.gen_range(-PI / 2.0..PI / 2.0);
    let (_, seg_i) = table.pick(r_seg);
    let b = dom.segments()[seg_i].curve.point_at(u);
    let Some(n_in) = dom.inward_normal_chart(seg_i, u) else {
        return (None, 1);
    };
    let normal_angle = n_in.y.atan2(n_in.x);
    let angle = normal_angle + psi;
    let eps = 1e-9 * (1.0 + dom.bounding_box().diagonal());
    let p0 = b + n_in * eps;
    if !dom.contains(p0) {
        return (None, 1);
    }
    match forward_hitting_radius(dom, p0, angle, opts) {
        Ok(hit) if hit.r.is_finite() && !hit.capped => (
            Some((
                BoundaryFiberSample {
                    boundary_point: b,
                    inward_angle: angle,
                    cosine: psi.cos(),
                    exit_time: hit.r,
                },
                p0,
            )),
            0,
        ),
        _ => (None, 1),
    }
}

/// Integral of the integrand along the exit orbit from `p0` in chart
/// direction `angle`, against metric time.
fn orbit_integral<F>(dom: &DomainSpec, f: &F, p0: Vec2, angle: f64, l: f64) -> Result<f64>
where
    F: Fn(Vec2, f64) -> f64,
{
    let model = dom.model();
    if model.is_euclidean() {
        // Straight orbit; composite Simpson.
        let dir = Vec2::from_angle(angle);
        let n = ORBIT_PANELS;
        let h = l / n as f64;
        let mut acc = f(p0, angle) + f(p0 + dir * l, angle);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(p0 + dir * (h * i as f64), angle);
        }
        return Ok(acc * h / 3.0);
    }
    let vel = model.unit_direction(p0, angle)?;
    let step = l / ORBIT_PANELS as f64;
    let path = model.trace_geodesic(p0, vel, l, &TraceOptions::with_max_step(step))?;
    let mut acc = 0.0;
    for w in path.samples.windows(2) {
        let fa = f(w[0].point, w[0].velocity.y.atan2(w[0].velocity.x));
        let fb = f(w[1].point, w[1].velocity.y.atan2(w[1].velocity.x));
        acc += (w[1].t - w[0].t) * 0.5 * (fa + fb);
    }
    Ok(acc)
}

/// Independent boundary-fiber samples, mainly for inspecting the fiber
/// measure itself.
pub fn boundary_fiber_samples(
    dom: &DomainSpec,
    count: usize,
    seed: u64,
) -> Result<Vec<BoundaryFiberSample>> {
    require_compact(dom)?;
    let table = SegTable::build(dom)?;
    let opts = HitOptions::for_domain(dom);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut guard = 0usize;
    while out.len() < count && guard < 50 * count + 1000 {
        guard += 1;
        if let (Some((s, _)), _) = draw_fiber(dom, &table, &opts, &mut rng) {
            out.push(s);
        }
    }
    Ok(out)
}

struct Partial {
    sum: f64,
    sum_sq: f64,
    critical: u64,
}

/// Compares the two sides of the phase-space identity by Monte Carlo:
/// volume-density rejection sampling on the left, boundary-fiber orbit
/// integrals on the right. Batches are reduced in a fixed order, so a
/// seed pins the result bit for bit regardless of thread count.
pub fn santalo_compare<F>(
    dom: &DomainSpec,
    integrand: F,
    n_samples: usize,
    seed: u64,
) -> Result<SantaloReport>
where
    F: Fn(Vec2, f64) -> f64 + Sync,
{
    require_compact(dom)?;
    if n_samples < 100 {
        return Err(Error::invalid("need at least 100 samples per side"));
    }
    let bb = dom.bounding_box();
    let box_area = (bb.hi.x - bb.lo.x) * (bb.hi.y - bb.lo.y);
    let cap = density_cap(dom)?;
    let model = dom.model();
    let table = SegTable::build(dom)?;
    let opts = HitOptions::for_domain(dom);

    let n_batches = n_samples.div_ceil(BATCH);
    let batch_len = |k: usize| -> usize {
        if k + 1 == n_batches { n_samples - k * BATCH } else { BATCH }
    };

    // Left side: proposals uniform on box x circle, thinned by the
    // volume density against its cap.
    let lhs_parts: Vec<Partial> = (0..n_batches)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(2 * k as u64);
            let mut part = Partial { sum: 0.0, sum_sq: 0.0, critical: 0 };
            for _ in 0..batch_len(k) {
                let p = v(
                    bb.lo.x + (bb.hi.x - bb.lo.x) * rng.gen::<f64>(),
                    bb.lo.y + (bb.hi.y - bb.lo.y) * rng.gen::<f64>(),
                );
                let theta = rng.gen::<f64>() * TAU;
                let accept_draw: f64 = rng.gen();
                let mut x = 0.0;
                if dom.contains(p) {
                    let density = model.lambda_unchecked(p).powi(2) / cap;
                    if density > 1.0 {
                        part.critical += 1;
                    }
                    if accept_draw < density {
                        x = integrand(p, theta);
                    }
                }
                part.sum += x;
                part.sum_sq += x * x;
            }
            part
        })
        .collect();

    // Right side: fiber draws weighted by the conformal factor at the
    // foot (chart arclength to metric arclength) and the inward cosine.
    let rhs_parts: Vec<Partial> = (0..n_batches)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(2 * k as u64 + 1);
            let mut part = Partial { sum: 0.0, sum_sq: 0.0, critical: 0 };
            for _ in 0..batch_len(k) {
                let (maybe, crit) = draw_fiber(dom, &table, &opts, &mut rng);
                part.critical += crit;
                let mut y = 0.0;
                if let Some((s, p0)) = maybe {
                    match orbit_integral(dom, &integrand, p0, s.inward_angle, s.exit_time) {
                        Ok(i_orbit) => {
                            y = model.lambda_unchecked(s.boundary_point) * s.cosine * i_orbit;
                        }
                        Err(_) => part.critical += 1,
                    }
                }
                part.sum += y;
                part.sum_sq += y * y;
            }
            part
        })
        .collect();

    let reduce = |parts: &[Partial], scale: f64| -> (f64, f64, u64) {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut crit = 0u64;
        for p in parts {
            sum += p.sum;
            sum_sq += p.sum_sq;
            crit += p.critical;
        }
        let n = n_samples as f64;
        let mean = sum / n;
        let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        (scale * mean, scale * (var / n).sqrt(), crit)
    };

    let (lhs, stderr_lhs, crit_l) = reduce(&lhs_parts, box_area * TAU * cap);
    let (rhs, stderr_rhs, crit_r) = reduce(&rhs_parts, table.total * PI);
    let combined = (stderr_lhs.powi(2) + stderr_rhs.powi(2)).sqrt();
    let sigma_gap = if combined > 0.0 { (lhs - rhs).abs() / combined } else { f64::MAX };
    Ok(SantaloReport {
        lhs,
        rhs,
        stderr_lhs,
        stderr_rhs,
        n_samples,
        seed,
        critical_hits: crit_l + crit_r,
        sigma_gap,
        agrees: sigma_gap <= 3.0,
    })
}
