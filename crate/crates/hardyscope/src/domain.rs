//! Domains with piecewise-smooth boundaries in a model chart.
//!
//! A `DomainSpec` bundles the manifold model, the oriented boundary
//! segments, the vertex list (regular corners and ideal vertices on the
//! chart circle), a bounding window, and the membership rule. Membership
//! is resolved either by crossing parity of a probe ray against the closed
//! boundary chains (bounded domains, including domains with holes) or by
//! intersecting half-plane side tests (unbounded flat domains).

use crate::error::{Error, Result};
use crate::geom::{
    angle_in_sweep, ray_curve_hits, scan_min, solve2, v, wrap_pi, ChartCurve, RayProbe, Rect,
    Vec2, PI,
};
use crate::manifold::{hyperbolic_distance, ManifoldModel};

/// Chart-space tolerance: points closer than this to the boundary are not
/// interior.
pub const BOUNDARY_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VertexKind {
    Regular(Vec2),
    /// Ideal vertex at the given chart angle on the unit circle.
    Ideal { angle: f64 },
}

impl VertexKind {
    pub fn chart_point(&self) -> Vec2 {
        match self {
            VertexKind::Regular(p) => *p,
            VertexKind::Ideal { angle } => Vec2::from_angle(*angle),
        }
    }

    pub fn is_ideal(&self) -> bool {
        matches!(self, VertexKind::Ideal { .. })
    }
}

#[derive(Clone, Debug)]
pub struct BoundarySegment {
    pub id: u32,
    pub curve: ChartCurve,
    /// Member of the distinguished boundary portion.
    pub gamma: bool,
    /// Carrier is a complete geodesic of a constant-curvature model (both
    /// endpoints ideal); enables the closed-form distance.
    pub full_geodesic: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionRule {
    /// Odd crossing parity against the boundary chains.
    ChainParity,
    /// Intersection of containing sides (flat unbounded domains).
    SideIntersection,
}

/// Vertex description accepted by the polygon builder.
#[derive(Clone, Copy, Debug)]
pub enum PolyVertex {
    Point(Vec2),
    /// Ideal vertex at a chart angle (radians) on the unit circle.
    Ideal(f64),
}

#[derive(Clone, Debug)]
pub struct DomainSpec {
    model: ManifoldModel,
    segments: Vec<BoundarySegment>,
    /// Truncation circles added around ideal vertices; they participate in
    /// ray casting and boundary distance but not in the parity rule.
    extra_segments: Vec<BoundarySegment>,
    cut_disks: Vec<(Vec2, f64)>,
    vertices: Vec<VertexKind>,
    bbox: Rect,
    region: RegionRule,
    /// Domain side per segment: +1 left of the curve orientation, -1 right.
    side: Vec<i8>,
    unbounded_chart: bool,
    /// Sup of |q| over the boundary; 1.0 marks contact with the chart circle.
    chart_sup_radius: f64,
}

impl DomainSpec {
    // ------------------------------------------------------------------
    // Constructors
    // ------------------------------------------------------------------

    /// Flat disk of the given center and radius.
    pub fn disk(center: Vec2, radius: f64) -> Result<DomainSpec> {
        if !(radius > 0.0) {
            return Err(Error::Construction("disk radius must be positive".into()));
        }
        let curve = ChartCurve::Circle { center, radius };
        let bbox = Rect::new(
            v(center.x - radius, center.y - radius),
            v(center.x + radius, center.y + radius),
        );
        let mut dom = DomainSpec {
            model: ManifoldModel::euclidean(),
            segments: vec![BoundarySegment { id: 0, curve, gamma: false, full_geodesic: false }],
            extra_segments: Vec::new(),
            cut_disks: Vec::new(),
            vertices: Vec::new(),
            bbox,
            region: RegionRule::ChainParity,
            side: Vec::new(),
            unbounded_chart: false,
            chart_sup_radius: center.norm() + radius,
        };
        dom.resolve_sides();
        Ok(dom)
    }

    pub fn unit_disk() -> DomainSpec {
        DomainSpec::disk(Vec2::ZERO, 1.0).expect("unit disk")
    }

    /// Axis-aligned flat rectangle; `gamma` marks [bottom, right, top, left].
    pub fn rectangle(lo: Vec2, hi: Vec2, gamma: [bool; 4]) -> Result<DomainSpec> {
        if !(hi.x > lo.x && hi.y > lo.y) {
            return Err(Error::Construction("rectangle needs hi > lo componentwise".into()));
        }
        let c = [v(lo.x, lo.y), v(hi.x, lo.y), v(hi.x, hi.y), v(lo.x, hi.y)];
        let segments = (0..4)
            .map(|i| BoundarySegment {
                id: i as u32,
                curve: ChartCurve::Seg { a: c[i], b: c[(i + 1) % 4] },
                gamma: gamma[i],
                full_geodesic: false,
            })
            .collect();
        let mut dom = DomainSpec {
            model: ManifoldModel::euclidean(),
            segments,
            extra_segments: Vec::new(),
            cut_disks: Vec::new(),
            vertices: c.iter().map(|p| VertexKind::Regular(*p)).collect(),
            bbox: Rect::new(lo, hi),
            region: RegionRule::ChainParity,
            side: Vec::new(),
            unbounded_chart: false,
            chart_sup_radius: c.iter().map(|p| p.norm()).fold(0.0, f64::max),
        };
        dom.resolve_sides();
        Ok(dom)
    }

    pub fn unit_square() -> DomainSpec {
        DomainSpec::rectangle(Vec2::ZERO, v(1.0, 1.0), [false; 4]).expect("unit square")
    }

    /// Flat half-plane `x > 0`. The bounding box is a sampling window, not
    /// an enclosure.
    pub fn half_plane() -> DomainSpec {
        let curve = ChartCurve::Line { origin: Vec2::ZERO, dir: v(0.0, 1.0) };
        DomainSpec {
            model: ManifoldModel::euclidean(),
            segments: vec![BoundarySegment { id: 0, curve, gamma: false, full_geodesic: false }],
            extra_segments: Vec::new(),
            cut_disks: Vec::new(),
            vertices: Vec::new(),
            bbox: Rect::new(v(0.0, -10.0), v(20.0, 10.0)),
            region: RegionRule::SideIntersection,
            side: vec![-1],
            unbounded_chart: true,
            chart_sup_radius: f64::INFINITY,
        }
    }

    /// Flat strip `0 < x < width`.
    pub fn strip(width: f64) -> Result<DomainSpec> {
        if !(width > 0.0) {
            return Err(Error::Construction("strip width must be positive".into()));
        }
        let l0 = ChartCurve::Line { origin: Vec2::ZERO, dir: v(0.0, 1.0) };
        let l1 = ChartCurve::Line { origin: v(width, 0.0), dir: v(0.0, 1.0) };
        let ext = 20.0 * width.max(1.0);
        Ok(DomainSpec {
            model: ManifoldModel::euclidean(),
            segments: vec![
                BoundarySegment { id: 0, curve: l0, gamma: false, full_geodesic: false },
                BoundarySegment { id: 1, curve: l1, gamma: false, full_geodesic: false },
            ],
            extra_segments: Vec::new(),
            cut_disks: Vec::new(),
            vertices: Vec::new(),
            bbox: Rect::new(v(0.0, -ext), v(width, ext)),
            region: RegionRule::SideIntersection,
            side: vec![-1, 1],
            unbounded_chart: true,
            chart_sup_radius: f64::INFINITY,
        })
    }

    /// Geodesic ball of metric radius `r` centered at the origin of a
    /// hyperbolic model.
    pub fn geodesic_ball(model: ManifoldModel, r: f64) -> Result<DomainSpec> {
        let b = model.hyperbolic_b().ok_or_else(|| {
            Error::Construction("geodesic_ball requires a poincare_disk model".into())
        })?;
        if !(r > 0.0) {
            return Err(Error::Construction("ball radius must be positive".into()));
        }
        let chart_r = (b.sqrt() * r / 2.0).tanh();
        let curve = ChartCurve::Circle { center: Vec2::ZERO, radius: chart_r };
        let mut dom = DomainSpec {
            model,
            segments: vec![BoundarySegment { id: 0, curve, gamma: false, full_geodesic: false }],
            extra_segments: Vec::new(),
            cut_disks: Vec::new(),
            vertices: Vec::new(),
            bbox: Rect::new(v(-chart_r, -chart_r), v(chart_r, chart_r)),
            region: RegionRule::ChainParity,
            side: Vec::new(),
            unbounded_chart: false,
            chart_sup_radius: chart_r,
        };
        dom.resolve_sides();
        Ok(dom)
    }

    /// Geodesic polygon. In the flat model all vertices must be finite and
    /// sides are straight segments; in `poincare_disk` sides are diameters
    /// or circular arcs orthogonal to the unit circle and vertices may be
    /// ideal. `gamma` flags side `i` (from vertex `i` to vertex `i+1`).
    pub fn build_geodesic_polygon(
        model: ManifoldModel,
        verts: &[PolyVertex],
        gamma: Option<&[bool]>,
    ) -> Result<DomainSpec> {
        if verts.len() < 3 {
            return Err(Error::Construction(format!(
                "polygon needs at least 3 vertices, got {}",
                verts.len()
            )));
        }
        if let Some(g) = gamma {
            if g.len() != verts.len() {
                return Err(Error::Construction(format!(
                    "gamma mask length {} does not match side count {}",
                    g.len(),
                    verts.len()
                )));
            }
        }
        let n = verts.len();
        let vertex_kinds: Vec<VertexKind> = verts
            .iter()
            .map(|pv| match pv {
                PolyVertex::Point(p) => VertexKind::Regular(*p),
                PolyVertex::Ideal(a) => VertexKind::Ideal { angle: *a },
            })
            .collect();

        let flat = model.is_euclidean();
        if flat && vertex_kinds.iter().any(|k| k.is_ideal()) {
            return Err(Error::Construction(
                "ideal vertices require a negatively curved model".into(),
            ));
        }
        if !flat && !model.is_poincare() {
            return Err(Error::Construction(
                "geodesic polygons are built in euclidean or poincare_disk models; \
                 use with_model to reinterpret the boundary under another metric"
                    .into(),
            ));
        }
        for k in &vertex_kinds {
            if let VertexKind::Regular(p) = k {
                if !model.chart_contains(*p) {
                    return Err(Error::Construction(format!(
                        "vertex ({}, {}) is outside the model chart",
                        p.x, p.y
                    )));
                }
            }
        }
        for i in 0..n {
            let a = vertex_kinds[i].chart_point();
            let b = vertex_kinds[(i + 1) % n].chart_point();
            if a.dist(b) < 1e-12 {
                return Err(Error::Construction(format!(
                    "consecutive vertices {i} and {} coincide",
                    (i + 1) % n
                )));
            }
        }

        let mut segments = Vec::with_capacity(n);
        for i in 0..n {
            let (ka, kb) = (&vertex_kinds[i], &vertex_kinds[(i + 1) % n]);
            let (curve, full) = if flat {
                (
                    ChartCurve::Seg { a: ka.chart_point(), b: kb.chart_point() },
                    false,
                )
            } else {
                geodesic_side(ka, kb)?
            };
            segments.push(BoundarySegment {
                id: i as u32,
                curve,
                gamma: gamma.map(|g| g[i]).unwrap_or(false),
                full_geodesic: full,
            });
        }

        let mut bbox = curves_bbox(segments.iter().map(|s| &s.curve));
        if !flat {
            bbox.lo.x = bbox.lo.x.max(-1.0);
            bbox.lo.y = bbox.lo.y.max(-1.0);
            bbox.hi.x = bbox.hi.x.min(1.0);
            bbox.hi.y = bbox.hi.y.min(1.0);
        }
        let sup = segments
            .iter()
            .flat_map(|s| (0..=32).map(move |i| s.curve.point_at(i as f64 / 32.0).norm()))
            .fold(0.0, f64::max);

        let mut dom = DomainSpec {
            model,
            segments,
            extra_segments: Vec::new(),
            cut_disks: Vec::new(),
            vertices: vertex_kinds,
            bbox,
            region: RegionRule::ChainParity,
            side: Vec::new(),
            unbounded_chart: false,
            chart_sup_radius: sup,
        };
        dom.check_simple()?;
        dom.resolve_sides();
        Ok(dom)
    }

    /// Flat domain with an inward-pointing cusp: a large disk minus the
    /// spike pinched between two tangent circles of radius 1/2 touching at
    /// the origin. The cusp tip sits at the origin and opens toward +x.
    pub fn cusp_domain() -> DomainSpec {
        let c_up = v(0.0, 0.5);
        let c_dn = v(0.0, -0.5);
        let big_c = v(0.6, 0.0);
        let big_r = 1.6;
        let segments = vec![
            BoundarySegment {
                id: 0,
                curve: ChartCurve::Circle { center: big_c, radius: big_r },
                gamma: false,
                full_geodesic: false,
            },
            // Spike boundary: lower-right quarter of the upper circle, from
            // the tip (0,0) to (0.5, 0.5).
            BoundarySegment {
                id: 1,
                curve: ChartCurve::Arc { center: c_up, radius: 0.5, ang0: -PI / 2.0, sweep: PI / 2.0 },
                gamma: false,
                full_geodesic: false,
            },
            BoundarySegment {
                id: 2,
                curve: ChartCurve::Seg { a: v(0.5, 0.5), b: v(0.5, -0.5) },
                gamma: false,
                full_geodesic: false,
            },
            BoundarySegment {
                id: 3,
                curve: ChartCurve::Arc { center: c_dn, radius: 0.5, ang0: 0.0, sweep: PI / 2.0 },
                gamma: false,
                full_geodesic: false,
            },
        ];
        let mut dom = DomainSpec {
            model: ManifoldModel::euclidean(),
            segments,
            extra_segments: Vec::new(),
            cut_disks: Vec::new(),
            vertices: vec![
                VertexKind::Regular(Vec2::ZERO),
                VertexKind::Regular(v(0.5, 0.5)),
                VertexKind::Regular(v(0.5, -0.5)),
            ],
            bbox: Rect::new(v(big_c.x - big_r, -big_r), v(big_c.x + big_r, big_r)),
            region: RegionRule::ChainParity,
            side: Vec::new(),
            unbounded_chart: false,
            chart_sup_radius: big_c.norm() + big_r,
        };
        dom.resolve_sides();
        dom
    }

    /// Reinterpret the same boundary curves under another conformal model.
    /// The chart of the new model must cover the boundary.
    pub fn with_model(&self, model: ManifoldModel) -> Result<DomainSpec> {
        if !model.chart_is_plane() && self.chart_sup_radius > 1.0 + 1e-9 {
            return Err(Error::Construction(
                "boundary extends beyond the unit-disk chart of the new model".into(),
            ));
        }
        let mut dom = self.clone();
        // Full-geodesic closed forms belong to the original metric.
        let keep_geodesic = model.is_poincare() && self.model.is_poincare();
        if !keep_geodesic {
            for s in dom.segments.iter_mut().chain(dom.extra_segments.iter_mut()) {
                s.full_geodesic = false;
            }
        }
        dom.model = model;
        Ok(dom)
    }

    /// Remove chart disks of radius `cut` around every ideal vertex. The
    /// circles join the boundary for distance and ray queries.
    pub fn truncate_ideal_vertices(&self, cut: f64) -> Result<DomainSpec> {
        if !(cut > 0.0) {
            return Err(Error::invalid("truncation radius must be positive"));
        }
        let ideal: Vec<Vec2> = self
            .vertices
            .iter()
            .filter(|k| k.is_ideal())
            .map(|k| k.chart_point())
            .collect();
        if ideal.is_empty() {
            return Err(Error::invalid("domain has no ideal vertices to truncate"));
        }
        let mut dom = self.clone();
        let base = (dom.segments.len() + dom.extra_segments.len()) as u32;
        for (j, c) in ideal.iter().enumerate() {
            dom.extra_segments.push(BoundarySegment {
                id: base + j as u32,
                curve: ChartCurve::Circle { center: *c, radius: cut },
                gamma: false,
                full_geodesic: false,
            });
            dom.cut_disks.push((*c, cut));
        }
        Ok(dom)
    }

    // ------------------------------------------------------------------
    // Accessors
    // ------------------------------------------------------------------

    pub fn model(&self) -> &ManifoldModel {
        &self.model
    }

    pub fn segments(&self) -> &[BoundarySegment] {
        &self.segments
    }

    /// All boundary segments including truncation circles.
    pub fn all_segments(&self) -> impl Iterator<Item = &BoundarySegment> {
        self.segments.iter().chain(self.extra_segments.iter())
    }

    pub fn vertices(&self) -> &[VertexKind] {
        &self.vertices
    }

    pub fn bounding_box(&self) -> Rect {
        self.bbox
    }

    pub fn region_rule(&self) -> RegionRule {
        self.region
    }

    pub fn is_unbounded_chart(&self) -> bool {
        self.unbounded_chart
    }

    pub fn has_ideal_vertices(&self) -> bool {
        self.vertices.iter().any(|k| k.is_ideal())
    }

    pub fn has_gamma(&self) -> bool {
        self.segments.iter().any(|s| s.gamma)
    }

    /// Does the closure stay strictly inside the model chart and within a
    /// bounded window? (Compactness of the closure in the manifold.)
    pub fn has_compact_closure(&self) -> bool {
        if self.unbounded_chart || self.has_ideal_vertices() {
            return false;
        }
        if self.model.chart_is_plane() {
            true
        } else {
            self.chart_sup_radius < 1.0 - 1e-9
        }
    }

    /// Default ray cap: generous for flat domains where chart length is
    /// metric length, fixed otherwise.
    pub fn auto_t_max(&self) -> f64 {
        if self.model.is_euclidean() {
            40.0_f64.max(20.0 * self.bbox.diagonal())
        } else {
            40.0
        }
    }

    /// Metric distance between chart points: closed form when the model has
    /// one, chart-segment length surrogate otherwise.
    pub fn metric_distance(&self, p: Vec2, q: Vec2) -> f64 {
        self.model
            .distance(p, q)
            .unwrap_or_else(|| self.model.chart_segment_length(p, q))
    }

    /// Chart-space (not metric) distance to the nearest boundary curve.
    /// No interior check; used for sizing supports and probe windows.
    pub fn chart_boundary_distance(&self, p: Vec2) -> f64 {
        self.all_segments()
            .map(|s| s.curve.chart_distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn boundary_point(&self, seg_index: usize, u: f64) -> Option<Vec2> {
        self.all_segments().nth(seg_index).map(|s| s.curve.point_at(u))
    }

    /// Chart-unit inward normal of a primary segment at parameter `u`.
    pub fn inward_normal_chart(&self, seg_index: usize, u: f64) -> Option<Vec2> {
        let seg = self.segments.get(seg_index)?;
        let side = *self.side.get(seg_index)? as f64;
        let n = seg.curve.tangent_at(u).perp() * side;
        Some(n.normalized())
    }

    // ------------------------------------------------------------------
    // Membership
    // ------------------------------------------------------------------

    /// Open-set membership. Points on or within `BOUNDARY_EPS` of the
    /// boundary, outside the chart, or inside a truncation disk are out.
    pub fn contains(&self, p: Vec2) -> bool {
        if !self.model.chart_contains(p) {
            return false;
        }
        for (c, r) in &self.cut_disks {
            if p.dist(*c) <= r + BOUNDARY_EPS {
                return false;
            }
        }
        for s in self.all_segments() {
            if s.curve.chart_distance(p) < BOUNDARY_EPS {
                return false;
            }
        }
        match self.region {
            RegionRule::SideIntersection => self.segments.iter().zip(&self.side).all(|(s, sd)| {
                match &s.curve {
                    ChartCurve::Line { origin, dir } | ChartCurve::HalfLine { origin, dir } => {
                        dir.cross(p - *origin) * (*sd as f64) > 0.0
                    }
                    _ => true,
                }
            }),
            RegionRule::ChainParity => self.parity_inside(p),
        }
    }

    fn parity_inside(&self, p: Vec2) -> bool {
        // Probe directions: fixed start, then golden-angle steps to escape
        // vertex and tangency degeneracies.
        let reach = 4.0 * (self.bbox.diagonal() + p.dist(self.bbox.center()) + 1.0);
        let mut last_count = 0usize;
        for k in 0..8 {
            let theta = 0.785_398_163_397_448_3 + k as f64 * 2.399_963_229_728_653;
            let ray = RayProbe { o: p, d: Vec2::from_angle(theta), t_lo: 0.0, t_hi: reach };
            let mut hits = Vec::new();
            let mut degenerate = false;
            for s in &self.segments {
                ray_curve_hits(&s.curve, &ray, &mut hits, &mut degenerate);
            }
            last_count = hits.len();
            if !degenerate {
                return last_count % 2 == 1;
            }
        }
        last_count % 2 == 1
    }

    // ------------------------------------------------------------------
    // Boundary distance
    // ------------------------------------------------------------------

    /// Metric distance from an interior point to the boundary: the minimum
    /// over segments. Flat and constant-curvature models use closed forms
    /// where available (full geodesics via the orthocircle formula);
    /// everything else is golden-section minimization over the segment
    /// parameter. For custom models the chart-path surrogate makes this an
    /// upper bound.
    pub fn boundary_distance(&self, p: Vec2) -> Result<f64> {
        if !self.contains(p) {
            return Err(Error::NotInterior(p.x, p.y));
        }
        let mut best = f64::INFINITY;
        for s in self.all_segments() {
            best = best.min(self.segment_metric_distance(p, s));
        }
        Ok(best)
    }

    fn segment_metric_distance(&self, p: Vec2, s: &BoundarySegment) -> f64 {
        if self.model.is_euclidean() {
            return s.curve.chart_distance(p);
        }
        if let Some(b) = self.model.hyperbolic_b() {
            if s.full_geodesic {
                if let Some(d) = poincare_full_geodesic_distance(p, &s.curve) {
                    return d / b.sqrt();
                }
            }
            let f = |u: f64| hyperbolic_distance(p, s.curve.point_at(u));
            let (_, d) = scan_min(f, 0.0, 1.0, 48, 1e-11);
            return d / b.sqrt();
        }
        // Custom model: chart path length surrogate.
        let f = |u: f64| self.model.chart_segment_length(p, s.curve.point_at(u));
        let (_, d) = scan_min(f, 0.0, 1.0, 32, 1e-9);
        d
    }

    // ------------------------------------------------------------------
    // Internals
    // ------------------------------------------------------------------

    fn resolve_sides(&mut self) {
        let scale = self.bbox.diagonal().max(1e-6);
        let mut sides = vec![1i8; self.segments.len()];
        for (i, s) in self.segments.iter().enumerate() {
            let u = 0.37;
            let q = s.curve.point_at(u);
            let n = s.curve.tangent_at(u).perp();
            let mut side = 1i8;
            for eps_pow in [1e-7, 1e-6, 1e-5, 1e-4] {
                let eps = eps_pow * scale;
                let inl = self.contains_for_probe(q + n * eps);
                let inr = self.contains_for_probe(q - n * eps);
                if inl != inr {
                    side = if inl { 1 } else { -1 };
                    break;
                }
            }
            sides[i] = side;
        }
        self.side = sides;
    }

    /// Parity membership only; used while sides are still unresolved.
    fn contains_for_probe(&self, p: Vec2) -> bool {
        if !self.model.chart_contains(p) {
            return false;
        }
        match self.region {
            RegionRule::ChainParity => self.parity_inside(p),
            RegionRule::SideIntersection => false,
        }
    }

    fn check_simple(&self) -> Result<()> {
        // Sampled separation test between non-adjacent sides.
        let n = self.segments.len();
        for i in 0..n {
            for j in 0..n {
                if i == j || (i + 1) % n == j || (j + 1) % n == i {
                    continue;
                }
                let a = &self.segments[i].curve;
                let b = &self.segments[j].curve;
                for k in 1..32 {
                    let q = a.point_at(k as f64 / 32.0);
                    if b.chart_distance(q) < 1e-9 {
                        return Err(Error::Construction(format!(
                            "sides {i} and {j} intersect away from their vertices"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Distance (curvature -1) from `p` to the complete geodesic carried by a
/// diameter segment or an orthocircle arc.
fn poincare_full_geodesic_distance(p: Vec2, curve: &ChartCurve) -> Option<f64> {
    let den = 1.0 - p.norm2();
    match curve {
        ChartCurve::Seg { a, b } => {
            let dir = (*b - *a).normalized();
            Some((2.0 * dir.cross(p).abs() / den).asinh())
        }
        ChartCurve::Arc { center, radius, .. } => {
            let s = (p.dist2(*center) - radius * radius) / (radius * den);
            Some(s.abs().asinh())
        }
        _ => None,
    }
}

/// Build one geodesic side between two vertices of a `poincare_disk`
/// polygon. Returns the chart curve and whether it carries a complete
/// geodesic (both endpoints ideal).
fn geodesic_side(ka: &VertexKind, kb: &VertexKind) -> Result<(ChartCurve, bool)> {
    let a = ka.chart_point();
    let b = kb.chart_point();
    let both_ideal = ka.is_ideal() && kb.is_ideal();

    // Center of the orthocircle: c . w = rhs(w) for each endpoint, where
    // rhs = 1 for an ideal endpoint on the unit circle and (1 + |w|^2) / 2
    // for an interior point. Both reduce to the same linear constraint.
    let rhs = |k: &VertexKind| -> (Vec2, f64) {
        let w = k.chart_point();
        ((w), (1.0 + w.norm2()) / 2.0)
    };
    let (ra, ba) = rhs(ka);
    let (rb, bb) = rhs(kb);
    match solve2(ra, ba, rb, bb) {
        Some(c) => {
            let radius = (c.norm2() - 1.0).max(0.0).sqrt();
            if radius < 1e-9 {
                // Degenerate orthocircle: endpoints essentially antipodal on
                // the circle; fall through to the diameter case.
                return Ok((ChartCurve::Seg { a, b }, both_ideal));
            }
            let ang0 = (a - c).angle();
            let ang1 = (b - c).angle();
            let sweep = wrap_pi(ang1 - ang0);
            Ok((ChartCurve::Arc { center: c, radius, ang0, sweep }, both_ideal))
        }
        // Collinear with the origin: the geodesic is a diameter chord.
        None => Ok((ChartCurve::Seg { a, b }, both_ideal)),
    }
}

fn curves_bbox<'a>(curves: impl Iterator<Item = &'a ChartCurve>) -> Rect {
    let mut bbox = Rect::new(v(f64::INFINITY, f64::INFINITY), v(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for c in curves {
        match c {
            ChartCurve::Seg { a, b } => {
                bbox.grow_to(*a);
                bbox.grow_to(*b);
            }
            ChartCurve::Arc { center, radius, ang0, sweep } => {
                bbox.grow_to(c.point_at(0.0));
                bbox.grow_to(c.point_at(1.0));
                for (ax, dir) in [
                    (0.0, v(1.0, 0.0)),
                    (PI / 2.0, v(0.0, 1.0)),
                    (PI, v(-1.0, 0.0)),
                    (3.0 * PI / 2.0, v(0.0, -1.0)),
                ] {
                    if angle_in_sweep(ax, *ang0, *sweep).is_some() {
                        bbox.grow_to(*center + dir * *radius);
                    }
                }
            }
            ChartCurve::Circle { center, radius } => {
                bbox.grow_to(*center + v(*radius, *radius));
                bbox.grow_to(*center - v(*radius, *radius));
            }
            ChartCurve::Line { .. } | ChartCurve::HalfLine { .. } => {
                for u in [0.0, 0.5, 1.0] {
                    bbox.grow_to(c.point_at(u));
                }
            }
            ChartCurve::Parametric { .. } => {
                for i in 0..=256 {
                    bbox.grow_to(c.point_at(i as f64 / 256.0));
                }
            }
        }
    }
    bbox
}

/// The standard ideal triangle with vertices at chart angles 90, 210 and
/// 330 degrees, centered at the origin.
pub fn ideal_triangle(model: ManifoldModel) -> Result<DomainSpec> {
    DomainSpec::build_geodesic_polygon(
        model,
        &[
            PolyVertex::Ideal(PI / 2.0),
            PolyVertex::Ideal(PI * 7.0 / 6.0),
            PolyVertex::Ideal(PI * 11.0 / 6.0),
        ],
        None,
    )
}

pub use crate::raycast::{hitting_radius, RayHit};
