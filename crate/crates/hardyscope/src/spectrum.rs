//! Dirichlet eigenvalues of the Laplace-Beltrami operator on
//! conformal-metric domains via a 5-point finite-difference pencil, plus
//! cusp-truncation convergence studies on polygons with ideal vertices.
//!
//! In two dimensions the metric operator factors through the conformal
//! weight: the pencil is `stiffness u = mu mass u` with the flat 5-point
//! stiffness and a diagonal mass of squared conformal factors, so the flat
//! case reduces to the plain Dirichlet Laplacian exactly.

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::geom::{v, Vec2};
use crate::linalg::{smallest_generalized, CsrMatrix};
use rayon::prelude::*;
use std::collections::HashMap;

/// One lattice node strictly inside the domain.
#[derive(Clone, Copy, Debug)]
pub struct GridNode {
    pub i: i64,
    pub j: i64,
    pub p: Vec2,
}

/// Lattice discretization on the absolute grid (i h, j h). Domains sharing
/// a spacing share node positions, so nested domains produce nested node
/// sets and exact discrete eigenvalue monotonicity.
#[derive(Clone, Debug)]
pub struct GridDiscretization {
    pub h: f64,
    pub interior_nodes: Vec<GridNode>,
    node_index: HashMap<(i64, i64), usize>,
}

impl GridDiscretization {
    pub fn index_of(&self, i: i64, j: i64) -> Option<usize> {
        self.node_index.get(&(i, j)).copied()
    }

    pub fn len(&self) -> usize {
        self.interior_nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interior_nodes.is_empty()
    }
}

/// Generalized eigenproblem matrices: 5-point stiffness in 1/h^2 units and
/// the diagonal mass of squared conformal factors.
#[derive(Clone, Debug)]
pub struct SparsePencil {
    pub stiffness: CsrMatrix,
    pub mass: Vec<f64>,
    pub h: f64,
}

#[derive(Clone, Debug)]
pub struct EigenResult {
    /// Ascending generalized eigenvalues, metric 1/length^2 units.
    pub values: Vec<f64>,
    pub residual_norms: Vec<f64>,
    pub h: f64,
}

const MIN_NODES: usize = 25;

/// Lattice nodes and pencil for a bounded-chart domain. Nodes whose stencil
/// crosses the boundary use plain Dirichlet-zero truncation, which keeps
/// the stiffness symmetric at an O(h) boundary error.
pub fn assemble_pencil(dom: &DomainSpec, h: f64) -> Result<(GridDiscretization, SparsePencil)> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::invalid("grid spacing must be positive and finite"));
    }
    if dom.is_unbounded_chart() {
        return Err(Error::precondition(
            "eigenvalue grids need a bounded chart region".to_string(),
        ));
    }
    let bb = dom.bounding_box();
    let i_lo = (bb.lo.x / h).floor() as i64 - 1;
    let i_hi = (bb.hi.x / h).ceil() as i64 + 1;
    let j_lo = (bb.lo.y / h).floor() as i64 - 1;
    let j_hi = (bb.hi.y / h).ceil() as i64 + 1;
    let rows: Vec<Vec<GridNode>> = (j_lo..=j_hi)
        .into_par_iter()
        .map(|j| {
            let mut row = Vec::new();
            for i in i_lo..=i_hi {
                let p = v(i as f64 * h, j as f64 * h);
                if dom.contains(p) {
                    row.push(GridNode { i, j, p });
                }
            }
            row
        })
        .collect();
    let interior_nodes: Vec<GridNode> = rows.into_iter().flatten().collect();
    let n = interior_nodes.len();
    if n < MIN_NODES {
        return Err(Error::GridTooCoarse(n));
    }
    let node_index: HashMap<(i64, i64), usize> = interior_nodes
        .iter()
        .enumerate()
        .map(|(idx, node)| ((node.i, node.j), idx))
        .collect();

    let inv_h2 = 1.0 / (h * h);
    let model = dom.model();
    let mut triplets = Vec::with_capacity(5 * n);
    let mut mass = Vec::with_capacity(n);
    for (idx, node) in interior_nodes.iter().enumerate() {
        triplets.push((idx, idx, 4.0 * inv_h2));
        for (di, dj) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
            if let Some(nb) = node_index.get(&(node.i + di, node.j + dj)) {
                triplets.push((idx, *nb, -inv_h2));
            }
        }
        let lam = model.lambda_unchecked(node.p);
        mass.push(lam * lam);
    }
    let stiffness = CsrMatrix::from_triplets(n, &triplets)?;
    let grid = GridDiscretization { h, interior_nodes, node_index };
    Ok((grid, SparsePencil { stiffness, mass, h }))
}

/// Starting-vector seed is fixed so repeated runs share iterates exactly.
const EIGEN_SEED: u64 = 0x0051_7ead;

/// Smallest `k` generalized eigenvalues of the pencil.
pub fn lowest_eigenvalues(pencil: &SparsePencil, k: usize, tol: f64) -> Result<EigenResult> {
    let got = smallest_generalized(&pencil.stiffness, &pencil.mass, k, tol, EIGEN_SEED)?;
    Ok(EigenResult { values: got.values, residual_norms: got.residuals, h: pencil.h })
}

#[derive(Clone, Debug)]
pub struct TruncationRow {
    pub cut: f64,
    pub h: f64,
    pub n_nodes: usize,
    pub values: Vec<f64>,
    /// Change per eigenvalue against the previous computed level; absent on
    /// the first row.
    pub diffs: Option<Vec<f64>>,
    pub residuals: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct TruncationStudy {
    pub rows: Vec<TruncationRow>,
    /// Levels that produced no usable grid, with the reason.
    pub skipped: Vec<(f64, String)>,
    /// Successive differences shrink by at least half, per eigenvalue;
    /// `None` with fewer than three computed levels.
    pub cauchy_ok: Option<bool>,
    /// Eigenvalues nonincreasing as the cut shrinks (domain grows).
    pub monotone_ok: bool,
    pub k: usize,
}

impl TruncationStudy {
    /// Plot-ready table, one row per (level, eigenvalue index).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cut_level,h,k,lambda,diff,residual\n");
        for row in &self.rows {
            for (idx, lam) in row.values.iter().enumerate() {
                let diff = match &row.diffs {
                    Some(d) => format!("{:.12e}", d[idx]),
                    None => String::new(),
                };
                out.push_str(&format!(
                    "{:.12e},{:.12e},{},{:.12e},{},{:.3e}\n",
                    row.cut,
                    row.h,
                    idx + 1,
                    lam,
                    diff,
                    row.residuals[idx],
                ));
            }
        }
        out
    }
}

const TRUNCATION_TOL: f64 = 1e-8;
/// Slack absorbing solver residual when judging monotonicity and decay.
const STUDY_SLACK: f64 = 1e-6;

/// Eigenvalue convergence under shrinking cusp truncations. Every level
/// shares one absolute lattice, so node sets nest and the discrete
/// eigenvalues are exactly monotone apart from solver residual.
pub fn truncation_study(
    polygon: &DomainSpec,
    cut_levels: &[f64],
    h: f64,
    k: usize,
) -> Result<TruncationStudy> {
    if !polygon.has_ideal_vertices() {
        return Err(Error::precondition(
            "truncation study needs a polygon with ideal vertices".to_string(),
        ));
    }
    if cut_levels.is_empty() {
        return Err(Error::invalid("cut level list is empty"));
    }
    if cut_levels.iter().any(|&c| !(c > 0.0)) {
        return Err(Error::invalid("cut levels must be positive"));
    }
    if cut_levels.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("cut levels must be strictly decreasing"));
    }
    let mut rows: Vec<TruncationRow> = Vec::new();
    let mut skipped = Vec::new();
    for &cut in cut_levels {
        let dom = polygon.truncate_ideal_vertices(cut)?;
        let (grid, pencil) = match assemble_pencil(&dom, h) {
            Ok(pair) => pair,
            Err(Error::GridTooCoarse(n)) => {
                skipped.push((cut, format!("grid produced only {n} interior nodes")));
                continue;
            }
            Err(e) => return Err(e),
        };
        let eig = lowest_eigenvalues(&pencil, k, TRUNCATION_TOL)?;
        let diffs = rows.last().map(|prev: &TruncationRow| {
            eig.values.iter().zip(&prev.values).map(|(now, was)| now - was).collect()
        });
        rows.push(TruncationRow {
            cut,
            h,
            n_nodes: grid.len(),
            values: eig.values,
            diffs,
            residuals: eig.residual_norms,
        });
    }
    if rows.is_empty() {
        return Err(Error::precondition(
            "every truncation level was skipped; refine the grid".to_string(),
        ));
    }
    let monotone_ok = rows
        .iter()
        .filter_map(|r| r.diffs.as_ref())
        .all(|d| d.iter().all(|&x| x <= STUDY_SLACK));
    let diff_rows: Vec<&Vec<f64>> = rows.iter().filter_map(|r| r.diffs.as_ref()).collect();
    let cauchy_ok = if diff_rows.len() >= 2 {
        Some((0..k).all(|idx| {
            diff_rows
                .windows(2)
                .all(|w| w[1][idx].abs() <= 0.5 * w[0][idx].abs() + STUDY_SLACK)
        }))
    } else {
        None
    };
    Ok(TruncationStudy { rows, skipped, cauchy_ok, monotone_ok, k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ideal_triangle;
    use crate::manifold::ManifoldModel;
    use std::f64::consts::PI;

    /// Exact eigenvalue of the discrete 5-point Dirichlet Laplacian on a
    /// rectangle (0,a)x(0,b) with a/h, b/h integer, mode (kx, ky).
    fn discrete_rect_eigenvalue(h: f64, a: f64, b: f64, kx: u32, ky: u32) -> f64 {
        let sx = (kx as f64 * PI * h / (2.0 * a)).sin();
        let sy = (ky as f64 * PI * h / (2.0 * b)).sin();
        4.0 / (h * h) * (sx * sx + sy * sy)
    }

    #[test]
    fn unit_square_grid_counts() {
        let sq = DomainSpec::unit_square();
        let (grid, pencil) = assemble_pencil(&sq, 0.1).unwrap();
        assert_eq!(grid.len(), 81);
        for idx in 0..grid.len() {
            assert!((pencil.stiffness.get(idx, idx) - 400.0).abs() < 1e-9);
            assert_eq!(pencil.mass[idx], 1.0);
        }
    }

    #[test]
    fn poincare_mass_entries() {
        let m = ManifoldModel::poincare_disk(1.0).unwrap();
        let ball = DomainSpec::geodesic_ball(m, 1.5).unwrap();
        let (grid, pencil) = assemble_pencil(&ball, 0.1).unwrap();
        let idx = grid.index_of(5, 0).expect("node (0.5, 0) inside");
        let expect = (8.0 / 3.0) * (8.0 / 3.0);
        assert!((pencil.mass[idx] - expect).abs() < 1e-12);
    }

    #[test]
    fn disk_node_count_matches_lattice_oracle() {
        let d = DomainSpec::unit_disk();
        let h = 0.05;
        let (grid, _) = assemble_pencil(&d, h).unwrap();
        let mut expect = 0usize;
        for i in -20i64..=20 {
            for j in -20i64..=20 {
                if i * i + j * j < 400 {
                    expect += 1;
                }
            }
        }
        assert_eq!(grid.len(), expect);
    }

    #[test]
    fn stiffness_is_exactly_symmetric() {
        let d = DomainSpec::unit_disk();
        let (_, pencil) = assemble_pencil(&d, 0.05).unwrap();
        assert_eq!(pencil.stiffness.symmetry_defect(), 0.0);
        assert!(pencil.mass.iter().all(|&m| m > 0.0));
    }

    #[test]
    fn flat_pencil_reduces_to_plain_laplacian() {
        // Mass identically 1.0 and stiffness byte-identical to a plain
        // 5-point Dirichlet Laplacian built straight from the node table.
        let sq = DomainSpec::unit_square();
        let h = 0.125;
        let (grid, pencil) = assemble_pencil(&sq, h).unwrap();
        assert!(pencil.mass.iter().all(|&m| m == 1.0));
        let inv_h2 = 1.0 / (h * h);
        let mut plain = Vec::new();
        for (idx, node) in grid.interior_nodes.iter().enumerate() {
            plain.push((idx, idx, 4.0 * inv_h2));
            for (di, dj) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                if let Some(nb) = grid.index_of(node.i + di, node.j + dj) {
                    plain.push((idx, nb, -inv_h2));
                }
            }
        }
        let plain = CsrMatrix::from_triplets(grid.len(), &plain).unwrap();
        let mut got = Vec::new();
        let mut want = Vec::new();
        pencil.stiffness.write_triplets(&mut got).unwrap();
        plain.write_triplets(&mut want).unwrap();
        assert_eq!(got, want);
    }

    #[test]
    fn too_coarse_grid_is_rejected() {
        let sq = DomainSpec::unit_square();
        match assemble_pencil(&sq, 0.3) {
            Err(Error::GridTooCoarse(n)) => assert!(n < 25),
            other => panic!("expected GridTooCoarse, got {other:?}"),
        }
    }

    #[test]
    fn unbounded_chart_is_rejected() {
        let hp = DomainSpec::half_plane();
        assert!(assemble_pencil(&hp, 0.1).is_err());
    }

    #[test]
    fn square_eigenvalues_match_discrete_closed_form() {
        let sq = DomainSpec::unit_square();
        let h = 1.0 / 16.0;
        let (_, pencil) = assemble_pencil(&sq, h).unwrap();
        let eig = lowest_eigenvalues(&pencil, 3, 1e-10).unwrap();
        let exact = [
            discrete_rect_eigenvalue(h, 1.0, 1.0, 1, 1),
            discrete_rect_eigenvalue(h, 1.0, 1.0, 1, 2),
            discrete_rect_eigenvalue(h, 1.0, 1.0, 2, 1),
        ];
        for (got, want) in eig.values.iter().zip(exact) {
            assert!((got - want).abs() < 1e-7, "{got} vs {want}");
        }
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1] + 1e-12));
        assert!(eig.values.iter().all(|&l| l > 0.0));
        assert!(eig.residual_norms.iter().all(|&r| r < 1e-10));
        // The (1,2)/(2,1) pair is exactly degenerate.
        assert!((eig.values[1] - eig.values[2]).abs() < 1e-8);
    }

    #[test]
    fn rectangle_eigenvalue_matches_discrete_closed_form() {
        let rect = DomainSpec::rectangle(v(0.0, 0.0), v(1.0, 2.0), [false; 4]).unwrap();
        let h = 1.0 / 16.0;
        let (_, pencil) = assemble_pencil(&rect, h).unwrap();
        let eig = lowest_eigenvalues(&pencil, 1, 1e-10).unwrap();
        let want = discrete_rect_eigenvalue(h, 1.0, 2.0, 1, 1);
        assert!((eig.values[0] - want).abs() < 1e-7);
    }

    #[test]
    fn mesh_convergence_is_second_order() {
        let sq = DomainSpec::unit_square();
        let mut lam = Vec::new();
        for h in [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0] {
            let (_, pencil) = assemble_pencil(&sq, h).unwrap();
            lam.push(lowest_eigenvalues(&pencil, 1, 1e-10).unwrap().values[0]);
        }
        let d1 = (lam[1] - lam[0]).abs();
        let d2 = (lam[2] - lam[1]).abs();
        assert!(d2 < d1 / 3.0, "halving shrank the change only {d1} -> {d2}");
    }

    #[test]
    fn nested_disks_are_monotone() {
        let h = 0.05;
        let big = DomainSpec::unit_disk();
        let small = DomainSpec::disk(Vec2::ZERO, 0.8).unwrap();
        let (_, pb) = assemble_pencil(&big, h).unwrap();
        let (_, ps) = assemble_pencil(&small, h).unwrap();
        let lb = lowest_eigenvalues(&pb, 3, 1e-9).unwrap();
        let ls = lowest_eigenvalues(&ps, 3, 1e-9).unwrap();
        for idx in 0..3 {
            assert!(ls.values[idx] >= lb.values[idx] - 1e-6);
        }
    }

    #[test]
    fn truncation_levels_stabilize_on_ideal_triangle() {
        let m = ManifoldModel::poincare_disk(1.0).unwrap();
        let tri = ideal_triangle(m).unwrap();
        let study = truncation_study(&tri, &[0.5, 0.25, 0.125], 0.02, 2).unwrap();
        assert_eq!(study.rows.len(), 3);
        assert!(study.monotone_ok, "{:?}", study.rows);
        assert!(study.skipped.is_empty());
        let csv = study.to_csv();
        assert!(csv.starts_with("cut_level,h,k,lambda,diff,residual\n"));
        // 3 levels x 2 eigenvalues plus header.
        assert_eq!(csv.lines().count(), 7);
    }

    #[test]
    fn single_level_study_has_no_cauchy_verdict() {
        let m = ManifoldModel::poincare_disk(1.0).unwrap();
        let tri = ideal_triangle(m).unwrap();
        let study = truncation_study(&tri, &[0.4], 0.02, 1).unwrap();
        assert_eq!(study.rows.len(), 1);
        assert!(study.cauchy_ok.is_none());
        assert!(study.rows[0].diffs.is_none());
    }

    #[test]
    fn truncation_rejects_bad_inputs() {
        let m = ManifoldModel::poincare_disk(1.0).unwrap();
        let tri = ideal_triangle(m).unwrap();
        assert!(truncation_study(&tri, &[], 0.02, 1).is_err());
        assert!(truncation_study(&tri, &[0.1, 0.2], 0.02, 1).is_err());
        assert!(truncation_study(&DomainSpec::unit_disk(), &[0.5], 0.02, 1).is_err());
    }
}
