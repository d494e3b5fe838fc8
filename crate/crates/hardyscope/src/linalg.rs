//! Sparse symmetric linear algebra backing the eigenvalue pipeline:
//! compressed-row storage, diagonally preconditioned conjugate gradients,
//! a dense Jacobi eigensolver for small projected problems, and block
//! inverse subspace iteration for the generalized symmetric pencil.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Square sparse matrix in compressed-row form with sorted column indices.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Build from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<CsrMatrix> {
        for &(r, c, _) in triplets {
            if r >= n || c >= n {
                return Err(Error::invalid(format!(
                    "triplet ({r}, {c}) outside a {n} x {n} matrix"
                )));
            }
        }
        let mut counts = vec![0usize; n + 1];
        for &(r, _, _) in triplets {
            counts[r + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut col_idx = vec![0usize; triplets.len()];
        let mut vals = vec![0.0f64; triplets.len()];
        let mut fill = counts.clone();
        for &(r, c, v) in triplets {
            let k = fill[r];
            col_idx[k] = c;
            vals[k] = v;
            fill[r] += 1;
        }
        // Sort each row and merge duplicate columns.
        let mut out_ptr = vec![0usize; n + 1];
        let mut out_col = Vec::with_capacity(col_idx.len());
        let mut out_val = Vec::with_capacity(vals.len());
        let mut row: Vec<(usize, f64)> = Vec::new();
        for r in 0..n {
            row.clear();
            for k in counts[r]..counts[r + 1] {
                row.push((col_idx[k], vals[k]));
            }
            row.sort_by_key(|e| e.0);
            for &(c, v) in row.iter() {
                if let Some(last) = out_col.last() {
                    if *last == c && out_ptr[r] < out_col.len() {
                        let m = out_val.len() - 1;
                        out_val[m] += v;
                        continue;
                    }
                }
                out_col.push(c);
                out_val.push(v);
            }
            out_ptr[r + 1] = out_col.len();
        }
        Ok(CsrMatrix { n, row_ptr: out_ptr, col_idx: out_col, vals: out_val })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for r in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        match self.col_idx[lo..hi].binary_search(&c) {
            Ok(k) => self.vals[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Largest |a_ij - a_ji| over stored entries.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                worst = worst.max((self.vals[k] - self.get(c, r)).abs());
            }
        }
        worst
    }

    /// Two-sided diagonal scaling s .* A .* s (entrywise by row and column).
    pub fn scaled(&self, s: &[f64]) -> CsrMatrix {
        debug_assert_eq!(s.len(), self.n);
        let mut out = self.clone();
        for r in 0..self.n {
            for k in out.row_ptr[r]..out.row_ptr[r + 1] {
                out.vals[k] *= s[r] * s[out.col_idx[k]];
            }
        }
        out
    }

    /// Plain-text coordinate triplets, one `row col value` line per entry.
    pub fn write_triplets(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "{} {} {}", self.n, self.n, self.nnz())?;
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                writeln!(out, "{} {} {:.17e}", r, self.col_idx[k], self.vals[k])?;
            }
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Diagonally preconditioned conjugate gradients for s.p.d. systems.
/// Returns the iteration count and the final relative residual.
pub fn pcg_solve(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> (usize, f64) {
    let n = a.dim();
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let b_norm = norm(b).max(1e-300);
    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        let res = norm(&r) / b_norm;
        if res <= rel_tol {
            return (it, res);
        }
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            // Loss of definiteness in floating point; bail with what we have.
            return (it, res);
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    (max_iter, norm(&r) / b_norm)
}

/// Eigendecomposition of a small dense symmetric matrix by cyclic Jacobi
/// rotations. Returns ascending eigenvalues and the matching orthonormal
/// eigenvector columns.
pub fn jacobi_eigen(mat: &[f64], p: usize) -> (Vec<f64>, Vec<f64>) {
    debug_assert_eq!(mat.len(), p * p);
    let mut a = mat.to_vec();
    let mut q = vec![0.0; p * p];
    for i in 0..p {
        q[i * p + i] = 1.0;
    }
    let scale: f64 = (0..p).map(|i| a[i * p + i].abs()).fold(1e-300, f64::max);
    for _sweep in 0..64 {
        let mut off = 0.0f64;
        for i in 0..p {
            for j in (i + 1)..p {
                off = off.max(a[i * p + j].abs());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for i in 0..p {
            for j in (i + 1)..p {
                let apq = a[i * p + j];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a[i * p + i];
                let aqq = a[j * p + j];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..p {
                    let aik = a[i * p + k];
                    let ajk = a[j * p + k];
                    a[i * p + k] = c * aik - s * ajk;
                    a[j * p + k] = s * aik + c * ajk;
                }
                for k in 0..p {
                    let aki = a[k * p + i];
                    let akj = a[k * p + j];
                    a[k * p + i] = c * aki - s * akj;
                    a[k * p + j] = s * aki + c * akj;
                }
                for k in 0..p {
                    let qki = q[k * p + i];
                    let qkj = q[k * p + j];
                    q[k * p + i] = c * qki - s * qkj;
                    q[k * p + j] = s * qki + c * qkj;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| a[i * p + i].partial_cmp(&a[j * p + j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a[i * p + i]).collect();
    let mut vectors = vec![0.0; p * p];
    for (new, &old) in order.iter().enumerate() {
        for k in 0..p {
            vectors[k * p + new] = q[k * p + old];
        }
    }
    (values, vectors)
}

/// Twice-repeated modified Gram-Schmidt over the block columns.
fn orthonormalize(cols: &mut [Vec<f64>]) {
    for _pass in 0..2 {
        for i in 0..cols.len() {
            for j in 0..i {
                let (head, tail) = cols.split_at_mut(i);
                let proj = dot(&head[j], &tail[0]);
                for k in 0..head[j].len() {
                    tail[0][k] -= proj * head[j][k];
                }
            }
            let nrm = norm(&cols[i]);
            debug_assert!(nrm > 0.0, "degenerate block column");
            let inv = 1.0 / nrm.max(1e-300);
            for v in cols[i].iter_mut() {
                *v *= inv;
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct GenEigen {
    /// Ascending generalized eigenvalues of K u = mu M u.
    pub values: Vec<f64>,
    /// M-orthonormal eigenvectors, one per value.
    pub vectors: Vec<Vec<f64>>,
    /// Pencil residuals ||K u - mu M u|| / ||u||_M per value.
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

/// Smallest k eigenpairs of K u = mu M u with K sparse s.p.d. and M diagonal
/// positive, by block inverse subspace iteration on the symmetrized operator
/// B = M^{-1/2} K M^{-1/2} with warm-started inner conjugate gradients and
/// Rayleigh-Ritz extraction. Deterministic for a fixed seed.
pub fn smallest_generalized(
    k_mat: &CsrMatrix,
    m_diag: &[f64],
    k: usize,
    tol: f64,
    seed: u64,
) -> Result<GenEigen> {
    let n = k_mat.dim();
    if m_diag.len() != n {
        return Err(Error::invalid("mass diagonal length does not match the matrix"));
    }
    if k == 0 {
        return Err(Error::invalid("requested eigenvalue count must be positive"));
    }
    if k >= n {
        return Err(Error::invalid(format!(
            "requested {k} eigenvalues of a dimension-{n} pencil"
        )));
    }
    if m_diag.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::invalid("mass diagonal must be strictly positive"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("residual tolerance must be positive"));
    }
    let inv_sqrt: Vec<f64> = m_diag.iter().map(|&d| 1.0 / d.sqrt()).collect();
    let sqrt_d: Vec<f64> = m_diag.iter().map(|&d| d.sqrt()).collect();
    let b = k_mat.scaled(&inv_sqrt);

    let p = (k + 5).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    orthonormalize(&mut x);

    let max_outer = 300;
    let cg_cap = 40 * (n as f64).sqrt() as usize + 200;
    let mut theta = vec![0.0; p];
    let mut pencil_res = vec![f64::INFINITY; p];
    let mut cg_tol = 1e-2;
    let mut w: Vec<Vec<f64>> = vec![vec![0.0; n]; p];
    for outer in 0..max_outer {
        // Rayleigh-Ritz on the current block.
        for i in 0..p {
            b.matvec(&x[i], &mut w[i]);
        }
        let mut s = vec![0.0; p * p];
        for i in 0..p {
            for j in i..p {
                let v = dot(&x[i], &w[j]);
                s[i * p + j] = v;
                s[j * p + i] = v;
            }
        }
        let (vals, vecs) = jacobi_eigen(&s, p);
        theta.copy_from_slice(&vals);
        // Rotate both the block and its image so residuals need no new
        // matvec.
        let rotate = |cols: &[Vec<f64>]| -> Vec<Vec<f64>> {
            (0..p)
                .map(|new| {
                    let mut acc = vec![0.0; n];
                    for (old, col) in cols.iter().enumerate() {
                        let coef = vecs[old * p + new];
                        if coef != 0.0 {
                            for r in 0..n {
                                acc[r] += coef * col[r];
                            }
                        }
                    }
                    acc
                })
                .collect()
        };
        x = rotate(&x);
        w = rotate(&w);

        let mut worst_rel = 0.0f64;
        for i in 0..p {
            let mut acc = 0.0;
            for r in 0..n {
                let resid = w[i][r] - theta[i] * x[i][r];
                acc += (sqrt_d[r] * resid) * (sqrt_d[r] * resid);
            }
            // x[i] is unit, so ||u||_M = 1 for u = inv_sqrt .* x[i].
            pencil_res[i] = acc.sqrt();
            if i < k {
                let mut b_res = 0.0;
                for r in 0..n {
                    let resid = w[i][r] - theta[i] * x[i][r];
                    b_res += resid * resid;
                }
                worst_rel = worst_rel.max(b_res.sqrt() / theta[i].max(1e-300));
            }
        }
        if pencil_res[..k].iter().all(|&r| r < tol) {
            let values = theta[..k].to_vec();
            let vectors: Vec<Vec<f64>> = (0..k)
                .map(|i| (0..n).map(|r| inv_sqrt[r] * x[i][r]).collect())
                .collect();
            return Ok(GenEigen {
                values,
                vectors,
                residuals: pencil_res[..k].to_vec(),
                iterations: outer,
            });
        }

        // Inverse step: x <- B^{-1} x column by column, warm-started from
        // the Ritz approximation x/theta, inner tolerance tied to the
        // current subspace error so early iterations stay cheap.
        cg_tol = (0.2 * worst_rel).clamp(1e-13, cg_tol);
        let mut z = vec![0.0; n];
        for i in 0..p {
            let guess_scale = 1.0 / theta[i].max(1e-300);
            for r in 0..n {
                z[r] = x[i][r] * guess_scale;
            }
            pcg_solve(&b, &x[i], &mut z, cg_tol, cg_cap);
            x[i].copy_from_slice(&z);
        }
        orthonormalize(&mut x);
    }
    Err(Error::EigenNotConverged {
        values: theta[..k].to_vec(),
        residuals: pencil_res[..k].to_vec(),
        worst: pencil_res[..k].iter().cloned().fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, &t).unwrap()
    }

    #[test]
    fn csr_matvec_and_duplicates() {
        let m = CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 0, 2.0), (0, 1, 4.0), (1, 1, 5.0)])
            .unwrap();
        let mut y = vec![0.0; 2];
        m.matvec(&[1.0, 1.0], &mut y);
        assert_eq!(y, vec![7.0, 5.0]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(1, 0), 0.0);
    }

    #[test]
    fn csr_rejects_out_of_range() {
        assert!(CsrMatrix::from_triplets(2, &[(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn symmetry_defect_detects_asymmetry() {
        let m = CsrMatrix::from_triplets(2, &[(0, 1, 1.0), (1, 0, 1.0 + 1e-6)]).unwrap();
        assert!((m.symmetry_defect() - 1e-6).abs() < 1e-12);
        assert_eq!(laplacian_1d(5).symmetry_defect(), 0.0);
    }

    #[test]
    fn triplet_export_roundtrips() {
        let m = laplacian_1d(3);
        let mut buf = Vec::new();
        m.write_triplets(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "3 3 7");
        let mut total = 0.0;
        for line in lines {
            let f: Vec<f64> = line.split(' ').map(|t| t.parse().unwrap()).collect();
            total += f[2];
        }
        // Row sums of the 1-D Dirichlet Laplacian leave 1 at each end.
        assert!((total - 2.0).abs() < 1e-12);
    }

    #[test]
    fn pcg_solves_spd_system() {
        let n = 50;
        let a = laplacian_1d(n);
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut x = vec![0.0; n];
        let (_, res) = pcg_solve(&a, &b, &mut x, 1e-12, 10 * n);
        assert!(res < 1e-12);
        let mut ax = vec![0.0; n];
        a.matvec(&x, &mut ax);
        for i in 0..n {
            assert!((ax[i] - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn jacobi_matches_hand_eigenvalues() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let (vals, vecs) = jacobi_eigen(&[2.0, 1.0, 1.0, 2.0], 2);
        assert!((vals[0] - 1.0).abs() < 1e-14);
        assert!((vals[1] - 3.0).abs() < 1e-14);
        // Columns orthonormal.
        let c0 = [vecs[0], vecs[2]];
        let c1 = [vecs[1], vecs[3]];
        assert!((c0[0] * c1[0] + c0[1] * c1[1]).abs() < 1e-14);
    }

    #[test]
    fn jacobi_handles_diagonal_input() {
        let (vals, _) = jacobi_eigen(&[5.0, 0.0, 0.0, -2.0], 2);
        assert_eq!(vals, vec![-2.0, 5.0]);
    }

    #[test]
    fn generalized_matches_dense_oracle() {
        // 1-D Dirichlet Laplacian on n nodes: eigenvalues 4 sin^2(pi i / (2(n+1))).
        let n = 40;
        let a = laplacian_1d(n);
        let m = vec![1.0; n];
        let got = smallest_generalized(&a, &m, 3, 1e-10, 7).unwrap();
        for (i, v) in got.values.iter().enumerate() {
            let exact = 4.0 * ((i + 1) as f64 * std::f64::consts::PI / (2.0 * (n + 1) as f64))
                .sin()
                .powi(2);
            assert!((v - exact).abs() < 1e-9, "mode {i}: {v} vs {exact}");
        }
        for r in got.residuals {
            assert!(r < 1e-10);
        }
    }

    #[test]
    fn generalized_handles_nonuniform_mass() {
        // K u = mu M u with M = diag(w) equals M^{-1}K spectra; compare a
        // 2 x 2 closed form.
        let a = CsrMatrix::from_triplets(2, &[(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0)])
            .unwrap();
        let m = vec![1.0, 4.0];
        let got = smallest_generalized(&a, &m, 1, 1e-12, 3).unwrap();
        // det(K - mu M) = (2 - mu)(2 - 4 mu) - 1 = 0.
        let exact = (10.0 - (100.0f64 - 48.0).sqrt()) / 8.0;
        assert!((got.values[0] - exact).abs() < 1e-10);
        // Eigenvector is M-normalized.
        let u = &got.vectors[0];
        let mnorm = u[0] * u[0] + 4.0 * u[1] * u[1];
        assert!((mnorm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn generalized_is_seed_stable() {
        let n = 30;
        let a = laplacian_1d(n);
        let m = vec![1.0; n];
        let a1 = smallest_generalized(&a, &m, 2, 1e-11, 11).unwrap();
        let a2 = smallest_generalized(&a, &m, 2, 1e-11, 11).unwrap();
        assert_eq!(a1.values, a2.values);
        let b1 = smallest_generalized(&a, &m, 2, 1e-11, 99).unwrap();
        for i in 0..2 {
            assert!((a1.values[i] - b1.values[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn generalized_rejects_bad_arguments() {
        let a = laplacian_1d(5);
        assert!(smallest_generalized(&a, &[1.0; 4], 1, 1e-9, 0).is_err());
        assert!(smallest_generalized(&a, &[1.0; 5], 0, 1e-9, 0).is_err());
        assert!(smallest_generalized(&a, &[1.0; 5], 5, 1e-9, 0).is_err());
        assert!(smallest_generalized(&a, &[1.0, 1.0, 0.0, 1.0, 1.0], 1, 1e-9, 0).is_err());
    }

    #[test]
    fn degenerate_pair_is_resolved() {
        // Block-diagonal pencil with a repeated eigenvalue block.
        let t = [
            (0usize, 0usize, 3.0),
            (1, 1, 3.0),
            (2, 2, 7.0),
            (3, 3, 1.0),
            (4, 4, 9.0),
            (5, 5, 9.5),
            (6, 6, 10.0),
            (7, 7, 11.0),
        ];
        let a = CsrMatrix::from_triplets(8, &t).unwrap();
        let got = smallest_generalized(&a, &vec![1.0; 8], 3, 1e-12, 5).unwrap();
        assert!((got.values[0] - 1.0).abs() < 1e-11);
        assert!((got.values[1] - 3.0).abs() < 1e-11);
        assert!((got.values[2] - 3.0).abs() < 1e-11);
    }
}
