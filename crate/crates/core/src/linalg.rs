//! Dense linear-algebra helpers: SVD-based null spaces and ranks, subspace
//! distances, and QR orthonormalization with a fixed sign convention.

use nalgebra::{DMatrix, DVector};

/// Singular values and right singular vectors (as rows of `v_t`) of `a`,
/// with `a` zero-padded so that `v_t` is square `m×m`.
fn full_right_svd(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let m = a.ncols();
    let rows = a.nrows().max(m);
    let mut padded = DMatrix::zeros(rows, m);
    padded.view_mut((0, 0), (a.nrows(), m)).copy_from(a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    (svd.singular_values, v_t)
}

fn threshold(sigma: &DVector<f64>, rel_tol: f64, abs_floor: f64) -> f64 {
    let smax = sigma.iter().cloned().fold(0.0, f64::max);
    (rel_tol * smax).max(abs_floor)
}

/// Orthonormal basis (columns) of the numerical null space of `a`: right
/// singular vectors with `σ ≤ max(rel_tol·σ_max, abs_floor)`.
pub fn null_space(a: &DMatrix<f64>, rel_tol: f64, abs_floor: f64) -> DMatrix<f64> {
    let m = a.ncols();
    if m == 0 {
        return DMatrix::zeros(0, 0);
    }
    if a.nrows() == 0 {
        return DMatrix::identity(m, m);
    }
    let (sigma, v_t) = full_right_svd(a);
    let thr = threshold(&sigma, rel_tol, abs_floor);
    let mut idx: Vec<usize> = (0..m).filter(|&i| sigma[i] <= thr).collect();
    idx.sort_by(|&i, &j| sigma[i].total_cmp(&sigma[j]).then(i.cmp(&j)));
    let mut out = DMatrix::zeros(m, idx.len());
    for (c, &i) in idx.iter().enumerate() {
        let mut v: DVector<f64> = v_t.row(i).transpose();
        canonical_sign(&mut v);
        out.set_column(c, &v);
    }
    out
}

/// Numerical rank: singular values strictly above `max(rel_tol·σ_max, abs_floor)`.
pub fn numerical_rank(a: &DMatrix<f64>, rel_tol: f64, abs_floor: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sigma = a.singular_values();
    let thr = threshold(&sigma, rel_tol, abs_floor);
    sigma.iter().filter(|&&s| s > thr).count()
}

/// Smallest singular value of `a` counted over all `m` columns (zero when
/// `a` has fewer rows than columns).
pub fn smallest_singular_value(a: &DMatrix<f64>) -> f64 {
    if a.nrows() < a.ncols() {
        return 0.0;
    }
    a.singular_values().iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Flip `v` so that its first entry of largest magnitude is positive.
pub fn canonical_sign(v: &mut DVector<f64>) {
    let mut best = 0.0;
    let mut sign = 1.0;
    for &x in v.iter() {
        if x.abs() > best * (1.0 + 1e-12) {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        v.neg_mut();
    }
}

/// Orthonormalize the columns of `a` by Householder QR, with the sign of each
/// column chosen so that `R` has a non-negative diagonal.
pub fn orthonormalize(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (d, ell) = a.shape();
    if ell == 0 {
        return DMatrix::zeros(d, 0);
    }
    let qr = a.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..ell {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q.columns(0, ell).into_owned()
}

/// Orthogonal projector `B Bᵀ` onto the column span of an orthonormal `B`.
pub fn projector(basis: &DMatrix<f64>) -> DMatrix<f64> {
    basis * basis.transpose()
}

/// Spectral-norm distance between the orthogonal projectors of two
/// orthonormal bases (`1` when the dimensions differ).
pub fn subspace_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.ncols() != b.ncols() {
        return 1.0;
    }
    if a.ncols() == 0 {
        return 0.0;
    }
    let diff = projector(a) - projector(b);
    diff.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Orthonormal basis of the intersection of the column spans of several
/// orthonormal bases, via the null space of the stacked complements.
pub fn intersect_subspaces(bases: &[DMatrix<f64>], dim: usize, tol: f64) -> DMatrix<f64> {
    let mut rows: Vec<DMatrix<f64>> = Vec::new();
    for b in bases {
        // x ∈ span(b) ⟺ (I − b bᵀ) x = 0
        rows.push(DMatrix::identity(dim, dim) - projector(b));
    }
    if rows.is_empty() {
        return DMatrix::identity(dim, dim);
    }
    null_space(&vstack(&rows), tol, tol)
}

/// Vertical concatenation of matrices with equal column counts.
pub fn vstack(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols);
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(b);
        r += b.nrows();
    }
    out
}

/// Maximum absolute entry of `BᵀB − I`.
pub fn orthonormality_defect(basis: &DMatrix<f64>) -> f64 {
    let g = basis.transpose() * basis;
    let n = g.nrows();
    (g - DMatrix::identity(n, n)).amax()
}
