//! Planes in `R^d`: uniform sampling on `Gr(ℓ, d)`, deterministic grids for
//! low-dimensional sweeps, complements, projectors and principal angles.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg;
use crate::sphere;

/// Largest accepted `|BᵀB − I|` entry for a basis handed to [`Plane::new`].
pub const ORTHONORMAL_TOL: f64 = 1e-12;

/// A linear subspace given by an orthonormal basis (columns of a `d×ℓ`
/// matrix). The zero-dimensional plane only arises as the complement of the
/// whole space.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    basis: DMatrix<f64>,
}

impl Plane {
    /// Wrap an orthonormal basis; columns must be orthonormal to 1e-12.
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let (d, ell) = basis.shape();
        if ell == 0 || ell > d {
            return Err(Error::invalid(format!("plane dimension {ell} out of range 1..={d}")));
        }
        if basis.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("plane basis has non-finite entries"));
        }
        let defect = linalg::orthonormality_defect(&basis);
        if defect > ORTHONORMAL_TOL {
            return Err(Error::invalid(format!(
                "plane basis is not orthonormal (defect {defect:.3e})"
            )));
        }
        Ok(Self { basis })
    }

    /// Orthonormalize the columns of `spanning` (QR, non-negative `R`
    /// diagonal). Fails when the columns are numerically dependent.
    pub fn from_spanning(spanning: &DMatrix<f64>) -> Result<Self> {
        let (d, ell) = spanning.shape();
        if ell == 0 || ell > d {
            return Err(Error::invalid(format!("plane dimension {ell} out of range 1..={d}")));
        }
        if linalg::numerical_rank(spanning, 1e-10, 0.0) < ell {
            return Err(Error::invalid("spanning vectors are linearly dependent"));
        }
        Self::new(linalg::orthonormalize(spanning))
    }

    pub fn from_columns(d: usize, cols: &[Vec<f64>]) -> Result<Self> {
        if cols.iter().any(|c| c.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: cols.iter().map(|c| c.len()).find(|&l| l != d).unwrap_or(0),
                context: "plane spanning vector",
            });
        }
        let m = DMatrix::from_fn(d, cols.len(), |i, j| cols[j][i]);
        Self::from_spanning(&m)
    }

    pub fn line(v: &[f64]) -> Result<Self> {
        Self::from_columns(v.len(), &[v.to_vec()])
    }

    /// `span{e_i : i ∈ indices}`.
    pub fn coordinate(d: usize, indices: &[usize]) -> Result<Self> {
        let mut b = DMatrix::zeros(d, indices.len());
        for (c, &i) in indices.iter().enumerate() {
            if i >= d {
                return Err(Error::invalid(format!("coordinate index {i} >= {d}")));
            }
            b[(i, c)] = 1.0;
        }
        Self::new(b)
    }

    pub fn whole(d: usize) -> Self {
        Self {
            basis: DMatrix::identity(d, d),
        }
    }

    fn zero(d: usize) -> Self {
        Self {
            basis: DMatrix::zeros(d, 0),
        }
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn orthonormality_defect(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        linalg::orthonormality_defect(&self.basis)
    }

    /// Basis vectors as plain column lists (for reports).
    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|j| self.basis.column(j).iter().copied().collect())
            .collect()
    }

    pub fn projector(&self) -> DMatrix<f64> {
        linalg::projector(&self.basis)
    }

    /// The orthogonal complement; the complement of the whole space is the
    /// zero-dimensional plane.
    pub fn orthogonal_complement(&self) -> Plane {
        let d = self.ambient_dim();
        if self.dim() == 0 {
            return Plane::whole(d);
        }
        if self.dim() == d {
            return Plane::zero(d);
        }
        let ns = linalg::null_space(&self.basis.transpose(), 1e-10, 0.0);
        debug_assert_eq!(ns.ncols(), d - self.dim());
        // re-orthonormalize to reach the 1e-12 contract regardless of SVD noise
        Plane {
            basis: linalg::orthonormalize(&ns),
        }
    }

    /// Principal angles (ascending) between planes of equal dimension.
    pub fn principal_angles(&self, other: &Plane) -> Result<Vec<f64>> {
        if self.ambient_dim() != other.ambient_dim() || self.dim() != other.dim() {
            return Err(Error::invalid("principal angles need planes of equal dimension"));
        }
        if self.dim() == 0 {
            return Ok(Vec::new());
        }
        let c = self.basis.transpose() * &other.basis;
        let mut angles: Vec<f64> = c.singular_values().iter().map(|s| s.clamp(-1.0, 1.0).acos()).collect();
        angles.sort_by(f64::total_cmp);
        Ok(angles)
    }

    /// Largest principal angle, the metric used on `Gr(ℓ, d)`.
    pub fn distance(&self, other: &Plane) -> Result<f64> {
        Ok(self.principal_angles(other)?.last().copied().unwrap_or(0.0))
    }

    /// Distance from `v` to the plane, relative to `|v|`.
    pub fn relative_residual(&self, v: &[f64]) -> f64 {
        let x = nalgebra::DVector::from_column_slice(v);
        let n = x.norm();
        if n == 0.0 {
            return 0.0;
        }
        (&x - self.projector() * &x).norm() / n
    }
}

/// A plane drawn from the `O(d)`-invariant probability measure on
/// `Gr(ℓ, d)`: QR of a `d×ℓ` standard Gaussian matrix.
pub fn uniform_plane<R: Rng + ?Sized>(ell: usize, d: usize, rng: &mut R) -> Result<Plane> {
    if ell == 0 || ell > d {
        return Err(Error::invalid(format!("plane dimension {ell} out of range 1..={d}")));
    }
    loop {
        let g = DMatrix::from_fn(d, ell, |_, _| rng.sample::<f64, _>(StandardNormal));
        // rank deficiency has probability zero; redraw defensively
        if linalg::numerical_rank(&g, 1e-10, 0.0) == ell {
            return Plane::new(linalg::orthonormalize(&g));
        }
    }
}

/// Random point on `S^{d−1}` (normalized Gaussian).
pub fn uniform_direction<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        if g.iter().any(|&x| x != 0.0) {
            return sphere::normalize(&g);
        }
    }
}

/// Random orthogonal matrix (Haar, via QR of a Gaussian matrix).
pub fn random_rotation<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<f64> {
    uniform_plane(d, d, rng)
        .map(|p| p.basis)
        .unwrap_or_else(|_| DMatrix::identity(d, d))
}

/// Unit directions used for line grids: an angle grid `θ = tπ/res` in the
/// plane, the antipodally reduced cube-surface grid otherwise.
pub fn direction_grid(d: usize, res: usize) -> Vec<Vec<f64>> {
    let res = res.max(1);
    match d {
        0 => Vec::new(),
        1 => vec![vec![1.0]],
        2 => {
            let mut dirs: Vec<Vec<f64>> = (0..res)
                .map(|t| {
                    let th = std::f64::consts::PI * t as f64 / res as f64;
                    vec![th.cos(), th.sin()]
                })
                .collect();
            if res % 2 == 1 {
                dirs.push(vec![0.0, 1.0]);
            }
            dirs
        }
        _ => sphere::cube_grid(d, res, true),
    }
}

/// Deterministic grid on `Gr(ℓ, d)` with mesh at most [`plane_grid_mesh`].
///
/// Supported: `ℓ ∈ {1, d−1, d}` (which is every `ℓ` when `d ≤ 3`). Lines come
/// from [`direction_grid`] and hyperplanes are their complements; coordinate
/// planes are always present.
pub fn plane_grid(ell: usize, d: usize, resolution: usize) -> Result<Vec<Plane>> {
    if ell == 0 || ell > d {
        return Err(Error::invalid(format!("plane dimension {ell} out of range 1..={d}")));
    }
    if ell == d {
        return Ok(vec![Plane::whole(d)]);
    }
    let lines = || {
        direction_grid(d, resolution)
            .into_iter()
            .map(|u| Plane::line(&u))
            .collect::<Result<Vec<_>>>()
    };
    if ell == 1 {
        return lines();
    }
    if ell == d - 1 {
        return Ok(lines()?.iter().map(Plane::orthogonal_complement).collect());
    }
    Err(Error::Unsupported(format!(
        "plane grid for Gr({ell},{d}) (only lines and hyperplanes are gridded)"
    )))
}

/// Guaranteed principal-angle mesh of [`plane_grid`]: `c/resolution` with
/// `c = π/2` for `d = 2` and `c = π·sqrt(d−1)/4` for `d ≥ 3`.
pub fn plane_grid_mesh(ell: usize, d: usize, resolution: usize) -> f64 {
    if ell == d || d <= 1 {
        return 0.0;
    }
    let r = resolution.max(1) as f64;
    if d == 2 {
        std::f64::consts::FRAC_PI_2 / r
    } else {
        // chord h ⇒ angle 2·asin(h/2) ≤ π·h/2
        std::f64::consts::PI * ((d - 1) as f64).sqrt() / (4.0 * r)
    }
}
