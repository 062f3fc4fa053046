//! Model measures: `λ·H^ℓ⌊π` for rational planes and gradients of
//! indicators.

use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;

use super::{hausdorff_factor, DiscreteMeasure};
use crate::cone::restricted_common_kernel;
use crate::error::{Error, Result};
use crate::fft;
use crate::grassmannian::Plane;
use crate::operator::OperatorSpec;

/// Rank cutoff for the admissible polar set.
const ADMISSIBLE_TOL: f64 = 1e-10;
/// Gaussian width (in cells) of the normal profile of oblique planes.
const SMOOTHING_CELLS: f64 = 2.0;
/// Exploration cap for the integer search in `LatticePlane::from_plane`.
const SEARCH_CAP: usize = 2_000_000;

/// A plane spanned by integer vectors, hence closed on the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePlane {
    generators: Vec<Vec<i64>>,
    plane: Plane,
}

impl LatticePlane {
    pub fn new(generators: Vec<Vec<i64>>) -> Result<Self> {
        let d = generators
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::invalid("no generators"))?;
        if generators.iter().any(|g| g.len() != d) {
            return Err(Error::invalid("generators differ in length"));
        }
        let cols: Vec<Vec<f64>> = generators
            .iter()
            .map(|g| g.iter().map(|&x| x as f64).collect())
            .collect();
        let spanning = DMatrix::from_fn(d, cols.len(), |i, j| cols[j][i]);
        let plane = Plane::from_spanning(&spanning)?;
        if plane.dim() != generators.len() {
            return Err(Error::invalid("generators are linearly dependent"));
        }
        Ok(LatticePlane { generators, plane })
    }

    /// Recover integer generators of a plane by searching integer vectors of
    /// height `≤ max_height` (capped so the search stays bounded).
    pub fn from_plane(plane: &Plane, max_height: i64) -> Result<Self> {
        let d = plane.ambient_dim();
        let ell = plane.dim();
        let mut h = max_height.max(1);
        while h > 1 && ((2 * h + 1) as f64).powi(d as i32) > SEARCH_CAP as f64 {
            h -= 1;
        }
        let proj = plane.projector();
        let mut cands: Vec<Vec<i64>> = Vec::new();
        let side = (2 * h + 1) as usize;
        for idx in 0..side.pow(d as u32) {
            let z: Vec<i64> = fft::unravel(idx, side, d).into_iter().map(|j| j as i64 - h).collect();
            if z.iter().all(|&x| x == 0) {
                continue;
            }
            let zf = nalgebra::DVector::from_iterator(d, z.iter().map(|&x| x as f64));
            if (&zf - &proj * &zf).norm() <= 1e-9 * zf.norm() {
                cands.push(z);
            }
        }
        cands.sort_by_key(|z| (z.iter().map(|x| x * x).sum::<i64>(), z.clone()));
        let mut gens: Vec<Vec<i64>> = Vec::new();
        for z in cands {
            let mut trial = gens.clone();
            trial.push(z);
            if Self::new(trial.clone()).is_ok() {
                gens = trial;
                if gens.len() == ell {
                    return Self::new(gens);
                }
            }
        }
        Err(Error::invalid(format!(
            "plane does not close on the torus (no integer basis of height ≤ {h})"
        )))
    }

    pub fn generators(&self) -> &[Vec<i64>] {
        &self.generators
    }

    pub fn plane(&self) -> &Plane {
        &self.plane
    }

    /// ℓ-volume of a fundamental cell of `π ∩ Z^d`: the Gram volume of the
    /// generators divided by their index in the saturated lattice (the gcd
    /// of the maximal minors).
    pub fn covolume(&self) -> f64 {
        let d = self.plane.ambient_dim();
        let ell = self.generators.len();
        let mut sq = 0f64;
        let mut g = 0i128;
        for rows in combinations(d, ell) {
            let minor = int_det(
                &rows
                    .iter()
                    .map(|&r| self.generators.iter().map(|v| v[r] as i128).collect())
                    .collect::<Vec<Vec<i128>>>(),
            );
            sq += (minor as f64).powi(2);
            g = gcd(g, minor.abs());
        }
        sq.sqrt() / g as f64
    }

    /// The coordinate axes spanning `π` when it is a coordinate plane.
    pub fn coordinate_axes(&self) -> Option<Vec<usize>> {
        let p = self.plane.projector();
        let d = self.plane.ambient_dim();
        let mut axes = Vec::new();
        for i in 0..d {
            for j in 0..d {
                let want = if i == j { p[(i, i)].round() } else { 0.0 };
                if (p[(i, j)] - want).abs() > 1e-12 {
                    return None;
                }
            }
            if p[(i, i)] > 0.5 {
                axes.push(i);
            }
        }
        Some(axes)
    }

    /// Is the integer vector `xi` orthogonal to `π`?
    pub fn annihilates(&self, xi: &[i64]) -> bool {
        self.generators
            .iter()
            .all(|g| g.iter().zip(xi).map(|(a, b)| a * b).sum::<i64>() == 0)
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    (k - 1..n)
        .flat_map(|last| {
            combinations(last, k - 1).into_iter().map(move |mut c| {
                c.push(last);
                c
            })
        })
        .collect()
}

/// Exact determinant by fraction-free (Bareiss) elimination.
fn int_det(a: &[Vec<i128>]) -> i128 {
    let n = a.len();
    let mut m = a.to_vec();
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n {
        if m[k][k] == 0 {
            let Some(r) = (k + 1..n).find(|&r| m[r][k] != 0) else {
                return 0;
            };
            m.swap(k, r);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    if n == 0 {
        1
    } else {
        sign * m[n - 1][n - 1]
    }
}

/// `⋂_{ξ∈π^⊥} ker 𝔸^k(ξ)` as an orthonormal basis (columns); all of `R^m`
/// when `π` is the whole space.
pub fn admissible_polar_set(op: &OperatorSpec, plane: &Plane) -> Result<DMatrix<f64>> {
    if plane.ambient_dim() != op.d() {
        return Err(Error::DimensionMismatch {
            expected: op.d(),
            got: plane.ambient_dim(),
            context: "plane ambient dimension",
        });
    }
    if plane.dim() == op.d() {
        return Ok(DMatrix::identity(op.m(), op.m()));
    }
    restricted_common_kernel(op, &plane.orthogonal_complement(), ADMISSIBLE_TOL)
}

/// `λ·H^ℓ⌊π` on the `N^d` torus grid, for `π` through the origin.
///
/// Coordinate planes are sampled sharply (one cell thick, density
/// `2^ℓ/ω_ℓ · N^{d−ℓ}`). Oblique rational planes are built from their
/// Fourier series, which lives on `π^⊥ ∩ Z^d`, with a Gaussian normal
/// profile of two cells and the Nyquist frequencies dropped; the Fourier
/// support is then exactly that of the continuum measure.
pub fn model_rectifiable_measure(lambda: &[f64], plane: &LatticePlane, n: usize) -> Result<DiscreteMeasure> {
    let d = plane.plane().ambient_dim();
    let ell = plane.plane().dim();
    if lambda.iter().all(|&x| x == 0.0) || lambda.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("λ must be finite and nonzero"));
    }
    if n < 2 {
        return Err(Error::invalid("grid size must be at least 2"));
    }
    let m = lambda.len();
    let cells = n
        .checked_pow(d as u32)
        .ok_or_else(|| Error::invalid("grid too large"))?;
    let hf = hausdorff_factor(ell);
    let profile: Vec<f64> = match plane.coordinate_axes() {
        Some(axes) => {
            let dens = hf * (n as f64).powi((d - ell) as i32);
            (0..cells)
                .map(|i| {
                    let j = fft::unravel(i, n, d);
                    let on = (0..d).all(|a| axes.contains(&a) || j[a] == 0);
                    if on {
                        dens
                    } else {
                        0.0
                    }
                })
                .collect()
        }
        None => {
            let mass = hf * plane.covolume();
            let s = SMOOTHING_CELLS / n as f64;
            let mut spec = vec![Complex64::new(0.0, 0.0); cells];
            for (i, z) in spec.iter_mut().enumerate() {
                let xi: Vec<i64> = fft::unravel(i, n, d)
                    .into_iter()
                    .map(|k| fft::signed_frequency(k, n))
                    .collect();
                if n.is_multiple_of(2) && xi.iter().any(|&k| 2 * k.unsigned_abs() as usize == n) {
                    continue;
                }
                if plane.annihilates(&xi) {
                    let r2: f64 = xi.iter().map(|&k| (k * k) as f64).sum();
                    let pi = std::f64::consts::PI;
                    *z = Complex64::new(mass * (-2.0 * pi * pi * s * s * r2).exp(), 0.0);
                }
            }
            fft::fft_nd(&mut spec, n, d, true);
            spec.iter().map(|z| z.re).collect()
        }
    };
    let mut values = Vec::with_capacity(cells * m);
    for f in profile {
        values.extend(lambda.iter().map(|l| l * f));
    }
    DiscreteMeasure::grid(d, m, n, values)
}

/// Indicator sets on the torus for `bv_jump_example`. Bounds are fractions
/// of the unit cell, snapped to the grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// `{lo ≤ x_axis < hi}`.
    Slab { d: usize, axis: usize, lo: f64, hi: f64 },
    /// The cube `[lo, hi)^d`.
    Cube { d: usize, lo: f64, hi: f64 },
}

impl Shape {
    fn d(&self) -> usize {
        match *self {
            Shape::Slab { d, .. } | Shape::Cube { d, .. } => d,
        }
    }
}

/// `a ⊗ Du` for `u` the indicator of `shape`, with `D` the centered
/// difference scaled by `N`: `D_k u(j) = N·(u(j+e_k) − u(j−e_k))/2`. The
/// result is a `p×d` matrix field (row-major, `p = a.len()`).
pub fn bv_jump_example(shape: &Shape, a: &[f64], n: usize) -> Result<DiscreteMeasure> {
    let d = shape.d();
    if d == 0 || a.is_empty() || a.iter().all(|&x| x == 0.0) {
        return Err(Error::invalid("need d ≥ 1 and a nonzero jump vector a"));
    }
    let snap = |t: f64| (t * n as f64).round() as i64;
    let (lo, hi, axes): (i64, i64, Vec<usize>) = match *shape {
        Shape::Slab { d, axis, lo, hi } => {
            if axis >= d {
                return Err(Error::invalid("slab axis out of range"));
            }
            (snap(lo), snap(hi), vec![axis])
        }
        Shape::Cube { d, lo, hi } => (snap(lo), snap(hi), (0..d).collect()),
    };
    if !(0 <= lo && lo < hi && hi <= n as i64) || hi - lo >= n as i64 {
        return Err(Error::invalid(
            "degenerate shape: empty or the whole torus at this resolution",
        ));
    }
    let inside = |j: &[i64]| axes.iter().all(|&ax| (lo..hi).contains(&j[ax].rem_euclid(n as i64)));
    let cells = n
        .checked_pow(d as u32)
        .ok_or_else(|| Error::invalid("grid too large"))?;
    let p = a.len();
    let mut values = vec![0.0; cells * p * d];
    for i in 0..cells {
        let j: Vec<i64> = fft::unravel(i, n, d).into_iter().map(|x| x as i64).collect();
        for k in 0..d {
            let mut fwd = j.clone();
            fwd[k] += 1;
            let mut bwd = j.clone();
            bwd[k] -= 1;
            let du = n as f64 * (inside(&fwd) as i32 - inside(&bwd) as i32) as f64 / 2.0;
            if du != 0.0 {
                for (r, &ar) in a.iter().enumerate() {
                    values[i * p * d + r * d + k] = ar * du;
                }
            }
        }
    }
    DiscreteMeasure::grid(d, p * d, n, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covolume_uses_saturation() {
        assert_eq!(LatticePlane::new(vec![vec![2, 0]]).unwrap().covolume(), 1.0);
        let p = LatticePlane::new(vec![vec![1, 1, 0], vec![0, 1, 1]]).unwrap();
        assert!((p.covolume() - 3f64.sqrt()).abs() < 1e-12);
        let q = LatticePlane::new(vec![vec![1, 2]]).unwrap();
        assert!((q.covolume() - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn integer_basis_recovered() {
        let pl = Plane::line(&[1.0, -2.0, 0.0]).unwrap();
        let lp = LatticePlane::from_plane(&pl, 4).unwrap();
        assert_eq!(lp.generators().len(), 1);
        assert!((lp.covolume() - 5f64.sqrt()).abs() < 1e-12);
        let irr = Plane::line(&[1.0, std::f64::consts::SQRT_2]).unwrap();
        assert!(LatticePlane::from_plane(&irr, 20).is_err());
    }

    #[test]
    fn coordinate_plane_total_variation() {
        let lp = LatticePlane::new(vec![vec![0, 1, 0], vec![0, 0, 1]]).unwrap();
        assert_eq!(lp.coordinate_axes(), Some(vec![1, 2]));
        let mu = model_rectifiable_measure(&[0.6, 0.8], &lp, 16).unwrap();
        assert!((mu.total_variation() - hausdorff_factor(2)).abs() < 1e-12);
    }

    #[test]
    fn oblique_line_mass() {
        let lp = LatticePlane::new(vec![vec![1, 1]]).unwrap();
        assert!(lp.coordinate_axes().is_none());
        let mu = model_rectifiable_measure(&[1.0], &lp, 32).unwrap();
        assert!((mu.total_mass()[0] - 2f64.sqrt()).abs() < 1e-12);
        assert!((mu.total_variation() - 2f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn slab_polar_is_rank_one() {
        let mu = bv_jump_example(
            &Shape::Slab {
                d: 2,
                axis: 0,
                lo: 0.25,
                hi: 0.75,
            },
            &[3.0, 4.0],
            16,
        )
        .unwrap();
        assert!((mu.total_variation() - 2.0 * 5.0).abs() < 1e-12);
        let pol: Vec<Vec<f64>> = (0..mu.len()).filter_map(|i| mu.polar(i)).collect();
        assert_eq!(pol.len(), 4 * 16);
        for p in pol {
            // ±a⊗e₁/|a| in row-major 2×2 layout
            assert!((p[0].abs() - 0.6).abs() < 1e-12 && (p[2].abs() - 0.8).abs() < 1e-12);
            assert!(p[1] == 0.0 && p[3] == 0.0);
        }
    }
}
