//! Numerical kernels shared by the cone decisions: minimization of
//! `|𝔸^k(ξ)λ|` over spheres and planes, rigorous Lipschitz bounds, and
//! branch-and-bound certification of positive minima.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::AnalysisConfig;
use crate::grassmannian::{self, Plane};
use crate::operator::{OperatorSpec, SymbolAction};
use crate::optim::{self, Block};
use crate::sphere;

/// Depth cap for cell refinement (cells shrink by 2 per level).
pub(crate) const MAX_DEPTH: usize = 16;
/// Largest grid used for sup-norm (Kellogg) estimates.
const SUP_GRID_CAP: usize = 200_000;

/// Number of points of the antipodal cube grid.
pub(crate) fn antipodal_count(d: usize, res: usize) -> usize {
    if d <= 1 {
        return 1;
    }
    ((2 * res + 1).pow(d as u32) - (2 * res - 1).pow(d as u32)) / 2
}

/// Largest cube resolution `≤ res` whose antipodal grid stays below `cap`.
pub(crate) fn capped_res(d: usize, res: usize, cap: usize) -> usize {
    let mut r = res.max(1);
    while r > 1 && antipodal_count(d, r) > cap {
        r -= 1;
    }
    r
}

/// Deterministic RNG for a named sub-search, derived from the config seed.
pub(crate) fn rng_for(cfg: &AnalysisConfig, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Rigorous bound on `sup_{|ξ|=1} |p(ξ)|` for a homogeneous vector polynomial
/// of degree `k`, given its values on a grid (Kellogg: the tangential
/// derivative is at most `k·sup`). Falls back to `crude`.
fn sup_bound<F: FnMut(&[f64]) -> f64>(dim: usize, k: u32, crude: f64, mut value: F) -> f64 {
    if dim <= 1 {
        return value(&[1.0]).min(crude);
    }
    // aim for k·h = 0.05 (a 5% overshoot), accept down to k·h = 0.5
    let res_for = |kh: f64| (((dim - 1) as f64).sqrt() * k as f64 / (2.0 * kh)).ceil() as usize;
    let coarsest = res_for(0.5);
    if antipodal_count(dim, coarsest) > SUP_GRID_CAP {
        return crude;
    }
    let res = capped_res(dim, res_for(0.05), SUP_GRID_CAP).max(coarsest);
    let gmax = sphere::cube_grid(dim, res, true)
        .iter()
        .map(|u| value(u))
        .fold(0.0, f64::max);
    match sphere::homogeneous_sup_bound(gmax, k, sphere::cube_grid_covering(dim, res)) {
        Some(b) => b.min(crude),
        None => crude,
    }
}

/// Lipschitz constant of `ξ ↦ 𝔸^k(ξ)λ` on the unit ball.
pub(crate) fn action_lipschitz(act: &SymbolAction) -> f64 {
    let k = act.order();
    let crude = act.crude_lipschitz();
    let sup = sup_bound(act.dim(), k, f64::INFINITY, |u| act.norm_at(u));
    (k as f64 * sup).min(crude)
}

/// Bound on `sup_{|ξ|=1} ‖𝔸^k(ξ)‖_F`; it also bounds how much `|𝔸^k(ξ)λ|`
/// moves when `λ` moves by a unit distance.
pub(crate) fn symbol_sup(op: &OperatorSpec) -> f64 {
    let crude = op.coefficient_scale();
    sup_bound(op.d(), op.k(), crude, |u| op.principal_matrix(u).norm())
}

/// Sampled-then-polished minimum of `|𝔸^k(ξ)λ|` over the unit sphere.
/// Returns `(value, argmin)`; ties go to the lowest grid index.
pub(crate) fn minimize_action(act: &SymbolAction, res: usize, starts: usize) -> (f64, Vec<f64>) {
    let d = act.dim();
    if d == 1 {
        return (act.norm_at(&[1.0]), vec![1.0]);
    }
    let grid = sphere::cube_grid(d, capped_res(d, res, 50_000), true);
    let mut scored: Vec<(f64, usize)> = grid.iter().enumerate().map(|(i, u)| (act.norm_at(u), i)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut best = (scored[0].0, grid[scored[0].1].clone());
    for &(_, i) in scored.iter().take(starts.max(1)) {
        let (x, r) = sphere::lm_on_sphere(&grid[i], 60, |x| (act.eval(x), act.jacobian(x)));
        if r < best.0 {
            best = (r, x);
        }
        if best.0 == 0.0 {
            break;
        }
    }
    best
}

/// Minimum of `|𝔸^k(Bη)λ|` over unit `η ∈ R^ℓ` for an orthonormal `B`,
/// returned with the minimizing `ξ = Bη`.
///
/// On 2-planes the half circle is swept at `samples` angles; scalar symbols
/// are solved by bisection at sign changes (`p(θ+π) = (−1)^k p(θ)` closes
/// the sweep), otherwise the best local minima are polished.
pub(crate) fn minimize_on_plane(act: &SymbolAction, basis: &DMatrix<f64>, samples: usize) -> (f64, Vec<f64>) {
    let ell = basis.ncols();
    let lift = |eta: &[f64]| -> Vec<f64> { (basis * DVector::from_column_slice(eta)).iter().copied().collect() };
    if ell == 1 {
        let xi = lift(&[1.0]);
        return (act.norm_at(&xi), xi);
    }
    let polish = |start: &[f64]| -> (f64, Vec<f64>) {
        let (eta, r) = sphere::lm_on_sphere(start, 40, |eta| {
            let xi = lift(eta);
            (act.eval(&xi), act.jacobian(&xi) * basis)
        });
        (r, lift(&eta))
    };
    if ell == 2 {
        let n = samples.max(8);
        let at = |t: f64| lift(&[t.cos(), t.sin()]);
        let thetas: Vec<f64> = (0..n).map(|j| std::f64::consts::PI * j as f64 / n as f64).collect();
        let vals: Vec<DVector<f64>> = thetas.iter().map(|&t| act.eval(&at(t))).collect();
        let norms: Vec<f64> = vals.iter().map(|v| v.norm()).collect();
        let mut best = (f64::INFINITY, at(0.0));
        for (j, &v) in norms.iter().enumerate() {
            if v < best.0 {
                best = (v, at(thetas[j]));
            }
        }
        if act.out_dim() == 1 {
            let sign_k = if act.order().is_multiple_of(2) { 1.0 } else { -1.0 };
            for j in 0..n {
                let (t0, v0) = (thetas[j], vals[j][0]);
                let (t1, v1) = if j + 1 < n {
                    (thetas[j + 1], vals[j + 1][0])
                } else {
                    (std::f64::consts::PI, sign_k * vals[0][0])
                };
                if v0 == 0.0 || v0 * v1 >= 0.0 {
                    continue;
                }
                let (mut a, mut b, mut fa) = (t0, t1, v0);
                for _ in 0..80 {
                    let c = 0.5 * (a + b);
                    let fc = act.eval(&at(c))[0];
                    if fc == 0.0 {
                        a = c;
                        b = c;
                        break;
                    }
                    if fa * fc < 0.0 {
                        b = c;
                    } else {
                        a = c;
                        fa = fc;
                    }
                }
                let xi = at(0.5 * (a + b));
                let v = act.norm_at(&xi);
                if v < best.0 {
                    best = (v, xi);
                }
            }
            return best;
        }
        // local minima of the sampled norm, best three polished
        let mut minima: Vec<(f64, usize)> = (0..n)
            .filter(|&j| norms[j] <= norms[(j + n - 1) % n] && norms[j] <= norms[(j + 1) % n])
            .map(|j| (norms[j], j))
            .collect();
        minima.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in minima.iter().take(3) {
            let t = thetas[j];
            let (r, xi) = polish(&[t.cos(), t.sin()]);
            if r < best.0 {
                best = (r, xi);
            }
        }
        return best;
    }
    let res = capped_res(ell, 6, samples.max(8));
    let grid = sphere::cube_grid(ell, res, true);
    let mut scored: Vec<(f64, usize)> = grid
        .iter()
        .enumerate()
        .map(|(i, eta)| (act.norm_at(&lift(eta)), i))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut best = (scored[0].0, lift(&grid[scored[0].1]));
    for &(_, i) in scored.iter().take(3) {
        let (r, xi) = polish(&grid[i]);
        if r < best.0 {
            best = (r, xi);
        }
    }
    best
}

/// Certified lower bound of `min_{|ξ|=1} |𝔸^k(ξ)λ|` when it exceeds
/// `threshold`; `None` when the branch-and-bound gives up.
///
/// Cells are refined until their bound keeps at least half the sampled
/// value, so the reported bound is within a factor 2 of the true minimum.
pub(crate) fn certify_action(act: &SymbolAction, threshold: f64, max_cells: usize) -> Option<f64> {
    if act.is_identically_zero() {
        return None;
    }
    let lip = action_lipschitz(act);
    certify_min(act.dim(), threshold, max_cells, lip, |u| act.norm_at(u))
}

/// Certified lower bound of `min f` over the unit sphere (antipodally even
/// `f` with Lipschitz constant `lip`), provided it exceeds `threshold`.
pub(crate) fn certify_min<F: FnMut(&[f64]) -> f64>(
    dim: usize,
    threshold: f64,
    max_cells: usize,
    lip: f64,
    mut f: F,
) -> Option<f64> {
    let mut lb = f64::INFINITY;
    let cert = sphere::branch_and_bound(dim, true, 2, MAX_DEPTH, max_cells, |u, r| {
        let v = f(u);
        let bound = v - lip * r;
        let excess = bound - threshold.max(0.5 * v);
        if excess > 0.0 {
            lb = lb.min(bound);
        }
        (v, excess)
    });
    cert.certified.then_some(lb)
}

/// Plane candidates for the ℓ-cone searches: the deterministic grid (when
/// available) followed by `extra` uniformly random planes.
pub(crate) fn plane_candidates(
    ell: usize,
    d: usize,
    cfg: &AnalysisConfig,
    extra: usize,
    stream: u64,
) -> (Vec<Plane>, bool) {
    let mut planes = Vec::new();
    let mut gridded = false;
    if let Ok(grid) = grassmannian::plane_grid(ell, d, capped_res(d, cfg.resolution, 5_000)) {
        planes = grid;
        gridded = true;
    }
    let mut rng = rng_for(cfg, stream);
    for _ in 0..extra {
        if let Ok(p) = grassmannian::uniform_plane(ell, d, &mut rng) {
            planes.push(p);
        }
    }
    (planes, gridded)
}

/// Chart of `Gr(ℓ, d)` around `base`: `X ↦ span(B + B⊥X)`.
pub(crate) fn chart_basis(base: &Plane, perp: &DMatrix<f64>, x: &[f64]) -> DMatrix<f64> {
    let (d, ell) = base.basis().shape();
    let s = perp.ncols();
    let xm = DMatrix::from_column_slice(s, ell, x);
    let _ = d;
    base.basis() + perp * xm
}

/// Hill-climb `score` over planes near `start` with a deterministic random
/// walk of shrinking step; returns the best plane found and its score.
pub(crate) fn refine_plane<F>(start: &Plane, iters: usize, rng: &mut ChaCha8Rng, mut score: F) -> (Plane, f64)
where
    F: FnMut(&Plane) -> f64,
{
    use rand_distr::{Distribution, StandardNormal};
    let ell = start.dim();
    let d = start.ambient_dim();
    if ell == d || ell == 0 {
        let s = score(start);
        return (start.clone(), s);
    }
    let mut best = start.clone();
    let mut best_s = score(start);
    let mut step = 0.2;
    for _ in 0..iters {
        let perp = best.orthogonal_complement();
        let x: Vec<f64> = (0..perp.dim() * ell)
            .map(|_| step * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
            .collect();
        let b = chart_basis(&best, perp.basis(), &x);
        if let Ok(cand) = Plane::from_spanning(&b) {
            let s = score(&cand);
            if s > best_s {
                best = cand;
                best_s = s;
                continue;
            }
        }
        step *= 0.85;
        if step < 1e-4 {
            break;
        }
    }
    (best, best_s)
}

/// Joint search for `(σ, λ)` with `𝔸^k(ξ)λ = 0` on all of `σ`, by
/// Levenberg–Marquardt on the restricted coefficients in a chart around
/// `sigma0`. With `lambda_fixed` only the plane moves.
pub(crate) fn vanishing_search(
    op: &OperatorSpec,
    sigma0: &Plane,
    lambda0: &[f64],
    lambda_fixed: bool,
) -> (Plane, Vec<f64>, f64) {
    let s = sigma0.dim();
    let d = sigma0.ambient_dim();
    let m = op.m();
    let perp = sigma0.orthogonal_complement();
    let nx = perp.dim() * s;
    let principal = op.principal_part();
    let residual = |x: &[f64], lambda: &[f64]| -> DVector<f64> {
        let basis = if nx > 0 {
            chart_basis(sigma0, perp.basis(), &x[..nx])
        } else {
            sigma0.basis().clone()
        };
        let b = principal.restrict_to_basis(&basis);
        let l = DVector::from_column_slice(lambda);
        let parts: Vec<f64> = b
            .terms()
            .iter()
            .flat_map(|(_, a)| (a * &l).iter().copied().collect::<Vec<_>>())
            .collect();
        if parts.is_empty() {
            DVector::zeros(1)
        } else {
            DVector::from_vec(parts)
        }
    };
    let (x, lambda) = if lambda_fixed {
        let (x, _) = optim::levenberg_marquardt(&vec![0.0; nx.max(1)], &[Block::Free(nx.max(1))], 60, |x| {
            residual(x, lambda0)
        });
        (x, lambda0.to_vec())
    } else {
        let mut x0 = vec![0.0; nx];
        x0.extend_from_slice(lambda0);
        let blocks = [Block::Free(nx), Block::Sphere(m)];
        let (x, _) = optim::levenberg_marquardt(&x0, &blocks, 80, |z| residual(&z[..nx], &z[nx..]));
        (x[..nx].to_vec(), x[nx..].to_vec())
    };
    let basis = if nx > 0 {
        chart_basis(sigma0, perp.basis(), &x[..nx])
    } else {
        sigma0.basis().clone()
    };
    let sigma = Plane::from_spanning(&basis).unwrap_or_else(|_| sigma0.clone());
    let _ = d;
    let r = crate::cone::restricted_residual(op, &lambda, &sigma).unwrap_or(f64::INFINITY);
    (sigma, lambda, r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lipschitz_bound_dominates_samples() {
        let op = OperatorSpec::builtin_by_name("cubic3d", None, None).unwrap();
        let act = op.action(&[1.0]);
        let lip = action_lipschitz(&act);
        // sup |c3| = 1 on S², Kellogg gives ≤ 3·sup, crude gives 9
        assert!((3.0 - 1e-12..9.0).contains(&lip), "{lip}");
        let grid = sphere::cube_grid(3, 10, false);
        for (i, u) in grid.iter().enumerate().step_by(37) {
            for v in grid.iter().skip(i % 11).step_by(53) {
                let dist = u.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                assert!((act.norm_at(u) - act.norm_at(v)).abs() <= lip * dist + 1e-12);
            }
        }
    }

    #[test]
    fn elliptic_minimum_is_certified() {
        let op = OperatorSpec::builtin_by_name("laplacian", Some(3), None).unwrap();
        let act = op.action(&[1.0]);
        let lb = certify_action(&act, 1e-8, 100_000).unwrap();
        assert!(lb > 0.5 && lb <= 1.0 + 1e-12, "{lb}");
        let (v, _) = minimize_action(&act, 6, 4);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cubic_zero_is_found() {
        let op = OperatorSpec::builtin_by_name("cubic3d", None, None).unwrap();
        let (v, xi) = minimize_action(&op.action(&[1.0]), 6, 4);
        assert!(v < 1e-14, "{v}");
        assert!((xi.iter().map(|x| x.powi(3)).sum::<f64>()).abs() < 1e-14);
    }
}
