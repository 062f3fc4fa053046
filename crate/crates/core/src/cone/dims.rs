//! Triviality of `Λ^ℓ_A` and `N^ℓ_A`, and the thresholds `ℓ_A` and `ℓ*_A`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::closed;
use super::member::{circle_basis, ell_wavecone_member, threshold, wavecone_member, CIRCLE_SAMPLES};
use super::search::{self, MAX_DEPTH};
use super::{common_kernel, vanishes_on_subspace, Decision, Method, Witness};
use crate::config::AnalysisConfig;
use crate::error::{Error, Result};
use crate::grassmannian::Plane;
use crate::linalg;
use crate::operator::OperatorSpec;
use crate::sphere;

/// λ-sphere certification is attempted only up to this input dimension.
const MAX_CERTIFIED_M: usize = 3;
/// Cap on λ cells in nested certifications.
const MAX_LAMBDA_CELLS: usize = 4_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Triviality {
    ConfirmedTrivial,
    FoundNontrivial,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrivialityVerdict {
    pub ell: usize,
    pub status: Triviality,
    pub method: Method,
    /// Unit `λ` in the cone when nontrivial.
    pub lambda: Option<Vec<f64>>,
    /// For `N^ℓ`, the plane `σ` on which the symbol annihilates `λ`.
    pub witness: Option<Witness>,
    /// Uniform certified lower bound when confirmed trivial by search.
    pub margin: f64,
}

impl TrivialityVerdict {
    fn confirmed(ell: usize, method: Method, margin: f64) -> Self {
        Self {
            ell,
            status: Triviality::ConfirmedTrivial,
            method,
            lambda: None,
            witness: None,
            margin,
        }
    }

    fn found(ell: usize, method: Method, lambda: Vec<f64>, witness: Option<Witness>) -> Self {
        Self {
            ell,
            status: Triviality::FoundNontrivial,
            method,
            lambda: Some(lambda),
            witness,
            margin: 0.0,
        }
    }

    fn inconclusive(ell: usize, margin: f64) -> Self {
        Self {
            ell,
            status: Triviality::Inconclusive,
            method: Method::Search,
            lambda: None,
            witness: None,
            margin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionBracket {
    pub lower: usize,
    pub upper: usize,
    pub exact: bool,
}

impl DimensionBracket {
    fn new(lower: usize, upper: usize) -> Self {
        let upper = upper.max(lower);
        Self {
            lower,
            upper,
            exact: lower == upper,
        }
    }
}

fn column(m: &DMatrix<f64>, j: usize) -> Vec<f64> {
    m.column(j).iter().copied().collect()
}

/// Smallest singular value of `𝔸^k(ξ)` over all `m` columns.
fn sigma_min(op: &OperatorSpec, xi: &[f64]) -> f64 {
    linalg::smallest_singular_value(&op.principal_matrix(xi))
}

/// Is `Λ^d = Λ_A` trivial, i.e. is `A` elliptic?
fn ellipticity(op: &OperatorSpec, cfg: &AnalysisConfig) -> TrivialityVerdict {
    let d = op.d();
    let thr = threshold(op, cfg);
    let grid = sphere::cube_grid(d, search::capped_res(d, cfg.resolution, 50_000), true);
    let mut scored: Vec<(f64, usize)> = grid.iter().enumerate().map(|(i, u)| (sigma_min(op, u), i)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for &(_, i) in scored.iter().take(6) {
        let xi = &grid[i];
        let a = op.principal_matrix(xi);
        let ns = linalg::null_space(&a, 0.0, f64::INFINITY);
        let l0 = column(&ns, 0);
        let blocks = [crate::optim::Block::Sphere(d), crate::optim::Block::Sphere(op.m())];
        let mut x0 = xi.clone();
        x0.extend_from_slice(&l0);
        let (x, _) = crate::optim::levenberg_marquardt(&x0, &blocks, 80, |z| {
            let a = op.principal_matrix(&z[..d]);
            a * DVector::from_column_slice(&z[d..])
        });
        let lambda = x[d..].to_vec();
        if let Ok(v) = wavecone_member(op, &lambda, cfg) {
            if v.decision == Decision::Member {
                return TrivialityVerdict::found(d, Method::Search, lambda, v.witness);
            }
        }
    }
    if op.n() < op.m() {
        // unreachable in practice: every symbol has a kernel
        let ker = linalg::null_space(&op.principal_matrix(&grid[0]), cfg.tol_rank, 0.0);
        return TrivialityVerdict::found(
            d,
            Method::ExactAlgebra,
            column(&ker, 0),
            Some(Witness::Direction(grid[0].clone())),
        );
    }
    // |σ_min(𝔸(ξ)) − σ_min(𝔸(η))| ≤ ‖𝔸(ξ) − 𝔸(η)‖ ≤ k·S·|ξ − η|
    let lip = op.k() as f64 * search::symbol_sup(op);
    match search::certify_min(d, thr, cfg.max_cells, lip, |u| sigma_min(op, u)) {
        Some(lb) => TrivialityVerdict::confirmed(d, Method::Search, lb),
        None => TrivialityVerdict::inconclusive(d, 0.0),
    }
}

/// Candidate unit λ: an antipodal grid on `S^{m−1}` plus random draws.
fn lambda_candidates(m: usize, cfg: &AnalysisConfig, stream: u64) -> Vec<Vec<f64>> {
    let mut out = sphere::cube_grid(m, search::capped_res(m, 4, 2_000), true);
    let mut rng = search::rng_for(cfg, stream);
    for _ in 0..cfg.lambda_budget {
        out.push(crate::grassmannian::uniform_direction(m, &mut rng));
    }
    out
}

/// `max_π min_{ξ∈π} |𝔸^k(ξ)λ|` over a coarse plane set (sampled).
fn best_plane_score(op: &OperatorSpec, lambda: &[f64], planes: &[Plane]) -> f64 {
    let act = op.action(lambda);
    planes
        .iter()
        .map(|p| search::minimize_on_plane(&act, p.basis(), 16).0)
        .fold(0.0, f64::max)
}

/// Is `Λ^ℓ_A = {0}`?
pub fn lambda_ell_trivial(op: &OperatorSpec, ell: usize, cfg: &AnalysisConfig) -> Result<TrivialityVerdict> {
    let d = op.d();
    let m = op.m();
    if ell == 0 || ell > d {
        return Err(Error::invalid(format!("ℓ = {ell} out of range 1..={d}")));
    }
    let ker = common_kernel(op, cfg.tol_rank);
    if ker.ncols() > 0 {
        return Ok(TrivialityVerdict::found(
            ell,
            Method::ExactAlgebra,
            column(&ker, 0),
            None,
        ));
    }
    if ell == 1 {
        let stack = linalg::vstack(&op.top_terms().map(|(_, a)| a.clone()).collect::<Vec<_>>());
        return Ok(TrivialityVerdict::confirmed(
            1,
            Method::ExactAlgebra,
            linalg::smallest_singular_value(&stack),
        ));
    }
    if let Some(fam) = closed::family(op, cfg) {
        let (trivial, lambda) = closed::lambda_trivial(&fam, ell, m);
        return Ok(match lambda {
            Some(l) if !trivial => TrivialityVerdict::found(ell, Method::ClosedForm, l, None),
            _ => TrivialityVerdict::confirmed(ell, Method::ClosedForm, 0.0),
        });
    }
    if ell == d {
        return Ok(ellipticity(op, cfg));
    }
    // search for λ whose best plane is as close to non-elliptic as possible
    let coarse = {
        let small = AnalysisConfig {
            resolution: (cfg.resolution / 2).max(2),
            ..cfg.clone()
        };
        search::plane_candidates(ell, d, &small, 8, 0x5EED_0101 + ell as u64).0
    };
    let mut scored: Vec<(f64, Vec<f64>)> = lambda_candidates(m, cfg, 0x5EED_0102 + ell as u64)
        .into_iter()
        .map(|l| (best_plane_score(op, &l, &coarse), l))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rng = search::rng_for(cfg, 0x5EED_0103 + ell as u64);
    for (score, l0) in scored.into_iter().take(4) {
        // random-walk descent of the best-plane score on the λ sphere
        let mut best = (score, l0);
        let mut step = 0.2;
        for _ in 0..40 {
            let dir = crate::grassmannian::uniform_direction(m, &mut rng);
            let cand = sphere::normalize(&best.1.iter().zip(&dir).map(|(a, b)| a + step * b).collect::<Vec<_>>());
            let s = best_plane_score(op, &cand, &coarse);
            if s < best.0 {
                best = (s, cand);
            } else {
                step *= 0.8;
            }
        }
        let v = ell_wavecone_member(op, &best.1, ell, cfg)?;
        if v.decision == Decision::Member {
            return Ok(TrivialityVerdict::found(ell, v.method, best.1, v.witness));
        }
    }
    if m > MAX_CERTIFIED_M {
        return Ok(TrivialityVerdict::inconclusive(ell, 0.0));
    }
    Ok(certify_lambda_ell(op, ell, cfg))
}

/// Uniform certificate that every unit λ has an elliptic ℓ-plane:
/// branch-and-bound on the λ sphere, with `|𝔸(ξ)λ − 𝔸(ξ)λ'| ≤ S·|λ − λ'|`.
fn certify_lambda_ell(op: &OperatorSpec, ell: usize, cfg: &AnalysisConfig) -> TrivialityVerdict {
    let thr = threshold(op, cfg);
    let s = search::symbol_sup(op);
    let principal = op.principal_part();
    let mut last: Option<Plane> = None;
    let mut failed = false;
    let cert = sphere::branch_and_bound(op.m(), true, 1, MAX_DEPTH, MAX_LAMBDA_CELLS, |l, r| {
        if failed {
            return (0.0, -1.0);
        }
        let need = thr + s * r;
        if let Some(p) = &last {
            if let Ok(b) = principal.restrict_to_plane(p) {
                if let Some(lb) = search::certify_action(&b.action(l), need, cfg.max_cells / 8) {
                    return (lb, lb - need);
                }
            }
        }
        match ell_wavecone_member(op, l, ell, cfg) {
            Ok(v) if v.decision == Decision::NonMember => {
                if let Some(Witness::Plane(p)) = v.witness {
                    last = Some(p);
                }
                (v.margin, v.margin - need)
            }
            Ok(v) if v.decision == Decision::Member => {
                failed = true;
                (0.0, -1.0)
            }
            _ => (0.0, -1.0),
        }
    });
    if cert.certified {
        TrivialityVerdict::confirmed(ell, Method::Search, cert.min_excess + thr)
    } else {
        TrivialityVerdict::inconclusive(ell, cert.min_value)
    }
}

/// Is `N^ℓ_A = {0}`?
pub fn n_ell_trivial(op: &OperatorSpec, ell: usize, cfg: &AnalysisConfig) -> Result<TrivialityVerdict> {
    let d = op.d();
    let m = op.m();
    if ell >= d {
        return Err(Error::invalid(format!("ℓ = {ell} out of range 0..={}", d - 1)));
    }
    let ker = common_kernel(op, cfg.tol_rank);
    if ker.ncols() > 0 {
        return Ok(TrivialityVerdict::found(
            ell,
            Method::ExactAlgebra,
            column(&ker, 0),
            Some(Witness::Plane(Plane::whole(d))),
        ));
    }
    if ell == 0 {
        let stack = linalg::vstack(&op.top_terms().map(|(_, a)| a.clone()).collect::<Vec<_>>());
        return Ok(TrivialityVerdict::confirmed(
            0,
            Method::ExactAlgebra,
            linalg::smallest_singular_value(&stack),
        ));
    }
    if let Some(fam) = closed::family(op, cfg) {
        let (trivial, w) = closed::n_trivial(&fam, ell, m);
        return Ok(match w {
            Some((l, sigma)) if !trivial => {
                TrivialityVerdict::found(ell, Method::ClosedForm, l, Some(Witness::Plane(sigma)))
            }
            _ => TrivialityVerdict::confirmed(ell, Method::ClosedForm, 0.0),
        });
    }
    if ell + 1 == d {
        // N^{d−1} = Λ_A
        let v = lambda_ell_trivial(op, d, cfg)?;
        if let (Triviality::FoundNontrivial, Some(l)) = (v.status, &v.lambda) {
            let w = wavecone_member(op, l, cfg)?;
            if let Some(Witness::Direction(xi)) = &w.witness {
                return Ok(TrivialityVerdict {
                    ell,
                    witness: Some(Witness::Plane(Plane::line(xi)?)),
                    ..v
                });
            }
        }
        return Ok(TrivialityVerdict {
            ell,
            witness: None,
            ..v
        });
    }
    // N^ℓ ⊂ Λ^{ℓ+1}
    let chain = lambda_ell_trivial(op, ell + 1, cfg)?;
    if chain.status == Triviality::ConfirmedTrivial {
        return Ok(TrivialityVerdict { ell, ..chain });
    }
    if let Some((l, sigma)) = search_vanishing_pair(op, ell, cfg) {
        return Ok(TrivialityVerdict::found(
            ell,
            Method::Search,
            l,
            Some(Witness::Plane(sigma)),
        ));
    }
    if d == 3 && ell == 1 {
        return Ok(match certify_no_vanishing_pair(op, cfg, None) {
            Some(lb) => TrivialityVerdict::confirmed(ell, Method::Search, lb),
            None => TrivialityVerdict::inconclusive(ell, 0.0),
        });
    }
    Ok(TrivialityVerdict::inconclusive(ell, 0.0))
}

/// Joint search for `(λ, σ)` with `σ` a `(d−ℓ)`-plane and `𝔸^k(ξ)λ = 0` on `σ`.
fn search_vanishing_pair(op: &OperatorSpec, ell: usize, cfg: &AnalysisConfig) -> Option<(Vec<f64>, Plane)> {
    let d = op.d();
    let (planes, _) = search::plane_candidates(d - ell, d, cfg, cfg.plane_budget, 0x5EED_0201 + ell as u64);
    let mut scored: Vec<(f64, usize, Vec<f64>)> = planes
        .iter()
        .enumerate()
        .filter_map(|(i, p)| {
            let b = op.principal_part().restrict_to_plane(p).ok()?;
            let blocks: Vec<DMatrix<f64>> = b.terms().iter().map(|(_, a)| a.clone()).collect();
            let stack = linalg::vstack(&blocks);
            let ns = linalg::null_space(&stack, 0.0, f64::INFINITY);
            let l = column(&ns, 0);
            let r = (&stack * DVector::from_column_slice(&l)).norm();
            Some((r, i, l))
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for (_, i, l0) in scored.into_iter().take(6) {
        let (sigma, l, _) = search::vanishing_search(op, &planes[i], &l0, false);
        if vanishes_on_subspace(op, &l, &sigma).unwrap_or(false) {
            return Some((l, sigma));
        }
    }
    None
}

/// Certified lower bound of `min_{λ, σ} max_{ξ∈σ} |𝔸^k(ξ)λ|` over unit `λ`
/// (or the given `λ`) and 2-planes `σ ⊂ R^3`.
///
/// For a normal `ν` the max over the circle of `σ = ν^⊥` dominates the RMS,
/// and the mean of `|𝔸^k(ξ)λ|²` over the circle is `λᵀQ(ν)λ`. The integrand
/// is a trigonometric polynomial of degree `2k`, so equispaced samples give
/// `Q` exactly. Moving `ν` by `c` moves each circle point by at most `c`,
/// which changes every `|𝔸^k(ξ)λ|` (hence the RMS) by at most `k·S·c`.
pub(crate) fn certify_no_vanishing_pair(
    op: &OperatorSpec,
    cfg: &AnalysisConfig,
    lambda: Option<&[f64]>,
) -> Option<f64> {
    let thr = threshold(op, cfg);
    let lip_nu = op.k() as f64 * search::symbol_sup(op);
    let samples = (2 * op.k() as usize + 2).max(CIRCLE_SAMPLES / 4);
    let mut lb = f64::INFINITY;
    let cert = sphere::branch_and_bound(3, true, 2, MAX_DEPTH, cfg.max_cells, |nu, r| {
        let Some(b) = circle_basis(nu) else { return (0.0, -1.0) };
        let mut q = DMatrix::zeros(op.m(), op.m());
        for j in 0..samples {
            let t = std::f64::consts::PI * j as f64 / samples as f64;
            let xi: Vec<f64> = (0..3).map(|i| b[(i, 0)] * t.cos() + b[(i, 1)] * t.sin()).collect();
            let a = op.principal_matrix(&xi);
            q += a.transpose() * a;
        }
        q /= samples as f64;
        let v = match lambda {
            Some(l) => {
                let l = DVector::from_column_slice(l);
                (l.transpose() * &q * &l)[(0, 0)].max(0.0).sqrt()
            }
            None => q.symmetric_eigenvalues().min().max(0.0).sqrt(),
        };
        let bound = v - lip_nu * r;
        let excess = bound - thr.max(0.5 * v);
        if excess > 0.0 {
            lb = lb.min(bound);
        }
        (v, excess)
    });
    cert.certified.then_some(lb)
}

/// `ℓ_A = max{ℓ : Λ^ℓ_A = {0}}` (0 when `Λ¹_A ≠ {0}`), with the per-ℓ
/// verdicts. Triviality is antitone in ℓ, so the scan stops at the first
/// nontrivial cone.
pub fn compute_ell_a(op: &OperatorSpec, cfg: &AnalysisConfig) -> Result<(DimensionBracket, Vec<TrivialityVerdict>)> {
    let d = op.d();
    let mut verdicts = Vec::new();
    let mut lower = 0;
    let mut upper = d;
    for ell in 1..=d {
        let v = lambda_ell_trivial(op, ell, cfg)?;
        let status = v.status;
        verdicts.push(v);
        match status {
            Triviality::ConfirmedTrivial => lower = ell,
            Triviality::FoundNontrivial => {
                upper = ell - 1;
                break;
            }
            Triviality::Inconclusive => {}
        }
    }
    Ok((DimensionBracket::new(lower, upper), verdicts))
}

/// `ℓ*_A = min{ℓ : N^ℓ_A ≠ {0}}`, or `d` when every `N^ℓ` with `ℓ < d` is
/// trivial. The cones grow with ℓ.
pub fn compute_ell_star(op: &OperatorSpec, cfg: &AnalysisConfig) -> Result<(DimensionBracket, Vec<TrivialityVerdict>)> {
    let d = op.d();
    let mut verdicts = Vec::new();
    let mut lower = 0;
    let mut upper = d;
    for ell in 0..d {
        let v = n_ell_trivial(op, ell, cfg)?;
        let status = v.status;
        verdicts.push(v);
        match status {
            Triviality::ConfirmedTrivial => lower = ell + 1,
            Triviality::FoundNontrivial => {
                upper = ell;
                break;
            }
            Triviality::Inconclusive => {}
        }
    }
    Ok((DimensionBracket::new(lower, upper), verdicts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(name: &str, d: usize) -> OperatorSpec {
        OperatorSpec::builtin_by_name(name, Some(d), None).unwrap()
    }

    #[test]
    fn closed_form_brackets() {
        let cfg = AnalysisConfig::default();
        for (name, d, a, s) in [
            ("curl", 3, 2, 2),
            ("curl", 2, 1, 1),
            ("div-matrix", 3, 1, 1),
            ("laplacian", 3, 3, 3),
        ] {
            let o = op(name, d);
            let (ba, _) = compute_ell_a(&o, &cfg).unwrap();
            let (bs, _) = compute_ell_star(&o, &cfg).unwrap();
            assert_eq!((ba.lower, ba.upper), (a, a), "{name} d={d}");
            assert_eq!((bs.lower, bs.upper), (s, s), "{name} d={d}");
        }
    }

    #[test]
    fn cubic_gap() {
        let cfg = AnalysisConfig::default();
        let o = op("cubic3d", 3);
        let (ba, va) = compute_ell_a(&o, &cfg).unwrap();
        assert!(ba.exact && ba.lower == 1, "{ba:?} {va:?}");
        let (bs, vs) = compute_ell_star(&o, &cfg).unwrap();
        assert!(bs.exact && bs.lower == 2, "{bs:?} {vs:?}");
    }

    #[test]
    fn generic_laplacian_is_elliptic() {
        let cfg = AnalysisConfig {
            closed_forms: false,
            ..AnalysisConfig::default()
        };
        let v = lambda_ell_trivial(&op("laplacian", 2), 2, &cfg).unwrap();
        assert_eq!(v.status, Triviality::ConfirmedTrivial);
        assert!(v.margin > 0.5);
    }
}
