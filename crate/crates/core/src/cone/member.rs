//! Membership decisions for a single `λ`.

use nalgebra::DVector;

use super::closed::{self, Family};
use super::search;
use super::{
    annihilates, restricted_residual, unit_lambda, vanishes_on_subspace, ConeVerdict, Decision, Method, Witness,
};
use crate::config::AnalysisConfig;
use crate::error::{Error, Result};
use crate::grassmannian::Plane;
use crate::operator::OperatorSpec;
use crate::sphere;

/// Samples per circle when bounding `max_{ξ∈σ} |𝔸^k(ξ)λ|` from below.
pub(crate) const CIRCLE_SAMPLES: usize = 64;
/// Grid planes kept for local refinement and certification.
const REFINE_TOP: usize = 3;

pub(crate) fn threshold(op: &OperatorSpec, cfg: &AnalysisConfig) -> f64 {
    cfg.tol_zero * op.coefficient_scale()
}

/// Result of testing whether `A⌊π` is elliptic at `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticCheck {
    pub elliptic: bool,
    /// Certified lower bound of `min_{ξ∈π, |ξ|=1} |𝔸^k(ξ)λ|` when elliptic,
    /// the smallest value found otherwise.
    pub margin: f64,
    /// Point of `π` (unit, in `R^d`) where the smallest value was found.
    pub witness: Vec<f64>,
}

/// Is the restriction of `A` to `π` elliptic at `λ`?
pub fn restricted_elliptic(
    op: &OperatorSpec,
    lambda: &[f64],
    plane: &Plane,
    cfg: &AnalysisConfig,
) -> Result<EllipticCheck> {
    let lambda = unit_lambda(op, lambda)?;
    let restricted = op.principal_part().restrict_to_plane(plane)?;
    let act = restricted.action(&lambda);
    let thr = threshold(op, cfg);
    let lift = |eta: &[f64]| -> Vec<f64> {
        (plane.basis() * DVector::from_column_slice(eta))
            .iter()
            .copied()
            .collect()
    };
    let (v, eta) = search::minimize_action(&act, cfg.resolution.max(4), 4);
    if v < thr {
        return Ok(EllipticCheck {
            elliptic: false,
            margin: v,
            witness: lift(&eta),
        });
    }
    match search::certify_action(&act, thr, cfg.max_cells) {
        Some(lb) => Ok(EllipticCheck {
            elliptic: true,
            margin: lb,
            witness: lift(&eta),
        }),
        None => Ok(EllipticCheck {
            elliptic: false,
            margin: v,
            witness: lift(&eta),
        }),
    }
}

/// Is `λ` in the wave cone `Λ_A = ⋃_ξ ker 𝔸^k(ξ)`?
pub fn wavecone_member(op: &OperatorSpec, lambda: &[f64], cfg: &AnalysisConfig) -> Result<ConeVerdict> {
    let lambda = unit_lambda(op, lambda)?;
    if let Some(fam) = closed::family(op, cfg) {
        if let Some(v) = closed::wave(&fam, &lambda, cfg) {
            return Ok(v);
        }
    }
    let d = op.d();
    if annihilates(op, &lambda) {
        let mut e1 = vec![0.0; d];
        e1[0] = 1.0;
        return Ok(ConeVerdict::new(
            Decision::Member,
            Some(Witness::Direction(e1)),
            0.0,
            Method::ExactAlgebra,
        ));
    }
    let act = op.action(&lambda);
    let thr = threshold(op, cfg);
    let (v, xi) = search::minimize_action(&act, cfg.resolution, 8);
    if v < thr {
        return Ok(ConeVerdict::new(
            Decision::Member,
            Some(Witness::Direction(xi)),
            v,
            Method::Search,
        ));
    }
    Ok(match search::certify_action(&act, thr, cfg.max_cells) {
        Some(lb) => ConeVerdict::new(Decision::NonMember, Some(Witness::Direction(xi)), lb, Method::Search),
        None => ConeVerdict::new(Decision::Inconclusive, Some(Witness::Direction(xi)), v, Method::Search),
    })
}

/// Best line for `Λ¹`-type questions: the grid direction maximizing
/// `|𝔸^k(ξ)λ|`, whose restriction is elliptic with exactly that margin.
fn best_line(op: &OperatorSpec, lambda: &[f64], cfg: &AnalysisConfig) -> (Vec<f64>, f64) {
    let act = op.action(lambda);
    let d = op.d();
    let grid = sphere::cube_grid(d, search::capped_res(d, cfg.resolution, 50_000), true);
    let mut best = (grid[0].clone(), act.norm_at(&grid[0]));
    for u in grid.iter().skip(1) {
        let v = act.norm_at(u);
        if v > best.1 {
            best = (u.clone(), v);
        }
    }
    best
}

struct PlaneSearch {
    witness: Option<(Plane, f64)>,
    /// Largest sampled minimum over the grid planes (None without a grid).
    grid_max: Option<f64>,
    best_seen: f64,
}

/// Look for a plane on which `A⌊π` is elliptic at `λ`.
fn search_elliptic_plane(op: &OperatorSpec, lambda: &[f64], ell: usize, cfg: &AnalysisConfig) -> Result<PlaneSearch> {
    let d = op.d();
    let act = op.action(lambda);
    let (planes, gridded) = search::plane_candidates(ell, d, cfg, cfg.plane_budget, 0x5EED_0001 + ell as u64);
    let n_grid = if gridded {
        planes.len() - cfg.plane_budget.min(planes.len())
    } else {
        0
    };
    let samples = 24;
    let mut scored: Vec<(f64, usize)> = planes
        .iter()
        .enumerate()
        .map(|(i, p)| (search::minimize_on_plane(&act, p.basis(), samples).0, i))
        .collect();
    let grid_max = gridded.then(|| scored[..n_grid].iter().map(|s| s.0).fold(0.0, f64::max));
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut best_seen = scored.first().map_or(0.0, |s| s.0);
    let thr = threshold(op, cfg);
    let mut rng = search::rng_for(cfg, 0x5EED_0002 + ell as u64);
    for &(score, i) in scored.iter().take(REFINE_TOP) {
        let (plane, refined) = if score > 0.0 || ell < d {
            search::refine_plane(&planes[i], 60, &mut rng, |p| {
                search::minimize_on_plane(&act, p.basis(), samples).0
            })
        } else {
            (planes[i].clone(), score)
        };
        best_seen = best_seen.max(refined);
        if refined < thr {
            continue;
        }
        let check = restricted_elliptic(op, lambda, &plane, cfg)?;
        if check.elliptic {
            return Ok(PlaneSearch {
                witness: Some((plane, check.margin)),
                grid_max,
                best_seen,
            });
        }
    }
    Ok(PlaneSearch {
        witness: None,
        grid_max,
        best_seen,
    })
}

fn check_ell(op: &OperatorSpec, ell: usize) -> Result<()> {
    if ell == 0 || ell > op.d() {
        return Err(Error::invalid(format!("ℓ = {ell} out of range 1..={}", op.d())));
    }
    Ok(())
}

/// Is `λ` in `Λ^ℓ_A`, i.e. is `A⌊π` non-elliptic at `λ` for every ℓ-plane?
pub fn ell_wavecone_member(op: &OperatorSpec, lambda: &[f64], ell: usize, cfg: &AnalysisConfig) -> Result<ConeVerdict> {
    check_ell(op, ell)?;
    let lambda = unit_lambda(op, lambda)?;
    let d = op.d();
    if annihilates(op, &lambda) {
        return Ok(ConeVerdict::new(Decision::Member, None, 0.0, Method::ExactAlgebra));
    }
    if ell == d {
        let v = wavecone_member(op, &lambda, cfg)?;
        return Ok(match v.decision {
            Decision::NonMember => ConeVerdict {
                witness: Some(Witness::Plane(Plane::whole(d))),
                ..v
            },
            _ => v,
        });
    }
    if ell == 1 {
        let (xi, margin) = best_line(op, &lambda, cfg);
        if margin > 0.0 {
            let line = Plane::line(&xi)?;
            return Ok(ConeVerdict::new(
                Decision::NonMember,
                Some(Witness::Plane(line)),
                margin,
                Method::ExactAlgebra,
            ));
        }
    }
    let fam = closed::family(op, cfg);
    if let Some(fam) = &fam {
        if let Some(v) = closed::ell_wave(fam, &lambda, ell, cfg) {
            if v.decision != Decision::NonMember || v.witness.is_some() {
                return Ok(v);
            }
            // known non-member: look for an explicit witness plane
            let s = search_elliptic_plane(op, &lambda, ell, cfg)?;
            return Ok(match s.witness {
                Some((p, m)) => ConeVerdict::new(Decision::NonMember, Some(Witness::Plane(p)), m, Method::ClosedForm),
                None => v,
            });
        }
    }
    let s = search_elliptic_plane(op, &lambda, ell, cfg)?;
    if let Some((p, m)) = s.witness {
        return Ok(ConeVerdict::new(
            Decision::NonMember,
            Some(Witness::Plane(p)),
            m,
            Method::Search,
        ));
    }
    let thr = threshold(op, cfg);
    if d <= 3 {
        if let Some(gmax) = s.grid_max {
            if gmax < thr && s.best_seen < thr {
                return Ok(ConeVerdict::new(Decision::Member, None, gmax, Method::Search));
            }
        }
    }
    Ok(ConeVerdict::new(
        Decision::Inconclusive,
        None,
        s.best_seen,
        Method::Search,
    ))
}

/// Orthonormal basis of `ν^⊥` in `R^3`.
pub(crate) fn circle_basis(normal: &[f64]) -> Option<nalgebra::DMatrix<f64>> {
    let line = Plane::line(normal).ok()?;
    Some(line.orthogonal_complement().basis().clone())
}

/// Search for a `(d−ℓ)`-plane `σ` on which the symbol annihilates `λ`.
fn search_vanishing_plane(op: &OperatorSpec, lambda: &[f64], ell: usize, cfg: &AnalysisConfig) -> Option<(Plane, f64)> {
    let d = op.d();
    let s = d - ell;
    let (planes, _) = search::plane_candidates(s, d, cfg, cfg.plane_budget, 0x5EED_0003 + ell as u64);
    let mut scored: Vec<(f64, usize)> = planes
        .iter()
        .enumerate()
        .map(|(i, p)| (restricted_residual(op, lambda, p).unwrap_or(f64::INFINITY), i))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for &(_, i) in scored.iter().take(2 * REFINE_TOP) {
        let (sigma, _, r) = search::vanishing_search(op, &planes[i], lambda, true);
        if vanishes_on_subspace(op, lambda, &sigma).unwrap_or(false) {
            return Some((sigma, r));
        }
    }
    None
}

/// Is `λ` in `N^ℓ_A = ⋃_π ⋂_{ξ∈π^⊥} ker 𝔸^k(ξ)`? Member witnesses are the
/// `(d−ℓ)`-plane `σ = π^⊥` on which the symbol annihilates `λ`.
pub fn n_cone_member(op: &OperatorSpec, lambda: &[f64], ell: usize, cfg: &AnalysisConfig) -> Result<ConeVerdict> {
    let d = op.d();
    if ell >= d {
        return Err(Error::invalid(format!("ℓ = {ell} out of range 0..={}", d - 1)));
    }
    let lambda = unit_lambda(op, lambda)?;
    if annihilates(op, &lambda) {
        let whole = Plane::whole(d);
        let r = restricted_residual(op, &lambda, &whole)?;
        return Ok(ConeVerdict::new(
            Decision::Member,
            Some(Witness::Plane(whole)),
            r,
            Method::ExactAlgebra,
        ));
    }
    if ell + 1 == d {
        // N^{d−1} is the wave cone: σ is a line
        let v = wavecone_member(op, &lambda, cfg)?;
        return Ok(match (&v.decision, &v.witness) {
            (Decision::Member, Some(Witness::Direction(xi))) => {
                let line = Plane::line(xi)?;
                let r = restricted_residual(op, &lambda, &line)?;
                ConeVerdict::new(Decision::Member, Some(Witness::Plane(line)), r, v.method)
            }
            (Decision::NonMember, _) => ConeVerdict {
                witness: Some(Witness::Plane(Plane::whole(d))),
                ..v
            },
            _ => v,
        });
    }
    if let Some(fam) = closed::family(op, cfg) {
        if let Some(v) = closed::n_member(&fam, &lambda, ell, cfg) {
            return Ok(v);
        }
        if !matches!(fam, Family::Div { .. }) {
            // N^ℓ ⊂ Λ^{ℓ+1} = {0} for these families when ℓ + 1 < d
            let v = ell_wavecone_member(op, &lambda, ell + 1, cfg)?;
            if v.decision == Decision::NonMember {
                return Ok(ConeVerdict {
                    method: Method::ClosedForm,
                    ..v
                });
            }
        }
    }
    // N^ℓ ⊂ Λ^{ℓ+1}: an elliptic (ℓ+1)-plane meets every (d−ℓ)-plane
    let chain = ell_wavecone_member(op, &lambda, ell + 1, cfg)?;
    if chain.decision == Decision::NonMember && chain.witness.is_some() {
        return Ok(chain);
    }
    if let Some((sigma, r)) = search_vanishing_plane(op, &lambda, ell, cfg) {
        return Ok(ConeVerdict::new(
            Decision::Member,
            Some(Witness::Plane(sigma)),
            r,
            Method::Search,
        ));
    }
    if d == 3 && ell == 1 {
        if let Some(lb) = super::dims::certify_no_vanishing_pair(op, cfg, Some(&lambda)) {
            return Ok(ConeVerdict::new(Decision::NonMember, None, lb, Method::Search));
        }
    }
    Ok(ConeVerdict::new(Decision::Inconclusive, None, 0.0, Method::Search))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::Builtin;

    fn cfg() -> AnalysisConfig {
        AnalysisConfig::default()
    }

    #[test]
    fn wave_cone_examples() {
        let lap = OperatorSpec::builtin_by_name("laplacian", Some(3), None).unwrap();
        let v = wavecone_member(&lap, &[1.0], &cfg()).unwrap();
        assert_eq!(v.decision, Decision::NonMember);
        assert!((v.margin - 1.0).abs() < 1e-12);
        let cubic = OperatorSpec::builtin_by_name("cubic3d", None, None).unwrap();
        let v = wavecone_member(&cubic, &[1.0], &cfg()).unwrap();
        assert_eq!(v.decision, Decision::Member);
        // generic path on the laplacian certifies a margin close to 1
        let generic = AnalysisConfig {
            closed_forms: false,
            ..cfg()
        };
        let v = wavecone_member(&lap, &[1.0], &generic).unwrap();
        assert_eq!(v.decision, Decision::NonMember);
        assert!(v.margin > 0.5 && v.margin <= 1.0 + 1e-12);
    }

    #[test]
    fn curl_rank_one_is_in_wave_cone() {
        let curl = OperatorSpec::builtin_operator(Builtin::Curl { d: 3, p: 2 });
        // λ = a⊗ξ₀ with a = (0.6, 0.8), ξ₀ = (1, 2, 2)/3
        let xi0 = [1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0];
        let a = [0.6, 0.8];
        let lambda: Vec<f64> = a.iter().flat_map(|ai| xi0.iter().map(move |x| ai * x)).collect();
        for c in [
            cfg(),
            AnalysisConfig {
                closed_forms: false,
                ..cfg()
            },
        ] {
            let v = wavecone_member(&curl, &lambda, &c).unwrap();
            assert_eq!(v.decision, Decision::Member);
            let Some(Witness::Direction(xi)) = v.witness else {
                panic!()
            };
            let dot: f64 = xi.iter().zip(&xi0).map(|(a, b)| a * b).sum();
            assert!((dot.abs() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn cubic_lambda_two_member_and_n_cone() {
        let cubic = OperatorSpec::builtin_by_name("cubic3d", None, None).unwrap();
        let v = ell_wavecone_member(&cubic, &[1.0], 2, &cfg()).unwrap();
        assert_eq!(v.decision, Decision::Member);
        let v = n_cone_member(&cubic, &[1.0], 2, &cfg()).unwrap();
        assert_eq!(v.decision, Decision::Member);
        let Some(Witness::Plane(sigma)) = &v.witness else {
            panic!()
        };
        assert!(vanishes_on_subspace(&cubic, &[1.0], sigma).unwrap());
        let v = n_cone_member(&cubic, &[1.0], 1, &cfg()).unwrap();
        assert_eq!(v.decision, Decision::NonMember, "{v:?}");
        // the sup over the best plane is ≈ 0.418; the certificate bounds the
        // circle RMS from below, which is smaller
        assert!(v.margin > 0.1 && v.margin < 0.42, "{}", v.margin);
    }

    #[test]
    fn restricted_ellipticity_of_div() {
        let div = OperatorSpec::builtin_by_name("div-matrix", Some(3), None).unwrap();
        // M = diag(1, 1, 0)/√2 has kernel e₃; π = span{e₁, e₂} avoids it
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let m = [s, 0.0, 0.0, 0.0, s, 0.0, 0.0, 0.0, 0.0];
        let pi = Plane::coordinate(3, &[0, 1]).unwrap();
        let c = restricted_elliptic(&div, &m, &pi, &cfg()).unwrap();
        assert!(c.elliptic);
        assert!(c.margin > 0.5 * s && c.margin <= s + 1e-12);
        let bad = Plane::coordinate(3, &[0, 2]).unwrap();
        assert!(!restricted_elliptic(&div, &m, &bad, &cfg()).unwrap().elliptic);
    }

    #[test]
    fn generic_and_closed_div_agree() {
        let div = OperatorSpec::builtin_by_name("div-matrix", Some(3), None).unwrap();
        let generic = AnalysisConfig {
            closed_forms: false,
            ..cfg()
        };
        // rank 2
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let m = [s, 0.0, 0.0, 0.0, 0.0, s, 0.0, 0.0, 0.0];
        for ell in 1..=3 {
            let a = ell_wavecone_member(&div, &m, ell, &cfg()).unwrap();
            let b = ell_wavecone_member(&div, &m, ell, &generic).unwrap();
            assert_eq!(a.decision, if ell > 2 { Decision::Member } else { Decision::NonMember });
            assert!(
                b.decision == a.decision || b.decision == Decision::Inconclusive,
                "ℓ={ell}: {b:?}"
            );
        }
    }
}
