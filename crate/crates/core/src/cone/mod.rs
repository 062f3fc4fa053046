//! Membership in the wave cone `Λ_A`, the ℓ-dimensional cones `Λ^ℓ_A` and
//! the cones `N^ℓ_A`, the thresholds `ℓ_A` and `ℓ*_A`, cocancellation and
//! the constant-rank property.
//!
//! Only the principal part `𝔸^k` enters any of these quantities. Answers
//! that quantify over a sphere or a Grassmannian are three-valued: a member
//! verdict carries a near-vanishing (or exactly vanishing) witness, a
//! non-member verdict carries a certified positive lower bound.

mod closed;
mod dims;
mod member;
pub mod oracle;
mod rank;
mod search;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::AnalysisConfig;
use crate::error::{Error, Result};
use crate::grassmannian::Plane;
use crate::linalg;
use crate::operator::OperatorSpec;

pub use dims::{
    compute_ell_a, compute_ell_star, lambda_ell_trivial, n_ell_trivial, DimensionBracket, Triviality, TrivialityVerdict,
};
pub use member::{ell_wavecone_member, n_cone_member, restricted_elliptic, wavecone_member, EllipticCheck};
pub use rank::{constant_rank_check, ConstantRank};

/// Restricted coefficients below this multiple of the coefficient scale
/// count as zero in [`vanishes_on_subspace`].
pub const VANISH_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Member,
    NonMember,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    ExactAlgebra,
    Search,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// A unit frequency `ξ`.
    Direction(Vec<f64>),
    Plane(Plane),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeVerdict {
    pub decision: Decision,
    pub witness: Option<Witness>,
    /// Symbol-times-λ norm supporting the decision: the certified lower
    /// bound for non-members, the residual at the witness for members.
    pub margin: f64,
    pub method: Method,
}

impl ConeVerdict {
    pub(crate) fn new(decision: Decision, witness: Option<Witness>, margin: f64, method: Method) -> Self {
        Self {
            decision,
            witness,
            margin,
            method,
        }
    }

    pub fn is_member(&self) -> bool {
        self.decision == Decision::Member
    }

    pub fn is_non_member(&self) -> bool {
        self.decision == Decision::NonMember
    }
}

/// A cone selector: `wave` (`Λ_A`), `ell:ℓ` (`Λ^ℓ_A`) or `n:ℓ` (`N^ℓ_A`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    Wave,
    Ell(usize),
    N(usize),
}

impl std::str::FromStr for Cone {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("cone '{s}': expected wave, ell:<ℓ> or n:<ℓ>"));
        if s == "wave" {
            return Ok(Cone::Wave);
        }
        let (kind, ell) = s.split_once(':').ok_or_else(bad)?;
        let ell: usize = ell.parse().map_err(|_| bad())?;
        match kind {
            "ell" => Ok(Cone::Ell(ell)),
            "n" => Ok(Cone::N(ell)),
            _ => Err(bad()),
        }
    }
}

impl std::fmt::Display for Cone {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cone::Wave => write!(f, "wave"),
            Cone::Ell(l) => write!(f, "ell:{l}"),
            Cone::N(l) => write!(f, "n:{l}"),
        }
    }
}

/// Membership of `λ` in the selected cone.
pub fn cone_member(op: &OperatorSpec, lambda: &[f64], cone: Cone, cfg: &AnalysisConfig) -> Result<ConeVerdict> {
    match cone {
        Cone::Wave => wavecone_member(op, lambda, cfg),
        Cone::Ell(l) => ell_wavecone_member(op, lambda, l, cfg),
        Cone::N(l) => n_cone_member(op, lambda, l, cfg),
    }
}

/// Check the length of `λ` and normalize it. Deviations of `|λ|` from 1 up
/// to 1e-6 are absorbed; larger ones are an input error.
pub fn unit_lambda(op: &OperatorSpec, lambda: &[f64]) -> Result<Vec<f64>> {
    if lambda.len() != op.m() {
        return Err(Error::DimensionMismatch {
            expected: op.m(),
            got: lambda.len(),
            context: "λ",
        });
    }
    let norm = lambda.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !norm.is_finite() || (norm - 1.0).abs() > 1e-6 {
        return Err(Error::invalid(format!("λ must be a unit vector (|λ| = {norm})")));
    }
    Ok(lambda.iter().map(|x| x / norm).collect())
}

/// Orthonormal basis (columns) of `ker 𝔸^k(ξ)`.
///
/// Singular values below `tol·σ_max` count as zero, with an absolute floor
/// of `tol` times the coefficient scale (`ξ` is normalized first), so an
/// identically vanishing symbol has the full space as kernel.
pub fn kernel_at(op: &OperatorSpec, xi: &[f64], tol: f64) -> Result<DMatrix<f64>> {
    op.principal_symbol(xi)?;
    let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::invalid("ξ must be nonzero"));
    }
    let unit: Vec<f64> = xi.iter().map(|x| x / norm).collect();
    let a = op.principal_matrix(&unit);
    Ok(linalg::null_space(&a, tol, tol * op.coefficient_scale()))
}

fn top_stack(op: &OperatorSpec) -> DMatrix<f64> {
    let blocks: Vec<DMatrix<f64>> = op.top_terms().map(|(_, a)| a.clone()).collect();
    linalg::vstack(&blocks)
}

/// `Λ¹_A = ⋂_ξ ker 𝔸^k(ξ) = ⋂_{|α|=k} ker A_α`, exactly: distinct monomials
/// are linearly independent, so the symbol annihilates `λ` identically iff
/// every top-order coefficient does.
pub fn common_kernel(op: &OperatorSpec, tol: f64) -> DMatrix<f64> {
    linalg::null_space(&top_stack(op), tol, tol * op.coefficient_scale())
}

/// `Λ¹_A = {0}`.
pub fn is_cocanceling(op: &OperatorSpec, tol: f64) -> bool {
    common_kernel(op, tol).ncols() == 0
}

/// Whether `A(λδ₀) = 0`, i.e. every top-order coefficient annihilates `λ`.
pub fn annihilates(op: &OperatorSpec, lambda: &[f64]) -> bool {
    let l = DVector::from_column_slice(lambda);
    let thr = VANISH_TOL * op.coefficient_scale() * l.norm();
    op.top_terms().all(|(_, a)| (a * &l).norm() < thr)
}

/// Norm of the stacked restricted coefficients `B_β λ` of `A⌊σ`.
pub fn restricted_residual(op: &OperatorSpec, lambda: &[f64], sigma: &Plane) -> Result<f64> {
    let b = op.principal_part().restrict_to_plane(sigma)?;
    let l = DVector::from_column_slice(lambda);
    Ok(b.terms()
        .iter()
        .map(|(_, a)| (a * &l).norm_squared())
        .sum::<f64>()
        .sqrt())
}

/// `𝔸^k(ξ)λ = 0` for every `ξ ∈ σ`, decided on the coefficients of the
/// restricted operator (each below 1e-10 times the coefficient scale).
pub fn vanishes_on_subspace(op: &OperatorSpec, lambda: &[f64], sigma: &Plane) -> Result<bool> {
    if lambda.len() != op.m() {
        return Err(Error::DimensionMismatch {
            expected: op.m(),
            got: lambda.len(),
            context: "λ",
        });
    }
    let b = op.principal_part().restrict_to_plane(sigma)?;
    let l = DVector::from_column_slice(lambda);
    let thr = VANISH_TOL * op.coefficient_scale();
    Ok(b.terms().iter().all(|(_, a)| (a * &l).norm() < thr))
}

/// `⋂_{ξ∈σ} ker 𝔸^k(ξ)`: the null space of the stacked coefficients of the
/// operator restricted to `σ`.
pub fn restricted_common_kernel(op: &OperatorSpec, sigma: &Plane, tol: f64) -> Result<DMatrix<f64>> {
    let b = op.principal_part().restrict_to_plane(sigma)?;
    let blocks: Vec<DMatrix<f64>> = b.terms().iter().map(|(_, a)| a.clone()).collect();
    if blocks.is_empty() {
        return Ok(DMatrix::identity(op.m(), op.m()));
    }
    Ok(linalg::null_space(
        &linalg::vstack(&blocks),
        tol,
        tol * op.coefficient_scale(),
    ))
}
