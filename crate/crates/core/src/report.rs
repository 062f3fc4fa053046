//! Machine-readable reports and their re-validation.
//!
//! Reports are JSON documents carrying `schema_version`. Floats are written
//! in shortest round-trip form, so a loaded report holds bit-identical
//! values. Validation reconstructs the operator from the report, recomputes
//! each witness residual and reruns each verdict under the echoed config;
//! all analyses are deterministic for a fixed seed.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cone::{
    self, compute_ell_a, compute_ell_star, constant_rank_check, Cone, ConeVerdict, ConstantRank, Decision,
    DimensionBracket, Method, Triviality, TrivialityVerdict, Witness,
};
use crate::config::AnalysisConfig;
use crate::error::{Error, Result};
use crate::grassmannian::Plane;
use crate::operator::OperatorSpec;

pub const SCHEMA_VERSION: u32 = 1;
/// Agreement required between stored and recomputed margins.
pub const VALIDATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WitnessRecord {
    Direction {
        xi: Vec<f64>,
    },
    /// Orthonormal basis vectors of the plane.
    Plane {
        basis: Vec<Vec<f64>>,
    },
}

impl WitnessRecord {
    fn from_witness(w: &Witness) -> Self {
        match w {
            Witness::Direction(xi) => WitnessRecord::Direction { xi: xi.clone() },
            Witness::Plane(p) => WitnessRecord::Plane { basis: p.columns() },
        }
    }

    fn to_witness(&self) -> Result<Witness> {
        Ok(match self {
            WitnessRecord::Direction { xi } => Witness::Direction(xi.clone()),
            WitnessRecord::Plane { basis } => {
                let d = basis.first().map_or(0, Vec::len);
                Witness::Plane(Plane::new(DMatrix::from_fn(d, basis.len(), |i, j| basis[j][i]))?)
            }
        })
    }
}

/// `|𝔸^k(ξ)λ|` for a direction, the norm of the restricted coefficients
/// applied to `λ` for a plane.
pub fn witness_residual(op: &OperatorSpec, lambda: &[f64], w: &Witness) -> Result<f64> {
    match w {
        Witness::Direction(xi) => {
            let a = op.principal_symbol(xi)?.matrix;
            Ok((a * DVector::from_column_slice(lambda)).norm())
        }
        Witness::Plane(p) => cone::restricted_residual(op, lambda, p),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSummary {
    pub d: usize,
    pub m: usize,
    pub n: usize,
    pub k: u32,
    pub homogeneous: bool,
    /// Reloadable operator document (builtins by name).
    pub spec: Value,
}

impl OperatorSummary {
    pub fn of(op: &OperatorSpec) -> Self {
        Self {
            d: op.d(),
            m: op.m(),
            n: op.n(),
            k: op.k(),
            homogeneous: op.is_homogeneous(),
            spec: op.to_json_value(),
        }
    }

    pub fn operator(&self) -> Result<OperatorSpec> {
        OperatorSpec::from_json_value(&self.spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub ell: usize,
    pub status: Triviality,
    pub method: Method,
    pub lambda: Option<Vec<f64>>,
    pub witness: Option<WitnessRecord>,
    pub margin: f64,
    /// Residual of `λ` at the witness, when both are present.
    pub witness_residual: Option<f64>,
}

impl VerdictRecord {
    fn new(op: &OperatorSpec, v: &TrivialityVerdict) -> Result<Self> {
        let residual = match (&v.lambda, &v.witness) {
            (Some(l), Some(w)) => Some(witness_residual(op, l, w)?),
            _ => None,
        };
        Ok(Self {
            ell: v.ell,
            status: v.status,
            method: v.method,
            lambda: v.lambda.clone(),
            witness: v.witness.as_ref().map(WitnessRecord::from_witness),
            margin: v.margin,
            witness_residual: residual,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub cocancellation_s: f64,
    pub constant_rank_s: f64,
    pub ell_a_s: f64,
    pub ell_star_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub operator: OperatorSummary,
    pub cocanceling: bool,
    /// Basis of `Λ¹_A = ⋂_α ker A_α` (empty iff cocanceling).
    pub lambda1_basis: Vec<Vec<f64>>,
    pub constant_rank: ConstantRank,
    pub ell_a: DimensionBracket,
    pub ell_star: DimensionBracket,
    /// Triviality of `Λ^ℓ_A`, ℓ = 1, 2, … until the first nontrivial cone.
    pub lambda_cones: Vec<VerdictRecord>,
    /// Triviality of `N^ℓ_A`, ℓ = 0, 1, … until the first nontrivial cone.
    pub n_cones: Vec<VerdictRecord>,
    pub config: AnalysisConfig,
    /// Wall-clock timings; only present on request so that reports stay
    /// byte-identical across runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl AnalysisReport {
    /// 0 when both thresholds are exact and the rank check is decided, 2
    /// otherwise.
    pub fn exit_code(&self) -> i32 {
        let undecided = !self.ell_a.exact
            || !self.ell_star.exact
            || matches!(self.constant_rank, ConstantRank::Inconclusive { .. });
        if undecided {
            2
        } else {
            0
        }
    }
}

fn columns(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.ncols()).map(|j| m.column(j).iter().copied().collect()).collect()
}

/// Full cone profile of `op`.
pub fn analyze(op: &OperatorSpec, cfg: &AnalysisConfig, with_timings: bool) -> Result<AnalysisReport> {
    cfg.validate()?;
    let t0 = Instant::now();
    let ker = cone::common_kernel(op, cfg.tol_rank);
    let t1 = Instant::now();
    let rank = constant_rank_check(op, cfg.rank_samples, cfg.tol_rank);
    let t2 = Instant::now();
    let (ell_a, lv) = compute_ell_a(op, cfg)?;
    let t3 = Instant::now();
    let (ell_star, nv) = compute_ell_star(op, cfg)?;
    let t4 = Instant::now();
    let secs = |a: Instant, b: Instant| (b - a).as_secs_f64();
    Ok(AnalysisReport {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        operator: OperatorSummary::of(op),
        cocanceling: ker.ncols() == 0,
        lambda1_basis: columns(&ker),
        constant_rank: rank,
        ell_a,
        ell_star,
        lambda_cones: lv.iter().map(|v| VerdictRecord::new(op, v)).collect::<Result<_>>()?,
        n_cones: nv.iter().map(|v| VerdictRecord::new(op, v)).collect::<Result<_>>()?,
        config: cfg.clone(),
        timings: with_timings.then(|| Timings {
            cocancellation_s: secs(t0, t1),
            constant_rank_s: secs(t1, t2),
            ell_a_s: secs(t2, t3),
            ell_star_s: secs(t3, t4),
            total_s: secs(t0, t4),
        }),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub operator: OperatorSummary,
    pub cone: String,
    /// The normalized input.
    pub lambda: Vec<f64>,
    pub decision: Decision,
    pub method: Method,
    pub margin: f64,
    pub witness: Option<WitnessRecord>,
    pub witness_residual: Option<f64>,
    pub config: AnalysisConfig,
}

impl MemberReport {
    /// 2 for an inconclusive decision, else 0.
    pub fn exit_code(&self) -> i32 {
        if self.decision == Decision::Inconclusive {
            2
        } else {
            0
        }
    }
}

/// Decide membership of `λ/|λ|` in `cone`.
pub fn member(op: &OperatorSpec, lambda: &[f64], cone_sel: Cone, cfg: &AnalysisConfig) -> Result<MemberReport> {
    cfg.validate()?;
    let norm = lambda.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::invalid("λ must be finite and nonzero"));
    }
    let unit: Vec<f64> = lambda.iter().map(|x| x / norm).collect();
    let v: ConeVerdict = cone::cone_member(op, &unit, cone_sel, cfg)?;
    let residual = v.witness.as_ref().map(|w| witness_residual(op, &unit, w)).transpose()?;
    Ok(MemberReport {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        operator: OperatorSummary::of(op),
        cone: cone_sel.to_string(),
        lambda: unit,
        decision: v.decision,
        method: v.method,
        margin: v.margin,
        witness: v.witness.as_ref().map(WitnessRecord::from_witness),
        witness_residual: residual,
        config: cfg.clone(),
    })
}

/// Outcome of re-validating a report: one line per failed check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Validation {
    pub checks: usize,
    pub failures: Vec<String>,
}

impl Validation {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= VALIDATION_TOL * a.abs().max(b.abs()).max(1.0)
}

fn check_schema(v: &mut Validation, version: u32) {
    v.check(version == SCHEMA_VERSION, || {
        format!("schema version {version} (expected {SCHEMA_VERSION})")
    });
}

fn check_records(
    v: &mut Validation,
    op: &OperatorSpec,
    label: &str,
    stored: &[VerdictRecord],
    fresh: &[TrivialityVerdict],
) -> Result<()> {
    v.check(stored.len() == fresh.len(), || {
        format!("{label}: {} verdicts stored, {} recomputed", stored.len(), fresh.len())
    });
    for (s, f) in stored.iter().zip(fresh) {
        let tag = format!("{label}[ℓ={}]", s.ell);
        v.check(s.status == f.status && s.method == f.method, || {
            format!("{tag}: status or method changed")
        });
        v.check(close(s.margin, f.margin), || {
            format!("{tag}: margin {} vs recomputed {}", s.margin, f.margin)
        });
        if let (Some(l), Some(w)) = (&s.lambda, &s.witness) {
            let r = witness_residual(op, l, &w.to_witness()?)?;
            let stored_r = s.witness_residual.unwrap_or(f64::NAN);
            v.check(close(stored_r, r), || {
                format!("{tag}: witness residual {stored_r} vs recomputed {r}")
            });
        }
    }
    Ok(())
}

/// Recompute everything in an analysis report.
pub fn validate_analysis(report: &AnalysisReport) -> Result<Validation> {
    let mut v = Validation {
        checks: 0,
        failures: Vec::new(),
    };
    check_schema(&mut v, report.schema_version);
    let op = report.operator.operator()?;
    let cfg = &report.config;
    cfg.validate()?;
    v.check(report.ell_a.lower <= report.ell_star.upper, || {
        "ell_A.lower exceeds ell_star.upper".into()
    });
    if report.ell_a.exact && report.ell_star.exact {
        v.check(report.ell_a.lower <= report.ell_star.lower, || {
            "ell_A exceeds ell_star".into()
        });
    }
    let ker = cone::common_kernel(&op, cfg.tol_rank);
    v.check(report.cocanceling == (ker.ncols() == 0), || {
        "cocancellation flag changed".into()
    });
    v.check(report.lambda1_basis.len() == ker.ncols(), || {
        "Λ¹ dimension changed".into()
    });
    for b in &report.lambda1_basis {
        v.check(cone::annihilates(&op, b), || {
            "stored Λ¹ vector is not annihilated".into()
        });
    }
    let fresh_rank = constant_rank_check(&op, cfg.rank_samples, cfg.tol_rank);
    v.check(fresh_rank == report.constant_rank, || {
        "constant-rank verdict changed".into()
    });
    let (fresh_a, lv) = compute_ell_a(&op, cfg)?;
    v.check(fresh_a == report.ell_a, || {
        format!("ell_A bracket {:?} vs recomputed {fresh_a:?}", report.ell_a)
    });
    check_records(&mut v, &op, "lambda_cones", &report.lambda_cones, &lv)?;
    let (fresh_star, nv) = compute_ell_star(&op, cfg)?;
    v.check(fresh_star == report.ell_star, || {
        format!("ell_star bracket {:?} vs recomputed {fresh_star:?}", report.ell_star)
    });
    check_records(&mut v, &op, "n_cones", &report.n_cones, &nv)?;
    for r in &report.n_cones {
        if let (Triviality::FoundNontrivial, Some(l), Some(WitnessRecord::Plane { .. })) =
            (r.status, &r.lambda, &r.witness)
        {
            let Witness::Plane(p) = r.witness.as_ref().unwrap().to_witness()? else {
                unreachable!()
            };
            v.check(cone::vanishes_on_subspace(&op, l, &p)?, || {
                format!("n_cones[ℓ={}]: λ does not vanish on σ", r.ell)
            });
        }
    }
    Ok(v)
}

/// Recompute a membership report.
pub fn validate_member(report: &MemberReport) -> Result<Validation> {
    let mut v = Validation {
        checks: 0,
        failures: Vec::new(),
    };
    check_schema(&mut v, report.schema_version);
    let op = report.operator.operator()?;
    let cone_sel: Cone = report.cone.parse()?;
    let fresh = member(&op, &report.lambda, cone_sel, &report.config)?;
    v.check(fresh.decision == report.decision, || "decision changed".into());
    v.check(close(fresh.margin, report.margin), || {
        format!("margin {} vs recomputed {}", report.margin, fresh.margin)
    });
    if let Some(w) = &report.witness {
        let r = witness_residual(&op, &report.lambda, &w.to_witness()?)?;
        let stored = report.witness_residual.unwrap_or(f64::NAN);
        v.check(close(stored, r), || {
            format!("witness residual {stored} vs recomputed {r}")
        });
    }
    Ok(v)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::invalid(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curl_report_round_trips_and_validates() {
        let op = OperatorSpec::builtin_by_name("curl", Some(2), None).unwrap();
        let r = analyze(&op, &AnalysisConfig::default(), false).unwrap();
        assert_eq!((r.ell_a.lower, r.ell_a.exact, r.ell_star.lower), (1, true, 1));
        assert!(r.cocanceling);
        assert_eq!(r.exit_code(), 0);
        let text = to_json(&r).unwrap();
        let back: AnalysisReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(to_json(&back).unwrap(), text);
        let v = validate_analysis(&back).unwrap();
        assert!(v.ok(), "{v:?}");
    }

    #[test]
    fn tampered_margin_is_caught() {
        let op = OperatorSpec::builtin_by_name("cubic3d", None, None).unwrap();
        let mut r = member(&op, &[2.0], Cone::Wave, &AnalysisConfig::default()).unwrap();
        assert_eq!(r.lambda, vec![1.0]);
        assert_eq!(r.decision, Decision::Member);
        assert!(validate_member(&r).unwrap().ok());
        r.witness_residual = Some(0.5);
        assert!(!validate_member(&r).unwrap().ok());
    }
}
