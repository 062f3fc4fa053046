//! Brute-force grid sweeps for `d ≤ 3`, independent of the search and
//! certification machinery. Values are sampled, never certified.

use serde::Serialize;

use super::{unit_lambda, Cone};
use crate::error::{Error, Result};
use crate::grassmannian::{self, Plane};
use crate::operator::OperatorSpec;
use crate::sphere;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub cone: String,
    /// wave: `min_ξ |𝔸(ξ)λ|`; ell:ℓ: `max_π min_{ξ∈π} |𝔸(ξ)λ|`;
    /// n:ℓ: `min_σ max_{ξ∈σ} |𝔸(ξ)λ|`. Near zero suggests membership.
    pub value: f64,
    /// Optimizing direction (wave) or plane basis columns.
    pub argopt: Vec<Vec<f64>>,
    pub planes: usize,
    pub points_per_plane: usize,
}

fn plane_points(p: &Plane, res: usize) -> Vec<Vec<f64>> {
    let b = p.basis();
    sphere::cube_grid(p.dim(), res, true)
        .into_iter()
        .map(|u| (b * nalgebra::DVector::from_column_slice(&u)).iter().copied().collect())
        .collect()
}

/// Sweep the deterministic plane grid at `resolution`; points on each plane
/// come from a cube grid of resolution `8·resolution`.
pub fn grid_oracle(op: &OperatorSpec, lambda: &[f64], cone: Cone, resolution: usize) -> Result<OracleResult> {
    let d = op.d();
    if d > 3 {
        return Err(Error::Unsupported("grid oracle is limited to d ≤ 3".into()));
    }
    let lambda = unit_lambda(op, lambda)?;
    let act = op.action(&lambda);
    let inner = 8 * resolution.max(1);
    let (planes, maximize_over_planes, plane_min) = match cone {
        Cone::Wave => {
            let pts = sphere::cube_grid(d, inner, true);
            let (i, v) = pts
                .iter()
                .map(|u| act.norm_at(u))
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
            return Ok(OracleResult {
                cone: cone.to_string(),
                value: v,
                argopt: vec![pts[i].clone()],
                planes: 1,
                points_per_plane: pts.len(),
            });
        }
        Cone::Ell(l) => {
            if l == 0 || l > d {
                return Err(Error::invalid(format!("ℓ must lie in 1..={d}")));
            }
            (grassmannian::plane_grid(l, d, resolution)?, true, true)
        }
        Cone::N(l) => {
            if l >= d {
                return Err(Error::invalid(format!("ℓ must lie in 0..{d}")));
            }
            (grassmannian::plane_grid(d - l, d, resolution)?, false, false)
        }
    };
    let mut best: Option<(f64, usize)> = None;
    let mut per_plane = 0;
    for (i, p) in planes.iter().enumerate() {
        let pts = plane_points(p, inner);
        per_plane = pts.len();
        let vals = pts.iter().map(|u| act.norm_at(u));
        let v = if plane_min {
            vals.fold(f64::INFINITY, f64::min)
        } else {
            vals.fold(0.0, f64::max)
        };
        let better = match best {
            None => true,
            Some((b, _)) => (maximize_over_planes && v > b) || (!maximize_over_planes && v < b),
        };
        if better {
            best = Some((v, i));
        }
    }
    let (value, i) = best.ok_or_else(|| Error::invalid("empty plane grid"))?;
    Ok(OracleResult {
        cone: cone.to_string(),
        value,
        argopt: planes[i].columns(),
        planes: planes.len(),
        points_per_plane: per_plane,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_oracle_values() {
        let op = OperatorSpec::builtin_by_name("cubic3d", None, None).unwrap();
        assert!(grid_oracle(&op, &[1.0], Cone::Wave, 2).unwrap().value < 1e-12);
        // every restricted cubic has a zero, so the max-min stays near 0
        assert!(grid_oracle(&op, &[1.0], Cone::Ell(2), 4).unwrap().value < 0.05);
        let n1 = grid_oracle(&op, &[1.0], Cone::N(1), 4).unwrap();
        assert!(n1.value > 0.3, "{n1:?}");
    }

    #[test]
    fn rejects_large_d() {
        let op = OperatorSpec::builtin_by_name("laplacian", Some(4), None).unwrap();
        assert!(grid_oracle(&op, &[1.0], Cone::Wave, 2).is_err());
    }
}
