//! Sampled constant-rank check of `ξ ↦ 𝔸^k(ξ)` on the sphere.

use serde::{Deserialize, Serialize};

use super::search::antipodal_count;
use crate::operator::OperatorSpec;
use crate::sphere;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ConstantRank {
    /// Every sampled point had this rank. A sampled statement only.
    Holds { rank: usize, samples: usize },
    Fails {
        xi1: Vec<f64>,
        rank1: usize,
        xi2: Vec<f64>,
        rank2: usize,
    },
    /// Ranks differ only through singular values within a factor 1e3 of
    /// the cutoff.
    Inconclusive { samples: usize },
}

/// Sample points: an antipodal cube grid with at least `count` points plus
/// every normalized direction in `{−1, 0, 1}^d` (coordinate axes,
/// face and body diagonals).
pub(crate) fn rank_samples(d: usize, count: usize) -> Vec<Vec<f64>> {
    let mut res = 1;
    while antipodal_count(d, res) < count && res < 10_000 {
        res += 1;
    }
    let mut pts = sphere::cube_grid(d, res, true);
    pts.extend(sphere::cube_grid(d, 1, true));
    sphere::dedup_points(pts)
}

/// Rank of `𝔸^k(ξ)` at each sample; fails with the first pair of differing
/// ranks (in sample order).
pub fn constant_rank_check(op: &OperatorSpec, sample_count: usize, tol: f64) -> ConstantRank {
    let floor = tol * op.coefficient_scale();
    let pts = rank_samples(op.d(), sample_count);
    let mut first: Option<(usize, usize)> = None;
    let mut ambiguous = false;
    for (i, xi) in pts.iter().enumerate() {
        let a = op.principal_matrix(xi);
        let sig = if a.nrows() == 0 || a.ncols() == 0 {
            Default::default()
        } else {
            a.singular_values()
        };
        let smax = sig.iter().copied().fold(0.0, f64::max);
        let thr = (tol * smax).max(floor);
        let r = sig.iter().filter(|&&s| s > thr).count();
        let near = sig.iter().any(|&s| s > thr / 1e3 && s <= thr * 1e3);
        match first {
            None => first = Some((i, r)),
            Some((j, r0)) if r != r0 => {
                if near {
                    ambiguous = true;
                    continue;
                }
                return ConstantRank::Fails {
                    xi1: pts[j].clone(),
                    rank1: r0,
                    xi2: xi.clone(),
                    rank2: r,
                };
            }
            _ => {}
        }
    }
    if ambiguous {
        return ConstantRank::Inconclusive { samples: pts.len() };
    }
    ConstantRank::Holds {
        rank: first.map_or(0, |f| f.1),
        samples: pts.len(),
    }
}
