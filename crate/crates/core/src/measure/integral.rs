//! Integral-geometric measure `I^ℓ` of unions of ℓ-simplices.
//!
//! For a plane `π` with orthonormal basis `B`, the projection of a simplex
//! with edge matrix `E` (d×ℓ) has ℓ-volume `vol(S)·J`, where
//! `J = |det(BᵀE)| / sqrt(det(EᵀE))`. So the inner integral of the fiber
//! count is exact and only the average over `γ_{ℓ,d}` is sampled. Volumes are
//! ℓ-dimensional Lebesgue measure.

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grassmannian::{self, Plane};
use crate::sphere;

#[derive(Debug, Clone, PartialEq)]
pub struct PolyhedralSet {
    d: usize,
    ell: usize,
    simplices: Vec<Vec<Vec<f64>>>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

impl PolyhedralSet {
    /// Each simplex is a list of `ℓ+1` vertices in `R^d`.
    pub fn new(d: usize, ell: usize, simplices: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if ell == 0 || ell > d {
            return Err(Error::invalid(format!("simplex dimension ℓ={ell} must lie in 1..={d}")));
        }
        for (i, s) in simplices.iter().enumerate() {
            if s.len() != ell + 1 || s.iter().any(|v| v.len() != d || v.iter().any(|x| !x.is_finite())) {
                return Err(Error::invalid(format!(
                    "simplex {i}: expected {} finite vertices in R^{d}",
                    ell + 1
                )));
            }
            let e = edges(s);
            let scale = e.iter().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);
            if (e.transpose() * &e).determinant() <= 1e-24 * scale.powi(ell as i32) {
                return Err(Error::invalid(format!("simplex {i} is degenerate")));
            }
        }
        Ok(PolyhedralSet { d, ell, simplices })
    }

    pub fn empty(d: usize, ell: usize) -> Result<Self> {
        Self::new(d, ell, Vec::new())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn simplices(&self) -> &[Vec<Vec<f64>>] {
        &self.simplices
    }

    /// Disjoint union (multiplicities add).
    pub fn union(&self, other: &PolyhedralSet) -> Result<Self> {
        if (self.d, self.ell) != (other.d, other.ell) {
            return Err(Error::invalid("union of sets with different (d, ℓ)"));
        }
        let mut s = self.simplices.clone();
        s.extend(other.simplices.iter().cloned());
        Ok(PolyhedralSet {
            d: self.d,
            ell: self.ell,
            simplices: s,
        })
    }

    /// Sum of the simplex ℓ-volumes.
    pub fn volume(&self) -> f64 {
        self.simplices.iter().map(|s| simplex_volume(s)).sum()
    }

    /// `Σ_S vol(S)·J_π(S)`: the exact inner integral for one plane.
    pub fn projected_volume(&self, plane: &Plane) -> Result<f64> {
        if plane.ambient_dim() != self.d || plane.dim() != self.ell {
            return Err(Error::invalid("plane must be an ℓ-plane of R^d"));
        }
        Ok(self
            .simplices
            .iter()
            .map(|s| {
                let e = edges(s);
                (plane.basis().transpose() * &e).determinant().abs() / factorial(self.ell)
            })
            .sum())
    }

    /// Parse the vertex-list format: a header `polyhedral <d> <ℓ>`, then one
    /// simplex per line as `ℓ+1` vertices separated by `;`, each vertex `d`
    /// whitespace-separated numbers. `#` starts a comment line.
    pub fn parse(src: &str) -> Result<Self> {
        let mut lines = src
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header: Vec<&str> = lines.next().unwrap_or("").split_whitespace().collect();
        let (d, ell) = match header.as_slice() {
            ["polyhedral", d, l] => (
                d.parse().map_err(|_| Error::invalid("polyhedral header: bad d"))?,
                l.parse().map_err(|_| Error::invalid("polyhedral header: bad ℓ"))?,
            ),
            _ => return Err(Error::invalid("expected header 'polyhedral <d> <ell>'")),
        };
        let mut simplices = Vec::new();
        for line in lines {
            let verts: std::result::Result<Vec<Vec<f64>>, _> = line
                .split(';')
                .map(|v| v.split_whitespace().map(str::parse::<f64>).collect())
                .collect();
            simplices.push(verts.map_err(|_| Error::invalid(format!("bad number in '{line}'")))?);
        }
        Self::new(d, ell, simplices)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("polyhedral {} {}\n", self.d, self.ell);
        for s in &self.simplices {
            let verts: Vec<String> = s
                .iter()
                .map(|v| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" "))
                .collect();
            out.push_str(&verts.join(" ; "));
            out.push('\n');
        }
        out
    }
}

fn edges(s: &[Vec<f64>]) -> DMatrix<f64> {
    let d = s[0].len();
    DMatrix::from_fn(d, s.len() - 1, |i, j| s[j + 1][i] - s[0][i])
}

fn simplex_volume(s: &[Vec<f64>]) -> f64 {
    let e = edges(s);
    (e.transpose() * &e).determinant().max(0.0).sqrt() / factorial(s.len() - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
    /// Lebesgue ℓ-volume of the set, which bounds every sample.
    pub volume: f64,
    /// Largest single-plane value.
    pub max_sample: f64,
}

/// Monte Carlo estimate of `I^ℓ(E) = ∫ Σ_S vol(p_π S) dγ(π)` over uniform
/// ℓ-planes.
pub fn integral_geometric_measure<R: Rng + ?Sized>(
    set: &PolyhedralSet,
    ell: usize,
    plane_samples: usize,
    rng: &mut R,
) -> Result<IntegralEstimate> {
    if ell != set.ell {
        return Err(Error::invalid(format!(
            "set is made of {}-simplices, not {ell}",
            set.ell
        )));
    }
    if plane_samples == 0 {
        return Err(Error::invalid("need at least one plane sample"));
    }
    let (mut sum, mut sq, mut max) = (0.0, 0.0, 0.0f64);
    for _ in 0..plane_samples {
        let p = grassmannian::uniform_plane(ell, set.d, rng)?;
        let v = set.projected_volume(&p)?;
        sum += v;
        sq += v * v;
        max = max.max(v);
    }
    let n = plane_samples as f64;
    let mean = sum / n;
    let var = if plane_samples > 1 {
        ((sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(IntegralEstimate {
        estimate: mean,
        std_error: (var / n).sqrt(),
        samples: plane_samples,
        volume: set.volume(),
        max_sample: max,
    })
}

/// Deterministic quadrature of `I^ℓ` for `ℓ ∈ {1, d−1}`, where `γ_{ℓ,d}` is
/// the image of the uniform sphere measure (lines, resp. their complements).
pub fn integral_geometric_quadrature(set: &PolyhedralSet, resolution: usize) -> Result<f64> {
    let (d, ell) = (set.d, set.ell);
    if ell != 1 && ell + 1 != d {
        return Err(Error::Unsupported(format!(
            "quadrature needs ℓ = 1 or ℓ = d − 1 (got ℓ={ell}, d={d})"
        )));
    }
    let mut total = 0.0;
    for (u, w) in sphere::sphere_quadrature(d, resolution, true) {
        let line = Plane::line(&u)?;
        let plane = if ell == 1 { line } else { line.orthogonal_complement() };
        total += w * set.projected_volume(&plane)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn segment() -> PolyhedralSet {
        PolyhedralSet::new(2, 1, vec![vec![vec![0.0, 0.0], vec![1.0, 0.0]]]).unwrap()
    }

    #[test]
    fn unit_segment_quadrature() {
        let q = integral_geometric_quadrature(&segment(), 200).unwrap();
        assert!((q - 2.0 / std::f64::consts::PI).abs() < 1e-3, "{q}");
    }

    #[test]
    fn monte_carlo_bounded_by_volume() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tri = PolyhedralSet::new(3, 2, vec![vec![vec![0.0; 3], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]]).unwrap();
        let e = integral_geometric_measure(&tri, 2, 2000, &mut rng).unwrap();
        assert!(e.max_sample <= e.volume * (1.0 + 1e-12));
        // E|⟨ν, n⟩| = 1/2 for uniform ν ∈ S²
        assert!((e.estimate - 0.25).abs() < 5.0 * e.std_error, "{e:?}");
    }

    #[test]
    fn empty_and_degenerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let e = integral_geometric_measure(&PolyhedralSet::empty(2, 1).unwrap(), 1, 10, &mut rng).unwrap();
        assert_eq!(e.estimate, 0.0);
        assert!(PolyhedralSet::new(2, 1, vec![vec![vec![1.0, 1.0], vec![1.0, 1.0]]]).is_err());
        assert!(integral_geometric_measure(&segment(), 2, 10, &mut rng).is_err());
    }

    #[test]
    fn text_round_trip() {
        let s = segment();
        assert_eq!(PolyhedralSet::parse(&s.to_text()).unwrap(), s);
        assert!(PolyhedralSet::parse("polyhedral 2 1\n0 0 ; 1\n").is_err());
    }
}
