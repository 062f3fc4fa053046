//! Ball sums, densities and blow-ups.
//!
//! On grids the ball `B_r(x₀)` is anti-aliased: a cell at distance `t`
//! contributes the fraction `clamp((r − t)/h + 1/2, 0, 1)` of its mass,
//! `h = 1/N`. This removes most of the lattice-point error of sharp ball
//! counts at a few cells per radius.

use serde::Serialize;

use super::{norm, torus_delta, DiscreteMeasure};
use crate::error::{Error, Result};

/// Dyadic default radii.
pub const DEFAULT_RADII: [f64; 3] = [0.25, 0.125, 0.0625];
/// Smallest usable radius, in cells.
const MIN_RADIUS_CELLS: f64 = 3.0;

fn ramp(mu: &DiscreteMeasure) -> f64 {
    mu.grid_size().map_or(0.0, |n| 1.0 / n as f64)
}

fn weight(t: f64, r: f64, h: f64) -> f64 {
    if h == 0.0 {
        return if t <= r { 1.0 } else { 0.0 };
    }
    ((r - t) / h + 0.5).clamp(0.0, 1.0)
}

fn check_point(mu: &DiscreteMeasure, x0: &[f64]) -> Result<()> {
    if x0.len() != mu.d() {
        return Err(Error::DimensionMismatch {
            expected: mu.d(),
            got: x0.len(),
            context: "base point",
        });
    }
    Ok(())
}

/// `|μ|(B_r(x₀))` with periodic distance.
pub fn ball_mass(mu: &DiscreteMeasure, x0: &[f64], r: f64) -> f64 {
    let h = ramp(mu);
    (0..mu.len())
        .map(|i| {
            let w = weight(norm(&torus_delta(&mu.position(i), x0)), r, h);
            if w > 0.0 {
                w * mu.mass_norm(i)
            } else {
                0.0
            }
        })
        .sum()
}

/// `(2r)^{−ℓ}(T^{x₀,r})_# μ` restricted to the closed unit window, as atoms at
/// `(x − x₀)/r`. Cells on the window edge keep their ramp fraction.
pub fn blowup(mu: &DiscreteMeasure, x0: &[f64], r: f64, ell: usize) -> Result<DiscreteMeasure> {
    check_point(mu, x0)?;
    if !(r > 0.0 && r <= 0.5) {
        return Err(Error::invalid("blow-up radius must lie in (0, 1/2]"));
    }
    let h = ramp(mu);
    let scale = (2.0 * r).powi(-(ell as i32));
    let mut pos = Vec::new();
    let mut wts = Vec::new();
    for i in 0..mu.len() {
        let delta = torus_delta(&mu.position(i), x0);
        let w = weight(norm(&delta), r, h);
        let mass = mu.mass(i);
        if w > 0.0 && mass.iter().any(|&v| v != 0.0) {
            pos.push(delta.iter().map(|v| v / r).collect());
            wts.push(mass.iter().map(|v| v * w * scale).collect());
        }
    }
    DiscreteMeasure::atomic(mu.d(), mu.m(), pos, wts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityEstimate {
    /// Max over usable radii of `|μ|(B_r(x₀))/(2r)^ℓ`.
    pub estimate: f64,
    /// `(r, ratio)` for each usable radius, in the given order.
    pub ratios: Vec<(f64, f64)>,
    /// Finest usable radius; the ratio there is closest to the limit.
    pub finest_radius: f64,
    /// Radii dropped as unresolved (`< 3` cells) or larger than `1/2`.
    pub excluded: Vec<f64>,
}

/// Finite-resolution surrogate for the upper ℓ-density `θ*_ℓ(|μ|, x₀)`.
pub fn upper_density(mu: &DiscreteMeasure, x0: &[f64], ell: usize, radii: &[f64]) -> Result<DensityEstimate> {
    check_point(mu, x0)?;
    let h = ramp(mu);
    let (usable, excluded): (Vec<f64>, Vec<f64>) = radii
        .iter()
        .partition(|&&r| r > 0.0 && r <= 0.5 && r >= MIN_RADIUS_CELLS * h);
    if usable.is_empty() {
        return Err(Error::invalid("no radius is resolvable on this grid"));
    }
    let ratios: Vec<(f64, f64)> = usable
        .iter()
        .map(|&r| (r, ball_mass(mu, x0, r) / (2.0 * r).powi(ell as i32)))
        .collect();
    Ok(DensityEstimate {
        estimate: ratios.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
        finest_radius: usable.iter().copied().fold(f64::INFINITY, f64::min),
        ratios,
        excluded,
    })
}
