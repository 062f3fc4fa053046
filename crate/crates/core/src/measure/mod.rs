//! Discretized vector measures on the unit torus `[0,1)^d`: model measures
//! on rational planes, BV jump examples, the Fourier kernel test, densities,
//! blow-ups and integral-geometric estimates.
//!
//! `H^ℓ` carries the normalization `H^ℓ(B^ℓ_1) = 2^ℓ`, i.e. it is
//! `2^ℓ/ω_ℓ` times ℓ-dimensional Lebesgue measure (`ω_ℓ` the volume of the
//! unit ℓ-ball).

mod density;
mod fourier;
mod integral;
mod io;
mod model;

pub use density::{blowup, upper_density, DensityEstimate, DEFAULT_RADII};
pub use fourier::{verify_afree_fft, ResidualReport, SpectralConvention};
pub use integral::{integral_geometric_measure, integral_geometric_quadrature, IntegralEstimate, PolyhedralSet};
pub use io::{read_field, read_field_binary, read_field_text, write_field_binary, write_field_text};
pub use model::{admissible_polar_set, bv_jump_example, model_rectifiable_measure, LatticePlane, Shape};

use crate::error::{Error, Result};

/// Volume of the unit ball in `R^ℓ`.
pub fn unit_ball_volume(ell: usize) -> f64 {
    match ell {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(ell - 2) * 2.0 * std::f64::consts::PI / ell as f64,
    }
}

/// `2^ℓ/ω_ℓ`: the factor turning ℓ-dimensional Lebesgue measure into `H^ℓ`.
pub fn hausdorff_factor(ell: usize) -> f64 {
    2f64.powi(ell as i32) / unit_ball_volume(ell)
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureData {
    /// Densities on a periodic `N^d` grid: cell `j` (row-major, last axis
    /// fastest) sits at `j/N` and holds `m` values starting at `m·idx`.
    Grid { n: usize, values: Vec<f64> },
    Atomic {
        positions: Vec<Vec<f64>>,
        weights: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    d: usize,
    m: usize,
    data: MeasureData,
}

impl DiscreteMeasure {
    pub fn grid(d: usize, m: usize, n: usize, values: Vec<f64>) -> Result<Self> {
        if d == 0 || m == 0 || n == 0 {
            return Err(Error::invalid("grid measure needs d, m, N ≥ 1"));
        }
        let cells = n
            .checked_pow(d as u32)
            .ok_or_else(|| Error::invalid("grid too large"))?;
        if values.len() != cells * m {
            return Err(Error::DimensionMismatch {
                expected: cells * m,
                got: values.len(),
                context: "grid values",
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("grid values must be finite"));
        }
        Ok(DiscreteMeasure {
            d,
            m,
            data: MeasureData::Grid { n, values },
        })
    }

    pub fn atomic(d: usize, m: usize, positions: Vec<Vec<f64>>, weights: Vec<Vec<f64>>) -> Result<Self> {
        if d == 0 || m == 0 {
            return Err(Error::invalid("atomic measure needs d, m ≥ 1"));
        }
        if positions.len() != weights.len() {
            return Err(Error::invalid("positions and weights differ in count"));
        }
        for (p, w) in positions.iter().zip(&weights) {
            if p.len() != d || w.len() != m {
                return Err(Error::invalid("atom has wrong position or weight length"));
            }
            if p.iter().chain(w).any(|v| !v.is_finite()) {
                return Err(Error::invalid("atoms must be finite"));
            }
        }
        Ok(DiscreteMeasure {
            d,
            m,
            data: MeasureData::Atomic { positions, weights },
        })
    }

    pub fn zero_grid(d: usize, m: usize, n: usize) -> Result<Self> {
        let cells = n
            .checked_pow(d as u32)
            .ok_or_else(|| Error::invalid("grid too large"))?;
        Self::grid(d, m, n, vec![0.0; cells * m])
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn data(&self) -> &MeasureData {
        &self.data
    }

    pub fn is_grid(&self) -> bool {
        matches!(self.data, MeasureData::Grid { .. })
    }

    /// Grid size `N` (None for atomic measures).
    pub fn grid_size(&self) -> Option<usize> {
        match self.data {
            MeasureData::Grid { n, .. } => Some(n),
            MeasureData::Atomic { .. } => None,
        }
    }

    /// Number of cells or atoms.
    pub fn len(&self) -> usize {
        match &self.data {
            MeasureData::Grid { values, .. } => values.len() / self.m,
            MeasureData::Atomic { positions, .. } => positions.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Position of cell or atom `i`.
    pub fn position(&self, i: usize) -> Vec<f64> {
        match &self.data {
            MeasureData::Grid { n, .. } => crate::fft::unravel(i, *n, self.d)
                .into_iter()
                .map(|j| j as f64 / *n as f64)
                .collect(),
            MeasureData::Atomic { positions, .. } => positions[i].clone(),
        }
    }

    /// Mass vector of cell or atom `i` (density times cell volume on grids).
    pub fn mass(&self, i: usize) -> Vec<f64> {
        match &self.data {
            MeasureData::Grid { n, values } => {
                let vol = (*n as f64).powi(-(self.d as i32));
                values[i * self.m..(i + 1) * self.m].iter().map(|v| v * vol).collect()
            }
            MeasureData::Atomic { weights, .. } => weights[i].clone(),
        }
    }

    /// `|μ|` of cell or atom `i`.
    pub fn mass_norm(&self, i: usize) -> f64 {
        norm(&self.mass(i))
    }

    pub fn total_variation(&self) -> f64 {
        (0..self.len()).map(|i| self.mass_norm(i)).sum()
    }

    /// Total mass vector `μ(T^d)`.
    pub fn total_mass(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for i in 0..self.len() {
            for (o, v) in out.iter_mut().zip(self.mass(i)) {
                *o += v;
            }
        }
        out
    }

    /// Polar `dμ/d|μ|` at cell or atom `i`; None where the mass vanishes.
    pub fn polar(&self, i: usize) -> Option<Vec<f64>> {
        let w = self.mass(i);
        let r = norm(&w);
        (r > 0.0).then(|| w.iter().map(|v| v / r).collect())
    }

    /// One channel of a grid measure as densities.
    pub fn channel(&self, c: usize) -> Result<Vec<f64>> {
        match &self.data {
            MeasureData::Grid { values, .. } => Ok(values.iter().skip(c).step_by(self.m).copied().collect()),
            MeasureData::Atomic { .. } => Err(Error::Unsupported("channel access needs a grid measure".into())),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let data = match &self.data {
            MeasureData::Grid { n, values } => MeasureData::Grid {
                n: *n,
                values: values.iter().map(|v| v * s).collect(),
            },
            MeasureData::Atomic { positions, weights } => MeasureData::Atomic {
                positions: positions.clone(),
                weights: weights.iter().map(|w| w.iter().map(|v| v * s).collect()).collect(),
            },
        };
        DiscreteMeasure {
            d: self.d,
            m: self.m,
            data,
        }
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Periodic displacement `x − y` reduced to `[−1/2, 1/2)^d`.
pub(crate) fn torus_delta(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b + 0.5).rem_euclid(1.0) - 0.5)
        .collect()
}
