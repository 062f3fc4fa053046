//! The Fourier form of `A^k μ = 0` on the torus: `𝔸^k(ω) μ̂(ξ) = 0` at every
//! lattice frequency.

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex64;
use serde::Serialize;

use super::{DiscreteMeasure, MeasureData};
use crate::error::{Error, Result};
use crate::fft;
use crate::operator::OperatorSpec;

/// How a lattice frequency `ξ` becomes the symbol argument `ω`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralConvention {
    /// `ω = 2πξ`: derivatives of the trigonometric interpolant.
    Continuous,
    /// `ω_i = N·sin(2πξ_i/N)`: the centered difference scaled by `N`, the
    /// convention of `bv_jump_example`.
    CenteredDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    /// Max over nonzero frequencies of `|𝔸^k(ω)μ̂(ξ)| / (|ω|^k max_η |μ̂(η)|)`.
    pub max: f64,
    pub mean: f64,
    /// Frequency attaining the max.
    pub argmax: Vec<i64>,
    pub frequencies: usize,
    pub tol: f64,
    pub passed: bool,
    pub convention: SpectralConvention,
}

/// Normalized Fourier residual of a grid measure against the principal part
/// of `op`. The normalization by the largest coefficient keeps
/// frequencies that carry only rounding noise from dominating.
pub fn verify_afree_fft(
    op: &OperatorSpec,
    mu: &DiscreteMeasure,
    tol: f64,
    convention: SpectralConvention,
) -> Result<ResidualReport> {
    let MeasureData::Grid { n, .. } = *mu.data() else {
        return Err(Error::Unsupported(
            "the Fourier test needs a grid measure (rasterize atoms first)".into(),
        ));
    };
    if mu.d() != op.d() || mu.m() != op.m() {
        return Err(Error::invalid(format!(
            "measure is (d={}, m={}) but operator is (d={}, m={})",
            mu.d(),
            mu.m(),
            op.d(),
            op.m()
        )));
    }
    let d = op.d();
    let m = op.m();
    let mut chans: Vec<Vec<Complex64>> = Vec::with_capacity(m);
    for c in 0..m {
        let mut buf: Vec<Complex64> = mu.channel(c)?.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
        fft::fft_nd(&mut buf, n, d, false);
        chans.push(buf);
    }
    let cells = chans[0].len();
    let amp = |i: usize| chans.iter().map(|ch| ch[i].norm_sqr()).sum::<f64>().sqrt();
    let scale = (0..cells).map(amp).fold(0.0, f64::max);
    let k = op.k() as i32;
    let two_pi = 2.0 * std::f64::consts::PI;
    let (mut max, mut sum, mut count) = (0.0f64, 0.0, 0usize);
    let mut argmax = vec![0; d];
    for i in 1..cells {
        let xi: Vec<i64> = fft::unravel(i, n, d)
            .into_iter()
            .map(|j| fft::signed_frequency(j, n))
            .collect();
        let omega: Vec<f64> = xi
            .iter()
            .map(|&x| match convention {
                SpectralConvention::Continuous => two_pi * x as f64,
                SpectralConvention::CenteredDifference => n as f64 * (two_pi * x as f64 / n as f64).sin(),
            })
            .collect();
        let wn = omega.iter().map(|w| w * w).sum::<f64>().sqrt();
        if wn < 1e-12 {
            continue;
        }
        count += 1;
        if scale == 0.0 || amp(i) == 0.0 {
            continue;
        }
        let a: DMatrix<f64> = op.principal_matrix(&omega);
        let re = DVector::from_iterator(m, chans.iter().map(|ch| ch[i].re));
        let im = DVector::from_iterator(m, chans.iter().map(|ch| ch[i].im));
        let r = ((&a * re).norm_squared() + (&a * im).norm_squared()).sqrt() / (wn.powi(k) * scale);
        sum += r;
        if r > max {
            max = r;
            argmax = xi;
        }
    }
    let mean = if count > 0 { sum / count as f64 } else { 0.0 };
    Ok(ResidualReport {
        max,
        mean,
        argmax,
        frequencies: count,
        tol,
        passed: max < tol,
        convention,
    })
}
