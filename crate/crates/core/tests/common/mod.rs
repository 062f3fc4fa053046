#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use wavecone::{MultiIndex, OperatorSpec};

pub fn builtin(name: &str, d: Option<usize>, p: Option<usize>) -> OperatorSpec {
    OperatorSpec::builtin_by_name(name, d, p).unwrap()
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Homogeneous operator of order `k` with Gaussian coefficients on every
/// multi-index.
pub fn random_homogeneous<R: Rng + ?Sized>(d: usize, m: usize, n: usize, k: u32, rng: &mut R) -> OperatorSpec {
    let terms = MultiIndex::all_of_order(d, k)
        .into_iter()
        .map(|a| (a, gaussian_matrix(n, m, rng)))
        .collect();
    OperatorSpec::new(d, m, n, terms).unwrap()
}

/// Same as [`random_homogeneous`] plus Gaussian lower-order terms.
pub fn random_full<R: Rng + ?Sized>(d: usize, m: usize, n: usize, k: u32, rng: &mut R) -> OperatorSpec {
    let terms = (0..=k)
        .flat_map(|j| MultiIndex::all_of_order(d, j))
        .map(|a| (a, gaussian_matrix(n, m, rng)))
        .collect::<Vec<_>>();
    OperatorSpec::new(d, m, n, terms).unwrap()
}

pub fn unit<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    wavecone::grassmannian::uniform_direction(d, rng)
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}
