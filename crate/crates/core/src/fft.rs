//! Multidimensional FFT on row-major `N^d` grids, one axis at a time.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Unnormalized forward transform `F_k = Σ_j f_j e^{−2πi k·j/N}` (or the
/// inverse without the `N^{−d}` factor when `inverse` is set), in place.
pub fn fft_nd(data: &mut [Complex64], n: usize, d: usize, inverse: bool) {
    assert_eq!(data.len(), n.pow(d as u32), "grid size mismatch");
    if n <= 1 {
        return;
    }
    let mut planner = FftPlanner::new();
    let plan = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        let block = stride * n;
        for start in (0..data.len()).step_by(block) {
            for off in 0..stride {
                let base = start + off;
                for (t, v) in line.iter_mut().enumerate() {
                    *v = data[base + t * stride];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for (t, v) in line.iter().enumerate() {
                    data[base + t * stride] = *v;
                }
            }
        }
    }
}

/// Signed frequency of DFT index `k`: `k` for `k ≤ N/2`, else `k − N`.
pub fn signed_frequency(k: usize, n: usize) -> i64 {
    if 2 * k <= n {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Multi-index of a row-major flat index.
pub fn unravel(mut idx: usize, n: usize, d: usize) -> Vec<usize> {
    let mut out = vec![0; d];
    for i in (0..d).rev() {
        out[i] = idx % n;
        idx /= n;
    }
    out
}

/// Row-major flat index of a multi-index (entries reduced mod `n`).
pub fn ravel(idx: &[i64], n: usize) -> usize {
    idx.iter().fold(0, |acc, &j| acc * n + j.rem_euclid(n as i64) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_transforms_to_constant_and_back() {
        let (n, d) = (4, 3);
        let mut a = vec![Complex64::new(0.0, 0.0); 64];
        a[ravel(&[1, 2, 3], n)] = Complex64::new(1.0, 0.0);
        let orig = a.clone();
        fft_nd(&mut a, n, d, false);
        assert!(a.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        // phase at k = (1,0,0) is e^{−2πi/4}
        let z = a[ravel(&[1, 0, 0], n)];
        assert!((z - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        fft_nd(&mut a, n, d, true);
        for (x, y) in a.iter().zip(&orig) {
            assert!((x / 64.0 - y).norm() < 1e-12);
        }
    }

    #[test]
    fn index_helpers() {
        assert_eq!(unravel(ravel(&[3, -1, 2], 5), 5, 3), vec![3, 4, 2]);
        assert_eq!(signed_frequency(3, 6), 3);
        assert_eq!(signed_frequency(4, 6), -2);
    }
}
