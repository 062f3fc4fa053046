//! Levenberg–Marquardt for zero-residual problems on products of Euclidean
//! blocks and unit spheres, with a central-difference Jacobian.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Free(usize),
    /// Variables constrained to the unit sphere of this dimension.
    Sphere(usize),
}

impl Block {
    fn len(self) -> usize {
        match self {
            Block::Free(n) | Block::Sphere(n) => n,
        }
    }
}

fn retract(x: &mut [f64], blocks: &[Block]) {
    let mut off = 0;
    for &b in blocks {
        let n = b.len();
        if let Block::Sphere(_) = b {
            let s = &mut x[off..off + n];
            let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                s.iter_mut().for_each(|v| *v /= norm);
            }
        }
        off += n;
    }
}

/// Remove the radial component of `v` on every sphere block.
fn tangent(x: &[f64], v: &mut [f64], blocks: &[Block]) {
    let mut off = 0;
    for &b in blocks {
        let n = b.len();
        if let Block::Sphere(_) = b {
            let dot: f64 = (off..off + n).map(|i| x[i] * v[i]).sum();
            for i in off..off + n {
                v[i] -= dot * x[i];
            }
        }
        off += n;
    }
}

fn fd_jacobian<F>(x: &[f64], r0: &DVector<f64>, f: &mut F) -> DMatrix<f64>
where
    F: FnMut(&[f64]) -> DVector<f64>,
{
    let mut jac = DMatrix::zeros(r0.len(), x.len());
    let mut xp = x.to_vec();
    for j in 0..x.len() {
        let h = 1e-6 * x[j].abs().max(1.0);
        let orig = xp[j];
        xp[j] = orig + h;
        let rp = f(&xp);
        xp[j] = orig - h;
        let rm = f(&xp);
        xp[j] = orig;
        jac.set_column(j, &((rp - rm) / (2.0 * h)));
    }
    jac
}

/// Minimize `|f(x)|²` starting from `x0`. Returns the final point and `|f|`.
pub fn levenberg_marquardt<F>(x0: &[f64], blocks: &[Block], max_iter: usize, mut f: F) -> (Vec<f64>, f64)
where
    F: FnMut(&[f64]) -> DVector<f64>,
{
    let dim: usize = blocks.iter().map(|b| b.len()).sum();
    assert_eq!(dim, x0.len(), "block layout does not match the start point");
    let mut x = x0.to_vec();
    retract(&mut x, blocks);
    let mut r = f(&x);
    let mut cost = r.norm_squared();
    let mut mu = 1e-3;
    for _ in 0..max_iter {
        if cost == 0.0 || !cost.is_finite() {
            break;
        }
        let mut jac = fd_jacobian(&x, &r, &mut f);
        // restrict the Jacobian to tangent directions
        for i in 0..jac.nrows() {
            let mut row: Vec<f64> = jac.row(i).iter().copied().collect();
            tangent(&x, &mut row, blocks);
            for (j, v) in row.into_iter().enumerate() {
                jac[(i, j)] = v;
            }
        }
        let g = jac.transpose() * &r;
        let h = jac.transpose() * &jac;
        let scale = h.diagonal().amax().max(1e-300);
        let mut accepted = false;
        while mu < 1e12 {
            let mut sys = h.clone();
            for i in 0..dim {
                sys[(i, i)] += mu * scale;
            }
            let Some(step) = sys.lu().solve(&(-&g)) else {
                mu *= 10.0;
                continue;
            };
            let mut step: Vec<f64> = step.iter().copied().collect();
            tangent(&x, &mut step, blocks);
            let mut cand: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
            retract(&mut cand, blocks);
            let rc = f(&cand);
            let cc = rc.norm_squared();
            if cc < cost {
                x = cand;
                r = rc;
                cost = cc;
                mu = (mu / 10.0).max(1e-15);
                accepted = true;
                break;
            }
            mu *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    (x, cost.sqrt())
}
