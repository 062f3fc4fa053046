//! Deterministic point sets on unit spheres, certified lower bounds for
//! continuous functions on spheres, and a Levenberg–Marquardt polish for
//! zero-residual problems constrained to a sphere.
//!
//! Grids live on the surface of the cube `[-1, 1]^d`, projected radially.
//! A face cell of half-width `w` is contained in a spherical cap of chord
//! radius `w·sqrt(d−1)`: the projection `x ↦ x/|x|` is 1-Lipschitz outside
//! the unit ball and every face is convex.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

/// Cube-surface direction grid with `2·res+1` points per face edge.
///
/// With `antipodal = true` only one of each `±u` pair is kept (first nonzero
/// coordinate positive), which is what even functions and line grids need.
pub fn cube_grid(d: usize, res: usize, antipodal: bool) -> Vec<Vec<f64>> {
    cube_grid_integer(d, res, antipodal)
        .into_iter()
        .map(|z| normalize_int(&z))
        .collect()
}

/// Chord covering radius of [`cube_grid`]: every unit vector lies within this
/// distance of a grid point (or of its antipode when the grid is antipodal).
pub fn cube_grid_covering(d: usize, res: usize) -> f64 {
    if d <= 1 {
        return 0.0;
    }
    ((d - 1) as f64).sqrt() / (2.0 * res.max(1) as f64)
}

/// Integer coordinates `z` with `max |z_i| = res` (deduplicated).
pub fn cube_grid_integer(d: usize, res: usize, antipodal: bool) -> Vec<Vec<i64>> {
    let r = res.max(1) as i64;
    if d == 1 {
        return if antipodal {
            vec![vec![1]]
        } else {
            vec![vec![1], vec![-1]]
        };
    }
    let mut out = Vec::new();
    for face in 0..d {
        for sign in [1i64, -1] {
            // coordinates before `face` are strictly inside, after are free
            let mut z = vec![0i64; d];
            z[face] = sign * r;
            let free: Vec<usize> = (0..d).filter(|&j| j != face).collect();
            let mut counters = vec![-r; free.len()];
            loop {
                let ok = free.iter().zip(&counters).all(|(&j, &c)| j > face || c.abs() < r);
                if ok {
                    for (&j, &c) in free.iter().zip(&counters) {
                        z[j] = c;
                    }
                    let keep = !antipodal || first_nonzero_positive(&z);
                    if keep {
                        out.push(z.clone());
                    }
                }
                // odometer increment
                let mut pos = 0;
                loop {
                    if pos == counters.len() {
                        break;
                    }
                    counters[pos] += 1;
                    if counters[pos] > r {
                        counters[pos] = -r;
                        pos += 1;
                    } else {
                        break;
                    }
                }
                if pos == counters.len() {
                    break;
                }
            }
        }
    }
    out
}

fn first_nonzero_positive(z: &[i64]) -> bool {
    z.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0)
}

fn normalize_int(z: &[i64]) -> Vec<f64> {
    let n = (z.iter().map(|&x| (x * x) as f64).sum::<f64>()).sqrt();
    z.iter().map(|&x| x as f64 / n).collect()
}

pub fn normalize(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

/// Deterministic quadrature on the unit sphere: cube-grid nodes with weights
/// proportional to the radial-projection area element `|x|^{-d}`, summing to 1.
pub fn sphere_quadrature(d: usize, res: usize, antipodal: bool) -> Vec<(Vec<f64>, f64)> {
    let r = res.max(1) as f64;
    let pts = cube_grid_integer(d, res, antipodal);
    let mut out: Vec<(Vec<f64>, f64)> = pts
        .iter()
        .map(|z| {
            let x: Vec<f64> = z.iter().map(|&c| c as f64 / r).collect();
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            // half weight on cube edges per adjacent face, trapezoid-style
            let boundary = z.iter().filter(|&&c| c.abs() as f64 == r).count() as f64;
            let w = norm.powi(-(d as i32)) / boundary;
            (normalize_int(z), w)
        })
        .collect();
    let total: f64 = out.iter().map(|(_, w)| w).sum();
    for (_, w) in &mut out {
        *w /= total;
    }
    out
}

/// A square cell on one face of the cube.
#[derive(Debug, Clone)]
struct Cell {
    face: usize,
    sign: f64,
    center: Vec<f64>,
    half: f64,
}

impl Cell {
    fn point(&self, d: usize) -> Vec<f64> {
        let mut x = Vec::with_capacity(d);
        let mut it = self.center.iter();
        for j in 0..d {
            if j == self.face {
                x.push(self.sign);
            } else {
                x.push(*it.next().expect("center has d-1 entries"));
            }
        }
        normalize(&x)
    }

    fn radius(&self, d: usize) -> f64 {
        self.half * ((d - 1) as f64).sqrt()
    }

    fn split(&self) -> Vec<Cell> {
        let k = self.center.len();
        let h = self.half / 2.0;
        (0..(1usize << k))
            .map(|mask| Cell {
                face: self.face,
                sign: self.sign,
                center: self
                    .center
                    .iter()
                    .enumerate()
                    .map(|(j, &c)| if mask >> j & 1 == 1 { c + h } else { c - h })
                    .collect(),
                half: h,
            })
            .collect()
    }
}

fn initial_cells(d: usize, res: usize, antipodal: bool) -> Vec<Cell> {
    let res = res.max(1);
    let half = 1.0 / res as f64;
    let centers_1d: Vec<f64> = (0..res).map(|t| -1.0 + half * (2 * t + 1) as f64).collect();
    let mut cells = Vec::new();
    let signs: &[f64] = if antipodal { &[1.0] } else { &[1.0, -1.0] };
    for face in 0..d {
        for &sign in signs {
            let mut idx = vec![0usize; d - 1];
            loop {
                cells.push(Cell {
                    face,
                    sign,
                    center: idx.iter().map(|&i| centers_1d[i]).collect(),
                    half,
                });
                let mut pos = 0;
                while pos < idx.len() {
                    idx[pos] += 1;
                    if idx[pos] == res {
                        idx[pos] = 0;
                        pos += 1;
                    } else {
                        break;
                    }
                }
                if pos == idx.len() {
                    break;
                }
            }
        }
    }
    cells
}

/// Outcome of a branch-and-bound certification over a sphere.
#[derive(Debug, Clone)]
pub struct Certification {
    pub certified: bool,
    /// Smallest value of `f(center) − slack(radius)` over accepted cells
    /// (a certified lower bound of `f − threshold` when `certified`).
    pub min_excess: f64,
    /// Smallest sampled value of `f` and where it was attained.
    pub min_value: f64,
    pub argmin: Vec<f64>,
    pub cells_evaluated: usize,
}

/// Certify `f(u) > required(r)` over the unit sphere in `R^d`, where
/// `required(r)` must dominate `threshold + sup_{|v−u|≤r} (f(u) − f(v))`.
///
/// Thin wrapper over [`branch_and_bound`].
pub fn certify_sphere<F, R>(
    d: usize,
    antipodal: bool,
    initial_res: usize,
    max_depth: usize,
    max_cells: usize,
    mut f: F,
    required: R,
) -> Certification
where
    F: FnMut(&[f64]) -> f64,
    R: Fn(f64) -> f64,
{
    branch_and_bound(d, antipodal, initial_res, max_depth, max_cells, |u, r| {
        let v = f(u);
        (v, v - required(r))
    })
}

/// Generic cell refinement over the unit sphere in `R^d`.
///
/// `test(center, radius)` returns `(value, excess)`; a cell is accepted when
/// `excess > 0` and split otherwise, until `max_depth` levels or `max_cells`
/// evaluations. Any cell left unaccepted makes the result uncertified.
/// Cells are visited depth-first in a fixed order, so results are
/// deterministic.
pub fn branch_and_bound<T>(
    d: usize,
    antipodal: bool,
    initial_res: usize,
    max_depth: usize,
    max_cells: usize,
    mut test: T,
) -> Certification
where
    T: FnMut(&[f64], f64) -> (f64, f64),
{
    let mut cert = Certification {
        certified: true,
        min_excess: f64::INFINITY,
        min_value: f64::INFINITY,
        argmin: vec![0.0; d],
        cells_evaluated: 0,
    };
    // min_excess tracks accepted leaves and the cell that ended the search
    let record = |cert: &mut Certification, p: &[f64], v: f64, excess: f64| {
        cert.cells_evaluated += 1;
        if v < cert.min_value {
            cert.min_value = v;
            cert.argmin = p.to_vec();
        }
        if excess > 0.0 || !cert.certified {
            cert.min_excess = cert.min_excess.min(excess);
        }
    };
    if d == 1 {
        let points: Vec<Vec<f64>> = if antipodal {
            vec![vec![1.0]]
        } else {
            vec![vec![1.0], vec![-1.0]]
        };
        for p in points {
            let (v, excess) = test(&p, 0.0);
            if excess <= 0.0 {
                cert.certified = false;
            }
            record(&mut cert, &p, v, excess);
        }
        return cert;
    }
    let mut stack: Vec<(Cell, usize)> = initial_cells(d, initial_res, antipodal)
        .into_iter()
        .rev()
        .map(|c| (c, 0))
        .collect();
    while let Some((cell, depth)) = stack.pop() {
        let p = cell.point(d);
        let (v, excess) = test(&p, cell.radius(d));
        if excess <= 0.0 && (depth >= max_depth || cert.cells_evaluated + 1 + stack.len() >= max_cells) {
            // give up: one unresolved cell already decides the outcome
            cert.certified = false;
            record(&mut cert, &p, v, excess);
            break;
        }
        record(&mut cert, &p, v, excess);
        if excess > 0.0 {
            continue;
        }
        for child in cell.split().into_iter().rev() {
            stack.push((child, depth + 1));
        }
    }
    cert
}

/// Levenberg–Marquardt on the unit sphere for `min |r(x)|²`, `|x| = 1`.
///
/// `residual` returns `(r(x), J(x))` with `J` the Euclidean Jacobian; steps
/// are taken in the tangent space and retracted by normalization.
pub fn lm_on_sphere<F>(start: &[f64], max_iter: usize, mut residual: F) -> (Vec<f64>, f64)
where
    F: FnMut(&[f64]) -> (DVector<f64>, DMatrix<f64>),
{
    let d = start.len();
    let mut x = normalize(start);
    let (mut r, mut jac) = residual(&x);
    let mut cost = r.norm_squared();
    let mut mu = 1e-3;
    if d <= 1 {
        return (x, cost.sqrt());
    }
    for _ in 0..max_iter {
        if cost == 0.0 {
            break;
        }
        let xv = DVector::from_column_slice(&x);
        let proj = DMatrix::identity(d, d) - &xv * xv.transpose();
        let jt = &jac * &proj;
        let g = jt.transpose() * &r;
        let h = jt.transpose() * &jt;
        let mut improved = false;
        for _ in 0..30 {
            let mut sys = h.clone();
            let scale = h.diagonal().amax().max(1e-300);
            for i in 0..d {
                sys[(i, i)] += mu * scale;
            }
            let Some(step) = sys.lu().solve(&(-&g)) else {
                mu *= 10.0;
                continue;
            };
            let step = &proj * step;
            let cand: Vec<f64> = normalize((&xv + &step).as_slice());
            let (rc, jc) = residual(&cand);
            let cc = rc.norm_squared();
            if cc < cost {
                x = cand;
                r = rc;
                jac = jc;
                let rel = (cost - cc) / cost.max(1e-300);
                cost = cc;
                mu = (mu / 10.0).max(1e-15);
                improved = rel > 1e-14 || cost > 0.0;
                break;
            }
            mu *= 10.0;
            if mu > 1e12 {
                break;
            }
        }
        if !improved {
            break;
        }
    }
    (x, cost.sqrt())
}

/// Greatest lower bound helper: the sampled maximum of `f` over a grid
/// inflated to a rigorous upper bound of `sup f` via `sup ≤ max/(1 − c·h)`
/// when `f` is the norm of a homogeneous polynomial map of degree `k`
/// (tangential derivative bounded by `k·sup`).
pub fn homogeneous_sup_bound(samples_max: f64, k: u32, covering: f64) -> Option<f64> {
    let c = k as f64 * covering;
    if c < 1.0 {
        Some(samples_max / (1.0 - c))
    } else {
        None
    }
}

/// Unique (by exact coordinates) union of point lists, order preserved.
pub fn dedup_points(points: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut seen = BTreeSet::new();
    points
        .into_iter()
        .filter(|p| seen.insert(p.iter().map(|x| x.to_bits()).collect::<Vec<_>>()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts() {
        // d = 3, res = 1: the 26 nonzero points of {-1,0,1}^3
        assert_eq!(cube_grid_integer(3, 1, false).len(), 26);
        assert_eq!(cube_grid_integer(3, 1, true).len(), 13);
        assert_eq!(cube_grid_integer(2, 2, false).len(), 16);
        let r = 5;
        assert_eq!(
            cube_grid_integer(3, r, false).len(),
            (2 * r + 1).pow(3) - (2 * r - 1).pow(3)
        );
    }

    #[test]
    fn grid_covering_holds_empirically() {
        let d = 3;
        let res = 4;
        let grid = cube_grid(d, res, false);
        let h = cube_grid_covering(d, res);
        let mut worst: f64 = 0.0;
        for u in cube_grid(d, 37, false) {
            let best = grid
                .iter()
                .map(|g| g.iter().zip(&u).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(best);
        }
        assert!(worst <= h + 1e-12, "{worst} > {h}");
    }

    #[test]
    fn quadrature_integrates_even_polynomials() {
        // E[u_1^2] = 1/d on S^{d-1}
        for d in [2, 3] {
            let q = sphere_quadrature(d, 60, false);
            let m2: f64 = q.iter().map(|(u, w)| w * u[0] * u[0]).sum();
            assert!((m2 - 1.0 / d as f64).abs() < 1e-3, "d={d}: {m2}");
        }
    }

    #[test]
    fn certify_positive_function() {
        // f(u) = 1 + u_0 on S^2 is >= 0 with minimum 0 at -e_0: not certifiable
        // above 0.5, but f(u) = 2 + u_0 is, with Lipschitz constant 1.
        let c = certify_sphere(3, false, 2, 8, 100_000, |u| 2.0 + u[0], |r| 0.5 + r);
        assert!(c.certified);
        assert!((c.min_value - 1.0).abs() < 0.2);
        let c = certify_sphere(3, false, 2, 4, 100_000, |u| 1.0 + u[0], |r| 0.5 + r);
        assert!(!c.certified);
    }

    #[test]
    fn lm_finds_zero_of_cubic() {
        // x^3 + y^3 + z^3 = 0 on S^2
        let (x, r) = lm_on_sphere(&[1.0, -0.8, 0.1], 100, |x| {
            let v = DVector::from_vec(vec![x.iter().map(|t| t.powi(3)).sum()]);
            let j = DMatrix::from_row_slice(1, 3, &[3.0 * x[0] * x[0], 3.0 * x[1] * x[1], 3.0 * x[2] * x[2]]);
            (v, j)
        });
        assert!(r < 1e-14, "{r}");
        assert!((x.iter().map(|t| t * t).sum::<f64>() - 1.0).abs() < 1e-14);
    }
}
