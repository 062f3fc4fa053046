//! Sparse real polynomials in a fixed number of variables.
//!
//! Only what plane restriction needs: linear forms, products and powers, with
//! exact coefficient bookkeeping per monomial.

use std::collections::BTreeMap;

use crate::operator::MultiIndex;

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

impl Polynomial {
    pub fn one(nvars: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(MultiIndex::zero(nvars), 1.0);
        Self { nvars, terms }
    }

    /// The linear form `Σ_j coeffs[j] y_j`.
    pub fn linear(coeffs: &[f64]) -> Self {
        let nvars = coeffs.len();
        let mut terms = BTreeMap::new();
        for (j, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                terms.insert(MultiIndex::unit(nvars, j), c);
            }
        }
        Self { nvars, terms }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(a, &c)| (a, c))
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> f64 {
        self.terms.get(alpha).copied().unwrap_or(0.0)
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, other.nvars);
        let mut terms: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for (a, &ca) in &self.terms {
            for (b, &cb) in &other.terms {
                *terms.entry(a.add(b)).or_insert(0.0) += ca * cb;
            }
        }
        Polynomial {
            nvars: self.nvars,
            terms,
        }
    }

    /// `self^e` by repeated multiplication; `e` is small (the operator order).
    pub fn pow(&self, e: u32) -> Polynomial {
        let mut out = Polynomial::one(self.nvars);
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.terms.iter().map(|(a, &c)| c * a.monomial(y)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_square() {
        // (y0 + 2 y1)^2 = y0^2 + 4 y0 y1 + 4 y1^2
        let p = Polynomial::linear(&[1.0, 2.0]).pow(2);
        assert_eq!(p.coefficient(&MultiIndex::new(vec![2, 0])), 1.0);
        assert_eq!(p.coefficient(&MultiIndex::new(vec![1, 1])), 4.0);
        assert_eq!(p.coefficient(&MultiIndex::new(vec![0, 2])), 4.0);
        assert_eq!(p.terms().count(), 3);
    }

    #[test]
    fn eval_matches_expansion() {
        let p = Polynomial::linear(&[0.5, -1.0, 3.0]).pow(3);
        let y = [0.3f64, -0.7, 1.1];
        let direct: f64 = (0.5 * y[0] - y[1] + 3.0 * y[2]).powi(3);
        assert!((p.eval(&y) - direct).abs() < 1e-12);
    }
}
