//! Constant-coefficient linear operators `A = Σ_{|α|≤k} A_α ∂^α` acting on
//! `R^m`-valued fields on `R^d` with values in `R^n`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::grassmannian::Plane;
use crate::poly::Polynomial;

/// A multi-index `α ∈ (N ∪ {0})^d`.
///
/// Ordered colexicographically: the last entry is the most significant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zero(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    pub fn unit(d: usize, i: usize) -> Self {
        let mut v = vec![0; d];
        v[i] = 1;
        MultiIndex(v)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `ξ^α = Π ξ_i^{α_i}`.
    pub fn monomial(&self, xi: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(xi)
            .filter(|(&a, _)| a > 0)
            .map(|(&a, &x)| x.powi(a as i32))
            .product()
    }

    /// `∂_i ξ^α`.
    pub fn monomial_derivative(&self, xi: &[f64], i: usize) -> f64 {
        let a = self.0[i];
        if a == 0 {
            return 0.0;
        }
        let mut prod = a as f64;
        for (j, (&e, &x)) in self.0.iter().zip(xi).enumerate() {
            let e = if j == i { e - 1 } else { e };
            if e > 0 {
                prod *= x.powi(e as i32);
            }
        }
        prod
    }

    /// All multi-indices of length `d` and order exactly `k`, colex-sorted.
    pub fn all_of_order(d: usize, k: u32) -> Vec<MultiIndex> {
        fn rec(d: usize, remaining: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if prefix.len() + 1 == d {
                prefix.push(remaining);
                out.push(MultiIndex(prefix.clone()));
                prefix.pop();
                return;
            }
            for a in 0..=remaining {
                prefix.push(a);
                rec(d, remaining - a, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if d == 0 {
            return out;
        }
        rec(d, k, &mut Vec::with_capacity(d), &mut out);
        out.sort();
        out
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.iter().rev().cmp(other.0.iter().rev()))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// The operators with closed-form cone classifications.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    /// Row-wise curl of `R^{p×d}`-valued fields: `∂_j μ_i^k − ∂_k μ_i^j`, `j < k`.
    Curl {
        d: usize,
        p: usize,
    },
    /// Saint-Venant compatibility operator on symmetric `d×d` fields, stored in
    /// upper-triangular coordinates `μ_ab`, `a ≤ b`.
    CurlCurl {
        d: usize,
    },
    /// Row-wise divergence of `R^{d×d}`-valued fields.
    DivMatrix {
        d: usize,
    },
    /// Divergence of vector fields.
    DivVector {
        d: usize,
    },
    Gradient {
        d: usize,
    },
    Laplacian {
        d: usize,
    },
    /// `∂³_1 + ∂³_2 + ∂³_3`.
    Cubic3d,
    /// Symbol `(ξ₁⁶+ξ₂⁶+ξ₃⁶) w₁ + (ξ₁³+ξ₂³+ξ₃³)² w₂`.
    Sextic3d,
}

impl Builtin {
    pub const NAMES: [&'static str; 8] = [
        "curl",
        "curlcurl",
        "div-matrix",
        "div-vector",
        "gradient",
        "laplacian",
        "cubic3d",
        "sextic3d",
    ];

    /// Look up a builtin by name. `d` defaults to 3 and `p` to 1.
    pub fn from_name(name: &str, d: Option<usize>, p: Option<usize>) -> Result<Self> {
        let dim = d.unwrap_or(3);
        let fixed3 = |b: Builtin| -> Result<Builtin> {
            match d {
                Some(x) if x != 3 => Err(Error::invalid(format!("{name} is only defined for d = 3"))),
                _ => Ok(b),
            }
        };
        let b = match name {
            "curl" => Builtin::Curl {
                d: dim,
                p: p.unwrap_or(1),
            },
            "curlcurl" | "curl-curl" => Builtin::CurlCurl { d: dim },
            "div-matrix" | "div" => Builtin::DivMatrix { d: dim },
            "div-vector" => Builtin::DivVector { d: dim },
            "gradient" | "grad" => Builtin::Gradient { d: dim },
            "laplacian" => Builtin::Laplacian { d: dim },
            "cubic3d" => fixed3(Builtin::Cubic3d)?,
            "sextic3d" => fixed3(Builtin::Sextic3d)?,
            other => {
                return Err(Error::invalid(format!(
                    "unknown builtin operator '{other}' (known: {})",
                    Builtin::NAMES.join(", ")
                )))
            }
        };
        b.validate()?;
        Ok(b)
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Builtin::Curl { d, p } => {
                if d < 2 || p < 1 {
                    return Err(Error::invalid("curl requires d >= 2 and p >= 1"));
                }
            }
            Builtin::CurlCurl { d } => {
                if d < 2 {
                    return Err(Error::invalid("curlcurl requires d >= 2"));
                }
            }
            Builtin::DivMatrix { d }
            | Builtin::DivVector { d }
            | Builtin::Gradient { d }
            | Builtin::Laplacian { d } => {
                if d < 1 {
                    return Err(Error::invalid("dimension must be positive"));
                }
            }
            Builtin::Cubic3d | Builtin::Sextic3d => {}
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Builtin::Curl { .. } => "curl",
            Builtin::CurlCurl { .. } => "curlcurl",
            Builtin::DivMatrix { .. } => "div-matrix",
            Builtin::DivVector { .. } => "div-vector",
            Builtin::Gradient { .. } => "gradient",
            Builtin::Laplacian { .. } => "laplacian",
            Builtin::Cubic3d => "cubic3d",
            Builtin::Sextic3d => "sextic3d",
        }
    }

    pub fn params_json(&self) -> Value {
        match *self {
            Builtin::Curl { d, p } => json!({"d": d, "p": p}),
            Builtin::CurlCurl { d }
            | Builtin::DivMatrix { d }
            | Builtin::DivVector { d }
            | Builtin::Gradient { d }
            | Builtin::Laplacian { d } => json!({"d": d}),
            Builtin::Cubic3d | Builtin::Sextic3d => json!({}),
        }
    }
}

/// Index of the pair `(a, b)`, `a ≤ b`, in the row-major upper triangle of a
/// `d×d` matrix.
pub fn sym_index(d: usize, a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    a * d - a * a.saturating_sub(1) / 2 + (b - a)
}

/// A constant-coefficient operator with its coefficient table.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    d: usize,
    m: usize,
    n: usize,
    k: u32,
    terms: Vec<(MultiIndex, DMatrix<f64>)>,
    builtin: Option<Builtin>,
}

/// A symbol matrix together with the point it was evaluated at.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolValue {
    pub matrix: DMatrix<f64>,
    pub at: Vec<f64>,
}

impl OperatorSpec {
    /// Build an operator from its coefficient table. The order `k` is the
    /// largest `|α|` present; at least one top-order matrix must be nonzero.
    pub fn new(d: usize, m: usize, n: usize, terms: Vec<(MultiIndex, DMatrix<f64>)>) -> Result<Self> {
        if d == 0 || m == 0 || n == 0 {
            return Err(Error::invalid("d, m and n must be positive"));
        }
        if terms.is_empty() {
            return Err(Error::invalid("operator has no terms"));
        }
        let mut table: BTreeMap<MultiIndex, DMatrix<f64>> = BTreeMap::new();
        for (alpha, mat) in terms {
            if alpha.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: alpha.dim(),
                    context: "multi-index length",
                });
            }
            if mat.nrows() != n || mat.ncols() != m {
                return Err(Error::invalid(format!(
                    "coefficient for {alpha} has shape {}x{}, expected {n}x{m}",
                    mat.nrows(),
                    mat.ncols()
                )));
            }
            if mat.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("coefficient for {alpha} is not finite")));
            }
            if table.insert(alpha.clone(), mat).is_some() {
                return Err(Error::invalid(format!("duplicate multi-index {alpha}")));
            }
        }
        let k = table.keys().map(MultiIndex::order).max().unwrap_or(0);
        if k == 0 {
            return Err(Error::invalid("operator order must be positive"));
        }
        let top_nonzero = table
            .iter()
            .any(|(a, mat)| a.order() == k && mat.iter().any(|&x| x != 0.0));
        if !top_nonzero {
            return Err(Error::invalid(
                "every coefficient of highest order is zero; order is ill-defined",
            ));
        }
        Ok(Self {
            d,
            m,
            n,
            k,
            terms: table.into_iter().collect(),
            builtin: None,
        })
    }

    /// Restricted operators may be identically zero, which `new` rejects.
    pub(crate) fn from_parts_unchecked(
        d: usize,
        m: usize,
        n: usize,
        k: u32,
        terms: Vec<(MultiIndex, DMatrix<f64>)>,
    ) -> Self {
        let mut terms = terms;
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        Self {
            d,
            m,
            n,
            k,
            terms,
            builtin: None,
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> u32 {
        self.k
    }
    pub fn builtin(&self) -> Option<Builtin> {
        self.builtin
    }

    pub fn terms(&self) -> &[(MultiIndex, DMatrix<f64>)] {
        &self.terms
    }

    pub fn is_homogeneous(&self) -> bool {
        self.terms.iter().all(|(a, _)| a.order() == self.k)
    }

    /// True when every coefficient matrix is zero (possible only for
    /// restrictions).
    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|(_, m)| m.iter().all(|&x| x == 0.0))
    }

    pub fn top_terms(&self) -> impl Iterator<Item = &(MultiIndex, DMatrix<f64>)> {
        let k = self.k;
        self.terms.iter().filter(move |(a, _)| a.order() == k)
    }

    /// The homogeneous order-`k` part `A^k`.
    pub fn principal_part(&self) -> OperatorSpec {
        OperatorSpec {
            d: self.d,
            m: self.m,
            n: self.n,
            k: self.k,
            terms: self.top_terms().cloned().collect(),
            builtin: self.builtin,
        }
    }

    /// `Σ_{|α|=k} ‖A_α‖_F`, the coefficient scale used for tolerances.
    pub fn coefficient_scale(&self) -> f64 {
        self.top_terms().map(|(_, a)| a.norm()).sum()
    }

    fn check_point(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: xi.len(),
                context: "symbol evaluation point",
            });
        }
        Ok(())
    }

    /// `𝔸^k(ξ) = Σ_{|α|=k} A_α ξ^α`.
    pub fn principal_symbol(&self, xi: &[f64]) -> Result<SymbolValue> {
        self.check_point(xi)?;
        Ok(SymbolValue {
            matrix: self.principal_matrix(xi),
            at: xi.to_vec(),
        })
    }

    /// `Σ_α A_α ξ^α` over every stored term.
    pub fn full_symbol(&self, xi: &[f64]) -> Result<SymbolValue> {
        self.check_point(xi)?;
        let mut out = DMatrix::zeros(self.n, self.m);
        for (a, mat) in &self.terms {
            out += mat * a.monomial(xi);
        }
        Ok(SymbolValue {
            matrix: out,
            at: xi.to_vec(),
        })
    }

    pub(crate) fn principal_matrix(&self, xi: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.m);
        for (a, mat) in self.top_terms() {
            let c = a.monomial(xi);
            if c != 0.0 {
                out += mat * c;
            }
        }
        out
    }

    /// Precomputes `A_α λ` so that `ξ ↦ 𝔸^k(ξ)λ` is cheap to evaluate.
    pub fn action(&self, lambda: &[f64]) -> SymbolAction {
        assert_eq!(lambda.len(), self.m, "λ has wrong length");
        let l = DVector::from_column_slice(lambda);
        let terms = self
            .top_terms()
            .map(|(a, mat)| (a.clone(), mat * &l))
            .filter(|(_, v)| v.iter().any(|&x| x != 0.0))
            .collect();
        SymbolAction {
            d: self.d,
            n: self.n,
            k: self.k,
            terms,
        }
    }

    /// Restrict the principal part to the plane `π`: the returned operator
    /// `B` on `R^ℓ` satisfies `𝔹(ξ') = 𝔸^k(Bπ ξ')`. Coefficients are
    /// obtained by multinomial expansion of `ξ = Bπ ξ'`.
    pub fn restrict_to_plane(&self, plane: &Plane) -> Result<OperatorSpec> {
        if plane.dim() == 0 {
            return Err(Error::invalid("cannot restrict to a zero-dimensional plane"));
        }
        if plane.ambient_dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: plane.ambient_dim(),
                context: "plane ambient dimension",
            });
        }
        if plane.orthonormality_defect() > 1e-10 {
            return Err(Error::invalid("plane basis is not orthonormal"));
        }
        Ok(self.restrict_to_basis(plane.basis()))
    }

    /// Restriction along an arbitrary `d×ℓ` basis (no orthonormality check).
    pub(crate) fn restrict_to_basis(&self, basis: &DMatrix<f64>) -> OperatorSpec {
        let ell = basis.ncols();
        let k = self.k;
        // powers[i][e] = (Σ_j B_ij y_j)^e
        let powers: Vec<Vec<Polynomial>> = (0..self.d)
            .map(|i| {
                let row: Vec<f64> = (0..ell).map(|j| basis[(i, j)]).collect();
                let lin = Polynomial::linear(&row);
                let mut v = vec![Polynomial::one(ell)];
                for e in 1..=k {
                    let next = v[(e - 1) as usize].mul(&lin);
                    v.push(next);
                }
                v
            })
            .collect();
        let mut table: BTreeMap<MultiIndex, DMatrix<f64>> = BTreeMap::new();
        for beta in MultiIndex::all_of_order(ell, k) {
            table.insert(beta, DMatrix::zeros(self.n, self.m));
        }
        for (alpha, mat) in self.top_terms() {
            let mut p = Polynomial::one(ell);
            for (i, &e) in alpha.entries().iter().enumerate() {
                if e > 0 {
                    p = p.mul(&powers[i][e as usize]);
                }
            }
            for (beta, c) in p.terms() {
                if c != 0.0 {
                    if let Some(target) = table.get_mut(beta) {
                        *target += mat * c;
                    }
                }
            }
        }
        OperatorSpec::from_parts_unchecked(ell, self.m, self.n, k, table.into_iter().collect())
    }

    /// Coefficient-wise sum of two operators of the same shape.
    pub fn add(&self, other: &OperatorSpec) -> Result<OperatorSpec> {
        if (self.d, self.m, self.n) != (other.d, other.m, other.n) {
            return Err(Error::invalid("operators have different shapes"));
        }
        let mut table: BTreeMap<MultiIndex, DMatrix<f64>> = BTreeMap::new();
        for (a, mat) in self.terms.iter().chain(other.terms.iter()) {
            table
                .entry(a.clone())
                .and_modify(|t| *t += mat)
                .or_insert_with(|| mat.clone());
        }
        OperatorSpec::new(self.d, self.m, self.n, table.into_iter().collect())
    }

    pub fn builtin_operator(builtin: Builtin) -> OperatorSpec {
        let mut op = build_builtin(builtin);
        op.builtin = Some(builtin);
        op
    }

    /// Convenience wrapper over [`Builtin::from_name`].
    pub fn builtin_by_name(name: &str, d: Option<usize>, p: Option<usize>) -> Result<OperatorSpec> {
        Ok(Self::builtin_operator(Builtin::from_name(name, d, p)?))
    }

    /// Parse the JSON operator document.
    pub fn from_json_str(text: &str) -> Result<OperatorSpec> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| Error::spec(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        Self::from_json_value(&value)
    }

    pub fn from_json_value(value: &Value) -> Result<OperatorSpec> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::spec("$", "expected a JSON object"))?;
        if let Some(name) = obj.get("builtin") {
            let name = name
                .as_str()
                .ok_or_else(|| Error::spec("builtin", "expected a string"))?;
            let params = obj.get("params").cloned().unwrap_or(json!({}));
            let get = |key: &str| -> Result<Option<usize>> {
                match params.get(key) {
                    None => Ok(None),
                    Some(v) => v
                        .as_u64()
                        .map(|x| Some(x as usize))
                        .ok_or_else(|| Error::spec(format!("params.{key}"), "expected a non-negative integer")),
                }
            };
            return Self::builtin_by_name(name, get("d")?, get("p")?);
        }
        let field = |key: &str| -> Result<usize> {
            obj.get(key)
                .and_then(Value::as_u64)
                .map(|x| x as usize)
                .ok_or_else(|| Error::spec(key, "missing or not a non-negative integer"))
        };
        let d = field("d")?;
        let m = field("m")?;
        let n = field("n")?;
        let k = field("k")?;
        let terms = obj
            .get("terms")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::spec("terms", "missing or not a list"))?;
        let mut parsed = Vec::with_capacity(terms.len());
        let mut seen = std::collections::BTreeSet::new();
        for (t, term) in terms.iter().enumerate() {
            let loc = |s: &str| format!("terms[{t}].{s}");
            let alpha: Vec<u32> = term
                .get("alpha")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::spec(loc("alpha"), "missing or not a list"))?
                .iter()
                .map(|x| x.as_u64().map(|v| v as u32))
                .collect::<Option<_>>()
                .ok_or_else(|| Error::spec(loc("alpha"), "entries must be non-negative integers"))?;
            if alpha.len() != d {
                return Err(Error::spec(
                    loc("alpha"),
                    format!("expected {d} entries, got {}", alpha.len()),
                ));
            }
            if !seen.insert(alpha.clone()) {
                return Err(Error::spec(loc("alpha"), format!("duplicate alpha {alpha:?}")));
            }
            let rows = term
                .get("matrix")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::spec(loc("matrix"), "missing or not a list of rows"))?;
            if rows.len() != n {
                return Err(Error::spec(
                    loc("matrix"),
                    format!("expected {n} rows, got {}", rows.len()),
                ));
            }
            let mut mat = DMatrix::zeros(n, m);
            for (r, row) in rows.iter().enumerate() {
                let row = row
                    .as_array()
                    .ok_or_else(|| Error::spec(format!("terms[{t}].matrix[{r}]"), "expected a list"))?;
                if row.len() != m {
                    return Err(Error::spec(
                        format!("terms[{t}].matrix[{r}]"),
                        format!("expected {m} entries, got {}", row.len()),
                    ));
                }
                for (c, x) in row.iter().enumerate() {
                    mat[(r, c)] = x
                        .as_f64()
                        .ok_or_else(|| Error::spec(format!("terms[{t}].matrix[{r}][{c}]"), "expected a number"))?;
                }
            }
            let order: u32 = alpha.iter().sum();
            if order as usize > k {
                return Err(Error::spec(loc("alpha"), format!("|alpha| = {order} exceeds k = {k}")));
            }
            parsed.push((MultiIndex::new(alpha), mat));
        }
        let op = OperatorSpec::new(d, m, n, parsed).map_err(|e| Error::spec("terms", e.to_string()))?;
        if op.k() as usize != k {
            return Err(Error::spec(
                "k",
                format!("declared order {k} but the highest nonzero order is {}", op.k()),
            ));
        }
        Ok(op)
    }

    /// Serialize to the operator document format (builtins by reference).
    pub fn to_json_value(&self) -> Value {
        if let Some(b) = self.builtin {
            return json!({"builtin": b.name(), "params": b.params_json()});
        }
        self.to_table_json()
    }

    /// Serialize the explicit coefficient table, even for builtins.
    pub fn to_table_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(a, mat)| {
                let rows: Vec<Vec<f64>> = (0..mat.nrows())
                    .map(|r| (0..mat.ncols()).map(|c| mat[(r, c)]).collect())
                    .collect();
                json!({"alpha": a.entries(), "matrix": rows})
            })
            .collect();
        json!({"d": self.d, "m": self.m, "n": self.n, "k": self.k, "terms": terms})
    }
}

/// `ξ ↦ 𝔸^k(ξ)λ` for a fixed `λ`, as a list of `(α, A_α λ)`.
#[derive(Debug, Clone)]
pub struct SymbolAction {
    d: usize,
    n: usize,
    k: u32,
    terms: Vec<(MultiIndex, DVector<f64>)>,
}

impl SymbolAction {
    pub fn dim(&self) -> usize {
        self.d
    }
    pub fn out_dim(&self) -> usize {
        self.n
    }
    pub fn order(&self) -> u32 {
        self.k
    }

    pub fn is_identically_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, xi: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        for (a, v) in &self.terms {
            let c = a.monomial(xi);
            if c != 0.0 {
                out.axpy(c, v, 1.0);
            }
        }
        out
    }

    pub fn norm_at(&self, xi: &[f64]) -> f64 {
        self.eval(xi).norm()
    }

    /// Jacobian `∂(𝔸^k(ξ)λ)/∂ξ`, an `n×d` matrix.
    pub fn jacobian(&self, xi: &[f64]) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(self.n, self.d);
        for (a, v) in &self.terms {
            for i in 0..self.d {
                let c = a.monomial_derivative(xi, i);
                if c != 0.0 {
                    let mut col = jac.column_mut(i);
                    col.axpy(c, v, 1.0);
                }
            }
        }
        jac
    }

    /// `k · Σ ‖A_α λ‖`: a Lipschitz bound for `ξ ↦ 𝔸^k(ξ)λ` on the unit ball.
    pub fn crude_lipschitz(&self) -> f64 {
        self.k as f64 * self.terms.iter().map(|(_, v)| v.norm()).sum::<f64>()
    }
}

fn mat_from_entries(n: usize, m: usize, entries: &[(usize, usize, f64)]) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, m);
    for &(r, c, v) in entries {
        a[(r, c)] += v;
    }
    a
}

fn accumulate(
    table: &mut BTreeMap<MultiIndex, DMatrix<f64>>,
    n: usize,
    m: usize,
    alpha: MultiIndex,
    row: usize,
    col: usize,
    v: f64,
) {
    let entry = table.entry(alpha).or_insert_with(|| DMatrix::zeros(n, m));
    entry[(row, col)] += v;
}

fn finish(d: usize, m: usize, n: usize, table: BTreeMap<MultiIndex, DMatrix<f64>>) -> OperatorSpec {
    let terms: Vec<_> = table
        .into_iter()
        .filter(|(_, mat)| mat.iter().any(|&x| x != 0.0))
        .collect();
    OperatorSpec::new(d, m, n, terms).expect("builtin tables are valid")
}

fn build_builtin(b: Builtin) -> OperatorSpec {
    let two = |d: usize, i: usize, j: usize| {
        let mut a = MultiIndex::zero(d);
        a.0[i] += 1;
        a.0[j] += 1;
        a
    };
    match b {
        Builtin::Curl { d, p } => {
            let pairs: Vec<(usize, usize)> = (0..d).flat_map(|j| ((j + 1)..d).map(move |k| (j, k))).collect();
            let (m, n) = (p * d, p * pairs.len());
            let mut table = BTreeMap::new();
            for i in 0..p {
                for (q, &(j, k)) in pairs.iter().enumerate() {
                    let row = i * pairs.len() + q;
                    accumulate(&mut table, n, m, MultiIndex::unit(d, j), row, i * d + k, 1.0);
                    accumulate(&mut table, n, m, MultiIndex::unit(d, k), row, i * d + j, -1.0);
                }
            }
            finish(d, m, n, table)
        }
        Builtin::CurlCurl { d } => {
            let s = d * (d + 1) / 2;
            let mut table = BTreeMap::new();
            for j in 0..d {
                for k in j..d {
                    let row = sym_index(d, j, k);
                    for i in 0..d {
                        accumulate(&mut table, s, s, two(d, i, k), row, sym_index(d, i, j), 1.0);
                        accumulate(&mut table, s, s, two(d, i, j), row, sym_index(d, i, k), 1.0);
                        accumulate(&mut table, s, s, two(d, j, k), row, sym_index(d, i, i), -1.0);
                        accumulate(&mut table, s, s, two(d, i, i), row, sym_index(d, j, k), -1.0);
                    }
                }
            }
            finish(d, s, s, table)
        }
        Builtin::DivMatrix { d } => {
            let mut table = BTreeMap::new();
            for i in 0..d {
                for j in 0..d {
                    accumulate(&mut table, d, d * d, MultiIndex::unit(d, j), i, i * d + j, 1.0);
                }
            }
            finish(d, d * d, d, table)
        }
        Builtin::DivVector { d } => {
            let terms = (0..d)
                .map(|j| (MultiIndex::unit(d, j), mat_from_entries(1, d, &[(0, j, 1.0)])))
                .collect();
            OperatorSpec::new(d, d, 1, terms).expect("valid")
        }
        Builtin::Gradient { d } => {
            let terms = (0..d)
                .map(|j| (MultiIndex::unit(d, j), mat_from_entries(d, 1, &[(j, 0, 1.0)])))
                .collect();
            OperatorSpec::new(d, 1, d, terms).expect("valid")
        }
        Builtin::Laplacian { d } => {
            let terms = (0..d)
                .map(|j| (two(d, j, j), DMatrix::from_element(1, 1, 1.0)))
                .collect();
            OperatorSpec::new(d, 1, 1, terms).expect("valid")
        }
        Builtin::Cubic3d => {
            let terms = (0..3)
                .map(|j| {
                    let mut a = MultiIndex::zero(3);
                    a.0[j] = 3;
                    (a, DMatrix::from_element(1, 1, 1.0))
                })
                .collect();
            OperatorSpec::new(3, 1, 1, terms).expect("valid")
        }
        Builtin::Sextic3d => {
            let mut terms = Vec::new();
            for i in 0..3 {
                let mut a = MultiIndex::zero(3);
                a.0[i] = 6;
                terms.push((a, DMatrix::from_row_slice(1, 2, &[1.0, 1.0])));
            }
            for i in 0..3 {
                for j in (i + 1)..3 {
                    let mut a = MultiIndex::zero(3);
                    a.0[i] = 3;
                    a.0[j] = 3;
                    terms.push((a, DMatrix::from_row_slice(1, 2, &[0.0, 2.0])));
                }
            }
            OperatorSpec::new(3, 2, 1, terms).expect("valid")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colex_order() {
        let a = MultiIndex::new(vec![2, 0, 0]);
        let b = MultiIndex::new(vec![0, 1, 0]);
        let c = MultiIndex::new(vec![0, 0, 1]);
        assert!(a < b && b < c);
        let all = MultiIndex::all_of_order(3, 2);
        assert_eq!(all.len(), 6);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert!(all.iter().all(|x| x.order() == 2));
    }

    #[test]
    fn sym_index_is_a_bijection() {
        for d in 1..6 {
            let mut seen = vec![false; d * (d + 1) / 2];
            for a in 0..d {
                for b in a..d {
                    let i = sym_index(d, a, b);
                    assert!(!seen[i]);
                    seen[i] = true;
                    assert_eq!(i, sym_index(d, b, a));
                }
            }
            assert!(seen.iter().all(|&x| x));
        }
    }

    #[test]
    fn cubic_symbol_values() {
        let op = OperatorSpec::builtin_by_name("cubic3d", None, None).unwrap();
        let s = op.principal_symbol(&[1.0, -1.0, 0.0]).unwrap();
        assert_eq!(s.matrix[(0, 0)], 0.0);
        let s = op.principal_symbol(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(s.matrix[(0, 0)], 3.0);
    }

    #[test]
    fn wrong_point_length_is_an_input_error() {
        let op = OperatorSpec::builtin_by_name("laplacian", Some(3), None).unwrap();
        assert!(matches!(
            op.principal_symbol(&[1.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(op.full_symbol(&[1.0]).is_err());
    }

    #[test]
    fn full_symbol_with_lower_order_term() {
        // ∂_1 + id on scalars in d = 1, at ξ = 2: 2 + 1 = 3
        let op = OperatorSpec::new(
            1,
            1,
            1,
            vec![
                (MultiIndex::new(vec![1]), DMatrix::from_element(1, 1, 1.0)),
                (MultiIndex::new(vec![0]), DMatrix::from_element(1, 1, 1.0)),
            ],
        )
        .unwrap();
        assert!(!op.is_homogeneous());
        assert_eq!(op.full_symbol(&[2.0]).unwrap().matrix[(0, 0)], 3.0);
        assert_eq!(op.principal_symbol(&[2.0]).unwrap().matrix[(0, 0)], 2.0);
    }

    #[test]
    fn zero_order_only_is_rejected_but_constant_symbol_is_kept() {
        let a0 = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        assert!(OperatorSpec::new(2, 2, 1, vec![(MultiIndex::zero(2), a0.clone())]).is_err());
        let op = OperatorSpec::new(
            2,
            2,
            1,
            vec![
                (MultiIndex::zero(2), a0.clone()),
                (MultiIndex::unit(2, 0), DMatrix::from_row_slice(1, 2, &[1.0, 0.0])),
            ],
        )
        .unwrap();
        let lower = OperatorSpec::from_parts_unchecked(2, 2, 1, 0, vec![(MultiIndex::zero(2), a0.clone())]);
        for xi in [[0.3, 0.4], [-2.0, 5.0]] {
            assert_eq!(lower.full_symbol(&xi).unwrap().matrix, a0);
        }
        assert_eq!(op.k(), 1);
    }

    #[test]
    fn invariant_violations() {
        let z = DMatrix::zeros(1, 1);
        assert!(OperatorSpec::new(1, 1, 1, vec![(MultiIndex::new(vec![2]), z)]).is_err());
        let one = DMatrix::from_element(1, 1, 1.0);
        let bad_shape = DMatrix::from_element(2, 1, 1.0);
        assert!(OperatorSpec::new(
            2,
            1,
            1,
            vec![
                (MultiIndex::unit(2, 0), one.clone()),
                (MultiIndex::unit(2, 1), bad_shape)
            ]
        )
        .is_err());
        assert!(OperatorSpec::new(
            2,
            1,
            1,
            vec![(MultiIndex::unit(2, 0), one.clone()), (MultiIndex::unit(2, 0), one)]
        )
        .is_err());
    }

    #[test]
    fn spec_roundtrip_and_errors() {
        let op = OperatorSpec::builtin_by_name("sextic3d", None, None).unwrap();
        let text = op.to_table_json().to_string();
        let back = OperatorSpec::from_json_str(&text).unwrap();
        assert_eq!(back.terms(), op.terms());

        let dup = r#"{"d":1,"m":1,"n":1,"k":1,"terms":[{"alpha":[1],"matrix":[[1]]},{"alpha":[1],"matrix":[[2]]}]}"#;
        let err = OperatorSpec::from_json_str(dup).unwrap_err();
        assert!(err.to_string().contains("terms[1].alpha"), "{err}");

        let bad = r#"{"d":2,"m":1,"n":1,"k":1,"terms":[{"alpha":[1],"matrix":[[1]]}]}"#;
        assert!(OperatorSpec::from_json_str(bad).is_err());

        let syntax = "{\"d\": 1,\n \"m\": }";
        let err = OperatorSpec::from_json_str(syntax).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");

        let b = OperatorSpec::from_json_str(r#"{"builtin":"curl","params":{"d":2,"p":2}}"#).unwrap();
        assert_eq!((b.d(), b.m(), b.n()), (2, 4, 2));
        assert!(OperatorSpec::from_json_str(r#"{"builtin":"nope"}"#).is_err());
        assert!(OperatorSpec::from_json_str(r#"{"builtin":"cubic3d","params":{"d":2}}"#).is_err());
    }
}
