//! Wave-cone hierarchy of constant-coefficient linear PDE operators.
//!
//! The crate computes the cones `Λ_A`, `Λ^ℓ_A`, `N^ℓ_A` of an operator
//! `A = Σ A_α ∂^α`, the thresholds `ℓ_A` and `ℓ*_A`, cocancellation and the
//! constant-rank property, and checks A-freeness of discretized model measures
//! on the periodic unit torus.
//!
//! Every decision that quantifies over the Grassmannian or a sphere is
//! three-valued ([`cone::Decision`]); boolean answers are reserved for exact
//! linear algebra.

pub mod cone;
pub mod config;
pub mod error;
pub mod fft;
pub mod grassmannian;
pub mod linalg;
pub mod measure;
pub mod operator;
pub mod optim;
pub mod poly;
pub mod report;
pub mod sphere;

pub use config::AnalysisConfig;
pub use error::{Error, Result};
pub use grassmannian::Plane;
pub use operator::{Builtin, MultiIndex, OperatorSpec, SymbolValue};
