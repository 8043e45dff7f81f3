//! Numerical engine for Finsler metric measure manifolds and their sharp
//! weighted Hardy inequalities.

pub mod calculus;
pub mod error;
pub mod field;
pub mod gauss;
pub mod geodesics;
pub mod hardy;
pub mod linalg;
pub mod measure;
pub mod metric;
pub mod models;
pub mod ode;
pub mod real;
pub mod report;
pub mod sum;

pub use error::{Error, Result};
pub use field::ScalarField;
pub use metric::MetricSpec;
