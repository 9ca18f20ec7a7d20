//! Exact symbolic algebra of first-quantized operators built from metric
//! perturbation fields, Dirac matrices and spatial derivatives, graded by
//! powers of `1/m` and by degree in the perturbation.

pub mod coeff;
pub mod dirac;
pub mod dsl;
pub mod expr;
pub mod field;
pub mod rewrite;
pub mod selfcheck;

use thiserror::Error;

pub use coeff::{Coeff, Rational};
pub use dirac::Gamma;
pub use dsl::{momentum, parse_operator, parse_operator_with, ParseError, ParseErrorKind};
pub use expr::{Measure, Monomial, OperatorExpr, Truncation};
pub use field::{FieldBase, FieldSymbol, MultiIndex};
pub use rewrite::{apply_rewrites, RuleSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OpError {
    #[error("conjugation generator has a term with m-power {mpow}; every term needs m-power ≤ -1")]
    GeneratorNotSmall { mpow: i32 },
    #[error("nested-commutator series did not terminate inside the window")]
    SeriesDidNotTerminate,
    #[error("coordinate factor left in a final expression: {0}")]
    DanglingCoordinate(String),
}

/// `normal_form` of an already-built expression is the expression itself
/// re-truncated into its window; kept as a named entry point.
pub fn normal_form(e: &OperatorExpr) -> OperatorExpr {
    e.with_truncation(e.truncation())
}
