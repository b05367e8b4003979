//! Base field arithmetic: cyclotomic rationals and truncated Laurent series in u = q^{1/2}.

pub mod cyclo;
pub mod monomial;
pub mod series;

pub use cyclo::CycloRational;
pub use monomial::UnitMonomial;
pub use series::{ScalarSeries, EXACT};
