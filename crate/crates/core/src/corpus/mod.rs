//! Named series, the equation verifier and the registry of identities.

pub mod equation;
pub mod named;
pub mod registry;
pub mod report;

pub use equation::{parse_equation, verify_equation, EquationResult, EquationSpec, Factor, Mode, Term};
pub use named::{builtin_series, MonoArg, NamedSeries, SeriesRef};
pub use registry::{lookup, registry, verify_named, verify_named_at, Identity};
pub use report::{Report, Status};
