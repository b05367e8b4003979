//! The quantum torus T(H, alpha) and its formal functions.

pub mod engine;
pub mod param;
pub mod point;
pub mod quad;
pub mod series;

pub use param::QuantParam;
pub use point::TorusPoint;
pub use quad::Minorant;
pub use series::{
    conjugation_check, torus_series_mul, AffineChar, CoeffRule, LatticeBody, Point, Region, SeqRule,
    SeriesKind, SeriesWindow, TorusSeries,
};
