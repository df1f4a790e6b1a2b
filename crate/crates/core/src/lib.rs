//! Schwarz rearrangement, radial heat and adjoint solvers, and bathtub optimal
//! control on the ball `B(0, R)` of `R^d`.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the type
//! aliases below fix it to `f64`, which is what every stated tolerance assumes.

pub mod control;
pub mod error;
pub mod experiments;
pub mod field;
pub mod grid;
pub mod heat;
pub mod io;
pub mod operator;
pub mod rearrange;
pub mod report;
pub mod scalar;
pub mod tridiag;

pub use error::{Error, Result};
pub use field::FieldKind;
pub use heat::Scheme;
pub use rearrange::SchwarzRearrange;
pub use scalar::Scalar;

pub type RadialGrid = grid::RadialGrid<f64>;
pub type TimeGrid = grid::TimeGrid<f64>;
pub type RadialField = field::RadialField<f64>;
pub type SpaceTimeField = field::SpaceTimeField<f64>;
pub type DecreasingProfile = rearrange::DecreasingProfile<f64>;
pub type ConcentrationProfile = rearrange::ConcentrationProfile<f64>;
pub type HeatSolution = heat::HeatSolution<f64>;
pub type AdjointSolution = heat::AdjointSolution<f64>;
pub type AdmissibleControl = control::AdmissibleControl<f64>;
pub type BathtubSolution = control::BathtubSolution<f64>;
