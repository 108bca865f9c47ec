//! Spectral analysis of the Dirichlet problem for `-y'' + q y = lambda y` on
//! `[0, pi]` with a distributional potential `q = u'`, `u` in `L_2`.
//!
//! Everything is generic over the real scalar (`f32` or `f64`); the aliases
//! below fix `f64`.

// `!(x > 0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eigensystem;
pub mod error;
pub mod jet;
pub mod linalg;
pub mod potential;
pub mod projector;
pub mod pruefer;
pub mod quadrature;
pub mod quasiode;
pub mod scalar;
pub mod spectrum;

pub use error::{Error, ErrorClass, Result};
pub use scalar::{Cx, Real};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Complex64 = Cx<f64>;
pub type Potential = potential::Potential<f64>;
pub type StripParams = potential::StripParams<f64>;
pub type Grid = quadrature::Grid<f64>;
pub type OdeOptions = quasiode::OdeOptions<f64>;
pub type SolutionTrace = quasiode::SolutionTrace<f64>;
pub type ChainTrace = quasiode::ChainTrace<f64>;
pub type PrueferField = pruefer::PrueferField<f64>;
pub type SpectrumOptions = spectrum::SpectrumOptions<f64>;
pub type SpectralDatum = spectrum::SpectralDatum<f64>;
pub type RemainderReport = spectrum::RemainderReport<f64>;
pub type SweepReport = spectrum::SweepReport<f64>;
pub type EigenFunction = eigensystem::EigenFunction<f64>;
pub type BiorthElement = eigensystem::BiorthElement<f64>;
pub type Basis = eigensystem::Basis<f64>;
pub type EfasReport = eigensystem::EfasReport<f64>;
pub type ProjectorMatrix = projector::ProjectorMatrix<f64>;
pub type Resolvent = projector::Resolvent<f64>;
