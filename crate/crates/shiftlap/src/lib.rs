//! Twogrid shifted-Laplacian preconditioning for the 2D Helmholtz equation
//! with impedance boundary, on uniform Q_p grids.
//!
//! The crate has three layers that feed each other:
//!
//! * a semi matrix-free discretization and solver stack ([`fem`], [`twogrid`],
//!   [`krylov`]) where fine-level operators are applied from quadrature data
//!   and only the boundary and coarse matrices are assembled,
//! * a local Fourier analysis engine ([`lfa`]) predicting twogrid convergence
//!   as a function of the complex-shift exponent σ in ε = k^σ,
//! * a data pipeline ([`shift_model`]) that samples near-optimal exponents
//!   with golden-section search and fits the closed-form exponent map σ_p
//!   used by the benchmark scenarios ([`scenario`]) and the CLI ([`cli`]).
//!
//! Everything numeric is generic over the scalar type through
//! [`scalar::Real`]; the `*64` aliases below fix the common f64 choice.

pub mod cli;
pub mod error;
pub mod fem;
pub mod field;
pub mod grid;
pub mod krylov;
pub mod lfa;
pub mod scalar;
pub mod scenario;
pub mod shift_model;
pub mod sparse;
pub mod twogrid;
pub mod wavenumber;

pub use error::{Error, Result};

pub type Complex64 = scalar::Cx<f64>;
pub type GridLevel64 = grid::GridLevel<f64>;
pub type FieldVector64 = field::FieldVector<f64>;
pub type WavenumberField64 = wavenumber::WavenumberField<f64>;
pub type VelocityProfile64 = wavenumber::VelocityProfile<f64>;
pub type ShiftSpec64 = fem::ShiftSpec<f64>;
pub type SystemOperator64 = fem::SystemOperator<f64>;
pub type TwoGridPreconditioner64 = twogrid::TwoGridPreconditioner<f64>;
pub type KrylovReport64 = krylov::KrylovReport<f64>;
pub type LfaConfig64 = lfa::LfaConfig<f64>;
pub type ShiftMapCoefficients64 = shift_model::ShiftMapCoefficients<f64>;
pub type Dataset64 = shift_model::Dataset<f64>;
pub type ScenarioConfig64 = scenario::ScenarioConfig<f64>;
