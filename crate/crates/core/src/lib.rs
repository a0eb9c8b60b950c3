//! Information-disturbance trade-offs for quantum information transfers.
//!
//! Everything numeric is generic over a [`scalar::Real`] (`f32` or `f64`);
//! the `*64` aliases below fix the scalar to `f64`.

// Negated comparisons make NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod channels;
pub mod error;
pub mod figures;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod operators;
pub mod randgen;
pub mod scalar;
pub mod sweep;

pub use error::{Error, Result};
pub use scalar::{Real, C};

pub type CMatrix64 = linalg::CMatrix<f64>;
pub type CVector64 = linalg::CVector<f64>;
pub type Hermitian64 = operators::HermitianOperator<f64>;
pub type Projection64 = operators::Projection<f64>;
pub type Density64 = operators::DensityMatrix<f64>;
pub type Bloch64 = operators::BlochVector<f64>;
pub type Instrument64 = channels::Instrument<f64>;
pub type Element64 = channels::Element<f64>;
pub type Pointer64 = channels::PointerObservable<f64>;
pub type KrausMap64 = channels::KrausMap<f64>;
pub type IsometryChannel64 = channels::IsometryChannel<f64>;
pub type Superoperator64 = channels::SuperoperatorMap<f64>;
pub type Fixture64 = channels::Fixture<f64>;
pub type DisturbanceEstimate64 = metrics::DisturbanceEstimate<f64>;
pub type CoherencePair64 = metrics::CoherencePair<f64>;
pub type SharpnessFamily64 = models::SharpnessFamily<f64>;
pub type Beamsplitter64 = models::BeamsplitterModel<f64>;
pub type Fluorescence64 = models::FluorescenceModel<f64>;
