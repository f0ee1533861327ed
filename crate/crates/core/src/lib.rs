//! Loewner interpolation toolkit.
//!
//! Builds rational descriptor models from frequency-response samples and uses
//! them for controller design and stability estimation:
//!
//! - [`plant`]: closed-form transport-equation plant used as a data source.
//! - [`data`]: frequency datasets, conjugate closure and point partitions.
//! - [`loewner`]: Loewner pencils, rank detection and projected realizations.
//! - [`descriptor`]: descriptor realizations, transfer maps and their analysis.
//! - [`lddc`]: data-driven controller design from a reference model.
//! - [`pi`]: weighted-sensitivity PI synthesis on a rational model.
//! - [`mfsa`]: interpolation-based stability tags and delay sweeps.
//! - [`case_study`]: default settings of the transport-equation example.
//!
//! Algorithms are generic over [`Real`] (`f32` or `f64`); the aliases at the
//! crate root fix the scalar to `f64`.

pub mod case_study;
pub mod data;
pub mod descriptor;
pub mod error;
pub mod io;
pub mod lddc;
pub mod loewner;
pub mod mfsa;
pub mod pi;
pub mod plant;
mod scalar;

pub use error::{Error, Result};
pub use num_complex::Complex;
pub use scalar::Real;

pub type Complex64 = Complex<f64>;
pub type PlantParameters = plant::PlantParameters<f64>;
pub type FrequencySample = data::FrequencySample<f64>;
pub type FrequencyDataset = data::FrequencyDataset<f64>;
pub type PointPartition = data::PointPartition<f64>;
pub type LoewnerPencil = loewner::LoewnerPencil<f64>;
pub type RankReport = loewner::RankReport<f64>;
pub type Realization = descriptor::DescriptorRealization<f64>;
pub type TransferMap = descriptor::TransferMap<f64>;
pub type StableSplit = descriptor::StableSplit<f64>;
pub type ReferenceModelSpec = lddc::ReferenceModelSpec<f64>;
pub type ReductionSweep = lddc::ReductionSweep<f64>;
pub type PIController = pi::PIController<f64>;
pub type WeightingFilters = pi::WeightingFilters<f64>;
pub type StabilityReport = mfsa::StabilityReport<f64>;
pub type DelaySweepResult = mfsa::DelaySweepResult<f64>;
