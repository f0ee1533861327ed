//! The transport-equation case study with its default settings, shared by
//! the command line and the test suites.

use crate::data::FrequencyDataset;
use crate::descriptor::{DescriptorRealization, TransferMap};
use crate::error::Result;
use crate::lddc::ReferenceModelSpec;
use crate::loewner::{fit, LoewnerFit};
use crate::pi::PIController;
use crate::plant::{default_band, log_grid, PlantParameters};

/// Identification grid size (positive frequencies).
pub const GRID_POINTS: usize = 200;

/// Order of the reference rational approximant.
pub const APPROXIMANT_ORDER: usize = 33;

/// Relative SVD threshold at which the detected rank of the default data
/// is [`APPROXIMANT_ORDER`]. The library default (1e-10) gives 28.
pub const APPROXIMANT_TOL: f64 = 1e-13;

/// Model-based PI design used to build the second reference model.
pub const DESIGN_PI: (f64, f64) = (0.191, 0.0252);

/// Data-driven PI controller obtained from the second reference model.
pub const LDDC_PI: (f64, f64) = (0.1914, 0.0252);

/// Natural frequency of the second-order reference model.
pub const REFERENCE_OMEGA0: f64 = 0.5;

/// 200 log-spaced frequencies over `[2 pi 1e-2, 2 pi]`.
pub fn grid() -> Vec<f64> {
    let (lo, hi) = default_band();
    log_grid(GRID_POINTS, lo, hi).expect("valid default band")
}

/// Irrational plant at the measurement point.
pub fn plant() -> TransferMap<f64> {
    PlantParameters::default().measured_transfer()
}

pub fn plant_data() -> Result<FrequencyDataset<f64>> {
    FrequencyDataset::from_transfer(&plant(), &grid())
}

/// Loewner model of the plant data at `order` (rank detected at
/// [`APPROXIMANT_TOL`] if `None`).
pub fn approximant(order: Option<usize>) -> Result<LoewnerFit<f64>> {
    fit(&plant_data()?, APPROXIMANT_TOL, order)
}

pub fn design_pi() -> PIController<f64> {
    PIController::new(DESIGN_PI.0, DESIGN_PI.1)
}

pub fn lddc_pi() -> PIController<f64> {
    PIController::new(LDDC_PI.0, LDDC_PI.1)
}

/// `M1 = 1/(s^2/w0^2 + 2 s/w0 + 1)` with `w0 = 0.5`.
pub fn reference_m1() -> ReferenceModelSpec<f64> {
    ReferenceModelSpec::second_order(REFERENCE_OMEGA0)
}

/// `M2`: closed loop of the rational approximant with the design PI.
pub fn reference_m2(approximant: &DescriptorRealization<f64>) -> Result<ReferenceModelSpec<f64>> {
    ReferenceModelSpec::closed_loop(approximant, &design_pi().realization())
}
