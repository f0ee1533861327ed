//! SISO descriptor systems `E x' = A x + B u, y = C x + D u` and transfer
//! evaluators built on top of them.

mod analysis;
mod realization;
mod schur;
mod simulate;
mod split;
mod transfer;

pub use analysis::{closed_loop_delay, linf_norm_grid, LinfNorm};
pub use realization::{DescriptorRealization, PoleSet, DEFLATION_TOL};
pub use simulate::{simulate_step, StepResponse, ORIGIN_POLE_RADIUS};
pub use split::{stable_antistable_split, StableSplit, AXIS_GUARD};
pub use transfer::TransferMap;
