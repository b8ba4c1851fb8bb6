//! Degree-2 kernels, their projections under a distribution and a numerical
//! checker for the kernel and moment hypotheses.

mod assumptions;
mod kernel;
mod projection;

pub use assumptions::{check_assumptions, growth_lattice, log_log_slope, AssumptionEntry, AssumptionReport, GROWTH_SLOPE_TOL};
pub use kernel::{gini_kernel, variance_kernel, Kernel, KernelRepr, KernelSpec, TabulatedKernel};
pub use projection::{functional_value, project, project_with, Projection};
