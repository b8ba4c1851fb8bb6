//! Calculus for càdlàg functions of locally bounded variation on a grid.

pub mod columnar;
mod grid;
mod helly_bray;
mod jordan;
mod measure;
mod norm;
mod stieltjes;
mod tail;

pub use grid::{merge_grids, GridFunction};
pub use helly_bray::{helly_bray_check, HellyBrayReport};
pub use jordan::{abs_measure, jordan_decompose, measure_of, signed_measure_of};
pub use measure::{Measure, Quadratic, SignedMeasure};
pub use norm::{weighted_norm, NormValue, WeightedNorm};
pub use stieltjes::{integration_by_parts, stieltjes};
pub use tail::Tail;
