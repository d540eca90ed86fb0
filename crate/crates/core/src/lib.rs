//! Two-stage adjustable robust linear optimization with right-hand-side
//! uncertainty over budgeted uncertainty sets.

pub mod adjustable;
pub mod affine;
pub mod construct;
pub mod covering;
pub mod error;
pub mod fastaffine;
pub mod instances;
pub mod lpkernel;
pub mod model;
pub mod reduce;

pub use error::{Error, Result};
pub use model::{AffinePolicy, FirstStageSet, Matrix, PolicyReport, TwoStageInstance, UncertaintySet};
