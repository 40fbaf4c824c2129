//! Numerical laboratory for bilinear fractional integrals `I_α`, their
//! commutators with pointwise multiplication, Muckenhoupt weights, and BMO/CMO
//! oscillation.
//!
//! Everything runs on uniform grids in one or two dimensions with midpoint
//! quadrature. Suprema over "all cubes" are taken over finite cube families and
//! are lower bounds of the true quantities; limits are reported as finite
//! sequences with fitted trends.

pub mod error;
pub mod exponents;
pub mod fit;
pub mod fixtures;
pub mod grid;
pub mod kernel;
pub mod lab;
pub mod operator;
pub mod oscillation;
pub mod weights;

pub use error::{Error, Result};
pub use exponents::ExponentConfig;
pub use grid::{Cube, GridSpec, SampledFunction};
pub use kernel::KernelParams;
pub use operator::{ApplyMode, BilinearOperator, Slot};
