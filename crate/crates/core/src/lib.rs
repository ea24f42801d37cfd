//! Numerics for anisotropic Hardy-Lorentz spaces driven by an expansive
//! dilation matrix: quasi-norm geometry, periodic lattice transforms,
//! Lorentz quasi-norms, maximal and square functions, reproducing frames,
//! dyadic cubes with atoms, and majorant sequences.

pub mod dilation;
pub mod error;

pub use dilation::{validate_dilation, Dilation, QuasiLevel, QuasiNormEngine, StepQuasiNorm};
pub use error::{Error, Result};
pub mod dyadic;
pub mod frames;
pub mod lattice;
pub mod lorentz;
pub mod maximal;
pub mod sequences;
pub mod square;
