//! Periodic lattices, sampled fields, spectral convolution and the filter
//! families `φ` together with their dilates `φ_k(x) = b^{-k}φ(A^{-k}x)`.

mod fft;
mod field;
mod filter;
mod grid;
mod io;

pub use field::{apply_multiplier, apply_multiplier_to_spectrum, convolve, SampledField};
pub use filter::{
    bump, dilate_filter, filter_spectrum, make_vanishing_moment_filter, sample_filter, shell_ratio,
    BandlimitedAnnulus, DilatedFilter, Filter, FilterSource, FilterSpec, GaussianHermite,
    ALIASING_TOL, PERIOD_TAIL_TOL,
};
pub use grid::{Grid, MAX_DIM};
pub use io::{decode_field, encode_field, read_field, write_field, FieldDescriptor};
