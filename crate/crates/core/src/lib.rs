//! Generalized convolution `f *_{L,mu} g` over measured groups with
//! bilinear pairings, plus mollifiers, derivative formulas and an FFT
//! fast path for the scalar case.

pub mod calculus;
#[cfg(feature = "cli")]
pub mod cli;
pub mod conv;
pub mod csv;
pub mod error;
pub mod fastpath;
pub mod function;
pub mod group;
pub mod mollify;
pub mod pairing;
pub mod sum;

pub use conv::{convolve, ConvRequest, Variant};
pub use error::{Error, Result};
pub use function::{SampledFunction, SymbolicFunction};
pub use group::{GroupPoint, GroupSpace, InvariantMeasure};
pub use pairing::Pairing;
