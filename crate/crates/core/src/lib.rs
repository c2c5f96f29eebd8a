//! Exact Walsh–Fourier analysis on the finite dyadic group.

pub mod analysis;
pub mod constructions;
pub mod error;
pub mod experiments;
pub mod function;
pub mod group;
pub mod io;
pub mod numeric;
pub mod operators;
pub mod spectral;

pub use error::{Error, Result};
pub use function::{DyadicFunction, SpectralVector};
pub use group::{DyadicInterval, GroupPoint, IndexSet, Resolution};
pub use numeric::{Dyadic, Number, NumericMode};
