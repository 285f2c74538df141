//! Discrete Wigner kernels of operators, metaplectic and Fourier integral
//! operators on centered periodic grids.

pub mod battery;
pub mod checks;
pub mod error;
pub mod fft;
pub mod fio;
pub mod io;
pub mod kernel;
pub mod metaplectic;
pub mod modnorm;
pub mod propagator;
pub mod signal;
pub mod symplectic;
pub mod transforms;

pub use error::{Error, Result};
pub use signal::{Axis, Grid, PhaseField, Signal, C64};
