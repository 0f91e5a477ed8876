//! Simulation of a single-mode cavity whose end mirror moves while the field
//! is coupled to a squeezed thermal reservoir, and of Otto cycles built from
//! such strokes.

pub mod analytics;
pub mod engine;
pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod moments;
pub mod otto;
pub mod protocol;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
