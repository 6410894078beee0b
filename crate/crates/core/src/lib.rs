//! Numerical toolkit for smooth noncommutative tori, their finite coverings,
//! the Moyal plane on a grid, and periodization onto covering towers.

pub mod covering;
pub mod error;
pub mod limitcheck;
pub mod moyal;
pub mod torus;

pub use error::{DeformError, Result};
pub use num_complex::Complex64;
