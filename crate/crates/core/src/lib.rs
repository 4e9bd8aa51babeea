//! Numerical laboratory for the periodic 3D quintic NLS
//! i u_t + Δu = λ|u|⁴u on 𝕋³ with randomized initial data.

pub mod cli;
pub mod error;
pub mod estimates;
pub mod fft;
pub mod field;
pub mod gauge;
pub mod lattice;
pub mod nonlinearity;
pub mod random_data;
pub mod solver;
pub mod spaces;
pub mod stats;

pub use error::{Error, Result};
pub use field::FourierField;
pub use lattice::Freq;
