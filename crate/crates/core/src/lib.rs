//! Finite-window laboratory for circle-action operator systems: Toeplitz
//! indices and winding numbers, self-dual CAR quantization over a Dirac sea,
//! Schwinger terms, Weyl/CCR generating functionals, commutants in
//! clock-and-shift models and a symbolic graded crossed product.

pub mod commutant;
pub mod crossed_product;
pub mod config;
pub mod error;
pub mod fock;
pub mod fourier;
pub mod fredholm;
pub mod linalg;
pub mod mode_space;
pub mod report;
pub mod sampling;
pub mod weyl;
pub mod selfdual;

pub use config::{LabConfig, Tolerances};
pub use error::{LabError, Result};
