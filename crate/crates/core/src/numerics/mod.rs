//! Dense complex linear algebra shared by every other module.

pub mod eigen;
pub mod expm;
pub mod matrix;
pub mod rng;
pub mod superop;

pub use eigen::{leading_eigenvalue, sorted_spectrum, stationary_state};
pub use expm::{matrix_exponential, propagator};
pub use matrix::{CMatrix, CVector, C64};
pub use rng::{random_hermitian, random_unitary, seeded_rng, RandomStream};
pub use superop::{unvectorize, vectorize, SuperOperator};
