//! Shared numerical kernels: fixed-step RK4, dense eigen-decomposition and
//! small-matrix helpers.

mod eig;
mod linalg;
mod range;
mod rk4;

pub use eig::{eig_general, EigenDecomposition};
pub use linalg::{cinv3, complex_condition, norm1, posdef_min_eig, real_condition};
pub use range::OmegaRange;
pub use rk4::{rk4_integrate, rk4_step, Rk4State, Trajectory};
