//! Dense kernels executed under an emulated precision.
//!
//! Each kernel first rounds its inputs to the context format and then rounds
//! every scalar operation, accumulating sequentially from left to right. The
//! SVD and the symmetric eigensolver always run in `f64`.

mod chol;
mod cond;
mod eig;
mod lu;
mod matmul;
mod qr;
mod svd;
mod triangular;

pub use crate::fpemu::PrecisionContext;
pub use chol::chol;
pub use cond::{cond2_abs, cond_inf, inverse, norm2_estimate, DEFAULT_INVERSE_CAP};
pub use eig::{eig_symmetric, SymmetricEigen};
pub use lu::{lu_factor, LuFactors};
pub use matmul::{matmul, matvec, overflow_events};
pub use qr::{qr_householder, QrFactors};
pub use svd::{svd, Svd, SVD_MAX_SWEEPS};
pub use triangular::{solve_triangular, solve_triangular_vec, Diag, Side, Uplo};
