//! Mixed-precision matrix computations with software-emulated floating-point
//! formats.
//!
//! Every kernel takes a [`PrecisionContext`] naming the format its arithmetic
//! is carried out in. Values are held as `f64` on the host and each scalar
//! operation result is rounded to the target format, so `fl(x op y) =
//! (x op y)(1 + δ)` with `|δ| ≤ u` holds exactly for every format narrower
//! than half of `f64`'s significand.
//!
//! Modules:
//! - [`fpemu`]: format definitions and round-to-nearest-even emulation.
//! - [`dense`], [`densela`]: dense storage and factorizations under a context.
//! - [`sparse`]: compressed sparse column storage and a fill-reducing ordering.
//! - [`krylov`]: left-preconditioned GMRES.
//! - [`ir`]: three-precision iterative refinement and its error metrics.
//! - [`spai`]: sparse approximate inverse built in low precision.
//! - [`nystrom`]: single-pass randomized Nyström with a low-precision sketch.
//! - [`hodlr`]: adaptive-precision HODLR matrices.

pub mod dense;
pub mod densela;
pub mod error;
pub mod fpemu;
pub mod ir;
pub mod krylov;
pub mod nystrom;
pub mod hodlr;
pub mod random;
pub mod sparse;
pub mod spai;

pub use dense::DenseMatrix;
pub use error::{Error, Result};
pub use fpemu::{FloatFormat, PrecisionContext, RoundingEvents};
pub use sparse::CscMatrix;
