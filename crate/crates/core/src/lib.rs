//! Smallest singular triplets of large sparse matrices by implicitly restarted
//! Lanczos bidiagonalization.
//!
//! Three restart drivers share the same machinery:
//!
//! * [`Algorithm::Irrhlb`]: refined harmonic extraction with refined harmonic shifts,
//! * [`Algorithm::Irhlb`]: harmonic extraction with harmonic shifts,
//! * [`Algorithm::Irlb`]: plain Ritz extraction with exact shifts.
//!
//! The matrix is only touched through products with `A` and `Aᵀ`; every projected
//! problem is small and dense and is handled by the kernels in [`dense`].
//!
//! ```no_run
//! use rhlb::{make_clustered_diag, solve, Algorithm, SolverConfig};
//!
//! let a = make_clustered_diag(1).unwrap();
//! let config = SolverConfig {
//!     k: 1,
//!     adjust: 9,
//!     m: 50,
//!     maxit: 2000,
//!     tol: 1e-8,
//!     algorithm: Algorithm::Irrhlb,
//!     ..SolverConfig::default()
//! };
//! let result = solve(&a, &config).unwrap();
//! println!("sigma_min ~ {}", result.triplets[0].value);
//! ```

pub mod bidiag;
pub mod cli;
pub mod dense;
mod error;
pub mod extract;
pub mod matrix_io;
pub mod restart;
pub mod solver;
pub(crate) mod vecops;

pub use bidiag::{BidiagFactorization, Reorth};
pub use dense::{DenseMatrix, GenEigResult, SvdResult};
pub use error::{Error, Result};
pub use extract::{HarmonicSet, RefinedSet, RitzSet};
pub use matrix_io::{make_clustered_diag, make_illcond_diag, SparseMatrix};
pub use restart::{ShiftKind, ShiftSet, SweepResult};
pub use solver::{
    convergence_check, solve, Algorithm, ConvergenceTrace, SolverConfig, SolverResult, Target,
    TraceFlag, TraceRecord, Triplet,
};
