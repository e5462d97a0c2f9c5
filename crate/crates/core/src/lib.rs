//! Numerical tools for two related questions.
//!
//! The matrix side ([`matgap`], [`certify`]) compares `inf_S ‖S B S⁻¹‖` over
//! positive diagonal scalings with `max_U ρ(U B)` over diagonal unitaries, and
//! certifies candidate minimizers through the restricted quadratic forms of the
//! variational problem.
//!
//! The PDE side ([`rollwave`], [`dampsim`], [`genbal`]) builds inviscid
//! Saint-Venant roll waves, evaluates their high-frequency stability index and
//! damping weights, and checks the resulting energy decay on a discrete
//! linearized model.

pub mod certify;
pub mod dampsim;
pub mod error;
pub mod genbal;
pub mod io;
pub mod linalg;
pub mod matgap;
pub mod optim;
pub mod quad;
pub mod rollwave;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, DiagonalScaling, PhaseVector};
pub use num_complex::Complex64;
