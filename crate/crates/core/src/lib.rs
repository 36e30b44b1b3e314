//! Boundary-controlled viscoelastic string with memory.
//!
//! The string obeys `w_tt = w_xx + ∫₀ᵗ M(t−s) w_xx(s) ds` on `(0, π)` with the
//! control `w(0, t) = f(t)`. Everything is computed through the sine modes:
//! each mode reduces to a scalar Volterra integro-differential equation, and
//! steering problems reduce to moment problems over the family `Z_n`.
//!
//! - [`kernels`]: memory kernels and the derived relaxation/stress kernels.
//! - [`volterra`]: product-trapezoidal solvers for the mode equations.
//! - [`spectral`]: deformation/velocity/stress functionals of a control.
//! - [`moments`]: Gram systems and minimal-norm steering controls.
//! - [`verify`]: numerical checks of the asymptotic estimates.
//! - [`harness`]: experiment configuration, CLI tasks and file output.

pub mod error;
pub mod harness;
pub mod kernels;
pub mod linalg;
pub mod moments;
pub mod numeric;
pub mod spectral;
pub mod verify;
pub mod volterra;

pub use error::{Error, Result};
pub use kernels::{DerivedKernelSet, MemoryKernel};
pub use volterra::{ModeTrajectory, TimeGrid, TrajectoryKind};
