//! Pinned tolerances.
//!
//! Certificate tolerances are deliberately two orders of magnitude looser
//! than solver tolerances, so that resolvent inexactness can never
//! masquerade as an inequality violation. Records carry both numbers.

/// Residual target for closed-form and linear resolvent paths.
pub const RESOLVENT_TOL: f64 = 1e-10;

/// Residual target for iterative resolvent paths (splitting + Newton polish).
pub const RESOLVENT_TOL_ITER: f64 = 1e-9;

/// Hard cap on iterations for any iterative resolvent solve.
pub const MAX_SOLVER_ITERS: usize = 100_000;

/// Base certificate tolerance; the effective per-record tolerance is
/// `CERT_TOL + CERT_TOL * max(1, |gap|)`.
pub const CERT_TOL: f64 = 1e-6;

/// Absolute + relative slop allowed in the lower <= exact <= upper sandwich.
pub const SANDWICH_TOL: f64 = 1e-9;

/// Slack floor for the Fitzpatrick inequality itself (gap >= 0).
pub const GAP_NONNEG_TOL: f64 = 1e-10;

/// Relative tolerance for the two defining identities of the duality map.
pub const DUALITY_IDENTITY_RTOL: f64 = 1e-12;

/// Matrices are accepted as symmetric / PSD up to this relative slop.
pub const MATRIX_SYM_TOL: f64 = 1e-12;
