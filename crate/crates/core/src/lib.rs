//! Monotone-operator calculus on finite-dimensional ℓᵖ spaces (1 < p ≤ 2),
//! with numerically certified lower bounds on the Fitzpatrick gap.
//!
//! The library has three layers:
//!
//! * geometry and an operator catalog ([`space`], [`operators`]) in which
//!   every graph membership question has an exact answer,
//! * generalized resolvents `(B + λT)⁻¹` with certified residuals
//!   ([`resolvent`]) and two-sided Fitzpatrick estimates ([`fitzpatrick`]),
//! * machine-checked inequality certificates ([`certificates`]): Carlier's
//!   inequality, its strongly-monotone generalization, the 2-uniformly-convex
//!   variant driven by the normalized duality mapping, and the strong
//!   Fitzpatrick inequality with coefficient ½.

pub mod certificates;
pub mod error;
pub mod fitzpatrick;
pub mod operators;
pub mod resolvent;
pub mod space;
pub mod tol;

pub use certificates::{CertKind, Certifier, CertificateRecord};
pub use error::Error;
pub use fitzpatrick::{fitz_bounds, fitz_exact, fitz_lower, fitz_upper, FitzpatrickBounds};
pub use operators::{
    graph_sample, strong_mono_probe, BoxRegion, FunctionSpec, GraphPair, GraphSample,
    OperatorSpec, Provenance,
};
pub use resolvent::{residual_of, resolvent, ResolventResult, SolveMethod};
pub use space::{pairing, DualVector, SpaceSpec, Vector};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
