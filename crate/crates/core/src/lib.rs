//! Numerical toolkit for polyanalytic functions tested on chains of circles.
//!
//! A *chain* is a one-parameter family of circles `C_t = C(c(t), r(t))`,
//! `t ∈ [0, 1]`, born at a point `a` and collapsing onto a point `b`. The
//! crate computes:
//!
//! * chain geometry and the concrete hyperbolic / horicycle / mixed chains
//!   ([`chain`]),
//! * the discriminant `d(w,t) = c̄′w² + 2r′w + c′`, its root images and the
//!   connectivity condition between `a` and `b` ([`discriminant`]),
//! * Laurent data of a function on each circle, complex moments and the
//!   center-pole extendibility test ([`laurent`]),
//! * zeros and poles of the extensions tracked across `t`, traveling counts,
//!   Cauchy-type balance integrals and the argument-principle integral
//!   `I(q)` ([`dynamics`]),
//! * the Cramer identity for `∂f/∂z̄` on circle boundaries ([`dbar`]),
//! * least-squares polyanalytic decompositions ([`polyfit`]),
//! * a registry of test functions with exact oracles ([`functions`]).

pub mod chain;
pub mod config;
pub mod dbar;
pub mod defaults;
pub mod discriminant;
pub mod dynamics;
mod error;
pub mod functions;
pub mod grid;
pub mod laurent;
pub mod polyfit;
pub mod roots;

pub use chain::{ChainSpec, Circle, RadiusProfile};
pub use discriminant::{DiscriminantCloud, RootClass, RootReport};
pub use dynamics::{Branch, BranchKind, BranchSet};
pub use error::{Error, Result};
pub use functions::TestFunction;
pub use laurent::{LaurentData, MeromorphicExtension};
pub use num_complex::Complex64;
pub use polyfit::{Form, PolyDecomposition};

/// Boxed complex function of one complex variable.
pub type ComplexFn = std::sync::Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;
