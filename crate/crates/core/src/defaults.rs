//! Numeric defaults shared by the library and the command line.
//!
//! | constant | value | used by |
//! |---|---|---|
//! | [`GRID_REFINE_HALFWIDTH`] | 0.05 | t-grids of two-branch chains |
//! | [`GRID_REFINE_FACTOR`] | 4 | t-grids of two-branch chains |
//! | [`SINGULAR_HALFWIDTH`] | 1e-3 | exclusion around singular parameters |
//! | [`FD_STEP`] | 1e-5 | central-difference chain derivatives |
//! | [`ROOT_CIRCLE_TOL`] | 1e-9 | inner-root / on-circle classification |
//! | [`DOUBLE_ROOT_TOL`] | 1e-6 | double-root detection on the unit circle |
//! | [`LINEAR_LEADING_TOL`] | 1e-12 | quadratic degenerates to linear |
//! | [`EPSILON_FLOOR`] | 1e-9 | minimum ε of the point-cloud graph |
//! | [`MEROM_TOL`] | 1e-8 | relative tail energy for extendibility |
//! | [`RADIUS_FLOOR`] | 1e-3 | circles below this radius are skipped |
//! | [`COEFF_NOISE`] | 1e-12 | relative noise floor of Laurent coefficients |
//! | [`CLUSTER_TOL`] | 1e-6 | root multiplicity clustering |
//! | [`BOUNDARY_TOL`] | 1e-4 | roots this close to `|w| = 1` are flagged |
//! | [`TRAVEL_DELTA`] | 0.02 | required t-coverage `(δ, 1-δ)` |
//! | [`Q_MARGIN`] | 0.1 | distance of `q` from the chain envelope |
//! | [`EXCLUDED_FRACTION_MAX`] | 0.05 | `I(q)` excluded-measure limit |
//! | [`DBAR_H`] | 1e-3 | stencil step of the numeric `∂/∂z̄` |
//! | [`DISCRIMINANT_REL`] | 1e-6 | near-zero discriminant exclusion |
//! | [`ORDER_FLOOR`] | 1e-7 | center zero/pole order decision |
//! | [`FIT_DEGREE`] | 8 | polyanalytic fit degree |
//! | [`FIT_CONDITION_MAX`] | 1e12 | design-matrix conditioning limit |
//! | [`ORDER_TOL`] | 1e-6 | order detection threshold |

pub const GRID_REFINE_HALFWIDTH: f64 = 0.05;
pub const GRID_REFINE_FACTOR: usize = 4;
pub const SINGULAR_HALFWIDTH: f64 = 1e-3;
pub const FD_STEP: f64 = 1e-5;

pub const ROOT_CIRCLE_TOL: f64 = 1e-9;
pub const DOUBLE_ROOT_TOL: f64 = 1e-6;
pub const LINEAR_LEADING_TOL: f64 = 1e-12;
pub const EPSILON_FLOOR: f64 = 1e-9;

pub const MEROM_TOL: f64 = 1e-8;
pub const RADIUS_FLOOR: f64 = 1e-3;
pub const COEFF_NOISE: f64 = 1e-12;

pub const CLUSTER_TOL: f64 = 1e-6;
pub const BOUNDARY_TOL: f64 = 1e-4;
pub const TRAVEL_DELTA: f64 = 0.02;
pub const Q_MARGIN: f64 = 0.1;
pub const EXCLUDED_FRACTION_MAX: f64 = 0.05;

pub const DBAR_H: f64 = 1e-3;
pub const DISCRIMINANT_REL: f64 = 1e-6;
pub const ORDER_FLOOR: f64 = 1e-7;

pub const FIT_DEGREE: usize = 8;
pub const FIT_CONDITION_MAX: f64 = 1e12;
pub const ORDER_TOL: f64 = 1e-6;

/// Inner and outer radius of the default fitting annulus.
pub const FIT_ANNULUS: (f64, f64) = (0.3, 0.9);
