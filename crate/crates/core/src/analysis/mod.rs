//! Linear stability and dynamics.
//!
//! Characteristic functions of linearised delay equations and their roots,
//! steady states of the scalar model families, Poincaré sections and norms
//! of computed solutions, and the a-priori bound for the two-delay equation.

mod bounds;
mod characteristic;
mod roots;
mod sections;
mod steady;

pub use bounds::{boundedness_guard, BoundInterval, BoundViolation};
pub use characteristic::{CharacteristicFunction, ThresholdLinearization, SERIES_CUTOFF};
pub use roots::{
    characteristic_roots, hopf_scan, CharRoot, HopfPoint, RootBox, RootSearch, SeedFailure,
    DEDUP_TOL, RESIDUAL_TOL,
};
pub use sections::{
    centroid, downward_zeros, max_angular_gap, periodic_norms, poincare_trace, PeriodicNorms,
    SectionPoint,
};
pub use steady::{steady_states, threshold_steady_states, SteadyState};
