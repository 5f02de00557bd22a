//! Hough transform (HT) estimation of straight lines.
//!
//! The HT estimator maximizes the fraction of observations whose dual line
//! `b = -x a + y` passes within distance `r` of a candidate point `(a, b)` of
//! the parameter plane. This crate provides:
//!
//! * synthetic data generation and contamination ([`model`]),
//! * the template indicator, objective fields and population quantities
//!   ([`objective`], [`population`], [`quadrature`]),
//! * grid estimators: HT, multi-regressor HT, vertical-strip HT, LMS and a
//!   least-squares baseline ([`estimators`]),
//! * breakdown points and the coverage/radius bridge ([`robustness`]),
//! * excess-mass functionals and multi-line detection statistics
//!   ([`excess_mass`]),
//! * the Monte Carlo experiment drivers used by the CLI ([`experiments`]).

pub mod error;
pub mod estimators;
pub mod excess_mass;
pub mod experiments;
pub mod grid;
pub mod hull;
pub mod io;
pub mod model;
pub mod objective;
pub mod population;
pub mod quadrature;
pub mod rng;
pub mod robustness;

pub use error::{Error, Result};
pub use estimators::{fit_ht, fit_ht_multi, fit_lms, fit_ls, fit_strip, FitResult, Method};
pub use grid::GridSpec;
pub use model::{
    center_design, contaminate_cluster, dual_lines, gen_dataset, Dataset, DesignSpec, DualLine,
    ModelSpec, NoiseSpec, Observation, Theta,
};
pub use objective::{objective_field, objective_value, template_contains, ObjectiveField, Template};

/// Version tag written into every JSON artifact.
pub const SCHEMA_VERSION: u32 = 1;
