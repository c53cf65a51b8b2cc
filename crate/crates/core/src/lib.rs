//! Exact simulation of supercritical continuous-time Galton-Watson
//! processes with neutral infinite-sites mutations, together with the
//! large-population limits of their site frequency spectrum and the
//! estimators built on those limits.
//!
//! * [`model`]: offspring laws, parameters, derived quantities.
//! * [`sim`]: the event-driven simulator and replicate batches.
//! * [`sfs`]: spectra, summaries and replicate aggregation.
//! * [`limits`]: closed-form and ODE-based limits.
//! * [`estimate`]: inversion of the singleton proportion.

pub mod estimate;
pub mod limits;
pub mod model;
pub mod sfs;
pub mod sim;
