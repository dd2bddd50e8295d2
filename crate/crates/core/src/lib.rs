//! Discrete information-community game on a one-dimensional torus.
//!
//! Builds interval community structures for uniform consumer and producer
//! grids, computes utilities and single-agent deviation gaps, and checks the
//! structural properties of the resulting equilibrium numerically.

pub mod best_response;
pub mod community;
pub mod demand;
pub mod equilibrium;
pub mod expcli;
pub mod kernels;
pub mod numerics;
pub mod population;
pub mod propcheck;
pub mod torus;
