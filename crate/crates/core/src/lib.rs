//! Numerics for the gravitational Poissonian spontaneous localization (GPSL)
//! collapse model and its Tilloy-Diósi comparators.
//!
//! All routines work in whatever unit system the [`kernels::ModelParams`] carry.
//! The default is unit-free (G = ħ = m0 = γ = r_C = 1).

pub mod error;
pub mod fluctuations;
pub mod forces;
pub mod kernels;
pub mod quadrature;
pub mod rigid_sphere;
pub mod single_particle;
pub mod trajectories;
pub mod vec3;

pub use error::{Error, Result};
