//! Link-level simulator of a distributed semi-passive IRS system for
//! integrated sensing and communication.
//!
//! A user transmits to a multi-antenna base station through three reflecting
//! surfaces. One surface is passive; the other two can also receive and use
//! those samples to locate the user, and the location then drives every
//! beamforming decision. The crate covers channel synthesis, subspace
//! localization, location-based beam design, bisection phase training, the
//! two-period transmission protocol and seeded Monte Carlo sweeps.
//!
//! The numerical kernels (matrices, eigendecomposition, geometry, steering
//! vectors and the sensing estimators) are generic over [`Real`]; the
//! simulation layers run in `f64`.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamforming;
pub mod channel;
pub mod config;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod numerics;
pub mod protocol;
pub mod scalar;
pub mod selftest;
pub mod sensing;
pub mod signal;

pub use config::{load_config, ScenarioConfig};
pub use error::{Error, Result};
pub use scalar::Real;

pub type Matrix64 = numerics::CMatrix<f64>;
pub type Matrix32 = numerics::CMatrix<f32>;
pub type Vector64 = numerics::CVector<f64>;
pub type Vector32 = numerics::CVector<f32>;
pub type Position64 = geometry::Position<f64>;
pub type Position32 = geometry::Position<f32>;
