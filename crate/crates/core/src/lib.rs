//! Tangent surfaces of directed curves under affine connections.
//!
//! The ∇-tangent surface of a directed curve `γ` with frame `u` is
//! `f(t, s) = φ(γ(t), u(t), s)`, where `φ(x, v, ·)` is the geodesic through `x`
//! with initial velocity `v`. This crate builds such surfaces numerically and
//! classifies their singularities along the curve (cuspidal edge, folded
//! umbrella, swallowtail, open swallowtail) from covariant-derivative jets.

pub mod classify;
pub mod cli;
pub mod connection;
pub mod curve;
pub mod error;
pub mod genericity;
pub mod geodesic;
pub mod normal_forms;
pub mod surface;
pub mod symbolics;

pub use error::{Error, Result};
