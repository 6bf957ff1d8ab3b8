//! Numerical laboratory for constant mean curvature vertical graphs in the
//! homogeneous spaces E(κ, τ).
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] evaluates the model metric, frames and connection;
//! * [`grid`], [`scheme`] and [`graph`] discretize sections over annuli of the
//!   hyperbolic plane and compute their mean curvature;
//! * [`solver`] solves the Dirichlet problem by damped Newton iteration with
//!   continuation in the boundary lift;
//! * [`barrier`], [`foliation`], [`sister`] and [`estimates`] build on the
//!   solver for the barrier, foliation, sister and gradient-estimate studies;
//! * [`config`] and [`runner`] drive everything from JSON experiment files.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod barrier;
pub mod cartesian;
pub mod config;
pub mod error;
pub mod estimates;
pub mod foliation;
pub mod geometry;
pub mod graph;
pub mod grid;
pub mod linalg;
pub mod runner;
pub mod scheme;
pub mod sister;
pub mod solver;

pub use error::{Error, Result};
