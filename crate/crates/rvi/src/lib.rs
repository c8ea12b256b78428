//! Value iteration for POMDPs restricted to reachable belief subsets.
//!
//! The crate provides the model-analysis machinery (transformational
//! matrices, belief-simplex bases, observation supports), LP-based
//! alpha-vector pruning, one-step dynamic-programming updates, four solvers
//! (full-space VI, subset VI, low-dimension VI for informative models, and
//! anytime space-progressive VI), and policy execution with Monte-Carlo
//! evaluation.

pub mod dp;
pub mod geometry;
pub mod io;
pub mod solvers;
pub mod lp;
pub mod model;
pub mod policy;
