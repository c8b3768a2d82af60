//! LP-based approximation algorithms for Graphic Multi-Path TSP, Graphic
//! Ordered TSP and Graphic Uncapacitated Multi-Depot VRP, with exact
//! small-instance oracles.
//!
//! Numeric code is generic over [`Scalar`]; the aliases below fix it to
//! `f64` (the default used by the solvers and CLI) or to exact rationals.

pub mod decomposition;
pub mod exact;
pub mod fixtures;
pub mod graph;
pub mod instance;
pub mod lp;
pub mod maxflow;
pub mod multipath;
pub mod ordered;
pub mod parity;
pub mod scalar;
pub mod vrp;

pub use graph::{BidirectedGraph, Graph};
pub use instance::{AnyInstance, Commodity, Instance, OrderedInstance, Solution};
pub use scalar::Scalar;

/// Arbitrary-precision rational scalar.
pub type Rational = num_rational::BigRational;

pub type FractionalSolutionF64 = lp::FractionalSolution<f64>;
pub type ExactFractionalSolution = lp::FractionalSolution<Rational>;
pub type DecompositionF64 = decomposition::Decomposition<f64>;
pub type ExactDecomposition = decomposition::Decomposition<Rational>;
