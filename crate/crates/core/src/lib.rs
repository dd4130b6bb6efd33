//! Non-backtracking loop soups on weighted graphs: exact linear-algebra
//! routes, brute-force oracles, Poisson sampling, and statistical
//! cross-validation.
//!
//! A loop soup is a Poisson point process on closed non-backtracking walks of
//! a weighted graph, with intensity μ(ℓ) = x(ℓ)/m_ℓ where x(ℓ) is the product
//! of traversed edge weights and m_ℓ the loop's multiplicity. The library
//! computes its partition function and correlation observables by several
//! independent routes (directed-edge determinants, vertex determinants,
//! Fourier products on tori, truncated enumerations, Monte-Carlo sampling)
//! and ships the cross-checks that tie the routes together.

pub mod eig;
pub mod error;
pub mod gibbs;
pub mod graph;
pub mod linalg;
pub mod loops;
pub mod observables;
pub mod quad;
pub mod sampler;
pub mod spin;
pub mod stats;
pub mod torus;
pub mod transfer;

pub use error::{Classification, Error, Result};
pub use graph::{CutGraph, DirectedEdge, TorusSpec, WeightedGraph};
pub use transfer::{GreenFunction, TransferOperator};
