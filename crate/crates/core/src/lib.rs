//! Exact multinomial probabilities, their Gaussian local-limit expansions with
//! order `N^{-1/2}` and `N^{-1}` corrections, and the numerical harnesses that
//! measure how fast those expansions converge.
//!
//! Lattice-wide reductions run on rayon when the `parallel` feature is enabled
//! (the default) and on the calling thread otherwise. Both paths produce the
//! same bits: work is split into fixed-size chunks and partial sums are folded
//! in chunk order.

pub mod bernstein;
pub mod error;
pub mod exact;
pub mod fit;
pub mod gauss_compare;
pub mod lattice;
pub mod llt;
pub mod model;
pub mod moments;
pub mod par;
pub mod quadrature;
pub mod region;
pub mod special;
pub mod sum;

pub use error::{Error, Result};
pub use lattice::{LatticePoint, SimplexLattice};
pub use model::{covariance, CovarianceSpec, DeltaVector, ModelParams};
