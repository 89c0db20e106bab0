//! Affine zipper curves and their multifractal analysis.
//!
//! A zipper is a system of affine contractions `f_i(x) = A_i x + t_i` whose
//! pieces chain end to end, so the attractor is a continuous curve `Γ`. Giving
//! the `i`-th piece the share `λ_i` of the unit interval yields the linear
//! parametrization `v: [0, 1] -> Γ`. This crate computes
//!
//! - curve evaluation and sampling ([`zipper`]),
//! - codings of the symbol space and the projections `π`, `Π` ([`symbolic`]),
//! - the matrix pressure `P(t)`, its Legendre spectrum and Gibbs weights
//!   ([`pressure`]),
//! - pointwise Hölder exponent estimators ([`holder`]),
//! - projective cone certificates: invariant cones, positivity after a change
//!   of coordinates, dominated splitting, well-ordered vertex sets ([`cones`]),
//! - the de Rham curve family as a ready-made preset ([`derham`]).
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. The `parallel` feature enables rayon for the word enumerations;
//! results are bit-identical with and without it.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod cones;
pub mod derham;
mod enumerate;
mod error;
pub mod holder;
pub mod linalg;
mod math;
pub mod pressure;
pub mod symbolic;
pub mod zipper;

pub use error::{Error, Result};
pub use linalg::{Matrix, NormKind};
pub use pressure::MatrixSystem;
pub use symbolic::{SymbolStream, Word};
pub use zipper::{AffineMap, CurvePoint, Zipper};

/// Default cap on the number of leaf products a single enumeration may visit.
pub const DEFAULT_LEAF_BUDGET: usize = 1 << 24;
