//! Finite dyadic-grid machinery for sparse domination and weighted norm
//! inequalities.
//!
//! Everything here lives on a rooted dyadic grid of fixed depth: functions
//! and weights are constant on the finest cells, and every supremum over
//! cubes runs over the grid's cubes. The crate is `no_std` (it needs
//! `alloc`); file formats, suites and the command line live in the
//! `sparsedom` crate.
//!
//! Module map:
//!
//! - [`dyadic`]: standard and shifted dyadic cubes, exact geometry and the
//!   shifted-grid container search.
//! - [`grid`]: rooted grids, tree-ordered cells and per-level cube sums.
//! - [`step`]: step functions, medians, rearrangements, local oscillation.
//! - [`lerner`]: local-oscillation decomposition into a sparse family.
//! - [`shift`]: positive dyadic shifts, their adjoints and the extremal
//!   weak-type example.
//! - [`weights`]: weights, maximal functions, `A_p`/`A_∞` and testing
//!   constants, and the sparse summation inequalities.
//! - [`two_weight`]: principal cubes, corona projections and the two-weight
//!   norm inequality for positive shifts.
//! - [`random`]: seeded instance generators shared by tests and suites.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod dyadic;
mod error;
pub mod grid;
pub mod lerner;
pub mod linalg;
mod math;
pub mod random;
pub mod shift;
pub mod step;
pub mod two_weight;
pub mod weights;

pub use dyadic::{DyadicCube, RealCube, MAX_DIM};
pub use error::{Error, Result};
pub use grid::{Grid, GridCube};
pub use lerner::{LernerDecomposition, SparseFamily};
pub use shift::{ShiftCoefficients, SkPlusSpec};
pub use step::StepFunction;
pub use two_weight::CoronaForest;
pub use weights::Weight;
