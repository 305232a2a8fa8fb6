//! Computational laboratory for skew products on the three-dimensional
//! Heisenberg nilmanifold.
//!
//! The crate is organised bottom-up:
//!
//! * [`fixed`]: exact dyadic fixed-point reals used for every coordinate.
//! * [`compensated`]: double-double helpers for the floating-point path.
//! * [`heisenberg`]: the groups `G` and `G*`, their lattices, fundamental
//!   domain reduction and the joining projection.
//! * [`cocycle`]: fiber functions `h` with integer windings and their
//!   cocycle sums.
//! * [`dynamics`]: the skew product `T`, the joining map `T*` and its
//!   trivialisation on the three-torus.
//! * [`orbit`]: deterministic segmented orbit engine.
//! * [`observables`]: test functions of prescribed vertical frequency.
//! * [`moebius`]: Möbius sieve and correlation estimators.
//! * [`diagnostics`]: Weyl sums, coboundary search, winding and Lipschitz
//!   laws, proof constants.
//! * [`report`]: CSV and JSON serialisation of reports.

pub mod cocycle;
pub mod compensated;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod fixed;
pub mod heisenberg;
pub mod moebius;
pub mod observables;
pub mod orbit;
pub mod report;

pub use error::{Error, Result};
pub use fixed::{Fiber, Fixed};
