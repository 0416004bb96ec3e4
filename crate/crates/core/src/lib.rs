//! Desk-scale laboratory for products of i.i.d. random matrices.
//!
//! The crate is organised bottom-up:
//!
//! * [`projgeom`]: group elements, points of projective space, the norm cocycle
//!   and the coefficient identity.
//! * [`randwalk`]: Monte Carlo engine for `S_n = g_n ... g_1` with reproducible
//!   per-trial random streams.
//! * [`admissible`]: admissible target functions `u` and their partition of unity.
//! * [`transfer`]: discretised complex transfer operators on the projective line.
//! * [`fourier`]: band-limited smoothing kernels and approximants.
//! * [`limits`]: Berry-Esseen and local limit theorem statistics.

// guards are written `!(x > 0.0)` so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admissible;
pub mod error;
pub mod fourier;
pub mod limits;
pub mod projgeom;
pub mod randwalk;
pub mod rng;
pub mod stats;
pub mod transfer;

pub use error::{Error, Result};
pub use projgeom::{DualProjPoint, ExtReal, GroupElement, ProjPoint};
pub use randwalk::MeasureSpec;
