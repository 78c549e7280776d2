//! Optimistic Gradient Ascent–Proximal Point (OGAProx) solver for
//! convex–concave saddle-point problems `min_x max_y Φ(x, y) − g(y)`.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: the problem abstraction (oracles and regularity constants).
//! * [`prox`]: closed-form proximity operators used by the built-in problems.
//! * [`schedules`]: step-size / extrapolation / weight sequences for each regime.
//! * [`engine`]: the iteration itself plus overflow-safe ergodic averaging.
//! * [`diagnostics`]: gap, value error, rate bounds, certificate inequalities, rate fits.
//! * [`problems`]: the built-in catalog (`bilinear`, `csc`, `scsc`, `counterexample`).
//! * [`verify`]: invariant suites shared by the `verify` subcommand.
//! * [`cli`]: the command-line front end and trace/summary file formats.

pub mod cli;
pub mod diagnostics;
pub mod engine;
mod error;
pub mod model;
pub mod problems;
pub mod prox;
pub mod schedules;
pub mod verify;

pub use error::{Error, Result};
pub use model::{DualPoint, ExtendedReal, PrimalPoint, SaddleProblem};
