//! Numerical toolkit for multifractal analysis of dyadic measures on `[0,1)`.
//!
//! The crate builds up, bottom to top:
//!
//! * [`dyadic`] — binary words, exact dyadic intervals and digit-frequency
//!   interval types;
//! * [`construction`] — a deterministic two-lineage family of "selected"
//!   intervals driven by a growth schedule, with separation guarantees;
//! * [`measure`] — evaluatable probability measures on the dyadic tree
//!   (uniform, binomial cascade, the selective cascade driven by the
//!   construction, and explicit weight tables);
//! * [`packing`] — centered ball packings, weighted packing sums and the
//!   dyadic partition-sum proxy for prepacking measures;
//! * [`spectrum`] — scaling-exponent estimation by log-log regression,
//!   Legendre-type infima and the psi/Legendre threshold identity;
//! * [`localdim`] — local exponent traces, finite-scale level sets,
//!   replacement-family optimization and the bound comparison report.
//!
//! Everything is deterministic: identical inputs produce identical outputs,
//! independent of thread count.

pub mod construction;
pub mod dyadic;
pub mod error;
pub mod localdim;
pub mod measure;
pub mod packing;
pub mod spectrum;
pub mod util;

pub use error::{Error, Result};
