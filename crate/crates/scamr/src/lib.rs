//! SCAMR: stochastic collocation with adaptive hypercube mesh refinement and
//! cut-HDMR dimension reduction.
//!
//! Builds surrogates of expensive black-box functions over uniform random
//! inputs from pointwise evaluations only. The pipeline detects which input
//! dimensions actually interact, decomposes the problem into low-dimensional
//! subproblems, refines each subproblem's hyperbox mesh around abrupt
//! variation, fits local Legendre expansions of order 1–2 per element by
//! least squares, and recombines everything into a global surrogate with a
//! cheap mean estimate.
//!
//! Entry point: [`driver::run_scamr`] with a [`cache::Model`], a global
//! domain [`grids::Element`], and a [`driver::ScamrConfig`]. The benchmark
//! suite used for validation lives in [`bench`].

pub mod adaptivity;
pub mod bench;
pub mod cache;
pub mod decomposition;
pub mod driver;
pub mod error;
pub mod gpc;
pub mod grids;
pub mod jsonfmt;
pub mod serialize;

pub use cache::{EvaluationCache, FnModel, Model};
pub use driver::{run_scamr, ScamrConfig, ScamrSurrogate};
pub use error::{Result, ScamrError};
pub use gpc::{GpcSurrogate, MultiIndexSet};
pub use grids::Element;
