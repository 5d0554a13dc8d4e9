//! Laplace-like distributions on finite strings.
//!
//! Strings are sequences over a finite alphabet, implicitly padded by an
//! empty letter. Distances are the extended Hamming distance (Hamming on the
//! padded sequences) and the Levenshtein distance. The crate provides exact
//! sphere counting, the pmf and an exact sampler, single-distribution
//! estimators, a median hill climb for the Levenshtein case, EM fitting of
//! mixtures, and brute-force oracles for testing.

pub mod error;
pub mod estimators;
pub mod laplace;
pub mod median_lev;
pub mod mixture;
pub mod oracle;
pub mod spheres;
pub mod string_space;

pub use error::{Error, Result};
pub use estimators::{fit_laplace, FitReport, DEFAULT_EPSILON};
pub use laplace::LaplaceParams;
pub use median_lev::{MedianFit, MedianTrace};
pub use mixture::{Assignment, FitConfig, MixtureFit, MixtureParams, Responsibilities};
pub use spheres::{SphereCaps, SphereEngine, SphereQuery};
pub use string_space::{Alphabet, DistanceKind, Str};
