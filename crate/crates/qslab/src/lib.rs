//! Distributional analysis of the number of comparisons made by quicksort
//! with a uniformly random pivot.
//!
//! The crate computes the law of the comparison count `X_n` in exact rational
//! arithmetic, derives the normalized variates `Y_n = (X_n - mu_n)/n` and
//! `Y_hat_n = (X_n - mu_n)/(n+1)`, and checks everything that is known about
//! their convergence to the quicksort limit law:
//!
//! - [`exact`]: harmonic numbers, closed-form moments, and the exact pmf of
//!   `X_n` via the pivot-mixture recurrence, all in big-integer rationals.
//! - [`toll`]: the limit toll function `C(u)`, its discrete counterpart
//!   `C_n(i)`, and the exact L2 toll error `b_n` with its `O(1/n)` bound.
//! - [`ledger`]: the recursive upper-bound table for `d_2(Y_n, Y)` and the
//!   certificate pipeline that establishes the `2/sqrt(n)` rate.
//! - [`metrics`]: minimal-coupling Wasserstein distances and the
//!   Kolmogorov-Smirnov distance between discrete laws, exact where possible.
//! - [`simulate`]: seeded Monte Carlo sampling through random binary search
//!   trees, density-window estimation of the limit density, and related
//!   probes.
//! - [`mgf`]: exact moment generating functions and the piecewise upper
//!   bounds, large-deviation bounds, and MGF convergence-rate bounds.
//! - [`verify`]: a named-check harness exercising all of the above; the CLI
//!   and the acceptance suite both drive it.
//!
//! With the default `parallel` feature the convolution, sampling, and
//! pairwise-distance kernels run on rayon; disabling the feature falls back
//! to sequential code with identical results.

// `!(x > 0.0)` guards intentionally catch NaN along with the sign
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod consts;
pub mod error;
pub mod exact;
pub mod ledger;
pub mod metrics;
pub mod mgf;
mod par;
mod quad;
pub mod rational;
pub mod simulate;
pub mod toll;
pub mod verify;

pub use error::Error;
pub use par::Parallelism;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
