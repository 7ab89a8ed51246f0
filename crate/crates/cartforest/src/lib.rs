//! CART decision trees and random forests.
//!
//! The crate covers the classical tree/ensemble toolchain end to end:
//!
//! - [`data`]: columnar datasets, CSV ingestion, train/test splitting, and
//!   resampling plans (bootstrap, subsample, bag-of-little-bootstraps
//!   weights).
//! - [`cart`]: maximal-tree growing with competing and surrogate splits,
//!   cost-complexity pruning, cross-validated subtree selection, and
//!   prediction with missing-value routing.
//! - [`ensemble`]: bagged, random-input, and extra-randomized forests with
//!   out-of-bag evaluation and forest merging.
//! - [`importance`]: permutation variable importance, single and grouped,
//!   replicated across forests.
//! - [`select`]: two-step variable selection (thresholding, interpretation,
//!   prediction sets).
//! - [`scale`]: partitioned map/reduce-style training over data blocks and
//!   BLB-weighted training.
//! - [`model`]: versioned text serialization of trees and forests.
//!
//! All randomness flows from 64-bit seeds through ChaCha12 ([`rng`]), so any
//! fixed seed reproduces results bit-for-bit on every platform and with any
//! number of worker threads.

pub mod cart;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod importance;
pub mod model;
pub mod rng;
pub mod scale;
pub mod select;

pub use error::{Error, Result};

/// Runs `f` on a dedicated rayon pool with `workers` threads (0 = one thread
/// per available core). Results do not depend on the worker count.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool construction")
        .install(f)
}
