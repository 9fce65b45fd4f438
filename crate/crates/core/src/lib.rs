//! One-vs-one multiclass SVMs and the combiners that turn `N(N-1)/2`
//! binary decisions into one class.
//!
//! The pieces, roughly in pipeline order:
//!
//! - [`dataset`]: CSV loading, stratified folds, per-split scaling.
//! - [`kernel_svm`]: a two-class SMO trainer with polynomial and RBF kernels.
//! - [`generalization`]: cross-validation, support-vector and margin
//!   estimates of each pairwise classifier's error.
//! - [`combiners`]: Max Wins, DDAG, ADAG, RADAG, strong and weak
//!   elimination, and voting-based candidate filtering.
//! - [`matching`]: minimum-weight perfect matching for RADAG's brackets.
//! - [`evaluation`]: the outer cross-validation harness, t-tests and
//!   reports.
//! - [`synthetic`]: generated datasets for tests and benchmarks.
//!
//! ```
//! use ovo_svm::combiners::{se, EnsemblePlan, OutcomeTable};
//!
//! // three classes; the {0,1} classifier is the most reliable
//! let plan = EnsemblePlan::new(3, vec![0.10, 0.30, 0.20]).unwrap();
//! let outcomes = OutcomeTable::new(3, vec![0, 2, 1]).unwrap();
//! let v = se(&plan, &outcomes);
//! assert_eq!(v.predicted, 2);
//! assert_eq!(v.evaluations, 2);
//! ```

pub mod combiners;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod generalization;
pub mod kernel_svm;
pub mod matching;
pub mod synthetic;

pub use error::{Error, Result};

// The guide in book/ is compiled here so `cargo test --doc` runs its code
// blocks. One module per chapter keeps failures traceable to a file.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/pairwise.md")]
    mod pairwise {}
    #[doc = include_str!("../../../book/src/combiners.md")]
    mod combiners {}
    #[doc = include_str!("../../../book/src/matching.md")]
    mod matching {}
    #[doc = include_str!("../../../book/src/estimation.md")]
    mod estimation {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
