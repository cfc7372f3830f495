//! Risk analysis for dependent inferential errors induced by data reuse.
//!
//! The crate is organised bottom-up:
//!
//! - [`dist`]: exact discrete distributions (hypergeometric, Poisson,
//!   Poisson-binomial) and the normal distribution.
//! - [`error_calculus`]: error-count distributions, stop-loss premiums and
//!   the stop-loss order, PCER/FWER/FDR.
//! - [`power`]: power, Type II error and sample size for two-sample mean tests.
//! - [`capacity`]: how many k-subsamples a dataset sustains before pairwise
//!   overlap becomes likely or guaranteed.
//! - [`subsample`]: seeded subsampling without replacement and allocation audits.
//! - [`simulation`]: seeded Monte Carlo replications of shared-control and
//!   survival reuse designs.
//! - [`portfolio`]: expected utility of study portfolios and grid search.
//! - [`report`]: the sectioned text format used for every export.

pub mod capacity;
pub mod dist;
pub mod error;
pub mod error_calculus;
pub mod portfolio;
pub mod power;
pub mod quad;
pub mod report;
pub mod seed;
pub mod simulation;
pub mod subsample;

pub use error::{Error, Result};
