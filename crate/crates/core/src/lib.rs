//! Reachability verification for systems known only through snapshot data.
//!
//! Instead of propagating reachable sets, the crate learns principal Koopman
//! eigenpairs from trajectory snapshots, estimates the extrema of the learned
//! eigenfunctions over the initial and target sets by sampling, and turns
//! them into reach-time intervals. An empty intersection of those intervals
//! certifies that the target cannot be reached; a nonempty one bounds the
//! times at which it can be. Every result carries an error budget that holds
//! with a stated probability.
//!
//! Module map:
//!
//! * [`dynamics`]: benchmark systems, RK4 flow, snapshot generation.
//! * [`observables`]: monomial dictionaries.
//! * [`spectral`]: operator regression, residual filtering, eigenpair selection.
//! * [`regions`]: boxes, sublevel sets and unions with i.i.d. sampling.
//! * [`extrema`]: sampled set extrema and sample-size planning.
//! * [`reachtime`]: magnitude and phase reach-time intervals, verdicts.
//! * [`guarantees`]: error budgets, Hausdorff distance, certified statements.
//! * [`harness`]: file formats, pipelines, benchmarks and experiments.

// `!(x > 0.0)` is how validation rejects NaN; index loops mirror the maths.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dynamics;
pub mod error;
pub mod extrema;
pub mod guarantees;
pub mod harness;
pub mod observables;
pub mod reachtime;
pub mod regions;
pub mod spectral;

mod rng;

pub use error::{Error, Result};

use num_complex::Complex64;

/// A scalar complex observable with a known continuous-time eigenvalue.
///
/// Implemented by closed-form eigenfunctions and by learned ones, so the
/// extrema, error-field and interval code never cares where a function
/// came from.
pub trait Eigenfunction: Send + Sync {
    fn lambda(&self) -> Complex64;
    fn eval(&self, x: &[f64]) -> Complex64;

    fn eval_many(&self, xs: &[Vec<f64>]) -> Vec<Complex64> {
        use rayon::prelude::*;
        xs.par_iter().map(|x| self.eval(x)).collect()
    }
}
