//! Pipelines, persistence, canned benchmarks and experiment drivers.

pub mod benchmark;
pub mod config;
pub mod experiments;
pub mod io;
pub mod pipeline;
pub mod report;

use crate::error::Result;
use crate::regions::{BumpField, Region};

pub use benchmark::{run_benchmark, BenchmarkResult};
pub use config::RunConfig;
pub use pipeline::{learn, simulate, verify, verify_eigenfunctions};
pub use report::VerificationReport;

/// The bump-field sublevel sets of Example 1.
pub fn example1_regions() -> Result<(Region, Region)> {
    let x0 = Region::bump_sublevel(BumpField::new(0.05, 1.15, 1.0, 2.0, 0.05)?, -0.1)?;
    let xf = Region::bump_sublevel(BumpField::new(1.85, -0.75, 5.0, 8.0, 0.1)?, -0.7)?;
    Ok((x0, xf))
}

pub fn duffing_regions() -> Result<(Region, Region)> {
    Ok((
        Region::from_box(vec![1.0, 1.0], vec![1.1, 1.1])?,
        Region::from_box(vec![0.6, 0.2], vec![0.7, 0.3])?,
    ))
}

pub fn roessler_regions() -> Result<(Region, Region)> {
    Ok((
        Region::from_box(vec![-0.5, -9.0, -0.5], vec![0.5, -8.0, 0.5])?,
        Region::from_box(vec![10.5, -4.4, -0.6], vec![11.0, -3.9, -0.1])?,
    ))
}

/// Initial and target sets of a named benchmark.
pub fn benchmark_regions(system: &str) -> Result<(Region, Region)> {
    match system {
        "example1" => example1_regions(),
        "duffing" => duffing_regions(),
        "roessler" => roessler_regions(),
        other => Err(crate::Error::UnknownSystem(other.to_string())),
    }
}

/// Wall-clock timer that reads zero where no clock is available.
#[derive(Clone, Copy, Debug)]
pub struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    pub fn secs(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed().as_secs_f64()
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}
