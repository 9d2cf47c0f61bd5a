//! Canned end-to-end runs of the three benchmark systems.

use serde::{Deserialize, Serialize};

use crate::dynamics::{first_entry_times, system_by_name};
use crate::error::Result;
use crate::guarantees::hausdorff;
use crate::reachtime::{TimeIntervalSet, Verdict};
use crate::rng::derive_seed;

use super::config::RunConfig;
use super::pipeline::{learn, simulate, verify, VerifyContext};
use super::report::VerificationReport;
use super::Stopwatch;

/// Published reach-time interval for Example 1.
pub const EXAMPLE1_REFERENCE: [f64; 2] = [0.70, 0.97];
pub const EXAMPLE1_MAX_DH: f64 = 0.15;
pub const EXAMPLE1_MAX_SECS: f64 = 60.0;
/// Published baseline interval for the Duffing oscillator.
pub const DUFFING_REFERENCE: [f64; 2] = [3.57, 4.15];
pub const DUFFING_MAX_DH: f64 = 0.3;
pub const DUFFING_MAX_SECS: f64 = 120.0;
pub const ROESSLER_MAX_SECS: f64 = 180.0;

pub const SOUNDNESS_STARTS: usize = 500;
pub const ROESSLER_STARTS: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EntryStats {
    pub n_starts: usize,
    pub n_entered: usize,
    pub n_diverged: usize,
    pub min_time: Option<f64>,
    pub max_time: Option<f64>,
    /// Entry times outside the inflated reported set.
    pub violations: usize,
    pub inflation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub system: String,
    pub report: VerificationReport,
    pub entries: EntryStats,
    pub checks: Vec<Check>,
    pub runtime_secs: f64,
    pub pipeline_secs: f64,
}

impl BenchmarkResult {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        passed,
        detail,
    }
}

fn reference_distance(report: &VerificationReport, reference: [f64; 2]) -> f64 {
    let r = TimeIntervalSet::new(report.final_intervals.t_max(), [reference]);
    hausdorff(&report.final_intervals, &r)
}

/// Runs simulate -> learn -> verify with the defaults of `cfg.system`, then
/// simulates entry times from the initial set for a soundness check.
pub fn run_pipeline(cfg: &RunConfig, seed: u64) -> Result<(VerificationReport, f64)> {
    let timer = Stopwatch::start();
    let system = system_by_name(&cfg.system)?;
    let generated = simulate(&system, &cfg.simulate, derive_seed(seed, "simulate"))?;
    let model = learn(&generated.dataset, &cfg.learn, Some(seed))?;
    let ctx = VerifyContext {
        system: Some(cfg.system.clone()),
        ..VerifyContext::default()
    };
    let report = verify(&model, &cfg.verify, derive_seed(seed, "verify"), &ctx)?;
    Ok((report, timer.secs()))
}

fn entry_stats(
    cfg: &RunConfig,
    report: &VerificationReport,
    n_starts: usize,
    t_max: f64,
    seed: u64,
) -> Result<EntryStats> {
    let system = system_by_name(&cfg.system)?;
    let x0 = cfg.verify.x0.as_ref().expect("benchmark configs carry regions");
    let xf = cfg.verify.xf.as_ref().expect("benchmark configs carry regions");
    let starts = x0.sample_iid(n_starts, derive_seed(seed, "entry-starts"))?;
    let step = cfg.simulate.step;
    let times = first_entry_times(&system, &starts, xf, t_max, step)?;
    let inflation = report.guarantee.delta_total + step;
    let inflated = report.final_intervals.inflate(inflation);
    let hits: Vec<f64> = times.iter().filter_map(|e| e.time).collect();
    Ok(EntryStats {
        n_starts,
        n_entered: hits.len(),
        n_diverged: times.iter().filter(|e| e.diverged).count(),
        min_time: hits.iter().copied().reduce(f64::min),
        max_time: hits.iter().copied().reduce(f64::max),
        violations: hits.iter().filter(|t| !inflated.contains(**t)).count(),
        inflation,
    })
}

pub fn run_benchmark(name: &str, seed: u64, overrides: Option<&serde_json::Value>) -> Result<BenchmarkResult> {
    let timer = Stopwatch::start();
    let cfg = RunConfig::with_overrides(name, overrides)?;
    let (report, pipeline_secs) = run_pipeline(&cfg, seed)?;
    let mut checks = Vec::new();
    let entries = match name {
        "example1" | "duffing" => {
            let (reference, max_dh, max_secs) = if name == "example1" {
                (EXAMPLE1_REFERENCE, EXAMPLE1_MAX_DH, EXAMPLE1_MAX_SECS)
            } else {
                (DUFFING_REFERENCE, DUFFING_MAX_DH, DUFFING_MAX_SECS)
            };
            let dh = reference_distance(&report, reference);
            checks.push(check(
                "nonempty interval",
                !report.final_intervals.is_empty(),
                report.summary(),
            ));
            checks.push(check(
                "distance to published interval",
                dh <= max_dh,
                format!("d_H = {dh:.4} (limit {max_dh}) against {reference:?}"),
            ));
            let horizon = report.final_intervals.t_max();
            let e = entry_stats(&cfg, &report, SOUNDNESS_STARTS, horizon, seed)?;
            checks.push(check(
                "simulated entry times inside inflated set",
                e.violations == 0,
                format!(
                    "{} of {} starts entered, times in [{:.4}, {:.4}], {} violations after inflating by {:.4}",
                    e.n_entered,
                    e.n_starts,
                    e.min_time.unwrap_or(f64::NAN),
                    e.max_time.unwrap_or(f64::NAN),
                    e.violations,
                    e.inflation
                ),
            ));
            checks.push(check(
                "runtime",
                pipeline_secs <= max_secs,
                format!("{pipeline_secs:.1} s (limit {max_secs} s)"),
            ));
            e
        }
        _ => {
            checks.push(check(
                "verdict is unreachable",
                report.verdict == Verdict::UnreachableCertified,
                report.summary(),
            ));
            let horizon = report.final_intervals.t_max();
            let e = entry_stats(&cfg, &report, ROESSLER_STARTS, horizon, seed)?;
            checks.push(check(
                "no simulated entries within the horizon",
                e.n_entered == 0,
                format!("{} of {} trajectories entered the target", e.n_entered, e.n_starts),
            ));
            checks.push(check(
                "runtime",
                pipeline_secs <= ROESSLER_MAX_SECS,
                format!("{pipeline_secs:.1} s (limit {ROESSLER_MAX_SECS} s)"),
            ));
            e
        }
    };
    Ok(BenchmarkResult {
        system: name.to_string(),
        report,
        entries,
        checks,
        runtime_secs: timer.secs(),
        pipeline_secs,
    })
}
