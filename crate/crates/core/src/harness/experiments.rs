//! Monte Carlo studies of the Hausdorff distance to a ground-truth set.
//!
//! Rows are computed in parallel with per-trial seeds and returned in trial
//! order, so output files do not depend on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{analytic_eigenpairs_example1, system_by_name};
use crate::error::{Error, Result};
use crate::guarantees::hausdorff;
use crate::reachtime::TimeIntervalSet;
use crate::rng::derive_seed;
use crate::spectral::KoopmanModel;
use crate::Eigenfunction;

use super::config::RunConfig;
use super::pipeline::{learn, simulate, verify_eigenfunctions, VerifyContext};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HausdorffRow {
    pub trial: usize,
    pub seed: u64,
    pub n_samples: usize,
    pub d_h: f64,
    pub delta: f64,
    pub within_budget: bool,
}

#[derive(Clone, Debug)]
pub struct HausdorffOutcome {
    pub ground_truth: TimeIntervalSet,
    pub rows: Vec<HausdorffRow>,
    /// Trials that errored; logged and skipped.
    pub failures: usize,
}

impl HausdorffOutcome {
    pub fn coverage(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().filter(|r| r.within_budget).count() as f64 / self.rows.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub degree: u32,
    pub n_samples: usize,
    pub trial: usize,
    pub d_h: f64,
    pub delta: f64,
    pub within_budget: bool,
}

#[derive(Clone, Debug)]
pub struct ConvergenceOutcome {
    pub ground_truth: TimeIntervalSet,
    pub rows: Vec<ConvergenceRow>,
    pub failures: usize,
}

/// Degrees, sample counts and trial count of the convergence study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGrid {
    pub degrees: Vec<u32>,
    pub sample_counts: Vec<usize>,
    pub n_trials: usize,
    pub base_seed: u64,
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<()> {
        if self.degrees.is_empty() || self.sample_counts.is_empty() || self.n_trials == 0 {
            return Err(Error::InvalidInput(
                "experiment grid needs degrees, sample counts and trials".into(),
            ));
        }
        Ok(())
    }
}

/// Reach-time set from the analytic Example 1 eigenfunctions and
/// `n_samples` points per set.
pub fn example1_ground_truth(cfg: &RunConfig, n_samples: usize, seed: u64) -> Result<TimeIntervalSet> {
    let analytic = analytic_eigenpairs_example1();
    let efs: Vec<&dyn Eigenfunction> = analytic.iter().map(|e| e as &dyn Eigenfunction).collect();
    let mut v = cfg.verify.clone();
    v.n_samples = Some(n_samples);
    v.eps = Some(0.0);
    v.reference = None;
    let r = verify_eigenfunctions(&efs, &[None, None], None, &v, seed, &VerifyContext::default())?;
    Ok(r.final_intervals)
}

/// Example 1: fresh data, fresh model and fresh samples in every trial,
/// compared against the analytic ground truth.
pub fn hausdorff_experiment(
    cfg: &RunConfig,
    n_trials: usize,
    n_samples: usize,
    base_seed: u64,
) -> Result<HausdorffOutcome> {
    if cfg.system != "example1" {
        return Err(Error::InvalidInput(
            "the Hausdorff study needs analytic eigenfunctions (example1)".into(),
        ));
    }
    if n_trials == 0 {
        return Err(Error::InvalidInput("n_trials must be positive".into()));
    }
    let mut truth_cfg = cfg.clone();
    truth_cfg.verify.t_max = Some(truth_t_max(cfg));
    let truth = example1_ground_truth(
        &truth_cfg,
        cfg.experiment.truth_samples,
        derive_seed(base_seed, "truth"),
    )?;
    let system = system_by_name(&cfg.system)?;
    let analytic = analytic_eigenpairs_example1();
    let refs: Vec<&dyn Eigenfunction> = analytic.iter().map(|e| e as &dyn Eigenfunction).collect();

    let results: Vec<Result<HausdorffRow>> = (0..n_trials)
        .into_par_iter()
        .map(|trial| {
            let seed = derive_seed(base_seed, &format!("trial-{trial}"));
            let data = simulate(&system, &cfg.simulate, derive_seed(seed, "simulate"))?.dataset;
            let model = learn(&data, &cfg.learn, Some(seed))?;
            let learned = model.eigenfunctions()?;
            let efs: Vec<&dyn Eigenfunction> = learned.iter().map(|e| e as &dyn Eigenfunction).collect();
            let mut v = truth_cfg.verify.clone();
            v.n_samples = Some(n_samples);
            v.eps = None;
            let residuals: Vec<Option<f64>> = model.eigenpairs.iter().map(|p| Some(p.residual)).collect();
            let r = verify_eigenfunctions(
                &efs,
                &residuals,
                Some(&refs),
                &v,
                derive_seed(seed, "verify"),
                &VerifyContext::default(),
            )?;
            let d_h = hausdorff(&r.final_intervals, &truth);
            let delta = r.guarantee.delta_total;
            Ok(HausdorffRow {
                trial,
                seed,
                n_samples,
                d_h,
                delta,
                within_budget: d_h <= delta,
            })
        })
        .collect();
    collect_rows(results).map(|(rows, failures)| HausdorffOutcome {
        ground_truth: truth,
        rows,
        failures,
    })
}

/// Horizon shared by the truth and every trial so that sets compare.
fn truth_t_max(cfg: &RunConfig) -> f64 {
    cfg.verify.t_max.unwrap_or(10.0)
}

fn collect_rows<T>(results: Vec<Result<T>>) -> Result<(Vec<T>, usize)> {
    let mut rows = Vec::new();
    let mut failures = 0;
    let mut last_err = None;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => {
                log::warn!("trial {i} failed: {e}");
                failures += 1;
                last_err = Some(e);
            }
        }
    }
    if rows.is_empty() {
        return Err(last_err.unwrap_or_else(|| Error::InvalidInput("no trials".into())));
    }
    Ok((rows, failures))
}

/// Duffing: one model per degree from a shared dataset, compared against
/// the highest-fidelity model. Trials redraw the verification samples.
pub fn convergence_experiment(cfg: &RunConfig, grid: &ExperimentGrid) -> Result<ConvergenceOutcome> {
    grid.validate()?;
    let system = system_by_name(&cfg.system)?;
    let data = simulate(&system, &cfg.simulate, derive_seed(grid.base_seed, "simulate"))?.dataset;
    let mut truth_learn = cfg.learn.clone();
    truth_learn.degree = cfg.experiment.truth_degree;
    let truth_model = learn(&data, &truth_learn, Some(grid.base_seed))?;
    let truth_efs_owned = truth_model.eigenfunctions()?;
    let truth_efs: Vec<&dyn Eigenfunction> = truth_efs_owned.iter().map(|e| e as &dyn Eigenfunction).collect();
    let t_max = cfg
        .verify
        .t_max
        .ok_or_else(|| Error::InvalidInput("the convergence study needs a fixed t_max".into()))?;
    let mut truth_v = cfg.verify.clone();
    truth_v.n_samples = Some(cfg.experiment.truth_samples);
    truth_v.eps = Some(0.0);
    truth_v.reference = None;
    let truth = verify_eigenfunctions(
        &truth_efs,
        &vec![None; truth_efs.len()],
        None,
        &truth_v,
        derive_seed(grid.base_seed, "truth"),
        &VerifyContext::default(),
    )?
    .final_intervals;

    let models: Vec<(u32, KoopmanModel)> = grid
        .degrees
        .iter()
        .map(|&d| {
            let mut l = cfg.learn.clone();
            l.degree = d;
            learn(&data, &l, Some(grid.base_seed)).map(|m| (d, m))
        })
        .collect::<Result<_>>()?;

    let mut jobs = Vec::new();
    for (mi, _) in models.iter().enumerate() {
        for &n in &grid.sample_counts {
            for trial in 0..grid.n_trials {
                jobs.push((mi, n, trial));
            }
        }
    }
    let results: Vec<Result<ConvergenceRow>> = jobs
        .into_par_iter()
        .map(|(mi, n, trial)| {
            let (degree, model) = &models[mi];
            let learned = model.eigenfunctions()?;
            let efs: Vec<&dyn Eigenfunction> = learned.iter().map(|e| e as &dyn Eigenfunction).collect();
            let mut v = cfg.verify.clone();
            v.t_max = Some(t_max);
            v.n_samples = Some(n);
            v.eps = None;
            v.reference = None;
            let seed = derive_seed(grid.base_seed, &format!("deg-{degree}-n-{n}-trial-{trial}"));
            let residuals: Vec<Option<f64>> = model.eigenpairs.iter().map(|p| Some(p.residual)).collect();
            let r = verify_eigenfunctions(&efs, &residuals, Some(&truth_efs), &v, seed, &VerifyContext::default())?;
            let d_h = hausdorff(&r.final_intervals, &truth);
            let delta = r.guarantee.delta_total;
            Ok(ConvergenceRow {
                degree: *degree,
                n_samples: n,
                trial,
                d_h,
                delta,
                within_budget: d_h <= delta,
            })
        })
        .collect();
    collect_rows(results).map(|(rows, failures)| ConvergenceOutcome {
        ground_truth: truth,
        rows,
        failures,
    })
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Equal-width histogram over `[min, max]`.
pub fn histogram(values: &[f64], bins: usize) -> Vec<usize> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut counts = vec![0; bins.max(1)];
    if !(hi > lo) {
        counts[0] = values.len();
        return counts;
    }
    for v in values {
        let k = (((v - lo) / (hi - lo)) * bins as f64).floor() as usize;
        counts[k.min(bins - 1)] += 1;
    }
    counts
}

/// Unimodality up to counting noise: no bin may sit below both the
/// highest bin to its left and the highest bin to its right by more than
/// two Poisson standard deviations of the smaller peak.
pub fn is_unimodal(counts: &[usize]) -> bool {
    let n = counts.len();
    (1..n.saturating_sub(1)).all(|i| {
        let left = counts[..i].iter().copied().max().unwrap_or(0);
        let right = counts[i + 1..].iter().copied().max().unwrap_or(0);
        let ridge = left.min(right) as f64;
        ridge - counts[i] as f64 <= 2.0 * ridge.sqrt()
    })
}
