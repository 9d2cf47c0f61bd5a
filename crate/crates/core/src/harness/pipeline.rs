//! simulate -> learn -> verify.

use num_complex::Complex64;

use crate::dynamics::{
    analytic_eigenpairs_example1, generate_snapshots, AnalyticEigenpair, GeneratedSnapshots, SnapshotSettings,
    SystemModel,
};
use crate::error::{Error, Result};
use crate::extrema::{
    a_hat, calibrate_eps, estimate_extrema, l_hat, log_grid, plan_sampling, recentered_phase, required_samples,
    shared_branch_center, EXTREMA_PER_COMPLEX_PAIR, EXTREMA_PER_REAL_PAIR,
};
use crate::guarantees::{certify, delta_bound};
use crate::reachtime::{
    combine_eigenpair, default_t_max, enumerate_combos, verify as verify_intervals, EigenpairQuantities,
};
use crate::regions::{eps_measure_from_values, Extremum, Region};
use crate::rng::derive_seed;
use crate::spectral::{self, align_and_error_field, ErrorField, KoopmanModel};
use crate::Eigenfunction;

use super::config::{LearnConfig, SimulateConfig, VerifyConfig};
use super::report::{
    EigenpairReport, GuaranteeSection, Provenance, SamplingSection, Timings, VerificationReport, PHASE_RULE,
};
use super::Stopwatch;

/// Minimum probe count accepted by the plug-in `P_eps` estimate.
const MIN_PROBE: usize = 1000;

pub fn simulate(system: &SystemModel, cfg: &SimulateConfig, seed: u64) -> Result<GeneratedSnapshots> {
    let domain = cfg.domain.clone().unwrap_or_else(|| system.working_domain().clone());
    generate_snapshots(
        system,
        &domain,
        &SnapshotSettings {
            n_traj: cfg.n_traj,
            n_steps: cfg.n_steps,
            dt: cfg.dt,
            seed,
            step: cfg.step,
            guard: cfg.guard.clone(),
        },
    )
}

pub fn learn(dataset: &crate::dynamics::SnapshotDataset, cfg: &LearnConfig, seed: Option<u64>) -> Result<KoopmanModel> {
    spectral::learn(dataset, cfg.degree, cfg.reg, &cfg.criteria(), seed)
}

/// Reference eigenfunctions for error-field measurement, by system name.
pub fn reference_eigenfunctions(name: &str) -> Result<Vec<AnalyticEigenpair>> {
    match name {
        "example1" => Ok(analytic_eigenpairs_example1()),
        other => Err(Error::InvalidInput(format!("no analytic eigenfunctions for {other:?}"))),
    }
}

/// Pairs each eigenfunction with the reference of nearest eigenvalue.
fn match_references<'a>(
    efs: &[&dyn Eigenfunction],
    refs: &'a [&'a dyn Eigenfunction],
) -> Result<Vec<&'a dyn Eigenfunction>> {
    efs.iter()
        .map(|e| {
            refs.iter()
                .copied()
                .min_by(|a, b| {
                    (a.lambda() - e.lambda())
                        .norm()
                        .total_cmp(&(b.lambda() - e.lambda()).norm())
                })
                .ok_or_else(|| Error::InvalidInput("empty reference list".into()))
        })
        .collect()
}

/// Extra context recorded in the report's provenance.
#[derive(Clone, Debug, Default)]
pub struct VerifyContext {
    pub system: Option<String>,
    pub degree: Option<u32>,
    pub dataset_hash: Option<String>,
    pub n_pairs: Option<usize>,
}

/// Verifies with a learned model. Error fields are measured against
/// `cfg.reference` when set, otherwise taken from the assumed bounds.
pub fn verify(model: &KoopmanModel, cfg: &VerifyConfig, seed: u64, ctx: &VerifyContext) -> Result<VerificationReport> {
    let learned = model.eigenfunctions()?;
    let efs: Vec<&dyn Eigenfunction> = learned.iter().map(|e| e as &dyn Eigenfunction).collect();
    let residuals: Vec<Option<f64>> = model.eigenpairs.iter().map(|p| Some(p.residual)).collect();
    let analytic = match &cfg.reference {
        Some(name) => Some(reference_eigenfunctions(name)?),
        None => None,
    };
    let refs: Option<Vec<&dyn Eigenfunction>> = analytic
        .as_ref()
        .map(|a| a.iter().map(|e| e as &dyn Eigenfunction).collect());
    let mut ctx = ctx.clone();
    ctx.degree = ctx.degree.or(Some(model.dict.degree));
    ctx.dataset_hash = ctx.dataset_hash.or_else(|| model.provenance.dataset_hash.clone());
    ctx.n_pairs = ctx.n_pairs.or(Some(model.provenance.n_pairs));
    verify_eigenfunctions(&efs, &residuals, refs.as_deref(), cfg, seed, &ctx)
}

struct SetValues {
    x0: Vec<Vec<Complex64>>,
    xf: Vec<Vec<Complex64>>,
}

fn evaluate_on(efs: &[&dyn Eigenfunction], x0: &[Vec<f64>], xf: &[Vec<f64>]) -> SetValues {
    SetValues {
        x0: efs.iter().map(|e| e.eval_many(x0)).collect(),
        xf: efs.iter().map(|e| e.eval_many(xf)).collect(),
    }
}

/// Plug-in `P_eps` for the whole estimate: the smallest measure of the
/// `eps/2`-optimal region over every extremum that enters an `L` or `A`.
fn plugin_p_eps(probe: &SetValues, has_phase: &[bool], eps: f64) -> f64 {
    let half = 0.5 * eps;
    let mut p: f64 = 1.0;
    for (i, &phase) in has_phase.iter().enumerate() {
        let center = shared_branch_center(&probe.x0[i], &probe.xf[i]);
        for vals in [&probe.x0[i], &probe.xf[i]] {
            let mags: Vec<f64> = vals
                .iter()
                .filter(|v| v.norm() >= 1e-12)
                .map(|v| v.norm().ln())
                .collect();
            p = p
                .min(eps_measure_from_values(&mags, half, Extremum::Sup))
                .min(eps_measure_from_values(&mags, half, Extremum::Inf));
            if phase {
                let ph: Vec<f64> = vals
                    .iter()
                    .filter(|v| v.norm() >= 1e-12)
                    .map(|v| recentered_phase(*v, center))
                    .collect();
                p = p
                    .min(eps_measure_from_values(&ph, half, Extremum::Sup))
                    .min(eps_measure_from_values(&ph, half, Extremum::Inf));
            }
        }
    }
    p
}

/// The full verification pipeline over arbitrary eigenfunctions.
pub fn verify_eigenfunctions(
    efs: &[&dyn Eigenfunction],
    residuals: &[Option<f64>],
    references: Option<&[&dyn Eigenfunction]>,
    cfg: &VerifyConfig,
    seed: u64,
    ctx: &VerifyContext,
) -> Result<VerificationReport> {
    let total = Stopwatch::start();
    if efs.is_empty() {
        return Err(Error::InvalidInput("no eigenfunctions to verify with".into()));
    }
    let x0: &Region = cfg
        .x0
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("verify config lacks x0".into()))?;
    let xf: &Region = cfg
        .xf
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("verify config lacks xf".into()))?;
    if x0.dimension() != xf.dimension() {
        return Err(Error::DimensionMismatch {
            expected: x0.dimension(),
            got: xf.dimension(),
        });
    }
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return Err(Error::InvalidInput(format!(
            "delta must lie in (0, 1), got {}",
            cfg.delta
        )));
    }
    let m = efs.len();
    let has_phase: Vec<bool> = efs
        .iter()
        .map(|e| e.lambda().im.abs() > crate::reachtime::IM_FLOOR)
        .collect();
    let n_extrema = if has_phase.iter().any(|p| *p) {
        EXTREMA_PER_COMPLEX_PAIR
    } else {
        EXTREMA_PER_REAL_PAIR
    };
    let sigma = cfg.delta / m as f64 / n_extrema as f64;

    // plug-in P_eps from probe samples
    let probe_timer = Stopwatch::start();
    let n_probe = cfg.n_probe.max(MIN_PROBE);
    let probe_x0 = x0.sample_iid(n_probe, derive_seed(seed, "probe-x0"))?;
    let probe_xf = xf.sample_iid(n_probe, derive_seed(seed, "probe-xf"))?;
    let probe = evaluate_on(efs, &probe_x0, &probe_xf);
    let p_hat = |eps: f64| plugin_p_eps(&probe, &has_phase, eps);
    let (eps, n_samples, calibrated) = match (cfg.eps, cfg.n_samples) {
        (Some(eps), Some(n)) => (eps, n, false),
        (None, Some(n)) => {
            let grid = log_grid(1e-4, 10.0, 50);
            let (eps, _) = calibrate_eps(n as u64, sigma, &grid, p_hat)?;
            (eps, n, true)
        }
        (Some(eps), None) => {
            let need = required_samples(sigma, p_hat(eps))? as usize;
            if need > cfg.max_samples {
                log::warn!(
                    "eps = {eps} needs {need} samples per set; capped at {}",
                    cfg.max_samples
                );
            }
            (eps, need.clamp(1, cfg.max_samples), false)
        }
        (None, None) => return Err(Error::InvalidInput("set eps, n_samples, or both".into())),
    };
    let p_eps = p_hat(eps);
    let plan = plan_sampling(cfg.delta, m, eps, p_eps, n_extrema)?;
    if (n_samples as u64) < plan.n_required {
        log::warn!(
            "{n_samples} samples per set is below the {} the plan asks for at eps = {eps}",
            plan.n_required
        );
    }
    let probe_secs = probe_timer.secs();

    // extrema from fresh samples
    let sampling_timer = Stopwatch::start();
    let s0 = x0.sample_iid(n_samples, derive_seed(seed, "samples-x0"))?;
    let sf = xf.sample_iid(n_samples, derive_seed(seed, "samples-xf"))?;
    let vals = evaluate_on(efs, &s0, &sf);
    let mut quantities = Vec::with_capacity(m);
    let mut estimates = Vec::with_capacity(m);
    for i in 0..m {
        let center = shared_branch_center(&vals.x0[i], &vals.xf[i]);
        let e0 = estimate_extrema(&vals.x0[i], Some(center))?;
        let ef = estimate_extrema(&vals.xf[i], Some(center))?;
        quantities.push(EigenpairQuantities {
            lambda: efs[i].lambda(),
            l_fwd: l_hat(&e0, &ef),
            l_bwd: l_hat(&ef, &e0),
            a_fwd: a_hat(&e0, &ef)?,
            a_bwd: a_hat(&ef, &e0)?,
        });
        estimates.push((e0, ef));
    }
    let sampling_secs = sampling_timer.secs();

    let t_max = match cfg.t_max {
        Some(t) => t,
        None => default_t_max(&quantities).ok_or(Error::BudgetUndefined)?,
    };
    let combos = enumerate_combos(m, cfg.max_weight);
    let outcome = verify_intervals(&quantities, &combos, t_max)?;

    let field_timer = Stopwatch::start();
    let fields: Vec<ErrorField> = match references {
        Some(refs) => {
            let matched = match_references(efs, refs)?;
            efs.iter()
                .zip(matched)
                .map(|(e, r)| align_and_error_field(*e, r, x0, xf, cfg.n_val, derive_seed(seed, "error-field")))
                .collect::<Result<_>>()?
        }
        None => vec![ErrorField::assumed(cfg.assumed_l_eps, cfg.assumed_a_eps); m],
    };
    let error_field_secs = field_timer.secs();

    let budget_inputs: Vec<(Complex64, &ErrorField)> = efs.iter().zip(&fields).map(|(e, f)| (e.lambda(), f)).collect();
    let budget = delta_bound(&budget_inputs, eps, cfg.delta)?;
    let sources: Vec<_> = fields.iter().map(|f| f.source).collect();
    let cert = certify(&outcome.final_set, &budget, &sources, Some(p_eps));

    let eigenpairs = (0..m)
        .map(|i| {
            Ok(EigenpairReport {
                lambda: efs[i].lambda(),
                residual: residuals.get(i).copied().flatten(),
                interval: combine_eigenpair(&quantities[i], t_max)?.intervals().to_vec(),
                quantities: quantities[i].clone(),
                x0: estimates[i].0.clone(),
                xf: estimates[i].1.clone(),
                error_field: fields[i].clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(VerificationReport {
        verdict: outcome.verdict,
        final_intervals: outcome.final_set,
        eigenpairs,
        combos: outcome.combos,
        guarantee: GuaranteeSection {
            eps: budget.eps,
            delta_l: budget.delta_l,
            delta_a: budget.delta_a,
            delta_total: budget.delta_total,
            confidence: budget.confidence,
            min_abs_re: budget.min_abs_re,
            min_abs_im: budget.min_abs_im,
            statement: cert.statement,
            assumptions: cert.assumptions,
            caveat: cert.caveat,
        },
        sampling: SamplingSection {
            plan,
            n_samples,
            n_probe,
            eps_calibrated: calibrated,
        },
        provenance: Provenance {
            seed,
            system: ctx.system.clone(),
            degree: ctx.degree,
            dataset_hash: ctx.dataset_hash.clone(),
            n_pairs: ctx.n_pairs,
            t_max,
            max_weight: cfg.max_weight,
            phase_rule: PHASE_RULE.to_string(),
        },
        timings: Timings {
            probe_secs,
            sampling_secs,
            error_field_secs,
            total_secs: total.secs(),
        },
    })
}
