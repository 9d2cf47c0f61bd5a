//! Sample extrema of `ln|psi|` and `arg psi`, and sample-size planning.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values with `|psi|` below this are skipped.
pub const MAGNITUDE_FLOOR: f64 = 1e-12;
/// A set whose phases spread wider than this gets a branch-cut warning.
pub const PHASE_SPREAD_WARNING: f64 = 1.9 * PI;
/// Extremum estimates per eigenpair: sup and inf, two sets, two channels.
pub const EXTREMA_PER_COMPLEX_PAIR: usize = 8;
/// Real eigenpairs have no phase channel.
pub const EXTREMA_PER_REAL_PAIR: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremaEstimate {
    pub sup_log_mag: f64,
    pub inf_log_mag: f64,
    pub sup_phase: f64,
    pub inf_phase: f64,
    pub n_samples: usize,
    pub n_skipped: usize,
    /// Phases lie in `(branch_center - pi, branch_center + pi]`.
    pub branch_center: f64,
}

/// Argument of the mean unit phasor; 0 when the phasors cancel.
pub fn circular_mean<'a>(values: impl IntoIterator<Item = &'a Complex64>) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for v in values {
        let r = v.norm();
        if r >= MAGNITUDE_FLOOR && r.is_finite() {
            acc += v / r;
        }
    }
    if acc.norm() < 1e-12 {
        0.0
    } else {
        acc.arg()
    }
}

/// Branch center for phases on two sets that will be compared.
pub fn shared_branch_center(a: &[Complex64], b: &[Complex64]) -> f64 {
    circular_mean(a.iter().chain(b))
}

/// `arg z` shifted into `(center - pi, center + pi]`.
pub fn recentered_phase(z: Complex64, center: f64) -> f64 {
    let rel = (z * Complex64::from_polar(1.0, -center)).arg();
    let rel = if rel <= -PI { PI } else { rel };
    center + rel
}

pub fn estimate_extrema(values: &[Complex64], branch_center: Option<f64>) -> Result<ExtremaEstimate> {
    let center = branch_center.unwrap_or_else(|| circular_mean(values));
    let mut sup_l = f64::NEG_INFINITY;
    let mut inf_l = f64::INFINITY;
    let mut sup_p = f64::NEG_INFINITY;
    let mut inf_p = f64::INFINITY;
    let mut used = 0;
    for v in values {
        let r = v.norm();
        if !(r >= MAGNITUDE_FLOOR && r.is_finite()) {
            continue;
        }
        used += 1;
        let l = r.ln();
        let p = recentered_phase(*v, center);
        sup_l = sup_l.max(l);
        inf_l = inf_l.min(l);
        sup_p = sup_p.max(p);
        inf_p = inf_p.min(p);
    }
    if used == 0 {
        return Err(Error::DegenerateEigenfunction {
            count: values.len(),
            floor: MAGNITUDE_FLOOR,
        });
    }
    if sup_p - inf_p >= PHASE_SPREAD_WARNING {
        log::warn!(
            "phase spread {:.3} rad is close to 2 pi; phase bounds may straddle the branch cut",
            sup_p - inf_p
        );
    }
    Ok(ExtremaEstimate {
        sup_log_mag: sup_l,
        inf_log_mag: inf_l,
        sup_phase: sup_p,
        inf_phase: inf_p,
        n_samples: values.len(),
        n_skipped: values.len() - used,
        branch_center: center,
    })
}

/// `L(W, V) = sup_V ln|psi| - inf_W ln|psi|`.
pub fn l_hat(from_w: &ExtremaEstimate, to_v: &ExtremaEstimate) -> f64 {
    to_v.sup_log_mag - from_w.inf_log_mag
}

/// `A(W, V) = sup_V arg psi - inf_W arg psi` on a shared branch.
pub fn a_hat(from_w: &ExtremaEstimate, to_v: &ExtremaEstimate) -> Result<f64> {
    if (from_w.branch_center - to_v.branch_center).abs() > 1e-12 {
        return Err(Error::BranchMismatch {
            from: from_w.branch_center,
            to: to_v.branch_center,
        });
    }
    Ok(to_v.sup_phase - from_w.inf_phase)
}

/// `N0 = ceil(ln sigma / ln(1 - p_eps))`, the sample count after which the
/// sample extremum is within `eps` of the true one with probability at
/// least `1 - sigma`.
pub fn required_samples(sigma: f64, p_eps: f64) -> Result<u64> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::Domain(format!("sigma must lie in (0, 1), got {sigma}")));
    }
    if !(p_eps > 0.0 && p_eps <= 1.0) {
        return Err(Error::Domain(format!("p_eps must lie in (0, 1], got {p_eps}")));
    }
    if p_eps == 1.0 {
        return Ok(1);
    }
    let n = (sigma.ln() / (-p_eps).ln_1p()).ceil();
    Ok((n as u64).max(1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub per_extremum_sigma: f64,
    pub eps: f64,
    pub n_required: u64,
    pub p_eps_assumed: f64,
}

/// Splits the failure probability `delta` evenly over `m_eigenpairs` and
/// then over the `n_extrema_per_pair` estimates of each pair.
pub fn plan_sampling(
    delta: f64,
    m_eigenpairs: usize,
    eps: f64,
    p_eps: f64,
    n_extrema_per_pair: usize,
) -> Result<SamplingPlan> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1], got {delta}")));
    }
    if m_eigenpairs == 0 || n_extrema_per_pair == 0 {
        return Err(Error::Domain("eigenpair and extremum counts must be positive".into()));
    }
    let sigma = delta / m_eigenpairs as f64 / n_extrema_per_pair as f64;
    // delta = 1 with a single estimate leaves nothing to guarantee
    let n_required = if sigma >= 1.0 {
        1
    } else {
        required_samples(sigma, p_eps)?
    };
    Ok(SamplingPlan {
        per_extremum_sigma: sigma,
        eps,
        n_required,
        p_eps_assumed: p_eps,
    })
}

/// Smallest `eps` on `grid` (ascending) whose plug-in measure makes `n`
/// samples sufficient at failure level `sigma`.
///
/// `p_hat(eps)` must be nondecreasing in `eps`. Returns the last grid value
/// when none qualifies.
pub fn calibrate_eps(n: u64, sigma: f64, grid: &[f64], p_hat: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
    let mut last = None;
    for &eps in grid {
        let p = p_hat(eps).clamp(f64::MIN_POSITIVE, 1.0);
        last = Some((eps, p));
        if required_samples(sigma, p)? <= n {
            return Ok((eps, p));
        }
    }
    last.ok_or_else(|| Error::InvalidInput("empty eps grid".into()))
}

/// Geometric grid from `lo` to `hi` with `per_decade` points per decade.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let steps = ((hi / lo).log10() * per_decade as f64).ceil() as usize;
    (0..=steps)
        .map(|k| lo * 10f64.powf(k as f64 / per_decade as f64))
        .collect()
}
