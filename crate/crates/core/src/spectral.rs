//! Koopman eigenpairs from snapshot data.
//!
//! EDMD regression over a monomial dictionary, a ResDMD-style residual for
//! every eigenpair, principal-eigenpair selection, and the multiplicative
//! error field of a learned eigenfunction against a reference.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::SnapshotDataset;
use crate::error::{Error, Result};
use crate::extrema::{estimate_extrema, shared_branch_center};
use crate::observables::{Dictionary, DictionarySpec};
use crate::regions::Region;
use crate::rng::derive_seed;
use crate::Eigenfunction;

pub const DEFAULT_REG: f64 = 1e-10;
/// Smallest/largest singular value ratio of `G` tolerated when `reg = 0`.
pub const CONDITIONING_LIMIT: f64 = 1e-14;
/// Candidates with `|mu - 1|` below this are the constant eigenfunction.
pub const TRIVIAL_MU_TOL: f64 = 1e-6;
/// Tolerance of the integer-combination independence test.
pub const COMBINATION_TOL: f64 = 1e-3;
/// Largest total multiplicity tried by the independence test.
pub const COMBINATION_MAX_ORDER: u32 = 4;
/// Reference values below this magnitude are skipped in the error field.
pub const REFERENCE_FLOOR: f64 = 1e-12;

const CHUNK_ROWS: usize = 2048;

/// EDMD matrices in the column-scaled basis.
#[derive(Clone, Debug)]
pub struct OperatorFit {
    pub g: Mat<f64>,
    pub a: Mat<f64>,
    pub l: Mat<f64>,
    pub k: Mat<f64>,
    /// Column `j` of both snapshot matrices was divided by `scales[j]`.
    pub scales: Vec<f64>,
    pub n_pairs: usize,
    pub reg: f64,
}

fn check_dataset(dataset: &SnapshotDataset, dict: &Dictionary) -> Result<()> {
    if dataset.dimension() != dict.dimension() {
        return Err(Error::DimensionMismatch {
            expected: dict.dimension(),
            got: dataset.dimension(),
        });
    }
    Ok(())
}

/// Scaled dictionary matrices for rows `range` of the dataset.
fn scaled_block(
    dataset: &SnapshotDataset,
    dict: &Dictionary,
    scales: &[f64],
    range: std::ops::Range<usize>,
) -> (Mat<f64>, Mat<f64>) {
    let n = dict.size();
    let rows = range.len();
    let mut buf = vec![0.0; n];
    let mut px = Mat::<f64>::zeros(rows, n);
    let mut py = Mat::<f64>::zeros(rows, n);
    for (r, k) in range.enumerate() {
        dict.evaluate_into(dataset.x(k), &mut buf);
        for j in 0..n {
            px[(r, j)] = buf[j] / scales[j];
        }
        dict.evaluate_into(dataset.y(k), &mut buf);
        for j in 0..n {
            py[(r, j)] = buf[j] / scales[j];
        }
    }
    (px, py)
}

fn chunk_ranges(len: usize) -> Vec<std::ops::Range<usize>> {
    (0..len)
        .step_by(CHUNK_ROWS)
        .map(|s| s..(s + CHUNK_ROWS).min(len))
        .collect()
}

/// Per-column max-abs of the dictionary over every `x_k` and `y_k`.
fn column_scales(dataset: &SnapshotDataset, dict: &Dictionary) -> Result<Vec<f64>> {
    let n = dict.size();
    let partial: Vec<Vec<f64>> = chunk_ranges(dataset.len())
        .into_par_iter()
        .map(|range| {
            let mut buf = vec![0.0; n];
            let mut m = vec![0.0f64; n];
            for k in range {
                for p in [dataset.x(k), dataset.y(k)] {
                    dict.evaluate_into(p, &mut buf);
                    for j in 0..n {
                        m[j] = m[j].max(buf[j].abs());
                    }
                }
            }
            m
        })
        .collect();
    let mut scales = vec![0.0f64; n];
    for m in partial {
        for j in 0..n {
            scales[j] = scales[j].max(m[j]);
        }
    }
    if scales.iter().any(|s| !s.is_finite()) {
        return Err(Error::Conditioning { ratio: f64::INFINITY });
    }
    for s in &mut scales {
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    Ok(scales)
}

/// Forms `G`, `A`, `L` from the data and solves `(G + reg I) K = A`.
///
/// Chunks are summed in index order, so the result does not depend on the
/// number of threads.
pub fn fit_operator(dataset: &SnapshotDataset, dict: &Dictionary, reg: f64) -> Result<OperatorFit> {
    check_dataset(dataset, dict)?;
    if !(reg >= 0.0 && reg.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "regularization must be nonnegative, got {reg}"
        )));
    }
    let n = dict.size();
    let n_pairs = dataset.len();
    if n_pairs < n {
        log::warn!("{n_pairs} snapshot pairs for a dictionary of size {n}; the regression is underdetermined");
    }
    let scales = column_scales(dataset, dict)?;
    let blocks: Vec<[Mat<f64>; 3]> = chunk_ranges(n_pairs)
        .into_par_iter()
        .map(|range| {
            let (px, py) = scaled_block(dataset, dict, &scales, range);
            [px.transpose() * &px, px.transpose() * &py, py.transpose() * &py]
        })
        .collect();
    let mut g = Mat::<f64>::zeros(n, n);
    let mut a = Mat::<f64>::zeros(n, n);
    let mut l = Mat::<f64>::zeros(n, n);
    for [bg, ba, bl] in &blocks {
        g += bg;
        a += ba;
        l += bl;
    }
    let inv_n = 1.0 / n_pairs as f64;
    g *= faer::Scale(inv_n);
    a *= faer::Scale(inv_n);
    l *= faer::Scale(inv_n);

    if reg == 0.0 {
        let sv = g
            .singular_values()
            .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
        let max = sv.iter().cloned().fold(0.0, f64::max);
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        let ratio = if max > 0.0 { min / max } else { 0.0 };
        if !(ratio >= CONDITIONING_LIMIT) {
            return Err(Error::Conditioning { ratio });
        }
    }
    let mut greg = g.clone();
    for i in 0..n {
        greg[(i, i)] += reg;
    }
    let k = greg.partial_piv_lu().solve(&a);
    if k.col_iter()
        .flat_map(|c| c.iter().copied().collect::<Vec<_>>())
        .any(|v| !v.is_finite())
    {
        return Err(Error::Conditioning { ratio: 0.0 });
    }
    Ok(OperatorFit {
        g,
        a,
        l,
        k,
        scales,
        n_pairs,
        reg,
    })
}

/// An eigenvector of `K` with its ResDMD residual.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub mu: Complex64,
    /// Coefficients over the scaled basis, unit Euclidean norm.
    pub g: Vec<Complex64>,
    pub residual: f64,
}

fn eigen_candidates(fit: &OperatorFit) -> Result<Vec<(Complex64, Vec<Complex64>)>> {
    let evd = fit.k.eigen().map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let n = fit.k.nrows();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mu = s[i];
        let mut g: Vec<Complex64> = (0..n).map(|r| u[(r, i)]).collect();
        let norm = g.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && mu.re.is_finite() && mu.im.is_finite()) {
            return Err(Error::Decomposition(format!("eigenpair {i} is degenerate")));
        }
        for c in &mut g {
            *c /= norm;
        }
        out.push((mu, g));
    }
    Ok(out)
}

/// `residual^2 = g*(L - conj(mu) A - mu A^T + |mu|^2 G) g / g* G g`.
///
/// Algebraically equal to the data form used by
/// [`eigendecompose_with_residuals`], but it loses digits to cancellation
/// when the residual is small.
pub fn gram_residual(fit: &OperatorFit, mu: Complex64, g: &[Complex64]) -> f64 {
    let n = g.len();
    let quad = |m: &Mat<f64>, transpose: bool| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let v = if transpose { m[(j, i)] } else { m[(i, j)] };
                acc += g[i].conj() * v * g[j];
            }
        }
        acc
    };
    let num = quad(&fit.l, false) - mu.conj() * quad(&fit.a, false) - mu * quad(&fit.a, true)
        + mu.norm_sqr() * quad(&fit.g, false);
    let den = quad(&fit.g, false).re;
    (num.re / den).max(0.0).sqrt()
}

/// All eigenpairs of `K`, sorted by ascending residual.
///
/// The residual `||(Psi_Y - mu Psi_X) g|| / ||Psi_X g||` is evaluated
/// directly from the snapshot data, one chunk at a time.
pub fn eigendecompose_with_residuals(
    fit: &OperatorFit,
    dataset: &SnapshotDataset,
    dict: &Dictionary,
) -> Result<Vec<Candidate>> {
    check_dataset(dataset, dict)?;
    let pairs = eigen_candidates(fit)?;
    let n = dict.size();
    let m = pairs.len();
    let vre = Mat::<f64>::from_fn(n, m, |r, c| pairs[c].1[r].re);
    let vim = Mat::<f64>::from_fn(n, m, |r, c| pairs[c].1[r].im);

    let partial: Vec<(Vec<f64>, Vec<f64>)> = chunk_ranges(dataset.len())
        .into_par_iter()
        .map(|range| {
            let (px, py) = scaled_block(dataset, dict, &fit.scales, range);
            let xr = &px * &vre;
            let xi = &px * &vim;
            let yr = &py * &vre;
            let yi = &py * &vim;
            let mut num = vec![0.0; m];
            let mut den = vec![0.0; m];
            for c in 0..m {
                let mu = pairs[c].0;
                for r in 0..px.nrows() {
                    let re = yr[(r, c)] - mu.re * xr[(r, c)] + mu.im * xi[(r, c)];
                    let im = yi[(r, c)] - mu.re * xi[(r, c)] - mu.im * xr[(r, c)];
                    num[c] += re * re + im * im;
                    den[c] += xr[(r, c)] * xr[(r, c)] + xi[(r, c)] * xi[(r, c)];
                }
            }
            (num, den)
        })
        .collect();
    let mut num = vec![0.0; m];
    let mut den = vec![0.0; m];
    for (pn, pd) in partial {
        for c in 0..m {
            num[c] += pn[c];
            den[c] += pd[c];
        }
    }
    let mut out: Vec<Candidate> = pairs
        .into_iter()
        .enumerate()
        .map(|(c, (mu, g))| {
            let residual = if den[c] > 0.0 {
                (num[c] / den[c]).sqrt()
            } else {
                f64::INFINITY
            };
            Candidate { mu, g, residual }
        })
        .collect();
    out.sort_by(|a, b| a.residual.total_cmp(&b.residual));
    Ok(out)
}

/// Principal-branch logarithm of `mu` divided by `dt`.
pub fn to_continuous(mu: Complex64, dt: f64) -> Result<Complex64> {
    if mu.norm() == 0.0 || !mu.norm().is_finite() {
        return Err(Error::Domain(format!("no logarithm of discrete eigenvalue {mu}")));
    }
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    let mut arg = mu.arg();
    if arg <= -PI {
        arg = PI;
    }
    Ok(Complex64::new(mu.norm().ln(), arg) / dt)
}

/// A learned Koopman eigenpair. `coeffs` are over the raw monomials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eigenpair {
    pub lambda: Complex64,
    pub mu: Complex64,
    pub residual: f64,
    pub coeffs: Vec<Complex64>,
}

impl Eigenpair {
    /// Maps a candidate back to the raw basis and normalizes the largest
    /// coefficient to `1 + 0i`.
    pub fn from_candidate(c: &Candidate, scales: &[f64], dt: f64) -> Result<Self> {
        let mut coeffs: Vec<Complex64> = c.g.iter().zip(scales).map(|(g, s)| g / s).collect();
        let pivot = coeffs
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .filter(|p| p.norm() > 0.0)
            .ok_or_else(|| Error::Decomposition("zero eigenvector".into()))?;
        for v in &mut coeffs {
            *v /= pivot;
        }
        Ok(Eigenpair {
            lambda: to_continuous(c.mu, dt)?,
            mu: c.mu,
            residual: c.residual,
            coeffs,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionCriteria {
    pub max_residual: f64,
    /// Continuous-time eigenvalues to match, one selected pair each.
    #[serde(default)]
    pub targets: Option<Vec<Complex64>>,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_target_tol")]
    pub target_tol: f64,
}

fn default_count() -> usize {
    2
}

fn default_target_tol() -> f64 {
    0.15
}

impl Default for SelectionCriteria {
    fn default() -> Self {
        SelectionCriteria {
            max_residual: 0.5,
            targets: None,
            count: default_count(),
            target_tol: default_target_tol(),
        }
    }
}

/// True if `lambda` is within `tol` of some `sum n_i accepted_i` with
/// nonnegative integers, `1 <= sum n_i <= max_order`.
fn is_integer_combination(lambda: Complex64, accepted: &[Complex64], max_order: u32, tol: f64) -> bool {
    fn rec(target: Complex64, acc: Complex64, rest: &[Complex64], budget: u32, used: u32, tol: f64) -> bool {
        if used > 0 && (target - acc).norm() < tol {
            return true;
        }
        let Some((first, tail)) = rest.split_first() else {
            return false;
        };
        (0..=budget).any(|k| rec(target, acc + *first * k as f64, tail, budget - k, used + k, tol))
    }
    rec(lambda, Complex64::new(0.0, 0.0), accepted, max_order, 0, tol)
}

fn selection_error(prefix: &str, pool: &[(Complex64, &Candidate)]) -> Error {
    let best: Vec<String> = pool
        .iter()
        .take(5)
        .map(|(l, c)| format!("lambda={:.4}{:+.4}i residual={:.3e}", l.re, l.im, c.residual))
        .collect();
    Error::Selection(format!("{prefix}; best nontrivial candidates: [{}]", best.join(", ")))
}

/// Picks principal eigenpairs from candidates sorted by residual.
pub fn select_principal(
    candidates: &[Candidate],
    criteria: &SelectionCriteria,
    scales: &[f64],
    dt: f64,
) -> Result<Vec<Eigenpair>> {
    if candidates.is_empty() {
        return Err(Error::Selection("no candidates".into()));
    }
    let mut sorted: Vec<&Candidate> = candidates.iter().collect();
    sorted.sort_by(|a, b| a.residual.total_cmp(&b.residual));
    let mut nontrivial = Vec::new();
    for c in sorted {
        if (c.mu - 1.0).norm() <= TRIVIAL_MU_TOL || c.mu.norm() == 0.0 {
            continue;
        }
        nontrivial.push((to_continuous(c.mu, dt)?, c));
    }
    let passing: Vec<(Complex64, &Candidate)> = nontrivial
        .iter()
        .copied()
        .filter(|(_, c)| c.residual <= criteria.max_residual)
        .collect();
    if passing.is_empty() {
        return Err(selection_error(
            &format!("no nontrivial candidate has residual <= {}", criteria.max_residual),
            &nontrivial,
        ));
    }

    let mut chosen: Vec<&Candidate> = Vec::new();
    match &criteria.targets {
        Some(targets) => {
            for t in targets {
                let pick = passing.iter().find(|(l, c)| {
                    (l - t).norm() <= criteria.target_tol && !chosen.iter().any(|d| std::ptr::eq(*d, *c))
                });
                match pick {
                    Some((_, c)) => chosen.push(c),
                    None => {
                        return Err(selection_error(
                            &format!(
                                "no candidate within {} of target {:.4}{:+.4}i",
                                criteria.target_tol, t.re, t.im
                            ),
                            &passing,
                        ))
                    }
                }
            }
        }
        None => {
            let mut accepted: Vec<Complex64> = Vec::new();
            for (l, c) in &passing {
                if chosen.len() >= criteria.count {
                    break;
                }
                if is_integer_combination(*l, &accepted, COMBINATION_MAX_ORDER, COMBINATION_TOL) {
                    continue;
                }
                accepted.push(*l);
                chosen.push(c);
            }
            if chosen.len() < criteria.count {
                log::warn!("selected {} of {} requested eigenpairs", chosen.len(), criteria.count);
            }
        }
    }
    chosen
        .into_iter()
        .map(|c| Eigenpair::from_candidate(c, scales, dt))
        .collect()
}

/// `psi(x) = sum_j coeffs_j * monomial_j(x)`.
#[derive(Clone, Debug)]
pub struct LearnedEigenfunction {
    dict: Arc<Dictionary>,
    pair: Eigenpair,
}

impl LearnedEigenfunction {
    pub fn new(dict: Arc<Dictionary>, pair: Eigenpair) -> Result<Self> {
        if pair.coeffs.len() != dict.size() {
            return Err(Error::DimensionMismatch {
                expected: dict.size(),
                got: pair.coeffs.len(),
            });
        }
        Ok(LearnedEigenfunction { dict, pair })
    }

    pub fn pair(&self) -> &Eigenpair {
        &self.pair
    }
}

impl Eigenfunction for LearnedEigenfunction {
    fn lambda(&self) -> Complex64 {
        self.pair.lambda
    }

    fn eval(&self, x: &[f64]) -> Complex64 {
        let mut buf = vec![0.0; self.dict.size()];
        self.dict.evaluate_into(x, &mut buf);
        buf.iter().zip(&self.pair.coeffs).map(|(b, c)| c * b).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelProvenance {
    pub seed: Option<u64>,
    pub n_pairs: usize,
    pub reg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
}

/// The model file: a dictionary spec plus the selected eigenpairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KoopmanModel {
    pub dict: DictionarySpec,
    pub dt: f64,
    pub eigenpairs: Vec<Eigenpair>,
    pub provenance: ModelProvenance,
}

impl KoopmanModel {
    pub fn eigenfunctions(&self) -> Result<Vec<LearnedEigenfunction>> {
        let dict = Arc::new(Dictionary::from_spec(self.dict)?);
        self.eigenpairs
            .iter()
            .map(|p| LearnedEigenfunction::new(dict.clone(), p.clone()))
            .collect()
    }
}

/// Fit, decompose and select in one call.
pub fn learn(
    dataset: &SnapshotDataset,
    degree: u32,
    reg: f64,
    criteria: &SelectionCriteria,
    seed: Option<u64>,
) -> Result<KoopmanModel> {
    let dict = Dictionary::new(dataset.dimension(), degree)?;
    let fit = fit_operator(dataset, &dict, reg)?;
    let candidates = eigendecompose_with_residuals(&fit, dataset, &dict)?;
    let eigenpairs = select_principal(&candidates, criteria, &fit.scales, dataset.dt())?;
    Ok(KoopmanModel {
        dict: dict.spec(),
        dt: dataset.dt(),
        eigenpairs,
        provenance: ModelProvenance {
            seed,
            n_pairs: dataset.len(),
            reg,
            dataset_hash: Some(dataset.content_hash()),
            system: None,
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorFieldSource {
    /// Computed against a reference eigenfunction on validation samples.
    Measured,
    /// Supplied by the user; nothing was checked.
    Assumed,
}

/// Bounds on the multiplicative error `eps(x) = c psi~(x) / psi(x)`.
///
/// `l_eps_fwd = |L^eps(X0, XF)|`, `l_eps_bwd = |L^eps(XF, X0)|`, and the
/// `a_eps_*` fields are the phase analogues.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorField {
    pub l_eps_fwd: f64,
    pub l_eps_bwd: f64,
    pub a_eps_fwd: f64,
    pub a_eps_bwd: f64,
    pub scale: Complex64,
    pub source: ErrorFieldSource,
    #[serde(default)]
    pub n_skipped: usize,
}

impl ErrorField {
    pub fn assumed(l_eps: f64, a_eps: f64) -> Self {
        ErrorField {
            l_eps_fwd: l_eps,
            l_eps_bwd: l_eps,
            a_eps_fwd: a_eps,
            a_eps_bwd: a_eps,
            scale: Complex64::new(1.0, 0.0),
            source: ErrorFieldSource::Assumed,
            n_skipped: 0,
        }
    }

    pub fn zero() -> Self {
        Self::assumed(0.0, 0.0)
    }
}

/// Aligns `approx` to `reference` by complex least squares over `n_val`
/// samples from each of `x0` and `xf`, then measures the extrema of
/// `eps(x)` on each set.
pub fn align_and_error_field(
    approx: &dyn Eigenfunction,
    reference: &dyn Eigenfunction,
    x0: &Region,
    xf: &Region,
    n_val: usize,
    seed: u64,
) -> Result<ErrorField> {
    if n_val == 0 {
        return Err(Error::InvalidInput("n_val must be positive".into()));
    }
    let s0 = x0.sample_iid(n_val, derive_seed(seed, "error-field-x0"))?;
    let sf = xf.sample_iid(n_val, derive_seed(seed, "error-field-xf"))?;
    let pairs = |pts: &[Vec<f64>]| -> (Vec<(Complex64, Complex64)>, usize) {
        let a = approx.eval_many(pts);
        let r = reference.eval_many(pts);
        let kept: Vec<_> = a
            .into_iter()
            .zip(r)
            .filter(|(_, r)| r.norm() >= REFERENCE_FLOOR)
            .collect();
        let skipped = pts.len() - kept.len();
        (kept, skipped)
    };
    let (p0, k0) = pairs(&s0);
    let (pf, kf) = pairs(&sf);
    let n_skipped = k0 + kf;
    if n_skipped > 0 {
        log::warn!("error field: skipped {n_skipped} points where the reference vanishes");
    }
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for (a, r) in p0.iter().chain(&pf) {
        num += a.conj() * r;
        den += a.norm_sqr();
    }
    if !(den > 0.0) || num.norm() == 0.0 {
        return Err(Error::DegenerateEigenfunction {
            count: p0.len() + pf.len(),
            floor: REFERENCE_FLOOR,
        });
    }
    let scale = num / den;
    let ratio = |v: &[(Complex64, Complex64)]| -> Vec<Complex64> { v.iter().map(|(a, r)| scale * a / r).collect() };
    let e0 = ratio(&p0);
    let ef = ratio(&pf);
    let center = shared_branch_center(&e0, &ef);
    let x0e = estimate_extrema(&e0, Some(center))?;
    let xfe = estimate_extrema(&ef, Some(center))?;
    Ok(ErrorField {
        l_eps_fwd: (xfe.sup_log_mag - x0e.inf_log_mag).abs(),
        l_eps_bwd: (x0e.sup_log_mag - xfe.inf_log_mag).abs(),
        a_eps_fwd: (xfe.sup_phase - x0e.inf_phase).abs(),
        a_eps_bwd: (x0e.sup_phase - xfe.inf_phase).abs(),
        scale,
        source: ErrorFieldSource::Measured,
        n_skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{
        analytic_eigenpairs_example1, duffing_system, example1_system, generate_snapshots, SnapshotSettings,
        SystemModel,
    };
    use crate::regions::BoxRegion;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn linear_dataset(rates: &[f64], dt: f64, n: usize) -> SnapshotDataset {
        let d = rates.len();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for k in 0..n {
            for (i, r) in rates.iter().enumerate() {
                let v = ((k * (i + 3)) as f64 * 0.618).sin() * 1.5 + 0.1 * i as f64;
                x.push(v);
                y.push(v * (r * dt).exp());
            }
        }
        SnapshotDataset::new(d, dt, x, y).unwrap()
    }

    fn sorted_mus(fit: &OperatorFit) -> Vec<f64> {
        let mut v: Vec<f64> = fit.k.eigenvalues().unwrap().iter().map(|m| m.re).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn linear_1d_spectrum() {
        let data = linear_dataset(&[-1.0], 0.05, 50);
        let dict = Dictionary::new(1, 1).unwrap();
        let fit = fit_operator(&data, &dict, 0.0).unwrap();
        let mus = sorted_mus(&fit);
        assert!((mus[0] - (-0.05f64).exp()).abs() < 1e-10);
        assert!((mus[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn linear_2d_spectrum_and_residuals() {
        let dt = 0.1;
        let data = linear_dataset(&[-1.0, -2.0], dt, 200);
        let dict = Dictionary::new(2, 1).unwrap();
        let fit = fit_operator(&data, &dict, 0.0).unwrap();
        let mus = sorted_mus(&fit);
        let want = [(-2.0 * dt).exp(), (-dt).exp(), 1.0];
        for (m, w) in mus.iter().zip(want) {
            assert!((m - w).abs() < 1e-10, "{m} vs {w}");
        }
        let cands = eigendecompose_with_residuals(&fit, &data, &dict).unwrap();
        assert!(cands.iter().all(|c| c.residual <= 1e-8));
        assert!(cands.iter().any(|c| (c.mu - 1.0).norm() < 1e-10));
    }

    #[test]
    fn rank_deficient_gram_needs_regularization() {
        // every x equal: the linear column duplicates the constant one
        let data = SnapshotDataset::new(1, 0.1, vec![2.0; 10], vec![1.5; 10]).unwrap();
        let dict = Dictionary::new(1, 1).unwrap();
        assert!(matches!(
            fit_operator(&data, &dict, 0.0),
            Err(Error::Conditioning { .. })
        ));
        assert!(fit_operator(&data, &dict, 1e-6).is_ok());
    }

    #[test]
    fn continuous_eigenvalues() {
        assert_eq!(to_continuous(c(1.0, 0.0), 0.05).unwrap(), c(0.0, 0.0));
        assert!((to_continuous(c((-0.05f64).exp(), 0.0), 0.05).unwrap() - c(-1.0, 0.0)).norm() < 1e-12);
        let lam = c(-0.25, 1.39194);
        let mu = (lam * 0.05).exp();
        assert!((to_continuous(mu, 0.05).unwrap() - lam).norm() < 1e-9);
        assert!(matches!(to_continuous(c(0.0, 0.0), 0.05), Err(Error::Domain(_))));
        // the negative real axis maps to +pi
        assert!((to_continuous(c(-1.0, -0.0), 1.0).unwrap().im - PI).abs() < 1e-15);
    }

    #[test]
    fn gram_route_agrees_with_data_route() {
        let sys = duffing_system();
        let domain = BoxRegion::new(vec![0.9, 0.9], vec![1.2, 1.2]).unwrap();
        let s = SnapshotSettings {
            n_traj: 50,
            n_steps: 40,
            dt: 0.05,
            seed: 3,
            step: 1e-3,
            guard: None,
        };
        let data = generate_snapshots(&sys, &domain, &s).unwrap().dataset;
        let dict = Dictionary::new(2, 4).unwrap();
        let fit = fit_operator(&data, &dict, DEFAULT_REG).unwrap();
        let cands = eigendecompose_with_residuals(&fit, &data, &dict).unwrap();
        for cand in cands.iter().filter(|c| c.residual > 1e-3) {
            let gram = gram_residual(&fit, cand.mu, &cand.g);
            assert!(
                (gram - cand.residual).abs() <= 1e-6 + 1e-4 * cand.residual,
                "{gram} vs {}",
                cand.residual
            );
        }
    }

    fn perturbed_residual(noise: f64) -> f64 {
        let dt = 0.1;
        let mut data = linear_dataset(&[-1.0, -2.0], dt, 400);
        let mut y = Vec::new();
        let mut x = Vec::new();
        for (k, (a, b)) in data.pairs().enumerate() {
            x.extend_from_slice(a);
            for (i, v) in b.iter().enumerate() {
                y.push(v + noise * ((k * 7 + i * 13) as f64 * 1.234).sin());
            }
        }
        data = SnapshotDataset::new(2, dt, x, y).unwrap();
        let dict = Dictionary::new(2, 1).unwrap();
        let fit = fit_operator(&data, &dict, 0.0).unwrap();
        let cands = eigendecompose_with_residuals(&fit, &data, &dict).unwrap();
        cands
            .iter()
            .filter(|c| (c.mu - 1.0).norm() > 1e-6)
            .map(|c| c.residual)
            .fold(0.0, f64::max)
    }

    #[test]
    fn residual_grows_with_noise() {
        let r: Vec<f64> = [1e-4, 1e-3, 1e-2].iter().map(|&s| perturbed_residual(s)).collect();
        assert!(r[0] < r[1] && r[1] < r[2], "{r:?}");
    }

    #[test]
    fn independence_test() {
        let acc = [c(-1.0, 0.0), c(2.5, 0.0)];
        assert!(is_integer_combination(c(1.5, 0.0), &acc, 4, 1e-3));
        assert!(is_integer_combination(c(-4.0, 0.0), &acc, 4, 1e-3));
        assert!(!is_integer_combination(c(-5.0, 0.0), &acc, 4, 1e-3));
        assert!(!is_integer_combination(c(0.3, 0.0), &acc, 4, 1e-3));
        let pair = [c(-0.25, 1.4)];
        assert!(!is_integer_combination(c(-0.25, -1.4), &pair, 4, 1e-3));
    }

    #[test]
    fn only_trivial_candidate_fails_selection() {
        let cands = vec![Candidate {
            mu: c(1.0, 0.0),
            g: vec![c(1.0, 0.0)],
            residual: 0.0,
        }];
        let err = select_principal(&cands, &SelectionCriteria::default(), &[1.0], 0.1).unwrap_err();
        assert!(matches!(err, Error::Selection(_)));
    }

    #[test]
    fn coefficients_are_normalized() {
        let cand = Candidate {
            mu: c(0.9, 0.1),
            g: vec![c(0.0, 0.5), c(0.0, -0.2)],
            residual: 0.0,
        };
        let p = Eigenpair::from_candidate(&cand, &[0.25, 1.0], 0.1).unwrap();
        assert_eq!(p.coeffs[0], c(1.0, 0.0));
        assert!((p.coeffs[1] - c(-0.1, 0.0)).norm() < 1e-15);
    }

    fn example1_model(seed: u64) -> (KoopmanModel, SystemModel) {
        let sys = example1_system();
        let s = SnapshotSettings {
            n_traj: 1000,
            n_steps: 10,
            dt: 0.05,
            seed,
            step: 1e-3,
            guard: None,
        };
        let domain = sys.working_domain().clone();
        let data = generate_snapshots(&sys, &domain, &s).unwrap().dataset;
        let crit = SelectionCriteria {
            targets: Some(vec![c(-1.0, 0.0), c(2.5, 0.0)]),
            ..SelectionCriteria::default()
        };
        (learn(&data, 6, DEFAULT_REG, &crit, Some(seed)).unwrap(), sys)
    }

    #[test]
    fn example1_eigenvalues_are_recovered() {
        let (model, _) = example1_model(11);
        assert_eq!(model.eigenpairs.len(), 2);
        assert!((model.eigenpairs[0].lambda - c(-1.0, 0.0)).norm() < 0.1);
        assert!((model.eigenpairs[1].lambda - c(2.5, 0.0)).norm() < 0.1);
        assert!((model.eigenpairs[0].mu - (-0.05f64).exp()).norm() < 0.05);
        assert!((model.eigenpairs[1].mu - 0.125f64.exp()).norm() < 0.05);
    }

    #[test]
    fn example1_error_field_is_small() {
        let (model, _) = example1_model(12);
        let learned = model.eigenfunctions().unwrap();
        let refs = analytic_eigenpairs_example1();
        let (x0, xf) = crate::harness::example1_regions().unwrap();
        for (l, r) in learned.iter().zip(&refs) {
            let f = align_and_error_field(l, r, &x0, &xf, 2000, 5).unwrap();
            for b in [f.l_eps_fwd, f.l_eps_bwd, f.a_eps_fwd, f.a_eps_bwd] {
                assert!(b <= 0.2, "{} bound {b}", r.name);
            }
        }
    }

    #[test]
    fn model_json_round_trip() {
        let (model, _) = example1_model(13);
        let json = serde_json::to_string(&model).unwrap();
        let back: KoopmanModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, model);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!(v["eigenpairs"][0]["lambda"].as_array().unwrap().len() == 2);
        assert!(v["dict"]["degree"] == 6);
    }

    #[test]
    fn one_step_consistency_bounded_by_residual() {
        let (model, sys) = example1_model(14);
        let s = SnapshotSettings {
            n_traj: 1000,
            n_steps: 10,
            dt: 0.05,
            seed: 14,
            step: 1e-3,
            guard: None,
        };
        let data = generate_snapshots(&sys, sys.working_domain(), &s).unwrap().dataset;
        for ef in model.eigenfunctions().unwrap() {
            let mu = ef.pair().mu;
            let mut sq_err = 0.0;
            let mut sq_val = 0.0;
            for (x, y) in data.pairs() {
                let px = ef.eval(x);
                sq_err += (ef.eval(y) - mu * px).norm_sqr();
                sq_val += px.norm_sqr();
            }
            // the residual is measured in the scaled basis; in the raw basis
            // it is the same ratio because scaling only reparametrizes g
            let rms_ratio = (sq_err / sq_val).sqrt();
            assert!(
                rms_ratio <= ef.pair().residual * (1.0 + 1e-6),
                "{rms_ratio} > {}",
                ef.pair().residual
            );
        }
    }
}
