//! Benchmark systems, fixed-step RK4 flow, and snapshot data.
//!
//! The verification pipeline never looks at a vector field directly; it only
//! sees [`SnapshotDataset`]s. The fields here exist to produce those datasets
//! and to simulate ground-truth entry times for soundness checks.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::regions::{BoxRegion, Region};
use crate::rng::substream;
use crate::Eigenfunction;

/// Default RK4 step (time units).
pub const DEFAULT_STEP: f64 = 1e-3;
/// `|det grad Psi|` below this makes the Example 1 field undefined.
pub const SINGULAR_JACOBIAN_THRESHOLD: f64 = 1e-12;
/// Guard box for snapshot generation is the working domain scaled by this.
pub const GUARD_FACTOR: f64 = 2.0;

pub trait VectorField: Send + Sync {
    fn eval(&self, x: &[f64], dx: &mut [f64]) -> Result<()>;
}

impl<F> VectorField for F
where
    F: Fn(&[f64], &mut [f64]) -> Result<()> + Send + Sync,
{
    fn eval(&self, x: &[f64], dx: &mut [f64]) -> Result<()> {
        self(x, dx)
    }
}

/// An autonomous ODE `dx/dt = f(x)` with the box on which `f` is trusted.
#[derive(Clone)]
pub struct SystemModel {
    name: String,
    dimension: usize,
    working_domain: BoxRegion,
    field: Arc<dyn VectorField>,
}

impl std::fmt::Debug for SystemModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SystemModel")
            .field("name", &self.name)
            .field("dimension", &self.dimension)
            .field("working_domain", &self.working_domain)
            .finish_non_exhaustive()
    }
}

impl SystemModel {
    pub fn new(name: impl Into<String>, working_domain: BoxRegion, field: impl VectorField + 'static) -> Self {
        SystemModel {
            name: name.into(),
            dimension: working_domain.dimension(),
            working_domain,
            field: Arc::new(field),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn working_domain(&self) -> &BoxRegion {
        &self.working_domain
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut dx = vec![0.0; self.dimension];
        self.field.eval(x, &mut dx)?;
        Ok(dx)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// Scratch space for one classic RK4 step.
struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    fn new(dim: usize) -> Self {
        Rk4 {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    fn step(&mut self, f: &dyn VectorField, x: &mut [f64], h: f64) -> Result<()> {
        let n = x.len();
        f.eval(x, &mut self.k1)?;
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k1[i];
        }
        f.eval(&self.tmp, &mut self.k2)?;
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k2[i];
        }
        f.eval(&self.tmp, &mut self.k3)?;
        for i in 0..n {
            self.tmp[i] = x[i] + h * self.k3[i];
        }
        f.eval(&self.tmp, &mut self.k4)?;
        for i in 0..n {
            x[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        Ok(())
    }
}

fn check_step(step: f64) -> Result<()> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "integrator step must be positive, got {step}"
        )));
    }
    Ok(())
}

/// Approximates the flow `s_t(x0)` with fixed RK4 steps of size `step`,
/// finishing with one partial step when `t` is not a multiple of `step`.
pub fn integrate_flow(system: &SystemModel, x0: &[f64], t: f64, step: f64) -> Result<Vec<f64>> {
    system.check_dim(x0)?;
    check_step(step)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("flow time must be nonnegative, got {t}")));
    }
    let full = (t / step + 1e-9).floor() as u64;
    let rest = t - full as f64 * step;
    let mut x = x0.to_vec();
    let mut ws = Rk4::new(x.len());
    let field = system.field.as_ref();
    let mut time = 0.0;
    for _ in 0..full {
        ws.step(field, &mut x, step)?;
        time += step;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { time });
        }
    }
    if rest > 1e-9 * step {
        ws.step(field, &mut x, rest)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { time: t });
        }
    }
    Ok(x)
}

/// States at `0, step, 2 step, ...` up to `t` (the last sample lands on `t`).
pub fn simulate_trajectory(system: &SystemModel, x0: &[f64], t: f64, step: f64) -> Result<Vec<(f64, Vec<f64>)>> {
    system.check_dim(x0)?;
    check_step(step)?;
    let n = (t / step - 1e-9).ceil().max(0.0) as u64;
    let mut x = x0.to_vec();
    let mut ws = Rk4::new(x.len());
    let mut out = Vec::with_capacity(n as usize + 1);
    out.push((0.0, x.clone()));
    for k in 1..=n {
        let h = if k == n { t - (n - 1) as f64 * step } else { step };
        ws.step(system.field.as_ref(), &mut x, h)?;
        let time = if k == n { t } else { k as f64 * step };
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { time });
        }
        out.push((time, x.clone()));
    }
    Ok(out)
}

/// Central finite-difference Jacobian, row `i` holding `d f_i / d x_j`.
pub fn jacobian_fd(system: &SystemModel, x: &[f64], h: f64) -> Result<Vec<Vec<f64>>> {
    let n = system.dimension();
    let mut jac = vec![vec![0.0; n]; n];
    let mut xp = x.to_vec();
    for j in 0..n {
        xp[j] = x[j] + h;
        let fp = system.eval(&xp)?;
        xp[j] = x[j] - h;
        let fm = system.eval(&xp)?;
        xp[j] = x[j];
        for i in 0..n {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Snapshot pairs `(x_k, y_k)` with `y_k = s_dt(x_k)`, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotDataset {
    dimension: usize,
    dt: f64,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl SnapshotDataset {
    pub fn new(dimension: usize, dt: f64, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidInput("dataset dimension must be positive".into()));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!("dataset dt must be positive, got {dt}")));
        }
        if x.len() != y.len() || !x.len().is_multiple_of(dimension) {
            return Err(Error::InvalidInput(format!(
                "dataset arrays of lengths {} and {} do not form pairs of dimension {dimension}",
                x.len(),
                y.len()
            )));
        }
        if x.is_empty() {
            return Err(Error::InvalidInput("dataset has no snapshot pairs".into()));
        }
        Ok(SnapshotDataset { dimension, dt, x, y })
    }

    pub fn from_pairs(dimension: usize, dt: f64, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<Self> {
        let mut x = Vec::with_capacity(pairs.len() * dimension);
        let mut y = Vec::with_capacity(pairs.len() * dimension);
        for (a, b) in pairs {
            if a.len() != dimension || b.len() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    got: if a.len() != dimension { a.len() } else { b.len() },
                });
            }
            x.extend_from_slice(a);
            y.extend_from_slice(b);
        }
        SnapshotDataset::new(dimension, dt, x, y)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.x.len() / self.dimension
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self, k: usize) -> &[f64] {
        &self.x[k * self.dimension..(k + 1) * self.dimension]
    }

    pub fn y(&self, k: usize) -> &[f64] {
        &self.y[k * self.dimension..(k + 1) * self.dimension]
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&[f64], &[f64])> {
        self.x
            .chunks_exact(self.dimension)
            .zip(self.y.chunks_exact(self.dimension))
    }

    /// Same dataset with every state multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> SnapshotDataset {
        SnapshotDataset {
            dimension: self.dimension,
            dt: self.dt,
            x: self.x.iter().map(|v| v * factor).collect(),
            y: self.y.iter().map(|v| v * factor).collect(),
        }
    }

    /// SHA-256 over dimension, dt and the raw bits of every value.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.dimension as u64).to_le_bytes());
        h.update(self.dt.to_bits().to_le_bytes());
        for v in self.x.iter().chain(&self.y) {
            h.update(v.to_bits().to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotSettings {
    pub n_traj: usize,
    pub n_steps: usize,
    pub dt: f64,
    pub seed: u64,
    #[serde(default = "default_step")]
    pub step: f64,
    /// Trajectories are cut when they leave this box. `None` uses the
    /// working domain inflated by [`GUARD_FACTOR`].
    #[serde(default)]
    pub guard: Option<BoxRegion>,
}

fn default_step() -> f64 {
    DEFAULT_STEP
}

#[derive(Clone, Debug)]
pub struct GeneratedSnapshots {
    pub dataset: SnapshotDataset,
    /// Pairs lost to guard-box exits or divergence.
    pub dropped_pairs: usize,
    pub dropped_trajectories: usize,
}

/// Simulates `n_traj` trajectories of `n_steps` steps of length `dt` from
/// initial points drawn uniformly in `domain`.
///
/// Trajectory `i` uses its own random stream, so the output is identical
/// for any thread count.
pub fn generate_snapshots(
    system: &SystemModel,
    domain: &BoxRegion,
    settings: &SnapshotSettings,
) -> Result<GeneratedSnapshots> {
    if domain.dimension() != system.dimension() {
        return Err(Error::DimensionMismatch {
            expected: system.dimension(),
            got: domain.dimension(),
        });
    }
    if !system.working_domain().encloses(domain) {
        return Err(Error::InvalidInput(format!(
            "sampling domain {domain:?} is not inside the working domain of {}",
            system.name()
        )));
    }
    if settings.n_traj == 0 || settings.n_steps == 0 {
        return Err(Error::InvalidInput("n_traj and n_steps must be positive".into()));
    }
    if !(settings.dt > 0.0) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {}", settings.dt)));
    }
    let guard = settings
        .guard
        .clone()
        .unwrap_or_else(|| system.working_domain().inflate(GUARD_FACTOR));

    let per_traj: Vec<(Vec<f64>, Vec<f64>, usize)> = (0..settings.n_traj)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(settings.seed, i as u64);
            let mut x = domain.sample_point(&mut rng);
            let mut xs = Vec::with_capacity(settings.n_steps * x.len());
            let mut ys = Vec::with_capacity(settings.n_steps * x.len());
            for k in 0..settings.n_steps {
                match integrate_flow(system, &x, settings.dt, settings.step) {
                    Ok(y) if guard.contains(&y) => {
                        xs.extend_from_slice(&x);
                        ys.extend_from_slice(&y);
                        x = y;
                    }
                    _ => return (xs, ys, settings.n_steps - k),
                }
            }
            (xs, ys, 0)
        })
        .collect();

    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut dropped_pairs = 0;
    let mut dropped_trajectories = 0;
    for (xs, ys, dropped) in per_traj {
        x.extend(xs);
        y.extend(ys);
        if dropped > 0 {
            dropped_pairs += dropped;
            dropped_trajectories += 1;
        }
    }
    if dropped_pairs > 0 {
        log::warn!(
            "{}: dropped {dropped_pairs} pairs from {dropped_trajectories} trajectories leaving the guard box",
            system.name()
        );
    }
    let dataset = SnapshotDataset::new(system.dimension(), settings.dt, x, y)?;
    Ok(GeneratedSnapshots {
        dataset,
        dropped_pairs,
        dropped_trajectories,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryTime {
    /// First integrator time at which the state is in the target.
    pub time: Option<f64>,
    /// The simulation blew up before reaching the target or the horizon.
    pub diverged: bool,
}

/// First time each start point's trajectory is inside `target`, sampled on
/// the integrator grid. Resolution is one `step`.
pub fn first_entry_times(
    system: &SystemModel,
    starts: &[Vec<f64>],
    target: &Region,
    t_max: f64,
    step: f64,
) -> Result<Vec<EntryTime>> {
    check_step(step)?;
    for s in starts {
        system.check_dim(s)?;
    }
    let n = (t_max / step - 1e-9).ceil().max(0.0) as u64;
    let field = system.field.as_ref();
    Ok(starts
        .par_iter()
        .map(|x0| {
            if target.contains(x0) {
                return EntryTime {
                    time: Some(0.0),
                    diverged: false,
                };
            }
            let mut x = x0.clone();
            let mut ws = Rk4::new(x.len());
            for k in 1..=n {
                let h = if k == n { t_max - (n - 1) as f64 * step } else { step };
                if ws.step(field, &mut x, h).is_err() || x.iter().any(|v| !v.is_finite()) {
                    return EntryTime {
                        time: None,
                        diverged: true,
                    };
                }
                if target.contains(&x) {
                    let t = if k == n { t_max } else { k as f64 * step };
                    return EntryTime {
                        time: Some(t),
                        diverged: false,
                    };
                }
            }
            EntryTime {
                time: None,
                diverged: false,
            }
        })
        .collect())
}

fn psi1(x: &[f64]) -> f64 {
    x[0] * x[0] + 2.0 * x[1] + x[1].powi(3)
}

fn psi2(x: &[f64]) -> f64 {
    x[0] + x[1].sin() + x[0].powi(3)
}

const EXAMPLE1_LAMBDAS: [f64; 2] = [-1.0, 2.5];

/// `dx/dt = [grad Psi(x)]^{-1} diag(-1, 2.5) Psi(x)`, whose principal
/// eigenfunctions are `psi1 = x1^2 + 2 x2 + x2^3` and
/// `psi2 = x1 + sin x2 + x1^3`.
pub fn example1_system() -> SystemModel {
    let domain = BoxRegion {
        lo: vec![-0.5, -1.5],
        hi: vec![2.5, 1.5],
    };
    SystemModel::new("example1", domain, |x: &[f64], dx: &mut [f64]| {
        let (x1, x2) = (x[0], x[1]);
        // grad Psi rows: d psi1, d psi2
        let (a, b) = (2.0 * x1, 2.0 + 3.0 * x2 * x2);
        let (c, d) = (1.0 + 3.0 * x1 * x1, x2.cos());
        let det = a * d - b * c;
        if !(det.abs() >= SINGULAR_JACOBIAN_THRESHOLD) {
            return Err(Error::SingularJacobian { det, state: x.to_vec() });
        }
        let r1 = EXAMPLE1_LAMBDAS[0] * psi1(x);
        let r2 = EXAMPLE1_LAMBDAS[1] * psi2(x);
        dx[0] = (d * r1 - b * r2) / det;
        dx[1] = (-c * r1 + a * r2) / det;
        Ok(())
    })
}

/// Damped Duffing oscillator with stable foci at `(+-1, 0)`.
pub fn duffing_system() -> SystemModel {
    let domain = BoxRegion {
        lo: vec![-2.0, -2.0],
        hi: vec![2.0, 2.0],
    };
    SystemModel::new("duffing", domain, |x: &[f64], dx: &mut [f64]| {
        dx[0] = x[1];
        dx[1] = -0.5 * x[1] - x[0] * (x[0] * x[0] - 1.0);
        Ok(())
    })
}

/// Roessler system with `a = b = 0.2`, `c = 5.7`.
pub fn roessler_system() -> SystemModel {
    let domain = BoxRegion {
        lo: vec![-15.0, -15.0, -2.0],
        hi: vec![15.0, 15.0, 25.0],
    };
    SystemModel::new("roessler", domain, |x: &[f64], dx: &mut [f64]| {
        dx[0] = -x[1] - x[2];
        dx[1] = x[0] + 0.2 * x[1];
        dx[2] = 0.2 + x[2] * (x[0] - 5.7);
        Ok(())
    })
}

pub fn system_by_name(name: &str) -> Result<SystemModel> {
    match name {
        "example1" => Ok(example1_system()),
        "duffing" => Ok(duffing_system()),
        "roessler" => Ok(roessler_system()),
        other => Err(Error::UnknownSystem(other.to_string())),
    }
}

type ScalarFn = fn(&[f64]) -> f64;

/// A closed-form eigenpair: `psi(s_t(x)) = exp(lambda t) psi(x)`.
#[derive(Clone)]
pub struct AnalyticEigenpair {
    pub name: &'static str,
    pub lambda: Complex64,
    psi: ScalarFn,
}

impl std::fmt::Debug for AnalyticEigenpair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnalyticEigenpair")
            .field("name", &self.name)
            .field("lambda", &self.lambda)
            .finish()
    }
}

impl AnalyticEigenpair {
    pub fn psi(&self, x: &[f64]) -> f64 {
        (self.psi)(x)
    }
}

impl Eigenfunction for AnalyticEigenpair {
    fn lambda(&self) -> Complex64 {
        self.lambda
    }

    fn eval(&self, x: &[f64]) -> Complex64 {
        Complex64::new((self.psi)(x), 0.0)
    }
}

pub fn analytic_eigenpairs_example1() -> Vec<AnalyticEigenpair> {
    vec![
        AnalyticEigenpair {
            name: "psi1",
            lambda: Complex64::new(EXAMPLE1_LAMBDAS[0], 0.0),
            psi: psi1,
        },
        AnalyticEigenpair {
            name: "psi2",
            lambda: Complex64::new(EXAMPLE1_LAMBDAS[1], 0.0),
            psi: psi2,
        },
    ]
}
