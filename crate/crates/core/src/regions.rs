//! Initial sets, target sets and working domains.
//!
//! A [`Region`] is a compact subset of state space given as an axis-aligned
//! box, a sublevel set of a scalar field clipped to a bounding box, or a
//! finite union of regions. Regions answer membership queries and produce
//! i.i.d. uniform samples; the sampled extrema in [`crate::extrema`] rely on
//! that uniformity.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, substream};

/// Rejection sampling gives up when, after this many proposals, fewer than
/// [`MIN_ACCEPTANCE_RATE`] of them were accepted.
pub const REJECTION_PROBE_BUDGET: u64 = 1_000_000;
pub const MIN_ACCEPTANCE_RATE: f64 = 1e-4;

/// Proposals per member used to weight the members of a union.
const UNION_VOLUME_PROPOSALS: usize = 10_000;
const BOUNDARY_CHECK_SAMPLES: usize = 4_096;
const SAMPLE_CHUNK: usize = 512;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let b = BoxRegion { lo, hi };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.is_empty() {
            return Err(Error::InvalidRegion("box has dimension zero".into()));
        }
        if self.lo.len() != self.hi.len() {
            return Err(Error::InvalidRegion(format!(
                "box bounds have lengths {} and {}",
                self.lo.len(),
                self.hi.len()
            )));
        }
        for (i, (l, h)) in self.lo.iter().zip(&self.hi).enumerate() {
            if !l.is_finite() || !h.is_finite() || l > h {
                return Err(Error::InvalidRegion(format!(
                    "box coordinate {i} has bounds [{l}, {h}]"
                )));
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.lo.len()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    /// True if `other` lies entirely inside `self`.
    pub fn encloses(&self, other: &BoxRegion) -> bool {
        self.dimension() == other.dimension()
            && self.lo.iter().zip(&other.lo).all(|(a, b)| a <= b)
            && self.hi.iter().zip(&other.hi).all(|(a, b)| a >= b)
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    /// The box scaled by `factor` about its center.
    pub fn inflate(&self, factor: f64) -> BoxRegion {
        let (lo, hi) = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| {
                let c = 0.5 * (l + h);
                let r = 0.5 * (h - l) * factor;
                (c - r, c + r)
            })
            .unzip();
        BoxRegion { lo, hi }
    }

    pub(crate) fn sample_point(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| l + (h - l) * rng.random::<f64>())
            .collect()
    }
}

/// The two-dimensional bump used to shape the Example 1 sets:
///
/// `h(x) = -(1 - (x1 - x1c)/3 + a*v^5 + b*u^3) * exp(-(u^2 + v^2))`
/// with `u = (x1 - x1c)/s` and `v = (x2 - x2c)/s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpField {
    pub x1c: f64,
    pub x2c: f64,
    pub a: f64,
    pub b: f64,
    pub s: f64,
}

impl BumpField {
    pub fn new(x1c: f64, x2c: f64, a: f64, b: f64, s: f64) -> Result<Self> {
        let f = BumpField { x1c, x2c, a, b, s };
        f.validate()?;
        Ok(f)
    }

    fn validate(&self) -> Result<()> {
        let all = [self.x1c, self.x2c, self.a, self.b, self.s];
        if all.iter().any(|v| !v.is_finite()) || self.s == 0.0 {
            return Err(Error::InvalidRegion(format!(
                "bump field parameters must be finite with s != 0, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let u = (x[0] - self.x1c) / self.s;
        let v = (x[1] - self.x2c) / self.s;
        let poly = 1.0 - (x[0] - self.x1c) / 3.0 + self.a * v.powi(5) + self.b * u.powi(3);
        -poly * (-(u * u + v * v)).exp()
    }

    /// A box around the bump center that contains the sublevel set for the
    /// Example 1 thresholds (the exponential factor is below 1e-4 beyond it
    /// for moderate `a`, `b`).
    pub fn default_bounding_box(&self, half_widths_in_s: f64) -> BoxRegion {
        let r = half_widths_in_s * self.s.abs();
        BoxRegion {
            lo: vec![self.x1c - r, self.x2c - r],
            hi: vec![self.x1c + r, self.x2c + r],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarField {
    Bump(BumpField),
}

impl ScalarField {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ScalarField::Bump(b) => b.eval(x),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            ScalarField::Bump(_) => 2,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ScalarField::Bump(b) => b.validate(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SublevelRegion {
    pub field: ScalarField,
    pub threshold: f64,
    pub bounding_box: BoxRegion,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Region {
    Box(BoxRegion),
    Sublevel(SublevelRegion),
    Union { members: Vec<Region> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extremum {
    Sup,
    Inf,
}

#[derive(Default)]
struct RejectionStats {
    proposals: u64,
    accepted: u64,
}

impl RejectionStats {
    fn record(&mut self, accepted: bool) -> Result<()> {
        self.proposals += 1;
        if accepted {
            self.accepted += 1;
        }
        if self.proposals >= REJECTION_PROBE_BUDGET {
            let rate = self.accepted as f64 / self.proposals as f64;
            if rate < MIN_ACCEPTANCE_RATE {
                return Err(Error::InfeasibleRegion {
                    rate,
                    proposals: self.proposals,
                });
            }
        }
        Ok(())
    }
}

impl Region {
    pub fn from_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Region> {
        Ok(Region::Box(BoxRegion::new(lo, hi)?))
    }

    pub fn sublevel(field: ScalarField, threshold: f64, bounding_box: BoxRegion) -> Result<Region> {
        let r = Region::Sublevel(SublevelRegion {
            field,
            threshold,
            bounding_box,
        });
        r.validate()?;
        Ok(r)
    }

    pub fn union(members: Vec<Region>) -> Result<Region> {
        let r = Region::Union { members };
        r.validate()?;
        Ok(r)
    }

    /// `{x : h(x) <= threshold}` for a bump field, with the bounding box at
    /// three bump widths around its center.
    pub fn bump_sublevel(field: BumpField, threshold: f64) -> Result<Region> {
        field.validate()?;
        let bbox = field.default_bounding_box(3.0);
        Region::sublevel(ScalarField::Bump(field), threshold, bbox)
    }

    pub fn dimension(&self) -> usize {
        match self {
            Region::Box(b) => b.dimension(),
            Region::Sublevel(s) => s.bounding_box.dimension(),
            Region::Union { members } => members.first().map_or(0, Region::dimension),
        }
    }

    /// Checks the structural invariants. Deserialized regions must pass this
    /// before use.
    pub fn validate(&self) -> Result<()> {
        match self {
            Region::Box(b) => b.validate(),
            Region::Sublevel(s) => {
                s.bounding_box.validate()?;
                s.field.validate()?;
                if !s.threshold.is_finite() {
                    return Err(Error::InvalidRegion("sublevel threshold is not finite".into()));
                }
                if s.field.dimension() != s.bounding_box.dimension() {
                    return Err(Error::InvalidRegion(format!(
                        "field has dimension {} but bounding box has dimension {}",
                        s.field.dimension(),
                        s.bounding_box.dimension()
                    )));
                }
                check_boundary_outside(s)
            }
            Region::Union { members } => {
                let first = members
                    .first()
                    .ok_or_else(|| Error::InvalidRegion("union has no members".into()))?;
                let dim = first.dimension();
                for m in members {
                    m.validate()?;
                    if m.dimension() != dim {
                        return Err(Error::InvalidRegion(format!(
                            "union mixes dimensions {dim} and {}",
                            m.dimension()
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// Closed-set membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Box(b) => b.contains(x),
            Region::Sublevel(s) => s.bounding_box.contains(x) && s.field.eval(x) <= s.threshold,
            Region::Union { members } => members.iter().any(|m| m.contains(x)),
        }
    }

    /// A box containing the region.
    pub fn bounding_box(&self) -> BoxRegion {
        match self {
            Region::Box(b) => b.clone(),
            Region::Sublevel(s) => s.bounding_box.clone(),
            Region::Union { members } => {
                let mut lo = vec![f64::INFINITY; self.dimension()];
                let mut hi = vec![f64::NEG_INFINITY; self.dimension()];
                for m in members {
                    let b = m.bounding_box();
                    for i in 0..lo.len() {
                        lo[i] = lo[i].min(b.lo[i]);
                        hi[i] = hi[i].max(b.hi[i]);
                    }
                }
                BoxRegion { lo, hi }
            }
        }
    }

    /// Monte Carlo volume estimate (exact for boxes).
    pub fn estimate_volume(&self, seed: u64) -> f64 {
        match self {
            Region::Box(b) => b.volume(),
            Region::Sublevel(s) => {
                let mut rng = substream(seed, 0);
                let hits = (0..UNION_VOLUME_PROPOSALS)
                    .filter(|_| {
                        let x = s.bounding_box.sample_point(&mut rng);
                        s.field.eval(&x) <= s.threshold
                    })
                    .count();
                s.bounding_box.volume() * hits as f64 / UNION_VOLUME_PROPOSALS as f64
            }
            Region::Union { members } => members
                .iter()
                .enumerate()
                .map(|(i, m)| m.estimate_volume(derive_seed(seed, &format!("member-{i}"))))
                .sum(),
        }
    }

    /// `n` i.i.d. uniform samples, deterministic in `seed`.
    ///
    /// Boxes are sampled directly, sublevel sets by rejection from their
    /// bounding box, and unions by drawing a member in proportion to its
    /// estimated volume and thinning points covered by several members.
    pub fn sample_iid(&self, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let weights = self.member_weights(seed)?;
        let n_chunks = n.div_ceil(SAMPLE_CHUNK);
        let chunks: Vec<Vec<Vec<f64>>> = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = substream(seed, c as u64);
                let mut stats = RejectionStats::default();
                let count = SAMPLE_CHUNK.min(n - c * SAMPLE_CHUNK);
                (0..count)
                    .map(|_| self.draw(&mut rng, &mut stats, weights.as_ref()))
                    .collect()
            })
            .collect::<Result<_>>()?;
        Ok(chunks.into_iter().flatten().collect())
    }

    fn member_weights(&self, seed: u64) -> Result<Option<UnionWeights>> {
        let Region::Union { members } = self else {
            return Ok(None);
        };
        let vols: Vec<f64> = members
            .iter()
            .enumerate()
            .map(|(i, m)| m.estimate_volume(derive_seed(seed, &format!("weight-{i}"))))
            .collect();
        let total: f64 = vols.iter().sum();
        if total <= 0.0 {
            return Err(Error::InfeasibleRegion {
                rate: 0.0,
                proposals: (UNION_VOLUME_PROPOSALS * members.len()) as u64,
            });
        }
        let mut acc = 0.0;
        let cumulative = vols
            .iter()
            .map(|v| {
                acc += v / total;
                acc
            })
            .collect();
        let children = members
            .iter()
            .enumerate()
            .map(|(i, m)| m.member_weights(derive_seed(seed, &format!("child-{i}"))))
            .collect::<Result<_>>()?;
        Ok(Some(UnionWeights { cumulative, children }))
    }

    fn draw(
        &self,
        rng: &mut ChaCha8Rng,
        stats: &mut RejectionStats,
        weights: Option<&UnionWeights>,
    ) -> Result<Vec<f64>> {
        match self {
            Region::Box(b) => Ok(b.sample_point(rng)),
            Region::Sublevel(s) => loop {
                let x = s.bounding_box.sample_point(rng);
                let ok = s.field.eval(&x) <= s.threshold;
                stats.record(ok)?;
                if ok {
                    return Ok(x);
                }
            },
            Region::Union { members } => {
                let w = weights.expect("union weights are computed before drawing");
                loop {
                    let u: f64 = rng.random();
                    let idx = w.cumulative.iter().position(|c| u < *c).unwrap_or(members.len() - 1);
                    let x = members[idx].draw(rng, stats, w.children[idx].as_ref())?;
                    let cover = members.iter().filter(|m| m.contains(&x)).count().max(1);
                    let keep = cover == 1 || rng.random::<f64>() < 1.0 / cover as f64;
                    stats.record(keep)?;
                    if keep {
                        return Ok(x);
                    }
                }
            }
        }
    }
}

/// Cumulative member-selection weights of a union, with the weights of any
/// nested unions.
struct UnionWeights {
    cumulative: Vec<f64>,
    children: Vec<Option<UnionWeights>>,
}

/// A sample on the bounding-box boundary that lies inside the sublevel set
/// means the box clips the set.
fn check_boundary_outside(s: &SublevelRegion) -> Result<()> {
    let b = &s.bounding_box;
    let dim = b.dimension();
    let mut rng = substream(0xB0_0D_A7, 0);
    for k in 0..BOUNDARY_CHECK_SAMPLES {
        let mut x = b.sample_point(&mut rng);
        let axis = k % dim;
        x[axis] = if (k / dim).is_multiple_of(2) {
            b.lo[axis]
        } else {
            b.hi[axis]
        };
        if s.field.eval(&x) <= s.threshold {
            return Err(Error::InvalidRegion(format!(
                "bounding box clips the sublevel set: boundary point {x:?} is inside"
            )));
        }
    }
    Ok(())
}

/// Fraction of `values` within `eps` of their own extremum, floored at
/// `1/len`. This is the plug-in estimate of the measure of the
/// `eps`-optimal region.
pub fn eps_measure_from_values(values: &[f64], eps: f64, which: Extremum) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let count = match which {
        Extremum::Sup => {
            let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            values.iter().filter(|v| top - **v <= eps).count()
        }
        Extremum::Inf => {
            let bottom = values.iter().copied().fold(f64::INFINITY, f64::min);
            values.iter().filter(|v| **v - bottom <= eps).count()
        }
    };
    (count as f64 / n).max(1.0 / n)
}

/// Plug-in estimate of the measure of `{x in region : |ext f - f(x)| <= eps}`
/// from `n_probe` uniform probes.
pub fn estimate_eps_measure<F>(
    region: &Region,
    f: F,
    eps: f64,
    which: Extremum,
    n_probe: usize,
    seed: u64,
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if n_probe < 1000 {
        return Err(Error::InvalidInput(format!(
            "estimate_eps_measure needs at least 1000 probes, got {n_probe}"
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    let probes = region.sample_iid(n_probe, seed)?;
    let values: Vec<f64> = probes.par_iter().map(|x| f(x)).collect();
    Ok(eps_measure_from_values(&values, eps, which))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box() -> Region {
        Region::from_box(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()
    }

    fn example1_initial() -> Region {
        Region::bump_sublevel(BumpField::new(0.05, 1.15, 1.0, 2.0, 0.05).unwrap(), -0.1).unwrap()
    }

    fn example1_target() -> Region {
        Region::bump_sublevel(BumpField::new(1.85, -0.75, 5.0, 8.0, 0.1).unwrap(), -0.7).unwrap()
    }

    #[test]
    fn box_membership_is_closed() {
        let b = Region::from_box(vec![1.0, 1.0], vec![1.1, 1.1]).unwrap();
        assert!(b.contains(&[1.05, 1.05]));
        assert!(b.contains(&[1.0, 1.1]));
        assert!(!b.contains(&[1.0, 1.1000001]));
    }

    #[test]
    fn bump_center_value() {
        let f = BumpField::new(1.85, -0.75, 5.0, 8.0, 0.1).unwrap();
        assert!((f.eval(&[1.85, -0.75]) + 1.0).abs() < 1e-15);
        assert!(example1_target().contains(&[1.85, -0.75]));
    }

    #[test]
    fn invalid_regions_are_rejected() {
        assert!(BoxRegion::new(vec![1.0], vec![0.0]).is_err());
        assert!(BoxRegion::new(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(BumpField::new(0.0, 0.0, 1.0, 1.0, 0.0).is_err());
        assert!(Region::union(vec![]).is_err());
        // A box that cuts through the set fails the boundary check.
        let f = BumpField::new(0.0, 0.0, 1.0, 2.0, 0.05).unwrap();
        let tight = BoxRegion::new(vec![-0.01, -0.01], vec![0.01, 0.01]).unwrap();
        assert!(Region::sublevel(ScalarField::Bump(f), -0.1, tight).is_err());
    }

    #[test]
    fn box_sample_mean() {
        let pts = unit_box().sample_iid(10_000, 3).unwrap();
        assert_eq!(pts.len(), 10_000);
        for d in 0..2 {
            let mean = pts.iter().map(|p| p[d]).sum::<f64>() / pts.len() as f64;
            assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
        }
    }

    #[test]
    fn sublevel_samples_are_members() {
        for r in [example1_initial(), example1_target()] {
            let pts = r.sample_iid(2_000, 11).unwrap();
            assert!(pts.iter().all(|p| r.contains(p)));
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let r = example1_initial();
        assert_eq!(r.sample_iid(1500, 5).unwrap(), r.sample_iid(1500, 5).unwrap());
        assert_ne!(r.sample_iid(10, 5).unwrap(), r.sample_iid(10, 6).unwrap());
    }

    #[test]
    fn empty_sublevel_is_infeasible() {
        let f = BumpField::new(0.0, 0.0, 1.0, 2.0, 0.05).unwrap();
        // h >= -1.x everywhere, so a threshold of -10 is never met.
        let r = Region::sublevel(ScalarField::Bump(f), -10.0, f.default_bounding_box(3.0)).unwrap();
        assert!(matches!(r.sample_iid(10, 0), Err(Error::InfeasibleRegion { .. })));
    }

    #[test]
    fn union_is_uniform_over_overlap() {
        // [0,2]x[0,1] as two overlapping boxes; the overlap [1,1.5] must not
        // be oversampled.
        let u = Region::union(vec![
            Region::from_box(vec![0.0, 0.0], vec![1.5, 1.0]).unwrap(),
            Region::from_box(vec![1.0, 0.0], vec![2.0, 1.0]).unwrap(),
        ])
        .unwrap();
        let pts = u.sample_iid(40_000, 9).unwrap();
        let frac = pts.iter().filter(|p| p[0] >= 1.0 && p[0] <= 1.5).count() as f64 / 40_000.0;
        let sd = (0.25f64 * 0.75 / 40_000.0).sqrt();
        assert!((frac - 0.25).abs() < 4.0 * sd, "overlap fraction {frac}");
        assert!(pts.iter().all(|p| u.contains(p)));
    }

    #[test]
    fn eps_measure_examples() {
        let line = Region::from_box(vec![0.0], vec![1.0]).unwrap();
        let c = estimate_eps_measure(&line, |_| 3.0, 0.1, Extremum::Sup, 2000, 1).unwrap();
        assert_eq!(c, 1.0);
        let p = estimate_eps_measure(&line, |x| x[0], 0.1, Extremum::Sup, 10_000, 1).unwrap();
        assert!((p - 0.1).abs() < 0.02, "{p}");
        let sym = Region::from_box(vec![-1.0], vec![1.0]).unwrap();
        let q = estimate_eps_measure(&sym, |x| x[0] * x[0], 0.19, Extremum::Sup, 10_000, 2).unwrap();
        assert!((q - 0.1).abs() < 0.02, "{q}");
        assert!(estimate_eps_measure(&line, |x| x[0], 0.1, Extremum::Sup, 999, 1).is_err());
    }

    #[test]
    fn region_json_shape() {
        let r = example1_target();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["type"], "sublevel");
        assert_eq!(v["field"]["kind"], "bump");
        assert_eq!(v["field"]["s"], 0.1);
        let back: Region = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
        let b: Region = serde_json::from_str(r#"{"type":"box","lo":[0,0],"hi":[1,2]}"#).unwrap();
        assert!(b.contains(&[0.5, 1.5]));
    }
}
