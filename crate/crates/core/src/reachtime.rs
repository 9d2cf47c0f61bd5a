//! Reach-time intervals from eigenpair magnitude and phase constraints.
//!
//! For an eigenpair `(lambda, psi)` any transition `X0 -> XF` at time `T`
//! must satisfy
//!
//! ```text
//! Re(lambda) T in [-L(XF, X0), L(X0, XF)]
//! Im(lambda) T in [-A(XF, X0), A(X0, XF)] + 2 m pi  for some integer m
//! ```
//!
//! Intersecting over eigenpairs and their products gives a necessary
//! condition for reachability. An empty intersection certifies that `XF`
//! is not reached within the horizon.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RE_FLOOR: f64 = 1e-9;
pub const IM_FLOOR: f64 = 1e-9;
/// Intervals closer than this are merged.
pub const MERGE_GAP: f64 = 1e-12;
pub const MAX_PHASE_WINDOWS: u64 = 1_000_000;
pub const DEFAULT_MAX_WEIGHT: u32 = 3;

/// A sorted, disjoint union of closed intervals inside `[0, t_max]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawIntervalSet")]
pub struct TimeIntervalSet {
    t_max: f64,
    intervals: Vec<[f64; 2]>,
}

#[derive(Deserialize)]
struct RawIntervalSet {
    t_max: f64,
    intervals: Vec<[f64; 2]>,
}

impl TryFrom<RawIntervalSet> for TimeIntervalSet {
    type Error = Error;

    fn try_from(raw: RawIntervalSet) -> Result<Self> {
        if !(raw.t_max > 0.0 && raw.t_max.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "t_max must be positive, got {}",
                raw.t_max
            )));
        }
        Ok(TimeIntervalSet::new(raw.t_max, raw.intervals))
    }
}

impl TimeIntervalSet {
    /// Clamps to `[0, t_max]`, drops inverted intervals, sorts and merges.
    pub fn new(t_max: f64, intervals: impl IntoIterator<Item = [f64; 2]>) -> Self {
        let mut v: Vec<[f64; 2]> = intervals
            .into_iter()
            .filter(|[lo, hi]| !lo.is_nan() && !hi.is_nan())
            .map(|[lo, hi]| [lo.max(0.0), hi.min(t_max)])
            .filter(|[lo, hi]| lo <= hi)
            .collect();
        v.sort_by(|a, b| a[0].total_cmp(&b[0]));
        let mut merged: Vec<[f64; 2]> = Vec::with_capacity(v.len());
        for iv in v {
            match merged.last_mut() {
                Some(last) if iv[0] - last[1] < MERGE_GAP => last[1] = last[1].max(iv[1]),
                _ => merged.push(iv),
            }
        }
        TimeIntervalSet {
            t_max,
            intervals: merged,
        }
    }

    pub fn empty(t_max: f64) -> Self {
        TimeIntervalSet {
            t_max,
            intervals: Vec::new(),
        }
    }

    pub fn full(t_max: f64) -> Self {
        TimeIntervalSet {
            t_max,
            intervals: vec![[0.0, t_max]],
        }
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn intervals(&self) -> &[[f64; 2]] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, t: f64) -> bool {
        self.intervals.iter().any(|[lo, hi]| *lo <= t && t <= *hi)
    }

    /// Smallest single interval covering the set.
    pub fn hull(&self) -> Option<[f64; 2]> {
        Some([self.intervals.first()?[0], self.intervals.last()?[1]])
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|[lo, hi]| hi - lo).sum()
    }

    pub fn intersect(&self, other: &TimeIntervalSet) -> TimeIntervalSet {
        let t_max = self.t_max.min(other.t_max);
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() && j < other.intervals.len() {
            let [a0, a1] = self.intervals[i];
            let [b0, b1] = other.intervals[j];
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if lo <= hi {
                out.push([lo, hi]);
            }
            if a1 < b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        TimeIntervalSet::new(t_max, out)
    }

    pub fn union(&self, other: &TimeIntervalSet) -> TimeIntervalSet {
        TimeIntervalSet::new(
            self.t_max.max(other.t_max),
            self.intervals.iter().chain(&other.intervals).copied(),
        )
    }

    /// Widens every interval by `by` on both sides, staying in `[0, t_max]`.
    pub fn inflate(&self, by: f64) -> TimeIntervalSet {
        TimeIntervalSet::new(self.t_max, self.intervals.iter().map(|[lo, hi]| [lo - by, hi + by]))
    }

    pub fn is_subset_of(&self, other: &TimeIntervalSet) -> bool {
        self.intervals
            .iter()
            .all(|[lo, hi]| other.intervals.iter().any(|[a, b]| a <= lo && hi <= b))
    }
}

/// Per-eigenpair inputs to the interval rules.
///
/// `l_fwd = L(X0, XF)`, `l_bwd = L(XF, X0)`, and likewise for `a_*`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenpairQuantities {
    pub lambda: Complex64,
    pub l_fwd: f64,
    pub l_bwd: f64,
    pub a_fwd: f64,
    pub a_bwd: f64,
}

impl EigenpairQuantities {
    pub fn has_phase(&self) -> bool {
        self.lambda.im.abs() > IM_FLOOR
    }

    /// Quantities of `prod psi_i^{alpha_i}`: every field is the
    /// alpha-weighted sum of the per-pair fields.
    pub fn weighted(pairs: &[EigenpairQuantities], alphas: &[f64]) -> EigenpairQuantities {
        let mut q = EigenpairQuantities {
            lambda: Complex64::new(0.0, 0.0),
            l_fwd: 0.0,
            l_bwd: 0.0,
            a_fwd: 0.0,
            a_bwd: 0.0,
        };
        for (p, &a) in pairs.iter().zip(alphas) {
            if a == 0.0 {
                continue;
            }
            q.lambda += p.lambda * a;
            q.l_fwd += a * p.l_fwd;
            q.l_bwd += a * p.l_bwd;
            q.a_fwd += a * p.a_fwd;
            q.a_bwd += a * p.a_bwd;
        }
        q
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComboWeight {
    pub alphas: Vec<f64>,
}

/// Unit vectors, then every integer weight vector with
/// `1 <= sum alpha <= max_weight` grouped by total.
pub fn enumerate_combos(m_pairs: usize, max_weight: u32) -> Vec<ComboWeight> {
    fn rec(slots: usize, total: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == slots {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=total).rev() {
            prefix.push(first);
            rec(slots, total - first, prefix, out);
            prefix.pop();
        }
    }
    let mut all: Vec<Vec<u32>> = (0..m_pairs)
        .map(|i| (0..m_pairs).map(|j| u32::from(i == j)).collect())
        .collect();
    for total in 2..=max_weight {
        let mut level = Vec::new();
        rec(m_pairs, total, &mut Vec::new(), &mut level);
        all.extend(level);
    }
    all.into_iter()
        .map(|a| ComboWeight {
            alphas: a.into_iter().map(f64::from).collect(),
        })
        .collect()
}

/// Magnitude rule: `Re(lambda) T in [-l_bwd, l_fwd]`.
pub fn interval_mag(q: &EigenpairQuantities, t_max: f64) -> TimeIntervalSet {
    let re = q.lambda.re;
    if re.abs() <= RE_FLOOR {
        return if -q.l_bwd <= 0.0 && 0.0 <= q.l_fwd {
            TimeIntervalSet::full(t_max)
        } else {
            TimeIntervalSet::empty(t_max)
        };
    }
    let (lo, hi) = if re > 0.0 {
        (-q.l_bwd / re, q.l_fwd / re)
    } else {
        (q.l_fwd / re, -q.l_bwd / re)
    };
    TimeIntervalSet::new(t_max, [[lo, hi]])
}

/// Phase rule: `Im(lambda) T in [-a_bwd, a_fwd] + 2 m pi`, unioned over
/// every integer `m` whose window meets `[0, t_max]`.
pub fn interval_phase(q: &EigenpairQuantities, t_max: f64) -> Result<TimeIntervalSet> {
    if !q.has_phase() {
        return Ok(TimeIntervalSet::full(t_max));
    }
    let (lo_a, hi_a) = (-q.a_bwd, q.a_fwd);
    if lo_a > hi_a {
        return Ok(TimeIntervalSet::empty(t_max));
    }
    if hi_a - lo_a >= 2.0 * PI {
        return Ok(TimeIntervalSet::full(t_max));
    }
    let im = q.lambda.im;
    let two_pi = 2.0 * PI;
    // window m in phase space: [lo_a + 2 m pi, hi_a + 2 m pi]; it must meet
    // [min(0, im t_max), max(0, im t_max)]
    let (p0, p1) = if im > 0.0 { (0.0, im * t_max) } else { (im * t_max, 0.0) };
    let m_lo = ((p0 - hi_a) / two_pi).ceil();
    let m_hi = ((p1 - lo_a) / two_pi).floor();
    if m_hi < m_lo {
        return Ok(TimeIntervalSet::empty(t_max));
    }
    let count = m_hi - m_lo + 1.0;
    if count > MAX_PHASE_WINDOWS as f64 {
        return Err(Error::HorizonTooLong {
            count: count as u64,
            limit: MAX_PHASE_WINDOWS,
        });
    }
    let mut windows = Vec::with_capacity(count as usize);
    let mut m = m_lo;
    while m <= m_hi {
        let a = (lo_a + two_pi * m) / im;
        let b = (hi_a + two_pi * m) / im;
        windows.push(if a <= b { [a, b] } else { [b, a] });
        m += 1.0;
    }
    Ok(TimeIntervalSet::new(t_max, windows))
}

pub fn combine_eigenpair(q: &EigenpairQuantities, t_max: f64) -> Result<TimeIntervalSet> {
    let mag = interval_mag(q, t_max);
    if mag.is_empty() {
        return Ok(mag);
    }
    Ok(mag.intersect(&interval_phase(q, t_max)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// The necessary condition fails: no time in the horizon is consistent.
    UnreachableCertified,
    /// Some times remain; reachability is neither shown nor excluded.
    InconclusiveWithBound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComboRecord {
    pub alphas: Vec<f64>,
    pub lambda: Complex64,
    pub mag: Vec<[f64; 2]>,
    pub phase: Vec<[f64; 2]>,
    pub combined: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationOutcome {
    pub final_set: TimeIntervalSet,
    pub verdict: Verdict,
    pub combos: Vec<ComboRecord>,
}

/// Crude horizon: ten times the slowest magnitude time scale.
pub fn default_t_max(pairs: &[EigenpairQuantities]) -> Option<f64> {
    let min_re = pairs
        .iter()
        .map(|q| q.lambda.re.abs())
        .filter(|r| *r > RE_FLOOR)
        .fold(f64::INFINITY, f64::min);
    min_re.is_finite().then(|| 10.0 / min_re)
}

/// Intersects `combine_eigenpair` over every combination.
pub fn verify(pairs: &[EigenpairQuantities], combos: &[ComboWeight], t_max: f64) -> Result<VerificationOutcome> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("verification needs at least one eigenpair".into()));
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidInput(format!("t_max must be positive, got {t_max}")));
    }
    let mut final_set = TimeIntervalSet::full(t_max);
    let mut records = Vec::with_capacity(combos.len());
    for w in combos {
        if w.alphas.len() != pairs.len() {
            return Err(Error::DimensionMismatch {
                expected: pairs.len(),
                got: w.alphas.len(),
            });
        }
        if !w.alphas.iter().any(|a| *a > 0.0) || w.alphas.iter().any(|a| *a < 0.0) {
            return Err(Error::InvalidInput(format!(
                "invalid combination weights {:?}",
                w.alphas
            )));
        }
        let q = EigenpairQuantities::weighted(pairs, &w.alphas);
        let mag = interval_mag(&q, t_max);
        let phase = interval_phase(&q, t_max)?;
        let combined = mag.intersect(&phase);
        final_set = final_set.intersect(&combined);
        records.push(ComboRecord {
            alphas: w.alphas.clone(),
            lambda: q.lambda,
            mag: mag.intervals().to_vec(),
            phase: phase.intervals().to_vec(),
            combined: combined.intervals().to_vec(),
        });
    }
    let verdict = if final_set.is_empty() {
        Verdict::UnreachableCertified
    } else {
        Verdict::InconclusiveWithBound
    };
    Ok(VerificationOutcome {
        final_set,
        verdict,
        combos: records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(re: f64, im: f64, l_fwd: f64, l_bwd: f64, a_fwd: f64, a_bwd: f64) -> EigenpairQuantities {
        EigenpairQuantities {
            lambda: Complex64::new(re, im),
            l_fwd,
            l_bwd,
            a_fwd,
            a_bwd,
        }
    }

    #[test]
    fn normalization() {
        let s = TimeIntervalSet::new(5.0, [[3.0, 4.0], [-1.0, 1.0], [0.5, 2.0], [4.0, 9.0], [2.5, 2.0]]);
        assert_eq!(s.intervals(), &[[0.0, 2.0], [3.0, 5.0]]);
        let touching = TimeIntervalSet::new(5.0, [[0.0, 1.0], [1.0 + 1e-13, 2.0]]);
        assert_eq!(touching.intervals().len(), 1);
    }

    #[test]
    fn set_operations() {
        let a = TimeIntervalSet::new(10.0, [[0.0, 2.0], [4.0, 6.0]]);
        let b = TimeIntervalSet::new(10.0, [[1.0, 5.0]]);
        assert_eq!(a.intersect(&b).intervals(), &[[1.0, 2.0], [4.0, 5.0]]);
        assert_eq!(a.union(&b).intervals(), &[[0.0, 6.0]]);
        assert_eq!(a.inflate(1.0).intervals(), &[[0.0, 7.0]]);
        assert!(a.intersect(&b).is_subset_of(&a));
        assert_eq!(a.hull(), Some([0.0, 6.0]));
        assert!(TimeIntervalSet::empty(1.0).hull().is_none());
    }

    #[test]
    fn magnitude_examples() {
        assert_eq!(
            interval_mag(&q(1.0, 0.0, 1.0, -1.0, 0.0, 0.0), 10.0).intervals(),
            &[[1.0, 1.0]]
        );
        assert_eq!(
            interval_mag(&q(2.0, 0.0, 0.0, 0.0, 0.0, 0.0), 10.0).intervals(),
            &[[0.0, 0.0]]
        );
        // decaying: |psi| must fall by a factor between e^-1 and e^-3
        assert_eq!(
            interval_mag(&q(-1.0, 0.0, -1.0, 3.0, 0.0, 0.0), 10.0).intervals(),
            &[[1.0, 3.0]]
        );
        assert_eq!(
            interval_mag(&q(0.0, 1.0, 0.5, 0.5, 0.0, 0.0), 10.0).intervals(),
            &[[0.0, 10.0]]
        );
        assert!(interval_mag(&q(0.0, 1.0, -0.5, 1.0, 0.0, 0.0), 10.0).is_empty());
        assert!(interval_mag(&q(1.0, 0.0, -2.0, 1.0, 0.0, 0.0), 10.0).is_empty());
    }

    #[test]
    fn phase_examples() {
        let rot = q(0.0, 1.0, 0.0, 0.0, PI / 2.0, -PI / 2.0);
        let s = interval_phase(&rot, 10.0).unwrap();
        assert_eq!(s.intervals().len(), 2);
        assert!((s.intervals()[0][0] - PI / 2.0).abs() < 1e-12);
        assert!((s.intervals()[1][0] - 2.5 * PI).abs() < 1e-12);
        assert_eq!(s.intervals()[0][0], s.intervals()[0][1]);

        let inconsistent = q(0.0, 1.0, 0.0, 0.0, 0.1, -0.3);
        assert!(interval_phase(&inconsistent, 10.0).unwrap().is_empty());

        // clockwise rotation reaches phase -pi/2 at t = pi/2
        let cw = q(0.0, -1.0, 0.0, 0.0, -PI / 2.0, PI / 2.0);
        let s = interval_phase(&cw, 10.0).unwrap();
        assert!((s.intervals()[0][0] - PI / 2.0).abs() < 1e-12);

        let wide = q(0.0, 1.0, 0.0, 0.0, 4.0, 3.0);
        assert_eq!(interval_phase(&wide, 10.0).unwrap(), TimeIntervalSet::full(10.0));
        let real = q(-1.0, 0.0, 0.0, 0.0, 9.0, -9.0);
        assert_eq!(interval_phase(&real, 10.0).unwrap(), TimeIntervalSet::full(10.0));

        let fast = q(0.0, 1e6, 0.0, 0.0, 0.1, 0.1);
        assert!(matches!(interval_phase(&fast, 1e4), Err(Error::HorizonTooLong { .. })));
    }

    #[test]
    fn combined_by_hand() {
        // lambda = -1 + i: magnitude window [1, 2], phase windows
        // [pi/2 - 0.5, pi/2 + 0.5] + 2 m pi; only m = 0 meets [1, 2]
        let p = q(-1.0, 1.0, -1.0, 2.0, PI / 2.0 + 0.5, -PI / 2.0 + 0.5);
        let got = combine_eigenpair(&p, 10.0).unwrap();
        let want = [PI / 2.0 - 0.5, 2.0];
        assert_eq!(got.intervals().len(), 1);
        assert!((got.intervals()[0][0] - want[0]).abs() < 1e-15);
        assert!((got.intervals()[0][1] - want[1]).abs() < 1e-15);
        let real = q(2.0, 0.0, 1.0, 0.0, 0.0, 0.0);
        assert_eq!(combine_eigenpair(&real, 10.0).unwrap(), interval_mag(&real, 10.0));
        let dead = q(1.0, 1.0, -2.0, 1.0, 1.0, 1.0);
        assert!(combine_eigenpair(&dead, 10.0).unwrap().is_empty());
    }

    #[test]
    fn combo_enumeration() {
        let w = |m, k| enumerate_combos(m, k).into_iter().map(|c| c.alphas).collect::<Vec<_>>();
        assert_eq!(w(2, 0), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let two = w(2, 2);
        assert_eq!(two.len(), 5);
        for want in [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, 0.0], [0.0, 2.0]] {
            assert!(two.contains(&want.to_vec()));
        }
        assert_eq!(w(3, 3).len(), 19);
    }

    #[test]
    fn verify_trivial_pair() {
        let out = verify(&[q(1.0, 0.0, 0.0, 0.0, 0.0, 0.0)], &enumerate_combos(1, 3), 5.0).unwrap();
        assert_eq!(out.final_set.intervals(), &[[0.0, 0.0]]);
        assert_eq!(out.verdict, Verdict::InconclusiveWithBound);
        let none = verify(&[q(1.0, 0.0, -1.0, 0.0, 0.0, 0.0)], &enumerate_combos(1, 0), 5.0).unwrap();
        assert_eq!(none.verdict, Verdict::UnreachableCertified);
    }

    #[test]
    fn interval_set_json() {
        let s = TimeIntervalSet::new(2.0, [[0.5, 1.0]]);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"t_max":2.0,"intervals":[[0.5,1.0]]}"#);
        let back: TimeIntervalSet = serde_json::from_str(r#"{"t_max":2.0,"intervals":[[1.5,3.0],[0.0,0.2]]}"#).unwrap();
        assert_eq!(back.intervals(), &[[0.0, 0.2], [1.5, 2.0]]);
        assert_eq!(
            serde_json::to_string(&Verdict::UnreachableCertified).unwrap(),
            "\"unreachable_certified\""
        );
    }

    fn arb_quantities() -> impl Strategy<Value = EigenpairQuantities> {
        (
            -3.0f64..3.0,
            -3.0f64..3.0,
            -2.0f64..2.0,
            -2.0f64..2.0,
            -2.0f64..2.0,
            -2.0f64..2.0,
        )
            .prop_filter("nonzero real part", |t| t.0.abs() > 0.05)
            .prop_map(|(re, im, lf, lb, af, ab)| {
                // keep sup >= inf across directions
                let lb = lb.max(-lf);
                let ab = ab.max(-af);
                q(re, im, lf, lb, af, ab)
            })
    }

    proptest! {
        #[test]
        fn adding_pairs_never_enlarges(
            pairs in prop::collection::vec(arb_quantities(), 1..4),
            extra in arb_quantities(),
        ) {
            let t_max = 20.0;
            let base = verify(&pairs, &enumerate_combos(pairs.len(), 0), t_max).unwrap().final_set;
            let mut more = pairs.clone();
            more.push(extra);
            let wider_combos: Vec<ComboWeight> = enumerate_combos(more.len(), 2);
            let grown = verify(&more, &wider_combos, t_max).unwrap().final_set;
            prop_assert!(grown.is_subset_of(&base));
        }

        #[test]
        fn mediant_containment(
            l in prop::collection::vec((0.1f64..3.0, -2.0f64..2.0, 0.0f64..2.0), 2..4),
            sign in prop::bool::ANY,
            alphas in prop::collection::vec(1u32..4, 4),
        ) {
            let s = if sign { 1.0 } else { -1.0 };
            let pairs: Vec<EigenpairQuantities> = l
                .iter()
                .map(|&(re, lf, w)| q(s * re, 0.0, lf, w - lf, 0.0, 0.0))
                .collect();
            let hulls: Vec<[f64; 2]> = pairs
                .iter()
                .map(|p| {
                    let re = p.lambda.re;
                    if re > 0.0 { [-p.l_bwd / re, p.l_fwd / re] } else { [p.l_fwd / re, -p.l_bwd / re] }
                })
                .collect();
            let lo = hulls.iter().map(|h| h[0]).fold(f64::INFINITY, f64::min);
            let hi = hulls.iter().map(|h| h[1]).fold(f64::NEG_INFINITY, f64::max);
            let a: Vec<f64> = alphas[..pairs.len()].iter().map(|&v| v as f64).collect();
            let c = EigenpairQuantities::weighted(&pairs, &a);
            let re = c.lambda.re;
            let raw = if re > 0.0 { [-c.l_bwd / re, c.l_fwd / re] } else { [c.l_fwd / re, -c.l_bwd / re] };
            // the weighted interval's endpoints are mediants of the unit endpoints
            prop_assert!(raw[0] >= lo - 1e-9 && raw[1] <= hi + 1e-9);
        }

        #[test]
        fn phase_windows_match_bruteforce(
            im in prop::sample::select(vec![-2.0f64, -0.7, 0.9, 1.7]),
            af in -1.0f64..2.0,
            ab in -1.0f64..2.0,
        ) {
            let p = q(0.0, im, 0.0, 0.0, af, ab);
            let s = interval_phase(&p, 12.0).unwrap();
            for k in 0..1200 {
                let t = k as f64 * 0.01;
                let ph = im * t;
                // is there an m with -ab + 2 m pi <= ph <= af + 2 m pi
                let m = ((ph - af) / (2.0 * PI)).ceil();
                let ok = -ab + 2.0 * PI * m <= ph + 1e-12 && ph <= af + 2.0 * PI * m + 1e-12 && -ab <= af;
                if ok {
                    prop_assert!(s.contains(t) || s.intervals().iter().any(|iv| (iv[0] - t).abs() < 1e-9 || (iv[1] - t).abs() < 1e-9));
                }
            }
        }
    }
}
