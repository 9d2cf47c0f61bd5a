//! Error budget and the probabilistic statement attached to a verdict.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reachtime::{TimeIntervalSet, IM_FLOOR};
use crate::spectral::{ErrorField, ErrorFieldSource};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `(W, V) = (X0, XF)`.
    Fwd,
    /// `(W, V) = (XF, X0)`.
    Bwd,
}

/// Interval containing the exact `L(W, V)` given the measured one.
///
/// With `psi~ = eps psi`, `L^psi~(W,V)` lies in
/// `[L^psi - L^eps(V,W), L^psi + L^eps(W,V)]`, so the exact value lies in
/// `[measured - L^eps(W,V), measured + L^eps(V,W)]`.
pub fn model_error_envelope(measured: f64, eps_wv: f64, eps_vw: f64) -> [f64; 2] {
    [measured - eps_wv, measured + eps_vw]
}

pub fn model_error_envelope_field(measured: f64, field: &ErrorField, dir: Direction) -> [f64; 2] {
    match dir {
        Direction::Fwd => model_error_envelope(measured, field.l_eps_fwd, field.l_eps_bwd),
        Direction::Bwd => model_error_envelope(measured, field.l_eps_bwd, field.l_eps_fwd),
    }
}

/// The phase analogue of [`model_error_envelope_field`].
pub fn model_error_envelope_phase(measured: f64, field: &ErrorField, dir: Direction) -> [f64; 2] {
    match dir {
        Direction::Fwd => model_error_envelope(measured, field.a_eps_fwd, field.a_eps_bwd),
        Direction::Bwd => model_error_envelope(measured, field.a_eps_bwd, field.a_eps_fwd),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub eps: f64,
    pub delta_l: f64,
    pub delta_a: f64,
    pub min_abs_re: f64,
    pub min_abs_im: Option<f64>,
    /// Bound on the Hausdorff distance, in time units.
    pub delta_total: f64,
    pub confidence: f64,
}

/// `Delta = max((eps + Delta_L) / min|Re lambda|, (eps + Delta_A) / min|Im lambda|)`,
/// the phase term taken over complex eigenpairs only.
pub fn delta_bound(pairs: &[(Complex64, &ErrorField)], eps: f64, delta: f64) -> Result<ErrorBudget> {
    if pairs.is_empty() {
        return Err(Error::BudgetUndefined);
    }
    if !(eps >= 0.0) || !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidInput(format!(
            "invalid budget inputs eps={eps}, delta={delta}"
        )));
    }
    let mut delta_l: f64 = 0.0;
    let mut delta_a: f64 = 0.0;
    let mut min_re = f64::INFINITY;
    let mut min_im: Option<f64> = None;
    for (lambda, f) in pairs {
        delta_l = delta_l.max(f.l_eps_fwd.abs()).max(f.l_eps_bwd.abs());
        min_re = min_re.min(lambda.re.abs());
        if lambda.im.abs() > IM_FLOOR {
            delta_a = delta_a.max(f.a_eps_fwd.abs()).max(f.a_eps_bwd.abs());
            min_im = Some(min_im.map_or(lambda.im.abs(), |m| m.min(lambda.im.abs())));
        }
    }
    if !(min_re > 0.0) {
        return Err(Error::BudgetUndefined);
    }
    let mut total = (eps + delta_l) / min_re;
    if let Some(im) = min_im {
        total = total.max((eps + delta_a) / im);
    }
    Ok(ErrorBudget {
        eps,
        delta_l,
        delta_a,
        min_abs_re: min_re,
        min_abs_im: min_im,
        delta_total: total,
        confidence: 1.0 - delta,
    })
}

/// Hausdorff distance between finite unions of closed intervals.
///
/// Single intervals reduce to `max(|lo_a - lo_b|, |hi_a - hi_b|)`. One empty
/// set gives infinity, two empty sets give 0.
pub fn hausdorff(a: &TimeIntervalSet, b: &TimeIntervalSet) -> f64 {
    match (a.intervals(), b.intervals()) {
        ([], []) => 0.0,
        ([], _) | (_, []) => f64::INFINITY,
        ([x], [y]) => (x[0] - y[0]).abs().max((x[1] - y[1]).abs()),
        (xs, ys) => directed(xs, ys).max(directed(ys, xs)),
    }
}

fn distance_to(t: f64, set: &[[f64; 2]]) -> f64 {
    set.iter()
        .map(|[lo, hi]| {
            if t < *lo {
                lo - t
            } else if t > *hi {
                t - hi
            } else {
                0.0
            }
        })
        .fold(f64::INFINITY, f64::min)
}

/// `sup_{t in xs} d(t, ys)`; the sup over an interval is attained at an
/// endpoint or at the midpoint of a gap of `ys`.
fn directed(xs: &[[f64; 2]], ys: &[[f64; 2]]) -> f64 {
    let gaps: Vec<f64> = ys.windows(2).map(|w| 0.5 * (w[0][1] + w[1][0])).collect();
    let mut worst: f64 = 0.0;
    for &[lo, hi] in xs {
        worst = worst.max(distance_to(lo, ys)).max(distance_to(hi, ys));
        for &g in &gaps {
            if lo <= g && g <= hi {
                worst = worst.max(distance_to(g, ys));
            }
        }
    }
    worst
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedStatement {
    pub statement: String,
    pub confidence: f64,
    pub delta_total: f64,
    pub assumptions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caveat: Option<String>,
}

pub const EMPTY_SET_CAVEAT: &str = "the reported set is empty; unreachability holds unless the ideal \
     reach-time set consists only of intervals of width at most Delta";

pub fn certify(
    empirical: &TimeIntervalSet,
    budget: &ErrorBudget,
    field_sources: &[ErrorFieldSource],
    p_eps_plugin: Option<f64>,
) -> CertifiedStatement {
    let statement = format!(
        "with probability at least {:.4}, the ideal over-approximation of the reach-time set on [0, {}] \
         lies within Hausdorff distance {:.6} of the reported set",
        budget.confidence,
        empirical.t_max(),
        budget.delta_total
    );
    let mut assumptions = vec![
        "eigenvalues are exact (no eigenvalue error is propagated)".to_string(),
        "phase rule: Im(lambda) T in [-A(XF,X0), A(X0,XF)] + 2 m pi".to_string(),
    ];
    match p_eps_plugin {
        Some(p) => assumptions.push(format!(
            "conditional on the eps-optimal region measure P_eps >= {p:.4e} (plug-in estimate)"
        )),
        None => assumptions.push("P_eps is taken as given".to_string()),
    }
    if field_sources.contains(&ErrorFieldSource::Assumed) {
        assumptions.push("error field: assumed (user-supplied bounds, not measured)".to_string());
    }
    if field_sources.contains(&ErrorFieldSource::Measured) {
        assumptions.push("error field: measured against a reference eigenfunction on validation samples".to_string());
    }
    CertifiedStatement {
        statement,
        confidence: budget.confidence,
        delta_total: budget.delta_total,
        assumptions,
        caveat: empirical.is_empty().then(|| EMPTY_SET_CAVEAT.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(iv: &[[f64; 2]]) -> TimeIntervalSet {
        TimeIntervalSet::new(100.0, iv.iter().copied())
    }

    fn field(l: f64, a: f64) -> ErrorField {
        ErrorField::assumed(l, a)
    }

    #[test]
    fn envelopes() {
        assert_eq!(model_error_envelope(0.7, 0.0, 0.0), [0.7, 0.7]);
        let [lo, hi] = model_error_envelope(1.0, 0.1, 0.2);
        assert!((lo - 0.9).abs() < 1e-15 && (hi - 1.2).abs() < 1e-15);
        let mut f = field(0.0, 0.0);
        f.l_eps_fwd = 0.1;
        f.l_eps_bwd = 0.2;
        assert_eq!(
            model_error_envelope_field(1.0, &f, Direction::Fwd),
            model_error_envelope(1.0, 0.1, 0.2)
        );
        assert_eq!(
            model_error_envelope_field(1.0, &f, Direction::Bwd),
            model_error_envelope(1.0, 0.2, 0.1)
        );
    }

    #[test]
    fn budgets() {
        let z = field(0.0, 0.0);
        let b = delta_bound(&[(Complex64::new(-1.0, 0.0), &z)], 0.05, 0.1).unwrap();
        assert!((b.delta_total - 0.05).abs() < 1e-15);
        assert_eq!(b.min_abs_im, None);
        assert!((b.confidence - 0.9).abs() < 1e-15);

        let f = field(0.1, 0.0);
        let b = delta_bound(
            &[(Complex64::new(-1.0, 0.0), &f), (Complex64::new(2.5, 0.0), &f)],
            0.02,
            0.1,
        )
        .unwrap();
        assert!((b.delta_total - 0.12).abs() < 1e-15);

        let c = field(0.0, 0.3);
        let b = delta_bound(&[(Complex64::new(-0.25, 1.5), &c)], 0.0, 0.1).unwrap();
        assert!((b.delta_total - 0.2).abs() < 1e-15);

        assert!(matches!(
            delta_bound(&[(Complex64::new(0.0, 1.0), &z)], 0.1, 0.1),
            Err(Error::BudgetUndefined)
        ));
    }

    #[test]
    fn hausdorff_examples() {
        assert_eq!(hausdorff(&set(&[[0.0, 1.0]]), &set(&[[0.0, 1.0]])), 0.0);
        assert!((hausdorff(&set(&[[0.70, 0.97]]), &set(&[[0.75, 0.90]])) - 0.07).abs() < 1e-12);
        assert_eq!(hausdorff(&set(&[[1.0, 2.0]]), &set(&[])), f64::INFINITY);
        assert_eq!(hausdorff(&set(&[]), &set(&[])), 0.0);
        // [0, 10] against two points: the worst point of [0,10] is t = 5
        let two = set(&[[0.0, 0.0], [10.0, 10.0]]);
        assert_eq!(hausdorff(&set(&[[0.0, 10.0]]), &two), 5.0);
        assert_eq!(
            hausdorff(&set(&[[0.0, 1.0], [5.0, 6.0]]), &set(&[[0.0, 1.0], [5.0, 6.5]])),
            0.5
        );
    }

    #[test]
    fn certify_statements() {
        let z = field(0.0, 0.0);
        let b = delta_bound(&[(Complex64::new(-1.0, 0.0), &z)], 0.0, 0.0).unwrap();
        let s = certify(&set(&[[0.7, 0.97]]), &b, &[ErrorFieldSource::Assumed], Some(0.01));
        assert_eq!(s.delta_total, 0.0);
        assert_eq!(s.confidence, 1.0);
        assert!(s.caveat.is_none());
        assert!(s.assumptions.iter().any(|a| a.contains("P_eps")));
        assert!(s.assumptions.iter().any(|a| a.contains("assumed")));
        let e = certify(&set(&[]), &b, &[ErrorFieldSource::Measured], None);
        assert_eq!(e.caveat.as_deref(), Some(EMPTY_SET_CAVEAT));
    }

    fn interval() -> impl Strategy<Value = [f64; 2]> {
        (0.0f64..50.0, 0.0f64..20.0).prop_map(|(lo, w)| [lo, lo + w])
    }

    proptest! {
        #[test]
        fn metric_axioms(a in interval(), b in interval(), c in interval()) {
            let (a, b, c) = (set(&[a]), set(&[b]), set(&[c]));
            prop_assert_eq!(hausdorff(&a, &b), hausdorff(&b, &a));
            prop_assert_eq!(hausdorff(&a, &a), 0.0);
            prop_assert!(hausdorff(&a, &c) <= hausdorff(&a, &b) + hausdorff(&b, &c) + 1e-12);
        }

        #[test]
        fn general_formula_agrees_on_single_intervals(a in interval(), b in interval()) {
            let d = directed(&[a], &[b]).max(directed(&[b], &[a]));
            prop_assert!((d - hausdorff(&set(&[a]), &set(&[b]))).abs() < 1e-12);
        }

        #[test]
        fn budget_is_monotone(
            l in 0.0f64..1.0, a in 0.0f64..1.0, eps in 0.0f64..0.5,
            dl in 0.0f64..0.5, da in 0.0f64..0.5, de in 0.0f64..0.5,
            re in 0.1f64..3.0, im in 0.1f64..3.0,
        ) {
            let lam = Complex64::new(-re, im);
            let f0 = field(l, a);
            let f1 = field(l + dl, a + da);
            let b0 = delta_bound(&[(lam, &f0)], eps, 0.1).unwrap();
            let b1 = delta_bound(&[(lam, &f1)], eps + de, 0.1).unwrap();
            prop_assert!(b1.delta_total >= b0.delta_total);
        }
    }
}
