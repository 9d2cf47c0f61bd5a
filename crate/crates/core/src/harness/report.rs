use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::extrema::{ExtremaEstimate, SamplingPlan};
use crate::reachtime::{ComboRecord, EigenpairQuantities, TimeIntervalSet, Verdict};
use crate::spectral::ErrorField;

pub const PHASE_RULE: &str = "signed_phase_window";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenpairReport {
    pub lambda: Complex64,
    /// `None` for analytic eigenfunctions.
    pub residual: Option<f64>,
    pub quantities: EigenpairQuantities,
    pub interval: Vec<[f64; 2]>,
    pub x0: ExtremaEstimate,
    pub xf: ExtremaEstimate,
    pub error_field: ErrorField,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeSection {
    pub eps: f64,
    #[serde(rename = "delta_L")]
    pub delta_l: f64,
    #[serde(rename = "delta_A")]
    pub delta_a: f64,
    pub delta_total: f64,
    pub confidence: f64,
    pub min_abs_re: f64,
    pub min_abs_im: Option<f64>,
    pub statement: String,
    pub assumptions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caveat: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingSection {
    pub plan: SamplingPlan,
    /// Samples actually drawn per set.
    pub n_samples: usize,
    pub n_probe: usize,
    /// `eps` was chosen so that `n_samples` meets the plan.
    pub eps_calibrated: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub system: Option<String>,
    pub degree: Option<u32>,
    pub dataset_hash: Option<String>,
    pub n_pairs: Option<usize>,
    pub t_max: f64,
    pub max_weight: u32,
    pub phase_rule: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub probe_secs: f64,
    pub sampling_secs: f64,
    pub error_field_secs: f64,
    pub total_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub verdict: Verdict,
    pub final_intervals: TimeIntervalSet,
    pub eigenpairs: Vec<EigenpairReport>,
    pub combos: Vec<ComboRecord>,
    pub guarantee: GuaranteeSection,
    pub sampling: SamplingSection,
    pub provenance: Provenance,
    /// Wall-clock data; excluded from [`VerificationReport::payload_hash`].
    #[serde(default)]
    pub timings: Timings,
}

impl VerificationReport {
    /// SHA-256 of the report JSON with timings zeroed.
    pub fn payload_hash(&self) -> String {
        let mut copy = self.clone();
        copy.timings = Timings::default();
        let bytes = serde_json::to_vec(&copy).expect("report serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Whether every number in the serialized report is finite.
    pub fn all_finite(&self) -> bool {
        fn walk(v: &serde_json::Value) -> bool {
            match v {
                serde_json::Value::Number(n) => n.as_f64().is_some_and(f64::is_finite),
                serde_json::Value::Array(a) => a.iter().all(walk),
                serde_json::Value::Object(o) => o.values().all(walk),
                _ => true,
            }
        }
        // serde_json writes non-finite floats as null, so look for those too
        let v = serde_json::to_value(self).expect("report serializes");
        walk(&v) && !has_unexpected_null(&v)
    }

    pub fn summary(&self) -> String {
        let set = if self.final_intervals.is_empty() {
            "empty".to_string()
        } else {
            self.final_intervals
                .intervals()
                .iter()
                .map(|[a, b]| format!("[{a:.4}, {b:.4}]"))
                .collect::<Vec<_>>()
                .join(" u ")
        };
        format!(
            "verdict: {:?}; reach-time set on [0, {}]: {set}; Delta = {:.4} at confidence {:.3}",
            self.verdict,
            self.final_intervals.t_max(),
            self.guarantee.delta_total,
            self.guarantee.confidence
        )
    }
}

/// Nulls are legal only where the schema has optional fields.
fn has_unexpected_null(v: &serde_json::Value) -> bool {
    const OPTIONAL: [&str; 7] = [
        "residual",
        "min_abs_im",
        "system",
        "degree",
        "dataset_hash",
        "n_pairs",
        "caveat",
    ];
    match v {
        serde_json::Value::Object(o) => o
            .iter()
            .any(|(k, v)| (v.is_null() && !OPTIONAL.contains(&k.as_str())) || has_unexpected_null(v)),
        serde_json::Value::Array(a) => a.iter().any(|x| x.is_null() || has_unexpected_null(x)),
        _ => false,
    }
}
