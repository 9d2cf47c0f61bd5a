//! Reports validate against the published schema and survive a file round
//! trip unchanged.

use serde_json::Value;

use koopreach_core::harness::benchmark::run_pipeline;
use koopreach_core::harness::io::{read_json, write_json};
use koopreach_core::harness::{RunConfig, VerificationReport};

fn validator() -> jsonschema::Validator {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../schemas/report.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::draft202012::new(&schema).unwrap()
}

fn assert_valid(v: &jsonschema::Validator, doc: &Value) {
    let errors: Vec<String> = v
        .iter_errors(doc)
        .map(|e| format!("{} at {}", e, e.instance_path))
        .collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

#[test]
fn benchmark_reports_match_the_schema() {
    let v = validator();
    let dir = tempfile::tempdir().unwrap();
    for system in ["example1", "roessler"] {
        let cfg = RunConfig::for_system(system).unwrap();
        let (report, _) = run_pipeline(&cfg, 3).unwrap();
        assert!(report.all_finite());
        let doc = serde_json::to_value(&report).unwrap();
        assert_valid(&v, &doc);

        let path = dir.path().join(format!("{system}.json"));
        write_json(&path, &report).unwrap();
        let back: VerificationReport = read_json(&path).unwrap();
        assert_eq!(back, report);
        assert_eq!(back.payload_hash(), report.payload_hash());
    }
}

#[test]
fn schema_rejects_malformed_reports() {
    let v = validator();
    let (report, _) = run_pipeline(&RunConfig::for_system("roessler").unwrap(), 3).unwrap();
    let good = serde_json::to_value(&report).unwrap();

    let mut bad = good.clone();
    bad["verdict"] = Value::from("probably_fine");
    assert!(!v.is_valid(&bad));

    let mut bad = good.clone();
    bad["guarantee"]["delta_total"] = Value::Null;
    assert!(!v.is_valid(&bad));

    let mut bad = good;
    bad["provenance"].as_object_mut().unwrap().remove("seed");
    assert!(!v.is_valid(&bad));
}
