//! Browser bindings for the koopreach demo page.
//!
//! Each export has a plain Rust twin that returns `Result<_, String>` so the
//! logic is testable natively; the wasm wrappers only convert errors.

use num_complex::Complex64;
use serde_json::json;
use wasm_bindgen::prelude::*;

use koopreach_core::dynamics::{analytic_eigenpairs_example1, example1_system};
use koopreach_core::harness::benchmark::run_pipeline;
use koopreach_core::harness::{example1_regions, RunConfig};
use koopreach_core::reachtime::{interval_mag, interval_phase, EigenpairQuantities};

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Magnitude, phase and combined reach-time windows for one eigenpair, as
/// JSON `{"mag": [[lo, hi]..], "phase": [..], "combined": [..]}`.
pub fn reach_windows(
    re: f64,
    im: f64,
    l_fwd: f64,
    l_bwd: f64,
    a_fwd: f64,
    a_bwd: f64,
    t_max: f64,
) -> Result<String, String> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err("t_max must be positive".into());
    }
    let q = EigenpairQuantities {
        lambda: Complex64::new(re, im),
        l_fwd,
        l_bwd,
        a_fwd,
        a_bwd,
    };
    let mag = interval_mag(&q, t_max);
    let phase = interval_phase(&q, t_max).map_err(err)?;
    let combined = mag.intersect(&phase);
    Ok(json!({
        "mag": mag.intervals(),
        "phase": phase.intervals(),
        "combined": combined.intervals(),
    })
    .to_string())
}

/// Row-major `ny x nx` grid over the Example 1 domain. Values are
/// `ln|psi|` of the chosen analytic eigenfunction (0 or 1) where the vector
/// field is defined and NaN elsewhere.
pub fn field_grid(which: usize, nx: usize, ny: usize) -> Result<Vec<f64>, String> {
    let pairs = analytic_eigenpairs_example1();
    let ef = pairs.get(which).ok_or("eigenfunction index must be 0 or 1")?;
    if nx < 2 || ny < 2 || nx * ny > 1 << 20 {
        return Err("grid must be at least 2x2 and at most 2^20 cells".into());
    }
    let sys = example1_system();
    let dom = sys.working_domain();
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        // top row is the largest x2
        let x2 = dom.hi[1] - (dom.hi[1] - dom.lo[1]) * j as f64 / (ny - 1) as f64;
        for i in 0..nx {
            let x1 = dom.lo[0] + (dom.hi[0] - dom.lo[0]) * i as f64 / (nx - 1) as f64;
            let x = [x1, x2];
            let v = if sys.eval(&x).is_ok() {
                ef.psi(&x).abs().ln()
            } else {
                f64::NAN
            };
            out.push(v);
        }
    }
    Ok(out)
}

/// Same grid as [`field_grid`]; 1 marks the initial set, 2 the target.
pub fn region_mask(nx: usize, ny: usize) -> Result<Vec<u8>, String> {
    if nx < 2 || ny < 2 || nx * ny > 1 << 20 {
        return Err("grid must be at least 2x2 and at most 2^20 cells".into());
    }
    let (x0, xf) = example1_regions().map_err(err)?;
    let dom = example1_system().working_domain().clone();
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        let x2 = dom.hi[1] - (dom.hi[1] - dom.lo[1]) * j as f64 / (ny - 1) as f64;
        for i in 0..nx {
            let x1 = dom.lo[0] + (dom.hi[0] - dom.lo[0]) * i as f64 / (nx - 1) as f64;
            let x = [x1, x2];
            out.push(if x0.contains(&x) {
                1
            } else if xf.contains(&x) {
                2
            } else {
                0
            });
        }
    }
    Ok(out)
}

/// Runs simulate, learn and verify on Example 1 and returns the report as
/// JSON.
pub fn example1_pipeline(
    seed: u64,
    n_traj: usize,
    degree: u32,
    n_samples: usize,
    delta: f64,
) -> Result<String, String> {
    let mut cfg = RunConfig::for_system("example1").map_err(err)?;
    cfg.simulate.n_traj = n_traj;
    cfg.learn.degree = degree;
    cfg.verify.n_samples = Some(n_samples);
    cfg.verify.delta = delta;
    // keep the page responsive on one thread
    cfg.verify.n_probe = cfg.verify.n_probe.min(5000);
    let (report, _) = run_pipeline(&cfg, seed).map_err(err)?;
    serde_json::to_string(&report).map_err(err)
}

#[wasm_bindgen(js_name = reachWindows)]
pub fn reach_windows_js(
    re: f64,
    im: f64,
    l_fwd: f64,
    l_bwd: f64,
    a_fwd: f64,
    a_bwd: f64,
    t_max: f64,
) -> Result<String, JsError> {
    reach_windows(re, im, l_fwd, l_bwd, a_fwd, a_bwd, t_max).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = fieldGrid)]
pub fn field_grid_js(which: usize, nx: usize, ny: usize) -> Result<Vec<f64>, JsError> {
    field_grid(which, nx, ny).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = regionMask)]
pub fn region_mask_js(nx: usize, ny: usize) -> Result<Vec<u8>, JsError> {
    region_mask(nx, ny).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = runExample1)]
pub fn example1_pipeline_js(
    seed: u32,
    n_traj: usize,
    degree: u32,
    n_samples: usize,
    delta: f64,
) -> Result<String, JsError> {
    example1_pipeline(u64::from(seed), n_traj, degree, n_samples, delta).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn rotation_windows() {
        let pi = std::f64::consts::PI;
        let v: Value =
            serde_json::from_str(&reach_windows(0.0, 1.0, 0.0, 0.0, pi / 2.0, -pi / 2.0, 10.0).unwrap()).unwrap();
        assert_eq!(v["phase"].as_array().unwrap().len(), 2);
        assert_eq!(v["combined"], v["phase"]);
        assert!(reach_windows(1.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn grids_have_the_requested_shape() {
        let g = field_grid(1, 30, 20).unwrap();
        assert_eq!(g.len(), 600);
        assert!(g.iter().filter(|v| v.is_finite()).count() > 500);
        let m = region_mask(300, 300).unwrap();
        assert!(m.contains(&1) && m.contains(&2));
        assert!(field_grid(2, 10, 10).is_err());
        assert!(region_mask(1, 10).is_err());
    }

    #[test]
    fn small_pipeline_runs() {
        let v: Value = serde_json::from_str(&example1_pipeline(1, 200, 6, 2000, 0.1).unwrap()).unwrap();
        assert_eq!(v["verdict"], "inconclusive_with_bound");
        assert!(example1_pipeline(1, 200, 0, 2000, 0.1).is_err());
    }
}
