//! wasm-bindgen bindings for the browser demo: rigidity analysis, a single
//! gradient-flow run, and a small Monte-Carlo basin sweep, all JSON-in /
//! JSON-out so the page stays a static file with no framework.

use serde::Serialize;
use wasm_bindgen::prelude::wasm_bindgen;

use weakrig::dynamics::{log_err_decay, simulate};
use weakrig::equilibria::{monte_carlo_basin, BasinSampling};
use weakrig::rigidity::classify;
use weakrig::scenario::parse_scenario;

fn error_json(err: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": err.to_string() }).to_string()
}

fn with_scenario<F>(scenario_json: &str, f: F) -> String
where
    F: FnOnce(&weakrig::scenario::ScenarioInstance) -> weakrig::Result<String>,
{
    let (scenario, _warnings) = match parse_scenario(scenario_json, false) {
        Ok(parsed) => parsed,
        Err(err) => return error_json(err),
    };
    match scenario.build().and_then(|instance| f(&instance)) {
        Ok(json) => json,
        Err(err) => error_json(err),
    }
}

/// A scenario to preload into the editor: the 3-agent setup with one
/// distance constraint and two 60-degree base angles.
#[wasm_bindgen]
pub fn default_scenario() -> String {
    serde_json::json!({
        "dimension": 2,
        "agents": [[-15.0, 3.0], [4.0, -9.0], [12.0, 11.0]],
        "edges": [{"i": 1, "j": 2, "target_sq": 100.0}],
        "angles": [
            {"apex": 1, "i": 2, "j": 3, "target_deg": 60.0},
            {"apex": 3, "i": 1, "j": 2, "target_deg": 60.0}
        ],
        "sim": {
            "dt": 0.001, "t_max": 800.0, "err_tol": 1e-6,
            "gain_dist": 0.05, "gain_angle": 20.0,
            "seed": 42, "record_every": 50
        }
    })
    .to_string()
}

/// Rank analysis of the scenario's initial configuration.
#[wasm_bindgen]
pub fn analyze(scenario_json: &str) -> String {
    with_scenario(scenario_json, |instance| {
        let report = classify(&instance.spec, &instance.initial)?;
        serde_json::to_string(&report).map_err(|e| weakrig::Error::Io(e.to_string()))
    })
}

#[derive(Serialize)]
struct RunView {
    flag: weakrig::dynamics::TerminalFlag,
    d: usize,
    n: usize,
    times: Vec<f64>,
    /// One flattened position vector per kept snapshot.
    positions: Vec<Vec<f64>>,
    err_norm: Vec<f64>,
    final_err: f64,
    slope_log_err: Option<f64>,
    r_squared: Option<f64>,
}

/// Integrate the scenario's gradient flow and return the kept snapshots for
/// plotting.
#[wasm_bindgen]
pub fn run_simulation(scenario_json: &str) -> String {
    with_scenario(scenario_json, |instance| {
        let trace = simulate(&instance.spec, &instance.initial, &instance.sim)?;
        let fit = log_err_decay(&trace);
        let view = RunView {
            flag: trace.flag,
            d: trace.d,
            n: trace.n,
            times: trace.times.clone(),
            positions: trace.positions.iter().map(|p| p.as_slice().to_vec()).collect(),
            err_norm: trace.err_norms(),
            final_err: trace.final_err_norm(),
            slope_log_err: fit.map(|f| f.slope),
            r_squared: fit.map(|f| f.r_squared),
        };
        serde_json::to_string(&view).map_err(|e| weakrig::Error::Io(e.to_string()))
    })
}

/// Monte-Carlo basin sweep over non-collinear starts (3 agents, 2D).
#[wasm_bindgen]
pub fn run_basin(scenario_json: &str, trials: u32, seed: u32, box_half: f64) -> String {
    with_scenario(scenario_json, |instance| {
        let stats = monte_carlo_basin(
            &instance.spec,
            trials as usize,
            seed as u64,
            &instance.sim,
            BasinSampling::NonCollinear,
            box_half,
        )?;
        serde_json::to_string(&stats).map_err(|e| weakrig::Error::Io(e.to_string()))
    })
}
