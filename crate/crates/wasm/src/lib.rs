//! wasm-bindgen bindings for the static demo page in `www/`.
//!
//! Build with `wasm-pack build crates/wasm --target web --out-dir www/pkg`.

use ranger_core::correlation::{analyze, post_hit_plateau, DEFAULT_MIN_BASELINE, DEFAULT_THRESHOLD_K};
use ranger_core::engine::{run, RunConfig};
use ranger_core::quantum::{post_hit_distribution, BiasModel};
use ranger_core::scheme::{self, SamplingMode, SchemeConfig};
use wasm_bindgen::prelude::*;

fn js_err(e: ranger_core::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Result of one simulated experiment.
#[wasm_bindgen]
pub struct Simulation {
    g: Vec<f64>,
    n_h: Vec<u64>,
    n_v: Vec<u64>,
    hit: Option<usize>,
    g_hit: f64,
    threshold: f64,
    plateau: f64,
    efficiency: f64,
}

#[wasm_bindgen]
impl Simulation {
    /// `G(i)` for `i = 1..M-1`.
    pub fn g_series(&self) -> Vec<f64> {
        self.g.clone()
    }

    pub fn counts_h(&self) -> Vec<f64> {
        self.n_h.iter().map(|&x| x as f64).collect()
    }

    pub fn counts_v(&self) -> Vec<f64> {
        self.n_v.iter().map(|&x| x as f64).collect()
    }

    /// Estimated hit location, or -1 when nothing crossed the threshold.
    pub fn estimated_hit(&self) -> i32 {
        self.hit.map_or(-1, |i| i as i32)
    }

    pub fn g_hit(&self) -> f64 {
        self.g_hit
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn plateau(&self) -> f64 {
        self.plateau
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }
}

/// Runs the chain-of-splitters experiment and the hit detector.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    pairs: u32,
    locations: u32,
    reflectivity: f64,
    hit_index: u32,
    a: f64,
    b: f64,
    seed: u32,
    uniform: bool,
) -> Result<Simulation, JsValue> {
    let config = RunConfig {
        pairs: pairs as u64,
        scheme: SchemeConfig::chain(locations as usize, reflectivity),
        bias: BiasModel::new(a, b).map_err(js_err)?,
        hit_index: (hit_index > 0).then_some(hit_index as usize),
        seed: seed as u64,
        sampling_mode: if uniform {
            SamplingMode::UniformLocation
        } else {
            SamplingMode::ChainDecay
        },
        ..RunConfig::default()
    };
    let out = run(&config).map_err(js_err)?;
    let min_baseline = DEFAULT_MIN_BASELINE.min(locations.saturating_sub(2).max(1) as usize);
    let (series, report) = analyze(&out.counts, &config.scheme, DEFAULT_THRESHOLD_K, min_baseline).map_err(js_err)?;
    let plateau = match config.hit_index {
        Some(_) => post_hit_plateau(&series, &config).map_err(js_err)?,
        None => 0.0,
    };
    Ok(Simulation {
        g: series.values().to_vec(),
        n_h: out.counts.n_h().to_vec(),
        n_v: out.counts.n_v().to_vec(),
        hit: report.estimated_hit_location,
        g_hit: report.g_hit,
        threshold: report.threshold(),
        plateau,
        efficiency: out.summary.efficiency(),
    })
}

/// `[p_h, p_v]` for photon 2 after the hit.
#[wasm_bindgen]
pub fn post_hit_probabilities(a: f64, b: f64) -> Result<Vec<f64>, JsValue> {
    let d = post_hit_distribution(&BiasModel::new(a, b).map_err(js_err)?);
    Ok(vec![d.p_h(), d.p_v()])
}

/// Locations needed for a range at a depth resolution.
#[wasm_bindgen]
pub fn required_locations(range_m: f64, resolution_m: f64) -> Result<u32, JsValue> {
    scheme::required_locations(range_m, resolution_m)
        .map(|m| m as u32)
        .map_err(js_err)
}
