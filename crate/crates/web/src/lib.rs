//! WebAssembly bindings for the demo page in `www/`.

pub mod demo;

use wasm_bindgen::prelude::*;

fn js(e: snn_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct EncodedDigit(demo::Encoding);

#[wasm_bindgen]
impl EncodedDigit {
    pub fn on(&self) -> Vec<f64> {
        self.0.on.clone()
    }

    pub fn off(&self) -> Vec<f64> {
        self.0.off.clone()
    }

    pub fn latencies(&self) -> Vec<f64> {
        self.0.latencies.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn spikes(&self) -> usize {
        self.0.spikes
    }
}

/// Grayscale pixels in [0, 1], row-major.
#[wasm_bindgen]
pub fn encode_digit(pixels: &[f64], width: usize, height: usize) -> Result<EncodedDigit, JsError> {
    demo::encode(pixels, width, height).map(EncodedDigit).map_err(js)
}

/// `param` is beta for the multiplicative rule and tau for the biological ones.
#[wasm_bindgen]
pub fn stdp_window(rule: &str, eta: f64, param: f64, t_post: f64, w: f64, points: usize) -> Result<Vec<f64>, JsError> {
    let r = demo::rule(rule, eta, param).map_err(js)?;
    Ok(demo::stdp_window(&r, t_post, w, points))
}

#[wasm_bindgen]
pub struct ThresholdTrace(demo::Trace);

#[wasm_bindgen]
impl ThresholdTrace {
    pub fn means(&self) -> Vec<f64> {
        self.0.means.clone()
    }

    pub fn shares(&self) -> Vec<f64> {
        self.0.shares.clone()
    }
}

#[wasm_bindgen]
pub fn threshold_trace(t_target: f64, losers: bool, epochs: usize, seed: u64) -> Result<ThresholdTrace, JsError> {
    demo::threshold_trace(t_target, losers, epochs, seed)
        .map(ThresholdTrace)
        .map_err(js)
}
