//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export returns JSON text; errors come back as strings so the page can
//! show them next to the input that caused them.

use serde_json::json;
use wasm_bindgen::prelude::*;

use rollgap::io::parse_matrix;
use rollgap::matgap::{gap_reduced, landscape_local_min_2x2, GapOptions};
use rollgap::rollwave::{build_profile, characteristics, default_epsilon, stability_index, ProfileOptions};

/// Gap report for a matrix given as JSON rows or whitespace-separated text.
pub fn gap_json(matrix: &str, seed: u64) -> Result<String, String> {
    let b = parse_matrix(matrix).map_err(|e| e.to_string())?;
    let opts = GapOptions { seed, phase_restarts: 32, ..GapOptions::default() };
    let r = gap_reduced(&b, &opts).map_err(|e| e.to_string())?;
    serde_json::to_string(&r).map_err(|e| e.to_string())
}

/// `[θ, ρ(diag(1, e^{iθ})B)]` pairs for the 2×2 landscape matrix.
pub fn landscape_json(points: usize) -> String {
    let (_, curve) = landscape_local_min_2x2();
    let n = points.clamp(2, 10_000);
    let pts: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / (n - 1) as f64;
            [t, curve(t)]
        })
        .collect();
    json!(pts).to_string()
}

/// Profile samples, characteristic speeds and the stability index of a roll wave.
pub fn rollwave_json(froude: f64, h_plus_fraction: f64) -> Result<String, String> {
    let opts = ProfileOptions { h_plus_fraction, grid_cells: 200, ..ProfileOptions::default() };
    let p = build_profile(froude, &opts).map_err(|e| e.to_string())?;
    let cd = characteristics(&p).map_err(|e| e.to_string())?;
    let r = stability_index(&p, &cd).map_err(|e| e.to_string())?;
    Ok(json!({
        "froude": froude,
        "period": p.period,
        "x_s": p.x_s,
        "h_plus": p.h_plus,
        "h_minus": p.h_minus,
        "x": p.grid,
        "h": p.h_samples,
        "alpha1": cd.alpha1,
        "alpha2": cd.alpha2,
        "index": r.index,
        "C": r.c,
        "hf_abscissa": r.hf_abscissa,
        "epsilon": default_epsilon(&r).ok(),
    })
    .to_string())
}

#[wasm_bindgen(js_name = gapReport)]
pub fn gap_report(matrix: &str, seed: u32) -> Result<String, String> {
    gap_json(matrix, seed as u64)
}

#[wasm_bindgen(js_name = landscapeCurve)]
pub fn landscape_curve(points: usize) -> String {
    landscape_json(points)
}

#[wasm_bindgen(js_name = rollWave)]
pub fn roll_wave(froude: f64, h_plus_fraction: f64) -> Result<String, String> {
    rollwave_json(froude, h_plus_fraction)
}
