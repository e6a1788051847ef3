//! Browser front-end. Each exported function returns a JSON string; the
//! plain-Rust versions underneath are what the native tests exercise.

use num_complex::Complex64 as C64;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use rigidity_lab::hyperbolic::{census_growth, enumerate_classes, FuchsianGroup};
use rigidity_lab::lyapunov::{lyapunov_with_solution, LyapunovConfig};
use rigidity_lab::metric::{Bump, ConformalMetric, MetricSpec};
use rigidity_lab::profile::CurvatureProfile;

const MAX_PLOT_POINTS: usize = 240;
const MAX_CENSUS_LENGTH: usize = 6;
const MAX_GRID: usize = 160;

#[derive(Debug, Serialize)]
pub struct ExponentView {
    pub chi_plus: f64,
    pub oracle_chi: f64,
    pub mean_curvature_bound: f64,
    pub gap: f64,
    pub times: Vec<f64>,
    pub u: Vec<f64>,
    pub k: Vec<f64>,
}

/// Unstable Riccati solution and exponent for
/// `K(t) = mean + a·cos(2πt/τ) + s·sin(2πt/τ)`.
pub fn fourier_exponent(mean: f64, a: f64, s: f64, period: f64) -> Result<ExponentView, String> {
    let profile = CurvatureProfile::fourier(mean, vec![a], vec![s], period)
        .map_err(|e| e.to_string())?
        .with_sampled_bounds(1024);
    if profile.bounds().is_none_or(|b| b.b <= 0.0) {
        return Err("curvature must stay negative".into());
    }
    let cfg = LyapunovConfig {
        oracle_periods: 200.0,
        ..LyapunovConfig::default()
    };
    let (rep, sol) = lyapunov_with_solution(&profile, &cfg).map_err(|e| e.to_string())?;
    let stride = sol.times.len().div_ceil(MAX_PLOT_POINTS).max(1);
    let times: Vec<f64> = sol.times.iter().step_by(stride).copied().collect();
    let u = sol.scalar_values().into_iter().step_by(stride).collect();
    let k = times.iter().map(|&t| profile.scalar(t)).collect();
    Ok(ExponentView {
        chi_plus: rep.chi_plus,
        oracle_chi: rep.oracle_chi,
        mean_curvature_bound: rep.mean_curvature_bound,
        gap: rep.gap,
        times,
        u,
        k,
    })
}

#[derive(Debug, Serialize)]
pub struct CensusRow {
    pub word: String,
    pub length: f64,
    pub trace: f64,
}

#[derive(Debug, Serialize)]
pub struct CensusView {
    pub rows: Vec<CensusRow>,
    pub delta: Option<f64>,
}

/// Closed-geodesic classes of the default Schottky group.
pub fn schottky_census(max_word_length: usize) -> Result<CensusView, String> {
    if !(1..=MAX_CENSUS_LENGTH).contains(&max_word_length) {
        return Err(format!("word length must be in 1..={MAX_CENSUS_LENGTH}"));
    }
    let g = FuchsianGroup::schottky(0.6, 0.05).map_err(|e| e.to_string())?;
    let classes = enumerate_classes(&g, max_word_length).map_err(|e| e.to_string())?;
    let delta = census_growth(&g, &classes, max_word_length).map(|f| f.delta);
    let rows = classes
        .into_iter()
        .map(|c| CensusRow {
            word: c.word,
            length: c.length,
            trace: c.trace,
        })
        .collect();
    Ok(CensusView { rows, delta })
}

#[derive(Debug, Serialize)]
pub struct CurvatureGrid {
    pub n: usize,
    /// Row-major, `y` from top; `None` outside the unit disk.
    pub k: Vec<Option<f64>>,
    pub k_min: f64,
    pub k_max: f64,
}

pub fn shipped_metric(epsilon: f64) -> Result<ConformalMetric, String> {
    let spec = MetricSpec {
        bumps: vec![Bump {
            center: [0.3, 0.3],
            radius: 0.5,
            amplitude: 0.25,
        }],
        epsilon,
        ..MetricSpec::default()
    };
    let g = FuchsianGroup::schottky(0.6, 0.05).map_err(|e| e.to_string())?;
    ConformalMetric::new(g, spec).map_err(|e| e.to_string())
}

/// Gaussian curvature of the shipped bump metric on an `n × n` disk grid.
pub fn curvature_grid(epsilon: f64, n: usize) -> Result<CurvatureGrid, String> {
    if !(2..=MAX_GRID).contains(&n) {
        return Err(format!("grid size must be in 2..={MAX_GRID}"));
    }
    let metric = shipped_metric(epsilon)?;
    let mut k = Vec::with_capacity(n * n);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        for j in 0..n {
            let x = -1.0 + 2.0 * (j as f64 + 0.5) / n as f64;
            let y = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let z = C64::new(x, y);
            if z.norm() >= 0.98 {
                k.push(None);
                continue;
            }
            let v = metric.gaussian_curvature(z).map_err(|e| e.to_string())?;
            lo = lo.min(v);
            hi = hi.max(v);
            k.push(Some(v));
        }
    }
    Ok(CurvatureGrid {
        n,
        k,
        k_min: lo,
        k_max: hi,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = fourierExponent)]
pub fn fourier_exponent_js(mean: f64, a: f64, s: f64, period: f64) -> Result<String, JsError> {
    to_js(fourier_exponent(mean, a, s, period))
}

#[wasm_bindgen(js_name = schottkyCensus)]
pub fn schottky_census_js(max_word_length: usize) -> Result<String, JsError> {
    to_js(schottky_census(max_word_length))
}

#[wasm_bindgen(js_name = curvatureGrid)]
pub fn curvature_grid_js(epsilon: f64, n: usize) -> Result<String, JsError> {
    to_js(curvature_grid(epsilon, n))
}
