//! Browser demo: a worked residual, a QQ plot of simulated data under a
//! chosen model, and a residual-by-predictor plot for a linear or quadratic fit.

use psr_kit::data::{Column, DesignMatrix};
use psr_kit::diag::{self, PlotData};
use psr_kit::dist::FittedDistribution;
use psr_kit::fit::{CumLink, FitterSpec};
use psr_kit::psr::{psr, psr_all};
use psr_kit::rng::substream;
use rand::Rng;
use rand_distr::StandardNormal;
use wasm_bindgen::prelude::*;

const MAX_N: usize = 5000;
const DEMO_LABEL: u64 = 0xD3;

#[wasm_bindgen]
pub struct Residual {
    below: f64,
    above: f64,
    value: f64,
}

#[wasm_bindgen]
impl Residual {
    /// `P(Y < y)` under the given probabilities.
    #[wasm_bindgen(getter)]
    pub fn below(&self) -> f64 {
        self.below
    }

    #[wasm_bindgen(getter)]
    pub fn above(&self) -> f64 {
        self.above
    }

    #[wasm_bindgen(getter)]
    pub fn value(&self) -> f64 {
        self.value
    }
}

#[wasm_bindgen]
pub struct Figure {
    svg: String,
    summary: String,
}

#[wasm_bindgen]
impl Figure {
    #[wasm_bindgen(getter)]
    pub fn svg(&self) -> String {
        self.svg.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn summary(&self) -> String {
        self.summary.clone()
    }
}

/// Residual of observed category `observed` (1-based) given category probabilities.
pub fn residual_of(probs: &[f64], observed: usize) -> Result<Residual, String> {
    if probs.len() < 2 {
        return Err("enter at least two probabilities".into());
    }
    if observed == 0 || observed > probs.len() {
        return Err(format!("observed category must be between 1 and {}", probs.len()));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(format!("probabilities sum to {total}, not 1"));
    }
    let scaled: Vec<f64> = probs.iter().map(|p| p / total).collect();
    let points = (1..=probs.len()).map(|k| k as f64).collect();
    let f = FittedDistribution::from_probs(points, &scaled).map_err(|e| e.to_string())?;
    let y = observed as f64;
    Ok(Residual {
        below: f.cdf_left(y),
        above: 1.0 - f.cdf(y),
        value: psr(y, &f),
    })
}

fn check_n(n: usize) -> Result<(), String> {
    if !(30..=MAX_N).contains(&n) {
        return Err(format!("n must be between 30 and {MAX_N}"));
    }
    Ok(())
}

/// `x ~ N(0, 1)`, `y = exp(x / 2 + e)` with standard normal `e`.
fn lognormal_sample(n: usize, seed: u32) -> (Vec<f64>, Vec<f64>) {
    let mut rng = substream(seed as u64, DEMO_LABEL, 0);
    let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let y = x
        .iter()
        .map(|x| {
            let e: f64 = rng.sample(StandardNormal);
            (0.5 * x + e).exp()
        })
        .collect();
    (x, y)
}

/// QQ plot of residuals from `model` (`linear`, `orm-probit` or `orm-logit`)
/// fitted to log-normal data.
pub fn qq_figure(n: usize, seed: u32, model: &str) -> Result<Figure, String> {
    check_n(n)?;
    let fitter = match model {
        "linear" => FitterSpec::Linear,
        "orm-probit" => FitterSpec::Orm(CumLink::Probit),
        "orm-logit" => FitterSpec::Orm(CumLink::Logit),
        other => return Err(format!("unknown model `{other}`")),
    };
    let (x, y) = lognormal_sample(n, seed);
    let run = || -> psr_kit::Result<Figure> {
        let yc = Column::continuous("y", y)?;
        let design = DesignMatrix::from_columns(&["x"], &[x])?;
        let fit = fitter.fit(&yc, &design)?;
        let r = psr_all(&fit, &yc, &design)?;
        let qq = diag::qq_uniform(&r)?;
        let ks = diag::ks_uniform(&r)?;
        Ok(Figure {
            svg: diag::render_svg(&PlotData::Qq(&qq))?,
            summary: format!(
                "{fitter}(y ~ x), n = {n}: KS D = {:.4}, p = {:.3}",
                ks.statistic, ks.p_value
            ),
        })
    };
    run().map_err(|e| e.to_string())
}

/// Residuals against `x` for `y = x^2 + e`, fitting `x` alone or `x + x^2`.
pub fn predictor_figure(n: usize, seed: u32, quadratic: bool) -> Result<Figure, String> {
    check_n(n)?;
    let mut rng = substream(seed as u64, DEMO_LABEL, 1);
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|x| {
            let e: f64 = rng.sample(StandardNormal);
            x * x + e
        })
        .collect();
    let run = || -> psr_kit::Result<Figure> {
        let xc = Column::continuous("x", x.clone())?;
        let yc = Column::continuous("y", y)?;
        let design = if quadratic {
            let x2 = x.iter().map(|v| v * v).collect();
            DesignMatrix::from_columns(&["x", "x^2"], &[x.clone(), x2])?
        } else {
            DesignMatrix::from_columns(&["x"], &[x.clone()])?
        };
        let fit = FitterSpec::Linear.fit(&yc, &design)?;
        let r = psr_all(&fit, &yc, &design)?;
        let plot = diag::residual_by_predictor(&r, &xc)?;
        let lo = plot.curve.y_smooth.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = plot.curve.y_smooth.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let terms = if quadratic { "x + x^2" } else { "x" };
        Ok(Figure {
            svg: diag::render_svg(&PlotData::Residual(&plot))?,
            summary: format!("linear(y ~ {terms}), n = {n}: smooth ranges over [{lo:.3}, {hi:.3}]"),
        })
    };
    run().map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = workedResidual)]
pub fn worked_residual(probs: Vec<f64>, observed: usize) -> Result<Residual, JsError> {
    residual_of(&probs, observed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = qqDemo)]
pub fn qq_demo(n: usize, seed: u32, model: &str) -> Result<Figure, JsError> {
    qq_figure(n, seed, model).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = predictorDemo)]
pub fn predictor_demo(n: usize, seed: u32, quadratic: bool) -> Result<Figure, JsError> {
    predictor_figure(n, seed, quadratic).map_err(|e| JsError::new(&e))
}
