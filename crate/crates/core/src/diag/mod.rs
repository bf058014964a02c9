//! Residual diagnostics: uniform QQ data, uniformity tests, residual-by-
//! predictor smooths and SVG plots.

mod ks;
mod lowess;
mod svg;

use serde::Serialize;

use crate::data::{Column, Kind};
use crate::error::{invalid, Error, Result};
use crate::psr::PsrVector;

pub use ks::{kolmogorov_sf, ks_test, ks_uniform, KsResult, KS_MIN_N};
pub use lowess::{lowess, SmoothCurve, DEFAULT_ROBUST_ITERS, DEFAULT_SPAN};
pub use svg::{render, render_svg, PlotData};

const TIES_WARNING: &str = "residuals contain ties (discrete outcome); they are not expected to be uniform";

fn has_ties(sorted: &[f64]) -> bool {
    sorted.windows(2).any(|w| w[0] == w[1])
}

/// Sorted residuals against Uniform(-1, 1) plotting positions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QQData {
    /// `(theoretical, sample)`, theoretical `-1 + 2 (i - 0.5) / n`.
    pub pairs: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

pub fn qq_uniform(p: &PsrVector) -> Result<QQData> {
    let n = p.len();
    if n < 2 {
        return Err(invalid(format!("QQ data needs at least 2 residuals, got {n}")));
    }
    let mut sorted = p.values.clone();
    sorted.sort_by(f64::total_cmp);
    let mut warnings = Vec::new();
    if has_ties(&sorted) {
        warnings.push(TIES_WARNING.to_string());
    }
    let pairs = sorted
        .into_iter()
        .enumerate()
        .map(|(i, s)| (-1.0 + 2.0 * (i as f64 + 0.5) / n as f64, s))
        .collect();
    Ok(QQData { pairs, warnings })
}

/// Residuals against a continuous predictor with a lowess smooth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualPlot {
    pub predictor: String,
    /// `(x, residual)` in row order.
    pub points: Vec<(f64, f64)>,
    pub curve: SmoothCurve,
}

impl ResidualPlot {
    /// Smoothed value at each point, in row order.
    pub fn smoothed_at_points(&self) -> Vec<f64> {
        self.points
            .iter()
            .map(|(x, _)| {
                let k = self.curve.x_grid.partition_point(|g| g < x);
                self.curve.y_smooth[k]
            })
            .collect()
    }
}

/// Default lowess settings; the curve is kept within the range of the residuals.
pub fn residual_by_predictor(p: &PsrVector, x: &Column) -> Result<ResidualPlot> {
    if x.len() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: x.len(),
        });
    }
    if *x.kind() != Kind::Continuous {
        return Err(invalid(format!(
            "`{}` is {}; residual-by-predictor plots need a continuous predictor (summarize by level instead)",
            x.name(),
            x.kind().name()
        )));
    }
    let xv = x.numeric()?;
    let mut curve = lowess(&xv, &p.values, DEFAULT_SPAN, DEFAULT_ROBUST_ITERS)?;
    let lo = p.values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = p.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for v in &mut curve.y_smooth {
        *v = v.clamp(lo, hi);
    }
    Ok(ResidualPlot {
        predictor: x.name().to_string(),
        points: xv.into_iter().zip(p.values.iter().copied()).collect(),
        curve,
    })
}
