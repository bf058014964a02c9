//! Rank association through probability-scale residuals.
//!
//! Spearman's rho is the Pearson correlation of residuals from intercept-only
//! empirical fits. Replacing those fits with models on covariates `Z` gives the
//! partial Spearman correlation; evaluating it within levels of `z` (or locally
//! in a continuous `z`) gives the conditional version.

mod conditional;
pub(crate) mod resample;
mod scan;

use serde::Serialize;

use crate::data::{Column, DesignMatrix, Kind};
use crate::error::{invalid, Error, Result};
use crate::fit::{fit_empirical, FitterSpec, ModelFit};
use crate::psr::{psr_all, PsrVector};

pub use conditional::{conditional_spearman, silverman_bandwidth, Bandwidth, ConditionalConfig, ConditionalPoint};
pub use resample::{ResamplingConfig, ResamplingKind, ResamplingRun};
pub use scan::{batch_partial_spearman, rank_rows, ScanConfig, ScanRow, DEGENERATE_SD};

use resample::{infer, Statistic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Spearman,
    PartialSpearman,
    ConditionalSpearman,
    PsrCovariance,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Spearman => "spearman",
            Method::PartialSpearman => "partial_spearman",
            Method::ConditionalSpearman => "conditional_spearman",
            Method::PsrCovariance => "psr_covariance",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssocResult {
    pub estimate: f64,
    /// Bootstrap percentile interval. Not forced to contain the estimate.
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub p_value: Option<f64>,
    pub method: Method,
    pub n_used: usize,
    pub resampling: Vec<ResamplingRun>,
    pub warnings: Vec<String>,
}

/// Pearson correlation, `None` when either vector has zero variance.
pub(crate) fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub(crate) fn mean_product(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / x.len() as f64
}

fn check_pair(x: &Column, y: &Column) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    for c in [x, y] {
        if !c.kind().is_orderable() {
            return Err(invalid(format!(
                "`{}` is {}; rank association needs orderable values",
                c.name(),
                c.kind().name()
            )));
        }
    }
    if x.len() < 3 {
        return Err(invalid(format!("{} observations; at least 3 are needed", x.len())));
    }
    Ok(())
}

fn zero_variance(c: &Column) -> Error {
    invalid(format!("residuals of `{}` have zero variance (constant column?)", c.name()))
}

/// Fit of one margin on `z`. With no covariates a rank-based spec reduces to
/// the empirical fit, so partial Spearman on empty `Z` is Spearman.
pub(crate) fn margin_fit(c: &Column, z: &DesignMatrix, spec: FitterSpec) -> Result<ModelFit> {
    if z.ncols() == 0 && spec.is_rank_based() {
        fit_empirical(c)
    } else {
        spec.fit(c, z)
    }
}

pub(crate) fn margin_psr(c: &Column, z: &DesignMatrix, spec: FitterSpec) -> Result<(PsrVector, Vec<String>)> {
    let fit = margin_fit(c, z, spec).map_err(|e| {
        log::error!("fitting `{}` with {spec}: {e}", c.name());
        e
    })?;
    let warnings = fit
        .warnings
        .iter()
        .map(|w| format!("{}: {w}", c.name()))
        .collect();
    Ok((psr_all(&fit, c, z)?, warnings))
}

/// Spearman's rank correlation as the correlation of empirical residuals.
pub fn spearman(x: &Column, y: &Column, cfg: &ResamplingConfig) -> Result<AssocResult> {
    check_pair(x, y)?;
    let n = x.len();
    partial_inner(
        x,
        y,
        &DesignMatrix::empty(n),
        FitterSpec::Empirical,
        FitterSpec::Empirical,
        Statistic::Correlation,
        Method::Spearman,
        cfg,
    )
}

/// Correlation of residuals from fits of `x` on `z` and `y` on `z`.
pub fn partial_spearman(
    x: &Column,
    y: &Column,
    z: &DesignMatrix,
    x_model: FitterSpec,
    y_model: FitterSpec,
    cfg: &ResamplingConfig,
) -> Result<AssocResult> {
    check_pair(x, y)?;
    let method = Method::PartialSpearman;
    partial_inner(x, y, z, x_model, y_model, Statistic::Correlation, method, cfg)
}

/// Mean product of the two residual vectors, `E[r_x r_y]`.
pub fn psr_covariance(
    x: &Column,
    y: &Column,
    z: &DesignMatrix,
    x_model: FitterSpec,
    y_model: FitterSpec,
    cfg: &ResamplingConfig,
) -> Result<AssocResult> {
    check_pair(x, y)?;
    let method = Method::PsrCovariance;
    partial_inner(x, y, z, x_model, y_model, Statistic::MeanProduct, method, cfg)
}

#[allow(clippy::too_many_arguments)]
fn partial_inner(
    x: &Column,
    y: &Column,
    z: &DesignMatrix,
    x_model: FitterSpec,
    y_model: FitterSpec,
    stat: Statistic,
    method: Method,
    cfg: &ResamplingConfig,
) -> Result<AssocResult> {
    if z.nrows() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: z.nrows(),
        });
    }
    let (rx, mut warnings) = margin_psr(x, z, x_model)?;
    let (ry, wy) = margin_psr(y, z, y_model)?;
    warnings.extend(wy);
    let estimate = match stat {
        Statistic::Correlation => pearson(&rx.values, &ry.values).ok_or_else(|| {
            if pearson(&rx.values, &rx.values).is_none() {
                zero_variance(x)
            } else {
                zero_variance(y)
            }
        })?,
        Statistic::MeanProduct => mean_product(&rx.values, &ry.values),
    };
    let refit = |rows: &[usize]| -> Result<f64> {
        let (xs, ys, zs) = (x.select(rows), y.select(rows), z.select_rows(rows));
        let (a, _) = margin_psr(&xs, &zs, x_model)?;
        let (b, _) = margin_psr(&ys, &zs, y_model)?;
        match stat {
            Statistic::Correlation => {
                pearson(&a.values, &b.values).ok_or_else(|| invalid("constant residuals in resample"))
            }
            Statistic::MeanProduct => Ok(mean_product(&a.values, &b.values)),
        }
    };
    let inference = infer(stat, &rx.values, &ry.values, cfg, 0, refit)?;
    warnings.extend(inference.warnings);
    Ok(AssocResult {
        estimate,
        ci_low: inference.ci.map(|c| c.0),
        ci_high: inference.ci.map(|c| c.1),
        p_value: inference.p_value,
        method,
        n_used: x.len(),
        resampling: inference.runs,
        warnings,
    })
}

/// Variance of the residual of a draw from a discrete distribution with
/// probabilities `f`: `(1 - sum f^3) / 3`.
pub fn psr_variance_discrete(f: &[f64]) -> Result<f64> {
    if f.is_empty() || f.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(invalid("probabilities must be nonnegative and finite"));
    }
    let total: f64 = f.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(invalid(format!("probabilities sum to {total}, not 1")));
    }
    Ok((1.0 - f.iter().map(|p| p * p * p).sum::<f64>()) / 3.0)
}

/// Whether `kind` is treated as a set of strata by [`conditional_spearman`].
pub(crate) fn is_categorical(kind: &Kind) -> bool {
    matches!(kind, Kind::Ordinal(_) | Kind::Binary | Kind::Count)
}
