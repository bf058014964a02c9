//! Batch partial Spearman scan over many predictor columns.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

use crate::assoc::{margin_fit, margin_psr};
use crate::assoc::pearson;
use crate::assoc::resample::{permutation_p, Statistic};
use crate::data::{Column, DesignMatrix};
use crate::error::{invalid, Error, Result};
use crate::fit::{fit_linear_empirical, FitterSpec, Family};
use crate::psr::{psr_all, psr_from_omers, PsrVector};

/// Predictor residuals with a standard deviation below this, or a fit that
/// separates, mark a predictor as fully explained by the covariates.
pub const DEGENERATE_SD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanConfig {
    pub y_model: FitterSpec,
    pub x_model: FitterSpec,
    pub perm: usize,
    pub seed: u64,
    pub threads: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            y_model: FitterSpec::LinearEmpirical,
            x_model: FitterSpec::default(),
            perm: 1000,
            seed: 0,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    /// Position of the predictor in the input.
    pub index: usize,
    pub name: String,
    pub estimate: Option<f64>,
    pub p_value: Option<f64>,
    pub n_used: usize,
    /// `None` when the predictor was analysed, otherwise why it was skipped.
    pub failure: Option<String>,
    pub warnings: Vec<String>,
}

impl ScanRow {
    fn failed(index: usize, name: &str, n_used: usize, reason: String) -> Self {
        Self {
            index,
            name: name.to_string(),
            estimate: None,
            p_value: None,
            n_used,
            failure: Some(reason),
            warnings: Vec::new(),
        }
    }
}

/// Residuals of `y` on `z`, computed once for the whole scan. Least squares
/// with empirical errors goes through the residual-rank form directly.
fn outcome_psr(y: &Column, z: &DesignMatrix, spec: FitterSpec) -> Result<PsrVector> {
    if spec == FitterSpec::LinearEmpirical {
        let fit = fit_linear_empirical(y, z)?;
        let Family::LinearEmpirical { residuals } = &fit.family else {
            unreachable!()
        };
        return psr_from_omers(residuals);
    }
    let (r, warnings) = margin_psr(y, z, spec)?;
    for w in warnings {
        log::warn!("{w}");
    }
    Ok(r)
}

fn sd(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt()
}

/// Partial Spearman of `y` with each predictor given `z`. A failure of the
/// outcome model aborts; a failing predictor is reported and the scan goes on.
/// Results are in input order and do not depend on `threads`.
pub fn batch_partial_spearman(
    y: &Column,
    z: &DesignMatrix,
    predictors: &[Column],
    cfg: &ScanConfig,
) -> Result<Vec<ScanRow>> {
    if y.len() != z.nrows() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: z.nrows(),
        });
    }
    if cfg.threads == 0 {
        return Err(invalid("threads must be at least 1"));
    }
    let ry = outcome_psr(y, z, cfg.y_model)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| invalid(e.to_string()))?;
    Ok(pool.install(|| {
        predictors
            .par_iter()
            .enumerate()
            .map(|(i, x)| scan_one(i, x, &ry, z, cfg))
            .collect()
    }))
}

fn scan_one(index: usize, x: &Column, ry: &PsrVector, z: &DesignMatrix, cfg: &ScanConfig) -> ScanRow {
    let name = x.name();
    if x.len() != ry.len() {
        let reason = format!("has {} rows, outcome has {}", x.len(), ry.len());
        return ScanRow::failed(index, name, 0, reason);
    }
    if !x.kind().is_orderable() {
        return ScanRow::failed(index, name, 0, format!("{} predictors are not supported", x.kind().name()));
    }
    let rows: Vec<usize> = (0..x.len()).filter(|&i| !x.is_missing(i)).collect();
    let n_used = rows.len();
    let (xs, zs, ys) = if n_used == x.len() {
        (x.clone(), z.clone(), ry.clone())
    } else {
        (x.select(&rows), z.select_rows(&rows), ry.select(&rows))
    };
    let values = match xs.numeric() {
        Ok(v) => v,
        Err(e) => return ScanRow::failed(index, name, n_used, e.to_string()),
    };
    if values.iter().all(|v| *v == values[0]) || values.is_empty() {
        return ScanRow::failed(index, name, n_used, "fewer than 2 observed levels".into());
    }
    let fit = match margin_fit(&xs, &zs, cfg.x_model) {
        Ok(f) => f,
        Err(e) => return ScanRow::failed(index, name, n_used, format!("fit failed: {e}")),
    };
    if !fit.converged {
        // Separated by the covariates: the limiting residuals are all zero.
        let reason = format!("degenerate: {}", fit.warnings.join("; "));
        return ScanRow::failed(index, name, n_used, reason);
    }
    let rx = match psr_all(&fit, &xs, &zs) {
        Ok(r) => r,
        Err(e) => return ScanRow::failed(index, name, n_used, e.to_string()),
    };
    let warnings = fit.warnings.clone();
    let spread = sd(&rx.values);
    if spread < DEGENERATE_SD {
        let reason = format!("degenerate: residual sd {spread:.2e}, predictor is explained by the covariates");
        return ScanRow::failed(index, name, n_used, reason);
    }
    let Some(estimate) = pearson(&rx.values, &ys.values) else {
        return ScanRow::failed(index, name, n_used, "outcome residuals are constant".into());
    };
    let p_value =
        (cfg.perm > 0).then(|| permutation_p(Statistic::Correlation, &rx.values, &ys.values, cfg.perm, cfg.seed, index as u64));
    ScanRow {
        index,
        name: name.to_string(),
        estimate: Some(estimate),
        p_value,
        n_used,
        failure: None,
        warnings,
    }
}

/// Orders rows by p-value, then by larger `|estimate|`, then input order.
/// Failed rows go last.
pub fn rank_rows(rows: &mut [ScanRow]) {
    let key = |r: &ScanRow| (r.p_value.unwrap_or(f64::INFINITY), -r.estimate.map_or(0.0, f64::abs));
    rows.sort_by(|a, b| {
        let (ka, kb) = (key(a), key(b));
        ka.0.total_cmp(&kb.0)
            .then(ka.1.total_cmp(&kb.1))
            .then(a.failure.is_some().cmp(&b.failure.is_some()))
            .then(a.index.cmp(&b.index))
    });
    debug_assert!(rows.windows(2).all(|w| key(&w[0]).0.partial_cmp(&key(&w[1]).0) != Some(Ordering::Greater)));
}
