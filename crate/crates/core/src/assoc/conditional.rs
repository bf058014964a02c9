use crate::assoc::resample::{infer, ResamplingConfig, Statistic};
use crate::assoc::{check_pair, is_categorical, margin_psr, pearson, zero_variance, AssocResult, Method};
use crate::data::{quantile, Column, DesignMatrix, Kind};
use crate::error::{invalid, Error, Result};
use crate::fit::FitterSpec;

pub const MIN_STRATUM: usize = 5;
pub const MIN_CONTINUOUS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// Silverman's rule of thumb on `z`.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalConfig {
    pub bandwidth: Bandwidth,
    pub grid_points: usize,
    pub x_model: FitterSpec,
    pub y_model: FitterSpec,
    /// Applied within each stratum of a categorical `z`.
    pub resampling: ResamplingConfig,
}

impl Default for ConditionalConfig {
    fn default() -> Self {
        Self {
            bandwidth: Bandwidth::Auto,
            grid_points: 50,
            x_model: FitterSpec::default(),
            y_model: FitterSpec::default(),
            resampling: ResamplingConfig::none(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalPoint {
    pub z: f64,
    /// Level label for categorical `z`, formatted value otherwise.
    pub label: String,
    pub result: AssocResult,
}

/// Rank correlation of `x` and `y` given `z`: within each level of a
/// categorical `z`, or Gaussian-kernel weighted on a grid over a continuous `z`.
pub fn conditional_spearman(x: &Column, y: &Column, z: &Column, cfg: &ConditionalConfig) -> Result<Vec<ConditionalPoint>> {
    check_pair(x, y)?;
    if z.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: z.len(),
        });
    }
    let zv = z.numeric()?;
    if is_categorical(z.kind()) {
        stratified(x, y, z, &zv, cfg)
    } else {
        kernel(x, y, z, &zv, cfg)
    }
}

fn stratified(x: &Column, y: &Column, z: &Column, zv: &[f64], cfg: &ConditionalConfig) -> Result<Vec<ConditionalPoint>> {
    let mut levels = zv.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mut out = Vec::with_capacity(levels.len());
    for (s, &level) in levels.iter().enumerate() {
        let rows: Vec<usize> = (0..zv.len()).filter(|&i| zv[i] == level).collect();
        let label = match z.kind() {
            Kind::Ordinal(names) => names[level as usize].clone(),
            _ => crate::data::format_real(level),
        };
        if rows.len() < MIN_STRATUM {
            return Err(invalid(format!(
                "stratum {}={label} has {} rows; at least {MIN_STRATUM} are needed",
                z.name(),
                rows.len()
            )));
        }
        let (xs, ys) = (x.select(&rows), y.select(&rows));
        let none = DesignMatrix::empty(rows.len());
        let (rx, mut warnings) = margin_psr(&xs, &none, cfg.x_model)?;
        let (ry, wy) = margin_psr(&ys, &none, cfg.y_model)?;
        warnings.extend(wy);
        let estimate = pearson(&rx.values, &ry.values).ok_or_else(|| {
            if pearson(&rx.values, &rx.values).is_none() {
                zero_variance(x)
            } else {
                zero_variance(y)
            }
        })?;
        let refit = |idx: &[usize]| -> Result<f64> {
            let (a, b) = (xs.select(idx), ys.select(idx));
            let none = DesignMatrix::empty(idx.len());
            let (ra, _) = margin_psr(&a, &none, cfg.x_model)?;
            let (rb, _) = margin_psr(&b, &none, cfg.y_model)?;
            pearson(&ra.values, &rb.values).ok_or_else(|| invalid("constant residuals in resample"))
        };
        let inf = infer(Statistic::Correlation, &rx.values, &ry.values, &cfg.resampling, s as u64, refit)?;
        warnings.extend(inf.warnings);
        out.push(ConditionalPoint {
            z: level,
            label,
            result: AssocResult {
                estimate,
                ci_low: inf.ci.map(|c| c.0),
                ci_high: inf.ci.map(|c| c.1),
                p_value: inf.p_value,
                method: Method::ConditionalSpearman,
                n_used: rows.len(),
                resampling: inf.runs,
                warnings,
            },
        });
    }
    Ok(out)
}

/// `0.9 * min(sd, IQR / 1.34) * n^(-1/5)`, falling back to the standard
/// deviation when the IQR is zero.
pub fn silverman_bandwidth(z: &[f64]) -> f64 {
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    let sd = (z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut sorted = z.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * n.powf(-0.2)
}

fn kernel(x: &Column, y: &Column, z: &Column, zv: &[f64], cfg: &ConditionalConfig) -> Result<Vec<ConditionalPoint>> {
    let n = zv.len();
    if n < MIN_CONTINUOUS {
        return Err(invalid(format!(
            "{n} observations; a continuous conditioning variable needs at least {MIN_CONTINUOUS}"
        )));
    }
    let h = match cfg.bandwidth {
        Bandwidth::Auto => silverman_bandwidth(zv),
        Bandwidth::Fixed(h) => h,
    };
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid(format!("bandwidth must be positive, got {h}")));
    }
    if cfg.grid_points < 2 {
        return Err(invalid("the grid needs at least 2 points"));
    }
    let design = DesignMatrix::from_columns(&[z.name()], &[zv.to_vec()])?;
    let (rx, mut warnings) = margin_psr(x, &design, cfg.x_model)?;
    let (ry, wy) = margin_psr(y, &design, cfg.y_model)?;
    warnings.extend(wy);
    let lo = zv.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = zv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let m = cfg.grid_points;
    (0..m)
        .map(|k| {
            let g = lo + (hi - lo) * k as f64 / (m - 1) as f64;
            let u2: Vec<f64> = zv.iter().map(|v| ((v - g) / h).powi(2)).collect();
            let nearest = u2.iter().copied().fold(f64::INFINITY, f64::min);
            let w: Vec<f64> = u2.iter().map(|u| (-0.5 * (u - nearest)).exp()).collect();
            let estimate = weighted_pearson(&w, &rx.values, &ry.values).ok_or_else(|| {
                Error::DegenerateFit(format!("no local variation near {}={g}; increase the bandwidth", z.name()))
            })?;
            Ok(ConditionalPoint {
                z: g,
                label: crate::data::format_real(g),
                result: AssocResult {
                    estimate,
                    ci_low: None,
                    ci_high: None,
                    p_value: None,
                    method: Method::ConditionalSpearman,
                    n_used: n,
                    resampling: Vec::new(),
                    warnings: warnings.clone(),
                },
            })
        })
        .collect()
}

fn weighted_pearson(w: &[f64], x: &[f64], y: &[f64]) -> Option<f64> {
    let sw: f64 = w.iter().sum();
    let mx = w.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() / sw;
    let my = w.iter().zip(y).map(|(w, v)| w * v).sum::<f64>() / sw;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..w.len() {
        let (dx, dy) = (x[i] - mx, y[i] - my);
        sxy += w[i] * dx * dy;
        sxx += w[i] * dx * dx;
        syy += w[i] * dy * dy;
    }
    if !(sxx > 1e-300 && syy > 1e-300) {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}
