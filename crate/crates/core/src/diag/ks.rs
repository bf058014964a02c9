use serde::Serialize;

use crate::diag::{has_ties, TIES_WARNING};
use crate::error::{invalid, Result};
use crate::psr::PsrVector;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub warnings: Vec<String>,
}

/// `P(K > t)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t < 1.18 {
        // Jacobi theta form converges fast for small t.
        let pi2 = std::f64::consts::PI.powi(2);
        let s: f64 = (1..=20)
            .map(|k| {
                let m = (2 * k - 1) as f64;
                (-m * m * pi2 / (8.0 * t * t)).exp()
            })
            .sum();
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / t * s).clamp(0.0, 1.0)
    } else {
        let s: f64 = (1..=100)
            .map(|k| {
                let k = k as f64;
                let sign = if k as u64 % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * k * k * t * t).exp()
            })
            .sum();
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// One-sample Kolmogorov-Smirnov test against a continuous `cdf`, with the
/// asymptotic p-value and Stephens' small-sample correction.
pub fn ks_test(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    let n = sample.len();
    if n == 0 {
        return Err(invalid("empty sample"));
    }
    if sample.iter().any(|v| v.is_nan()) {
        return Err(invalid("sample contains NaN"));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let nf = n as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / nf - f).max(f - i as f64 / nf)
        })
        .fold(0.0, f64::max);
    let sq = nf.sqrt();
    let p_value = kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d);
    let mut warnings = Vec::new();
    if has_ties(&sorted) {
        warnings.push(TIES_WARNING.to_string());
    }
    Ok(KsResult {
        statistic: d,
        p_value,
        n,
        warnings,
    })
}

pub const KS_MIN_N: usize = 8;

/// Kolmogorov-Smirnov test of residuals against Uniform(-1, 1).
pub fn ks_uniform(p: &PsrVector) -> Result<KsResult> {
    if p.len() < KS_MIN_N {
        return Err(invalid(format!(
            "uniformity test needs at least {KS_MIN_N} residuals, got {}",
            p.len()
        )));
    }
    ks_test(&p.values, |x| ((x + 1.0) / 2.0).clamp(0.0, 1.0))
}
