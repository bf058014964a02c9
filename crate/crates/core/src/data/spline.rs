//! Restricted (natural) cubic spline basis in the truncated-power form.
//!
//! For knots `t_1 < … < t_k` the basis is `x` followed by, for `j = 1..k-2`,
//!
//! ```text
//! [ (x-t_j)+^3 - (x-t_{k-1})+^3 (t_k-t_j)/(t_k-t_{k-1})
//!              + (x-t_k)+^3   (t_{k-1}-t_j)/(t_k-t_{k-1}) ] / (t_k-t_1)^2
//! ```
//!
//! which is linear beyond the boundary knots. The `(t_k - t_1)^2` scaling keeps
//! the nonlinear columns on the same scale as `x`.

use nalgebra::DMatrix;

use crate::error::{invalid, Result};

/// Default knot quantiles for 3 to 7 knots.
pub fn default_knot_quantiles(k: usize) -> Option<&'static [f64]> {
    Some(match k {
        3 => &[0.10, 0.50, 0.90],
        4 => &[0.05, 0.35, 0.65, 0.95],
        5 => &[0.05, 0.275, 0.50, 0.725, 0.95],
        6 => &[0.05, 0.23, 0.41, 0.59, 0.77, 0.95],
        7 => &[0.025, 0.1833, 0.3417, 0.50, 0.6583, 0.8167, 0.975],
        _ => return None,
    })
}

/// Sample quantile with linear interpolation between order statistics
/// (`h = (n-1)p`).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn default_knots(x: &[f64], k: usize) -> Result<Vec<f64>> {
    let probs = default_knot_quantiles(k)
        .ok_or_else(|| invalid(format!("no default knot placement for {k} knots; supply knots")))?;
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(probs.iter().map(|&p| quantile(&sorted, p)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplineBasis {
    pub knots: Vec<f64>,
    /// `n × (k-1)`; column 0 is `x`.
    pub matrix: DMatrix<f64>,
}

/// Restricted cubic spline expansion of `x` with `k` knots.
pub fn rcs_basis(x: &[f64], k: usize, knots: Option<&[f64]>) -> Result<SplineBasis> {
    if k < 3 {
        return Err(invalid("restricted cubic splines need at least 3 knots"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(invalid("spline input must be finite"));
    }
    let mut distinct = x.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < k {
        return Err(invalid(format!(
            "{} distinct values is too few for {k} knots",
            distinct.len()
        )));
    }
    let knots = match knots {
        Some(t) => {
            if t.len() != k {
                return Err(invalid(format!("expected {k} knots, got {}", t.len())));
            }
            t.to_vec()
        }
        None => default_knots(x, k)?,
    };
    if knots.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid(format!("knots must be strictly increasing: {knots:?}")));
    }
    let matrix = rcs_eval(x, &knots);
    Ok(SplineBasis { knots, matrix })
}

/// Evaluates the basis at `x` for fixed knots.
pub fn rcs_eval(x: &[f64], knots: &[f64]) -> DMatrix<f64> {
    let k = knots.len();
    let (t_km1, t_k) = (knots[k - 2], knots[k - 1]);
    let scale = (t_k - knots[0]).powi(2);
    let cube = |v: f64| if v > 0.0 { v * v * v } else { 0.0 };
    DMatrix::from_fn(x.len(), k - 1, |i, j| {
        let xi = x[i];
        if j == 0 {
            return xi;
        }
        let t_j = knots[j - 1];
        (cube(xi - t_j) - cube(xi - t_km1) * (t_k - t_j) / (t_k - t_km1)
            + cube(xi - t_k) * (t_km1 - t_j) / (t_k - t_km1))
            / scale
    })
}
