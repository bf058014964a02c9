use nalgebra::DVector;

use crate::data::{Column, DesignMatrix, Kind};
use crate::error::{invalid, Error, Result};
use crate::fit::glm::with_intercept;
use crate::fit::{check_rows, Family, ModelFit};

struct LeastSquares {
    coef: DVector<f64>,
    fitted: Vec<f64>,
    residuals: Vec<f64>,
}

fn least_squares(y: &Column, x: &DesignMatrix) -> Result<LeastSquares> {
    check_rows(y, x)?;
    if matches!(y.kind(), Kind::RightCensored | Kind::Ordinal(_)) {
        return Err(invalid(format!(
            "`{}` is {}; linear models need a numeric outcome",
            y.name(),
            y.kind().name()
        )));
    }
    let yv = y.numeric()?;
    let xm = with_intercept(x);
    let (n, q) = xm.shape();
    if n <= q {
        return Err(invalid(format!("{n} observations for {q} parameters")));
    }
    x.check_rank()?;
    let svd = xm.clone().svd(true, true);
    let coef = svd
        .solve(&DVector::from_column_slice(&yv), 1e-12)
        .map_err(|e| invalid(e.to_string()))?;
    let fitted: Vec<f64> = (0..n).map(|i| mean_at(&coef, &x.row(i))).collect();
    let residuals = yv.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    Ok(LeastSquares {
        coef,
        fitted,
        residuals,
    })
}

/// Fitted mean for one design row; shared by fitting and prediction so the
/// residuals are reproduced bit for bit.
fn mean_at(coef: &DVector<f64>, row: &[f64]) -> f64 {
    coef[0] + row.iter().zip(coef.iter().skip(1)).map(|(x, b)| x * b).sum::<f64>()
}

fn gaussian_loglik(residuals: &[f64]) -> (f64, f64) {
    let n = residuals.len() as f64;
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let sigma = (rss / n).sqrt();
    let ll = -0.5 * n * ((2.0 * std::f64::consts::PI * sigma * sigma).ln() + 1.0);
    (sigma, ll)
}

fn base_fit(family: Family, ls: &LeastSquares, x: &DesignMatrix, scale: Option<f64>, ll: f64) -> ModelFit {
    ModelFit {
        family,
        alpha: vec![ls.coef[0]],
        beta: ls.coef.iter().skip(1).copied().collect(),
        scale,
        loglik: ll,
        converged: true,
        iterations: 0,
        gradient_norm: 0.0,
        loglik_trace: vec![ll],
        warnings: Vec::new(),
        term_names: x.term_names.clone(),
        n_obs: ls.residuals.len(),
    }
}

/// Normal linear model; `sigma` is the maximum-likelihood estimate `sqrt(RSS/n)`.
pub fn fit_linear_normal(y: &Column, x: &DesignMatrix) -> Result<ModelFit> {
    let ls = least_squares(y, x)?;
    let (sigma, ll) = gaussian_loglik(&ls.residuals);
    let scale = ls.fitted.iter().fold(1.0f64, |m, f| m.max(f.abs()));
    if !(sigma > 1e-10 * scale) {
        return Err(Error::DegenerateFit(format!(
            "residual standard deviation is {sigma:e}; outcome is an exact linear function of the design"
        )));
    }
    Ok(base_fit(Family::LinearNormal, &ls, x, Some(sigma), ll))
}

/// Least squares whose error distribution is the empirical distribution of the
/// residuals. The resulting residuals are
/// `(#{e_j < e_i} - #{e_j > e_i}) / n`.
pub fn fit_linear_empirical(y: &Column, x: &DesignMatrix) -> Result<ModelFit> {
    let ls = least_squares(y, x)?;
    let (_, ll) = gaussian_loglik(&ls.residuals);
    let family = Family::LinearEmpirical {
        residuals: ls.residuals.clone(),
    };
    Ok(base_fit(family, &ls, x, None, ll))
}
