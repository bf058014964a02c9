//! Model-fitting engines. Each fit yields a per-row [`FittedDistribution`].

mod cumulative;
mod empirical;
mod glm;
mod linear;
mod links;

use std::fmt;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::data::{Column, DesignMatrix, Kind};
use crate::dist::FittedDistribution;
use crate::error::{invalid, Error, Result};

pub use cumulative::{fit_cumulative_link, CumulativeLinkProblem};
pub use empirical::fit_empirical;
pub use glm::{fit_exponential_survival, fit_poisson};
pub use linear::{fit_linear_empirical, fit_linear_normal};
pub use links::CumLink;

/// Gradient max-norm at which Newton iterations stop.
pub const GRADIENT_TOLERANCE: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 100;
/// Coefficients beyond this magnitude (link scale) indicate separation.
pub const SEPARATION_BOUND: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Link {
    Logit,
    Probit,
    Cloglog,
    Loglog,
    IdentityNormal,
    LogPoisson,
    LogExponential,
}

impl From<CumLink> for Link {
    fn from(l: CumLink) -> Self {
        match l {
            CumLink::Logit => Link::Logit,
            CumLink::Probit => Link::Probit,
            CumLink::Cloglog => Link::Cloglog,
            CumLink::Loglog => Link::Loglog,
        }
    }
}

/// Model family plus whatever the family needs to build predictions.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    /// Intercept-only empirical distribution.
    Empirical { support: Vec<f64>, cum_probs: Vec<f64> },
    CumulativeLink { link: CumLink, support: Vec<f64> },
    LinearNormal,
    /// Least squares with the pooled residuals as error distribution.
    LinearEmpirical { residuals: Vec<f64> },
    Poisson,
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelFit {
    pub family: Family,
    /// Coefficients of the design columns (no intercept).
    pub beta: Vec<f64>,
    /// Intercept(s): one for parametric families, `J-1` increasing cut points
    /// for cumulative-link fits, none for the empirical fit.
    pub alpha: Vec<f64>,
    /// Residual standard deviation (maximum likelihood) for linear fits.
    pub scale: Option<f64>,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// Log-likelihood after each accepted iteration, starting value first.
    pub loglik_trace: Vec<f64>,
    pub warnings: Vec<String>,
    pub term_names: Vec<String>,
    pub n_obs: usize,
}

impl ModelFit {
    pub fn link(&self) -> Option<Link> {
        match &self.family {
            Family::Empirical { .. } => None,
            Family::CumulativeLink { link, .. } => Some((*link).into()),
            Family::LinearNormal | Family::LinearEmpirical { .. } => Some(Link::IdentityNormal),
            Family::Poisson => Some(Link::LogPoisson),
            Family::Exponential => Some(Link::LogExponential),
        }
    }

    /// Number of estimated parameters: coefficients, intercepts and scale.
    pub fn n_params(&self) -> usize {
        let support = match &self.family {
            Family::Empirical { support, .. } => support.len() - 1,
            _ => 0,
        };
        self.beta.len() + self.alpha.len() + self.scale.is_some() as usize + support
    }

    pub fn aic(&self) -> f64 {
        -2.0 * self.loglik + 2.0 * self.n_params() as f64
    }

    fn linear_predictor(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.beta.len() {
            return Err(Error::DimensionMismatch {
                expected: self.beta.len(),
                got: row.len(),
            });
        }
        Ok(row.iter().zip(&self.beta).map(|(x, b)| x * b).sum())
    }

    /// Fitted conditional distribution for one design row.
    pub fn predict_distribution(&self, row: &[f64]) -> Result<FittedDistribution> {
        let eta = self.linear_predictor(row)?;
        match &self.family {
            Family::Empirical { support, cum_probs } => {
                FittedDistribution::discrete(support.clone(), cum_probs.clone())
            }
            Family::CumulativeLink { link, support } => {
                let mut cum: Vec<f64> = self.alpha.iter().map(|a| link.cdf(a - eta)).collect();
                cum.push(1.0);
                FittedDistribution::discrete(support.clone(), cum)
            }
            Family::LinearNormal => {
                FittedDistribution::normal(self.alpha[0] + eta, self.scale.unwrap_or(f64::NAN))
            }
            Family::LinearEmpirical { residuals } => {
                FittedDistribution::shifted_empirical(self.alpha[0] + eta, residuals.clone())
            }
            Family::Poisson => glm::poisson_distribution((self.alpha[0] + eta).exp()),
            Family::Exponential => FittedDistribution::exponential((self.alpha[0] + eta).exp()),
        }
    }

    /// Category probabilities of a discrete prediction (convenience for reports).
    pub fn predict_probs(&self, row: &[f64]) -> Result<Vec<f64>> {
        match self.predict_distribution(row)? {
            FittedDistribution::DiscreteSupport { cum_probs, .. } => Ok(cum_probs
                .iter()
                .scan(0.0, |prev, &c| {
                    let p = c - *prev;
                    *prev = c;
                    Some(p)
                })
                .collect()),
            _ => Err(invalid("model does not predict a discrete distribution")),
        }
    }
}

/// Which fitter to apply to a margin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitterSpec {
    Empirical,
    Linear,
    LinearEmpirical,
    Orm(CumLink),
    Poisson,
    ExpSurv,
}

impl Default for FitterSpec {
    fn default() -> Self {
        FitterSpec::Orm(CumLink::Logit)
    }
}

impl FitterSpec {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "empirical" => Self::Empirical,
            "linear" => Self::Linear,
            "linear-empirical" => Self::LinearEmpirical,
            "poisson" => Self::Poisson,
            "exp-surv" => Self::ExpSurv,
            other => match other.strip_prefix("orm-") {
                Some(link) => Self::Orm(CumLink::parse(link)?),
                None => return Err(invalid(format!("unknown model `{other}`"))),
            },
        })
    }

    /// Whether an intercept-only fit of this kind is the empirical distribution.
    pub fn is_rank_based(self) -> bool {
        matches!(self, Self::Empirical | Self::Orm(_))
    }

    pub fn fit(self, y: &Column, x: &DesignMatrix) -> Result<ModelFit> {
        match self {
            Self::Empirical => {
                if x.ncols() > 0 {
                    return Err(invalid("the empirical model takes no covariates"));
                }
                fit_empirical(y)
            }
            Self::Linear => fit_linear_normal(y, x),
            Self::LinearEmpirical => fit_linear_empirical(y, x),
            Self::Orm(link) => fit_cumulative_link(y, x, link),
            Self::Poisson => fit_poisson(y, x),
            Self::ExpSurv => fit_exponential_survival(y, x),
        }
    }
}

impl fmt::Display for FitterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Empirical => write!(f, "empirical"),
            Self::Linear => write!(f, "linear"),
            Self::LinearEmpirical => write!(f, "linear-empirical"),
            Self::Orm(l) => write!(f, "orm-{}", l.name()),
            Self::Poisson => write!(f, "poisson"),
            Self::ExpSurv => write!(f, "exp-surv"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LrTest {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Likelihood-ratio test of a nested `reduced` model against `full`.
pub fn likelihood_ratio_test(reduced: &ModelFit, full: &ModelFit) -> Result<LrTest> {
    let (pr, pf) = (reduced.n_params(), full.n_params());
    if pf <= pr {
        return Err(invalid("full model must have more parameters than the reduced model"));
    }
    let statistic = (2.0 * (full.loglik - reduced.loglik)).max(0.0);
    let df = pf - pr;
    let chi = ChiSquared::new(df as f64).map_err(|e| invalid(e.to_string()))?;
    Ok(LrTest {
        statistic,
        df,
        p_value: chi.sf(statistic),
    })
}

/// Numeric outcome values, refusing right-censored columns.
pub(crate) fn numeric_outcome(y: &Column) -> Result<Vec<f64>> {
    if matches!(y.kind(), Kind::RightCensored) {
        return Err(invalid(format!(
            "outcome `{}` is right-censored; use the exponential survival model",
            y.name()
        )));
    }
    y.numeric()
}

pub(crate) fn check_rows(y: &Column, x: &DesignMatrix) -> Result<()> {
    if y.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: x.nrows(),
        });
    }
    Ok(())
}

/// Sorted distinct values and each observation's index into them.
pub(crate) fn support_codes(y: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut support = y.to_vec();
    support.sort_by(f64::total_cmp);
    support.dedup();
    let codes = y
        .iter()
        .map(|v| support.partition_point(|s| s < v))
        .collect();
    (support, codes)
}
