use serde::Serialize;

use crate::dist::{normal_cdf, normal_quantile};
use crate::error::{invalid, Result};

/// Link of a cumulative-link model, `g[P(Y <= y_j | x)] = alpha_j - x'beta`.
///
/// Each variant is described through its inverse `F = g^{-1}`, a CDF on the
/// real line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CumLink {
    Logit,
    Probit,
    /// `g(p) = log(-log(1 - p))`; extreme-value (minimum) errors.
    Cloglog,
    /// `g(p) = -log(-log(p))`; extreme-value (maximum) errors.
    Loglog,
}

fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl CumLink {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "logit" => Ok(Self::Logit),
            "probit" => Ok(Self::Probit),
            "cloglog" => Ok(Self::Cloglog),
            "loglog" => Ok(Self::Loglog),
            other => Err(invalid(format!("unknown link `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Logit => "logit",
            Self::Probit => "probit",
            Self::Cloglog => "cloglog",
            Self::Loglog => "loglog",
        }
    }

    pub fn cdf(self, x: f64) -> f64 {
        match self {
            Self::Logit => expit(x),
            Self::Probit => normal_cdf(x),
            Self::Cloglog => -(-x.exp()).exp_m1(),
            Self::Loglog => (-(-x).exp()).exp(),
        }
    }

    /// `1 - cdf(x)` without cancellation.
    pub fn sf(self, x: f64) -> f64 {
        match self {
            Self::Logit => expit(-x),
            Self::Probit => normal_cdf(-x),
            Self::Cloglog => (-x.exp()).exp(),
            Self::Loglog => -(-(-x).exp()).exp_m1(),
        }
    }

    pub fn pdf(self, x: f64) -> f64 {
        match self {
            Self::Logit => expit(x) * expit(-x),
            Self::Probit => (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            Self::Cloglog => (x - x.exp()).exp(),
            Self::Loglog => (-x - (-x).exp()).exp(),
        }
    }

    /// Derivative of the density.
    pub fn dpdf(self, x: f64) -> f64 {
        let f = self.pdf(x);
        if f == 0.0 {
            return 0.0;
        }
        match self {
            Self::Logit => f * (expit(-x) - expit(x)),
            Self::Probit => -x * f,
            Self::Cloglog => f * (1.0 - x.exp()),
            Self::Loglog => f * ((-x).exp() - 1.0),
        }
    }

    /// The link itself, `g(p) = F^{-1}(p)`.
    pub fn quantile(self, p: f64) -> f64 {
        match self {
            Self::Logit => (p / (1.0 - p)).ln(),
            Self::Probit => normal_quantile(p),
            Self::Cloglog => (-(-p).ln_1p()).ln(),
            Self::Loglog => -(-p.ln()).ln(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [CumLink; 4] = [CumLink::Logit, CumLink::Probit, CumLink::Cloglog, CumLink::Loglog];

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        for link in ALL {
            for &x in &[-4.0, -1.3, 0.0, 0.7, 2.5] {
                let fd = (link.cdf(x + h) - link.cdf(x - h)) / (2.0 * h);
                assert!((fd - link.pdf(x)).abs() < 1e-8, "{link:?} pdf at {x}");
                let fd2 = (link.pdf(x + h) - link.pdf(x - h)) / (2.0 * h);
                assert!((fd2 - link.dpdf(x)).abs() < 1e-8, "{link:?} dpdf at {x}");
                assert!((link.cdf(x) + link.sf(x) - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for link in ALL {
            for &p in &[1e-6, 0.1, 0.5, 0.93, 1.0 - 1e-6] {
                let x = link.quantile(p);
                assert!((link.cdf(x) - p).abs() < 1e-12 * (1.0 + p), "{link:?} at {p}");
            }
        }
    }

    #[test]
    fn extreme_arguments_stay_finite() {
        for link in ALL {
            for &x in &[-800.0, 800.0] {
                assert!(link.cdf(x).is_finite() && link.pdf(x).is_finite() && link.dpdf(x).is_finite());
            }
        }
    }
}
