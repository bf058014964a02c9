//! Probability-scale residuals.
//!
//! For an observation `y` with fitted distribution `F*`, the residual is
//! `r = P(Y* < y) - P(Y* > y) = F*(y-) + F*(y) - 1`, the expected sign of
//! `y - Y*`. It lies in `[-1, 1]`, has mean zero under a correct model and, for
//! continuous outcomes, is Uniform(-1, 1).

use serde::Serialize;

use crate::data::{Column, DesignMatrix, Kind};
use crate::dist::{normal_quantile, FittedDistribution};
use crate::error::{invalid, Error, Result};
use crate::fit::{Family, ModelFit};

/// Residuals aligned to dataset rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsrVector {
    pub values: Vec<f64>,
    /// What produced the residuals, e.g. `orm-logit(stage)`.
    pub source: String,
}

impl PsrVector {
    pub fn new(values: Vec<f64>, source: impl Into<String>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return Err(invalid(format!("residual {v} outside [-1, 1]")));
        }
        Ok(Self {
            values,
            source: source.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        Self {
            values: rows.iter().map(|&i| self.values[i]).collect(),
            source: self.source.clone(),
        }
    }
}

fn checked(r: f64) -> f64 {
    debug_assert!((-1.0..=1.0).contains(&r), "residual {r} outside [-1, 1]");
    r
}

/// `F(y-) + F(y) - 1`.
pub fn psr(y: f64, f: &FittedDistribution) -> f64 {
    checked(f.cdf_left(y) + f.cdf(y) - 1.0)
}

/// Residual for a right-censored time: `F(y) - delta * (1 - F(y-))`.
pub fn psr_censored(y: f64, event: bool, f: &FittedDistribution) -> f64 {
    if event {
        psr(y, f)
    } else {
        checked(f.cdf(y))
    }
}

/// Residuals from the empirical distribution of other residuals (for example
/// least-squares residuals): `(#{e_j < e_i} - #{e_j > e_i}) / n`.
pub fn psr_from_omers(residuals: &[f64]) -> Result<PsrVector> {
    if residuals.iter().any(|r| !r.is_finite()) {
        return Err(invalid("residuals must be finite"));
    }
    let n = residuals.len();
    let mut sorted = residuals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let values = residuals
        .iter()
        .map(|&e| {
            let below = sorted.partition_point(|&s| s < e);
            let above = n - sorted.partition_point(|&s| s <= e);
            (below as f64 - above as f64) / n as f64
        })
        .collect();
    PsrVector::new(values, "empirical-omer")
}

/// One residual per row of `x`, using the censored form for survival outcomes.
pub fn psr_all(fit: &ModelFit, y: &Column, x: &DesignMatrix) -> Result<PsrVector> {
    if y.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: x.nrows(),
        });
    }
    let source = format!("{}({})", family_name(fit), y.name());
    // The empirical fit predicts the same distribution for every row.
    if let Family::Empirical { .. } = fit.family {
        let f = fit.predict_distribution(&[])?;
        let values = y.numeric()?.iter().map(|&v| psr(v, &f)).collect();
        return PsrVector::new(values, source);
    }
    let values = match y.kind() {
        Kind::RightCensored => {
            if fit.family != Family::Exponential {
                return Err(invalid("right-censored outcomes need a survival model"));
            }
            y.survival()?
                .iter()
                .enumerate()
                .map(|(i, s)| Ok(psr_censored(s.time, s.event, &fit.predict_distribution(&x.row(i))?)))
                .collect::<Result<Vec<_>>>()?
        }
        _ => {
            if fit.family == Family::Exponential {
                return Err(invalid("survival model needs a right-censored outcome"));
            }
            y.numeric()?
                .iter()
                .enumerate()
                .map(|(i, &v)| Ok(psr(v, &fit.predict_distribution(&x.row(i))?)))
                .collect::<Result<Vec<_>>>()?
        }
    };
    PsrVector::new(values, source)
}

fn family_name(fit: &ModelFit) -> String {
    match &fit.family {
        Family::Empirical { .. } => "empirical".into(),
        Family::CumulativeLink { link, .. } => format!("orm-{}", link.name()),
        Family::LinearNormal => "linear".into(),
        Family::LinearEmpirical { .. } => "linear-empirical".into(),
        Family::Poisson => "poisson".into(),
        Family::Exponential => "exp-surv".into(),
    }
}

/// `Phi^{-1}((r + 1) / 2)`. Residuals of exactly `±1` map to `±inf`.
pub fn normal_transform(p: &PsrVector) -> Vec<f64> {
    let mut saturated = 0;
    let out = p
        .values
        .iter()
        .map(|&r| {
            if r.abs() >= 1.0 {
                saturated += 1;
                r.signum() * f64::INFINITY
            } else {
                normal_quantile((r + 1.0) / 2.0)
            }
        })
        .collect();
    if saturated > 0 {
        log::warn!("{saturated} residual(s) at ±1 mapped to ±inf by the normal transform");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::normal_cdf;
    use proptest::prelude::*;

    fn stages(probs: &[f64]) -> FittedDistribution {
        FittedDistribution::from_probs((0..probs.len()).map(|k| k as f64).collect(), probs).unwrap()
    }

    #[test]
    fn worked_cervical_residuals() {
        let linear_age = stages(&[0.10, 0.25, 0.27, 0.27, 0.11]);
        assert!((psr(1.0, &linear_age) - -0.55).abs() < 1e-12);
        // 0.26 - (0.21 + 0.12 + 0.03); these probabilities are rounded to two
        // places, so the residual is -0.10 rather than the -0.11 an unrounded
        // fit would give.
        let quadratic_age = stages(&[0.26, 0.38, 0.21, 0.12, 0.03]);
        assert!((psr(1.0, &quadratic_age) - -0.10).abs() < 1e-12);
    }

    #[test]
    fn continuous_median_is_zero() {
        let f = FittedDistribution::normal(3.0, 2.0).unwrap();
        assert_eq!(psr(3.0, &f), 0.0);
        let e = FittedDistribution::exponential(0.5).unwrap();
        assert!(psr(std::f64::consts::LN_2 / 0.5, &e).abs() < 1e-15);
    }

    #[test]
    fn binary_is_observed_minus_expected() {
        let p = 0.3;
        let f = FittedDistribution::discrete(vec![0.0, 1.0], vec![1.0 - p, 1.0]).unwrap();
        assert!((psr(1.0, &f) - (1.0 - p)).abs() < 1e-15);
        assert!((psr(0.0, &f) - (0.0 - p)).abs() < 1e-15);
    }

    #[test]
    fn censored_forms() {
        let e = FittedDistribution::exponential(1.0).unwrap();
        assert!((psr_censored(std::f64::consts::LN_2, false, &e) - 0.5).abs() < 1e-15);
        assert_eq!(psr_censored(0.8, true, &e), psr(0.8, &e));
    }

    #[test]
    fn omer_residuals() {
        let r = psr_from_omers(&[-1.0, 0.0, 2.0]).unwrap().values;
        assert_eq!(r, vec![-2.0 / 3.0, 0.0, 2.0 / 3.0]);
        assert_eq!(psr_from_omers(&[4.2; 6]).unwrap().values, vec![0.0; 6]);
        assert_eq!(psr_from_omers(&[7.0]).unwrap().values, vec![0.0]);
    }

    #[test]
    fn normal_transform_values() {
        let target = 2.0 * normal_cdf(1.0) - 1.0;
        let p = PsrVector::new(vec![0.0, target, -target, 1.0, -1.0], "t").unwrap();
        let z = normal_transform(&p);
        assert_eq!(z[0], 0.0);
        assert!((z[1] - 1.0).abs() < 1e-12);
        assert_eq!(z[1], -z[2]);
        assert_eq!(z[3], f64::INFINITY);
        assert_eq!(z[4], f64::NEG_INFINITY);
    }

    proptest! {
        #[test]
        fn omer_residuals_are_rescaled_midranks(e in proptest::collection::vec(-3i32..3, 1..40)) {
            let e: Vec<f64> = e.into_iter().map(f64::from).collect();
            let n = e.len() as f64;
            let r = psr_from_omers(&e).unwrap().values;
            for (i, &ei) in e.iter().enumerate() {
                let less = e.iter().filter(|&&x| x < ei).count() as f64;
                let ties = e.iter().filter(|&&x| x == ei).count() as f64;
                let midrank = less + (ties + 1.0) / 2.0;
                prop_assert!((r[i] - (2.0 * midrank - n - 1.0) / n).abs() < 1e-12);
            }
        }

        #[test]
        fn bounded_monotone_and_reducible(
            probs in proptest::collection::vec(0.001f64..1.0, 1..7),
            y1 in -1.0f64..8.0,
            y2 in -1.0f64..8.0,
        ) {
            let tot: f64 = probs.iter().sum();
            let probs: Vec<f64> = probs.iter().map(|p| p / tot).collect();
            let mut cum: Vec<f64> = probs.iter().scan(0.0, |a, p| { *a += p; Some(*a) }).collect();
            *cum.last_mut().unwrap() = 1.0;
            let f = FittedDistribution::discrete((0..cum.len()).map(|k| k as f64).collect(), cum).unwrap();
            let (lo, hi) = if y1 <= y2 { (y1.round(), y2.round()) } else { (y2.round(), y1.round()) };
            let (a, b) = (psr(lo, &f), psr(hi, &f));
            prop_assert!((-1.0..=1.0).contains(&a) && (-1.0..=1.0).contains(&b));
            prop_assert!(a <= b);
            prop_assert_eq!(psr_censored(lo, true, &f), a);
            prop_assert!((0.0..=1.0).contains(&psr_censored(lo, false, &f)));
        }
    }
}
