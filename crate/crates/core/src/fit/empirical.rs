use crate::data::Column;
use crate::error::Result;
use crate::fit::{numeric_outcome, support_codes, Family, ModelFit};

/// Intercept-only fit: every row gets the empirical distribution of `y`.
pub fn fit_empirical(y: &Column) -> Result<ModelFit> {
    let values = numeric_outcome(y)?;
    if values.is_empty() {
        return Err(crate::error::Error::EmptyResult);
    }
    let n = values.len();
    let (support, codes) = support_codes(&values);
    let mut counts = vec![0usize; support.len()];
    for c in codes {
        counts[c] += 1;
    }
    let mut cum = 0usize;
    let cum_probs: Vec<f64> = counts
        .iter()
        .map(|k| {
            cum += k;
            cum as f64 / n as f64
        })
        .collect();
    let loglik = counts
        .iter()
        .map(|&k| k as f64 * (k as f64 / n as f64).ln())
        .sum();
    Ok(ModelFit {
        family: Family::Empirical { support, cum_probs },
        beta: Vec::new(),
        alpha: Vec::new(),
        scale: None,
        loglik,
        converged: true,
        iterations: 0,
        gradient_norm: 0.0,
        loglik_trace: vec![loglik],
        warnings: Vec::new(),
        term_names: Vec::new(),
        n_obs: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::FittedDistribution;

    #[test]
    fn counts_give_empirical_cdf() {
        let y = Column::continuous("y", vec![1.0, 1.0, 2.0, 3.0]).unwrap();
        let fit = fit_empirical(&y).unwrap();
        let d = fit.predict_distribution(&[]).unwrap();
        assert_eq!(
            d,
            FittedDistribution::discrete(vec![1.0, 2.0, 3.0], vec![0.5, 0.75, 1.0]).unwrap()
        );
    }

    #[test]
    fn constant_outcome_is_single_point() {
        let y = Column::continuous("y", vec![4.0; 5]).unwrap();
        let fit = fit_empirical(&y).unwrap();
        assert_eq!(
            fit.predict_distribution(&[]).unwrap(),
            FittedDistribution::discrete(vec![4.0], vec![1.0]).unwrap()
        );
    }
}
