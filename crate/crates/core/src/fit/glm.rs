//! Log-link Poisson and exponential-survival regressions.

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::ln_gamma;

use crate::data::{Column, DesignMatrix, Kind};
use crate::dist::FittedDistribution;
use crate::error::{invalid, Error, Result};
use crate::fit::{check_rows, Family, ModelFit, GRADIENT_TOLERANCE, MAX_ITERATIONS};
use crate::linalg::solve_spd;

/// Mass beyond the truncation point of a discretized Poisson prediction.
const POISSON_TAIL: f64 = 1e-12;

pub(crate) struct NewtonOutcome {
    pub params: DVector<f64>,
    pub loglik: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub trace: Vec<f64>,
}

/// Damped Newton ascent for a concave log-likelihood. `eval` returns the
/// log-likelihood, gradient and information matrix (negative Hessian); `value`
/// returns the log-likelihood alone.
pub(crate) fn newton_ascent(
    start: DVector<f64>,
    eval: impl Fn(&DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>),
    value: impl Fn(&DVector<f64>) -> f64,
) -> Result<NewtonOutcome> {
    let mut params = start;
    let (mut ll, mut grad, mut info) = eval(&params);
    let mut trace = vec![ll];
    let mut iterations = 0;
    loop {
        let gnorm = grad.amax();
        if gnorm <= GRADIENT_TOLERANCE {
            break;
        }
        if iterations == MAX_ITERATIONS {
            return Err(Error::NonConvergence {
                iterations,
                gradient_norm: gnorm,
            });
        }
        iterations += 1;
        let step = solve_spd(&info, &grad)?;
        let decrement = step.dot(&grad);
        let slack = 1e-12 * (1.0 + ll.abs());
        let mut t = 1.0;
        let mut next = None;
        for _ in 0..40 {
            let cand = &params + &step * t;
            let v = value(&cand);
            if v.is_finite() && v >= ll - slack {
                next = Some(cand);
                break;
            }
            t *= 0.5;
        }
        match next {
            Some(p) => params = p,
            None if decrement.abs() <= 1e-10 * (1.0 + ll.abs()) => break,
            None => {
                return Err(Error::NonConvergence {
                    iterations,
                    gradient_norm: gnorm,
                })
            }
        }
        (ll, grad, info) = eval(&params);
        trace.push(ll);
    }
    Ok(NewtonOutcome {
        gradient_norm: grad.amax(),
        params,
        loglik: ll,
        iterations,
        trace,
    })
}

/// Design with a leading intercept column.
pub(crate) fn with_intercept(x: &DesignMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), x.ncols() + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            x.matrix[(i, j - 1)]
        }
    })
}

fn finish(family: Family, out: NewtonOutcome, x: &DesignMatrix, n: usize) -> ModelFit {
    ModelFit {
        family,
        alpha: vec![out.params[0]],
        beta: out.params.iter().skip(1).copied().collect(),
        scale: None,
        loglik: out.loglik,
        converged: true,
        iterations: out.iterations,
        gradient_norm: out.gradient_norm,
        loglik_trace: out.trace,
        warnings: Vec::new(),
        term_names: x.term_names.clone(),
        n_obs: n,
    }
}

/// Poisson regression with log link.
pub fn fit_poisson(y: &Column, x: &DesignMatrix) -> Result<ModelFit> {
    check_rows(y, x)?;
    if matches!(y.kind(), Kind::RightCensored | Kind::Ordinal(_)) {
        return Err(invalid(format!("`{}` is not a count outcome", y.name())));
    }
    let counts = y.numeric()?;
    if counts.iter().any(|&v| v < 0.0 || v.fract() != 0.0) {
        return Err(invalid(format!("`{}` must hold nonnegative integers", y.name())));
    }
    let n = counts.len();
    let total: f64 = counts.iter().sum();
    if total == 0.0 {
        return Err(Error::DegenerateFit("all-zero count outcome".into()));
    }
    let xm = with_intercept(x);
    let q = xm.ncols();
    if n <= q {
        return Err(invalid(format!("{n} observations for {q} parameters")));
    }
    let log_fact: f64 = counts.iter().map(|&c| ln_gamma(c + 1.0)).sum();
    let value = |b: &DVector<f64>| -> f64 {
        let eta = &xm * b;
        eta.iter()
            .zip(&counts)
            .map(|(e, y)| y * e - e.exp())
            .sum::<f64>()
            - log_fact
    };
    let eval = |b: &DVector<f64>| {
        let eta = &xm * b;
        let mu: Vec<f64> = eta.iter().map(|e| e.exp()).collect();
        let resid = DVector::from_iterator(n, mu.iter().zip(&counts).map(|(m, y)| y - m));
        let grad = xm.tr_mul(&resid);
        let mut info = DMatrix::zeros(q, q);
        for i in 0..n {
            let r = xm.row(i);
            info += r.transpose() * r * mu[i];
        }
        (value(b), grad, info)
    };
    let mut start = DVector::zeros(q);
    start[0] = (total / n as f64).ln();
    let out = newton_ascent(start, eval, value)?;
    Ok(finish(Family::Poisson, out, x, n))
}

/// Poisson(`mu`) discretized on `0..=m`, where `m` is the first point with
/// `CDF(m) >= 1 - 1e-12`.
pub(crate) fn poisson_distribution(mu: f64) -> Result<FittedDistribution> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(invalid(format!("invalid Poisson mean {mu}")));
    }
    let ln_mu = mu.ln();
    let mut points = Vec::new();
    let mut cum = Vec::new();
    let mut acc = 0.0;
    let mut k = 0u64;
    let hard_stop = mu + 40.0 * mu.sqrt() + 100.0;
    loop {
        let kf = k as f64;
        acc += (kf * ln_mu - mu - ln_gamma(kf + 1.0)).exp();
        points.push(kf);
        cum.push(acc.min(1.0));
        if acc >= 1.0 - POISSON_TAIL || kf > hard_stop {
            break;
        }
        k += 1;
    }
    *cum.last_mut().unwrap() = 1.0;
    FittedDistribution::discrete(points, cum)
}

/// Exponential regression for right-censored times, `rate_i = exp(alpha + x_i'beta)`.
pub fn fit_exponential_survival(y: &Column, x: &DesignMatrix) -> Result<ModelFit> {
    check_rows(y, x)?;
    let surv = y.survival()?;
    let n = surv.len();
    let events: f64 = surv.iter().map(|s| s.event as u8 as f64).sum();
    if events == 0.0 {
        return Err(Error::DegenerateFit(format!("`{}` has no events", y.name())));
    }
    if surv.iter().any(|s| s.time <= 0.0) {
        return Err(invalid("survival times must be positive"));
    }
    let xm = with_intercept(x);
    let q = xm.ncols();
    if n <= q {
        return Err(invalid(format!("{n} observations for {q} parameters")));
    }
    let delta: Vec<f64> = surv.iter().map(|s| s.event as u8 as f64).collect();
    let time: Vec<f64> = surv.iter().map(|s| s.time).collect();
    let value = |b: &DVector<f64>| -> f64 {
        let eta = &xm * b;
        (0..n).map(|i| delta[i] * eta[i] - eta[i].exp() * time[i]).sum()
    };
    let eval = |b: &DVector<f64>| {
        let eta = &xm * b;
        let h: Vec<f64> = (0..n).map(|i| eta[i].exp() * time[i]).collect();
        let resid = DVector::from_iterator(n, (0..n).map(|i| delta[i] - h[i]));
        let grad = xm.tr_mul(&resid);
        let mut info = DMatrix::zeros(q, q);
        for i in 0..n {
            let r = xm.row(i);
            info += r.transpose() * r * h[i];
        }
        (value(b), grad, info)
    };
    let mut start = DVector::zeros(q);
    start[0] = (events / time.iter().sum::<f64>()).ln();
    let out = newton_ascent(start, eval, value)?;
    Ok(finish(Family::Exponential, out, x, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Surv;

    #[test]
    fn poisson_intercept_only_matches_mean() {
        let y = Column::count("y", vec![0, 2, 3, 1, 4, 0, 2]).unwrap();
        let fit = fit_poisson(&y, &DesignMatrix::empty(7)).unwrap();
        assert!((fit.alpha[0].exp() - 12.0 / 7.0).abs() < 1e-10);
    }

    #[test]
    fn poisson_all_zero_is_degenerate() {
        let y = Column::count("y", vec![0, 0, 0]).unwrap();
        assert!(matches!(
            fit_poisson(&y, &DesignMatrix::empty(3)),
            Err(Error::DegenerateFit(_))
        ));
    }

    #[test]
    fn poisson_truncation() {
        for mu in [0.3, 4.0, 250.0, 5000.0] {
            let d = poisson_distribution(mu).unwrap();
            let FittedDistribution::DiscreteSupport { points, cum_probs } = &d else { unreachable!() };
            let m = points.len() - 1;
            assert_eq!(cum_probs[m], 1.0);
            assert!(m == 0 || cum_probs[m - 1] < 1.0 - POISSON_TAIL);
            assert!((d.cdf(0.0) - (-mu).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn exponential_intercept_only_closed_form() {
        let s = [(2.0, true), (3.5, false), (1.0, true), (4.0, true), (0.5, false)];
        let y = Column::censored("t", s.iter().map(|&(time, event)| Surv { time, event }).collect()).unwrap();
        let fit = fit_exponential_survival(&y, &DesignMatrix::empty(5)).unwrap();
        assert!((fit.alpha[0].exp() - 3.0 / 11.0).abs() < 1e-12);
        assert_eq!(fit.iterations, 0);
    }

    #[test]
    fn exponential_requires_events() {
        let y = Column::censored("t", vec![Surv { time: 1.0, event: false }; 3]).unwrap();
        assert!(fit_exponential_survival(&y, &DesignMatrix::empty(3)).is_err());
    }
}
