//! Cumulative-link (ordinal) regression by maximum likelihood.
//!
//! The model is `g[P(Y <= y_j | x)] = alpha_j - x'beta` over the `J` distinct
//! observed outcome values, which also covers continuous outcomes (each distinct
//! value is its own category). The intercepts are optimized through
//! `(alpha_1, log(alpha_2 - alpha_1), …)` so every iterate is strictly ordered.
//! Each iteration solves the Newton system in `(alpha, beta)` coordinates, where
//! the information matrix is tridiagonal in the intercepts with a dense border,
//! maps the step through the Jacobian of the reparameterization and halves it
//! until the log-likelihood does not decrease.

use nalgebra::DMatrix;

use crate::data::{Column, DesignMatrix};
use crate::error::{invalid, Error, Result};
use crate::fit::{
    check_rows, numeric_outcome, support_codes, CumLink, Family, ModelFit, GRADIENT_TOLERANCE,
    MAX_ITERATIONS, SEPARATION_BOUND,
};
use crate::linalg::ArrowMatrix;

/// Log-likelihood of a cumulative-link model for fixed data.
pub struct CumulativeLinkProblem<'a> {
    codes: Vec<usize>,
    n_cat: usize,
    x: &'a DMatrix<f64>,
    link: CumLink,
}

/// Value, gradient and information (negative Hessian) at one parameter point.
pub struct Evaluation {
    pub loglik: f64,
    pub grad_alpha: Vec<f64>,
    pub grad_beta: Vec<f64>,
    pub information: ArrowMatrix,
}

impl Evaluation {
    pub fn gradient_norm(&self) -> f64 {
        self.grad_alpha
            .iter()
            .chain(&self.grad_beta)
            .fold(0.0, |m, g| m.max(g.abs()))
    }
}

impl<'a> CumulativeLinkProblem<'a> {
    /// `codes[i]` is the category of row `i` in `0..n_cat`.
    pub fn new(codes: Vec<usize>, n_cat: usize, x: &'a DMatrix<f64>, link: CumLink) -> Self {
        Self { codes, n_cat, x, link }
    }

    fn eta(&self, i: usize, beta: &[f64]) -> f64 {
        beta.iter().enumerate().map(|(j, b)| self.x[(i, j)] * b).sum()
    }

    /// `P(category | eta)` for cut points `upper = alpha_j - eta` and
    /// `lower = alpha_{j-1} - eta`, avoiding cancellation in the upper tail.
    fn prob(&self, upper: Option<f64>, lower: Option<f64>) -> f64 {
        let l = self.link;
        match (upper, lower) {
            (Some(u), None) => l.cdf(u),
            (None, Some(lo)) => l.sf(lo),
            (Some(u), Some(lo)) if lo > 0.0 => l.sf(lo) - l.sf(u),
            (Some(u), Some(lo)) => l.cdf(u) - l.cdf(lo),
            (None, None) => 1.0,
        }
    }

    fn cuts(&self, i: usize, alpha: &[f64], eta: f64) -> (Option<f64>, Option<f64>) {
        let j = self.codes[i];
        let upper = (j + 1 < self.n_cat).then(|| alpha[j] - eta);
        let lower = (j > 0).then(|| alpha[j - 1] - eta);
        (upper, lower)
    }

    pub fn loglik(&self, alpha: &[f64], beta: &[f64]) -> f64 {
        let mut ll = 0.0;
        for i in 0..self.codes.len() {
            let eta = self.eta(i, beta);
            let (u, l) = self.cuts(i, alpha, eta);
            let p = self.prob(u, l);
            if !(p > 0.0) {
                return f64::NEG_INFINITY;
            }
            ll += p.ln();
        }
        ll
    }

    pub fn evaluate(&self, alpha: &[f64], beta: &[f64]) -> Evaluation {
        let m = self.n_cat - 1;
        let p = beta.len();
        let link = self.link;
        let mut ll = 0.0;
        let mut ga = vec![0.0; m];
        let mut gb = vec![0.0; p];
        let mut info = ArrowMatrix::zeros(m, p);
        for i in 0..self.codes.len() {
            let j = self.codes[i];
            let eta = self.eta(i, beta);
            let (u, l) = self.cuts(i, alpha, eta);
            let prob = self.prob(u, l);
            if !(prob > 0.0) {
                ll = f64::NEG_INFINITY;
                continue;
            }
            ll += prob.ln();
            let (fu, dfu) = u.map_or((0.0, 0.0), |u| (link.pdf(u), link.dpdf(u)));
            let (fl, dfl) = l.map_or((0.0, 0.0), |l| (link.pdf(l), link.dpdf(l)));
            let (su, sl) = (fu / prob, fl / prob);
            // Second derivatives of log P with respect to the cut points.
            let huu = dfu / prob - su * su;
            let hll = -dfl / prob - sl * sl;
            let hul = su * sl;
            let xi = self.x.row(i);
            if u.is_some() {
                ga[j] += su;
                info.diag[j] -= huu;
                for b in 0..p {
                    info.border[(j, b)] += (huu + hul) * xi[b];
                }
            }
            if l.is_some() {
                ga[j - 1] -= sl;
                info.diag[j - 1] -= hll;
                for b in 0..p {
                    info.border[(j - 1, b)] += (hul + hll) * xi[b];
                }
            }
            if u.is_some() && l.is_some() {
                info.off[j - 1] -= hul;
            }
            let heta = huu + 2.0 * hul + hll;
            for a in 0..p {
                gb[a] -= xi[a] * (su - sl);
                for b in 0..p {
                    info.corner[(a, b)] -= heta * xi[a] * xi[b];
                }
            }
        }
        Evaluation {
            loglik: ll,
            grad_alpha: ga,
            grad_beta: gb,
            information: info,
        }
    }
}

fn alpha_from_theta(theta: &[f64]) -> Vec<f64> {
    let mut alpha = Vec::with_capacity(theta.len());
    for (k, t) in theta.iter().enumerate() {
        alpha.push(if k == 0 { *t } else { alpha[k - 1] + t.exp() });
    }
    alpha
}

fn theta_from_alpha(alpha: &[f64]) -> Vec<f64> {
    alpha
        .iter()
        .enumerate()
        .map(|(k, a)| if k == 0 { *a } else { (a - alpha[k - 1]).ln() })
        .collect()
}

/// Fits `g[P(Y <= y_j | x)] = alpha_j - x'beta` to the distinct values of `y`.
pub fn fit_cumulative_link(y: &Column, x: &DesignMatrix, link: CumLink) -> Result<ModelFit> {
    check_rows(y, x)?;
    let values = numeric_outcome(y)?;
    let n = values.len();
    let p = x.ncols();
    let (support, codes) = support_codes(&values);
    let n_cat = support.len();
    if n_cat < 2 {
        return Err(invalid(format!(
            "outcome `{}` needs at least 2 distinct values",
            y.name()
        )));
    }
    if n <= p {
        return Err(invalid(format!("{n} observations for {p} coefficients")));
    }

    // Saturated intercepts: the link applied to the empirical CDF.
    let mut counts = vec![0usize; n_cat];
    for &c in &codes {
        counts[c] += 1;
    }
    let mut cum = 0usize;
    let alpha0: Vec<f64> = counts[..n_cat - 1]
        .iter()
        .map(|k| {
            cum += k;
            link.quantile(cum as f64 / n as f64)
        })
        .collect();

    let problem = CumulativeLinkProblem::new(codes, n_cat, &x.matrix, link);
    let mut theta = theta_from_alpha(&alpha0);
    let mut beta = vec![0.0; p];
    let mut eval = problem.evaluate(&alpha0, &beta);
    let mut trace = vec![eval.loglik];
    let mut warnings = Vec::new();
    let mut iterations = 0;
    let mut converged = eval.gradient_norm() <= GRADIENT_TOLERANCE;

    while !converged && iterations < MAX_ITERATIONS {
        iterations += 1;
        let (du, dv) = eval
            .information
            .solve(&eval.grad_alpha, &eval.grad_beta)?;
        // Newton step in alpha mapped to the (alpha_1, log-increment) coordinates.
        let dtheta: Vec<f64> = (0..theta.len())
            .map(|k| {
                if k == 0 {
                    du[0]
                } else {
                    (du[k] - du[k - 1]) / theta[k].exp()
                }
            })
            .collect();
        let decrement: f64 = du
            .iter()
            .zip(&eval.grad_alpha)
            .chain(dv.iter().zip(&eval.grad_beta))
            .map(|(d, g)| d * g)
            .sum();

        let slack = 1e-12 * (1.0 + eval.loglik.abs());
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let t: Vec<f64> = theta.iter().zip(&dtheta).map(|(a, d)| a + step * d).collect();
            let b: Vec<f64> = beta.iter().zip(&dv).map(|(a, d)| a + step * d).collect();
            let a = alpha_from_theta(&t);
            if a.iter().all(|v| v.is_finite()) {
                let ll = problem.loglik(&a, &b);
                if ll >= eval.loglik - slack {
                    accepted = Some((t, b, a));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((t, b, a)) = accepted else {
            // No ascent possible: the remaining increase is below rounding.
            if decrement.abs() <= 1e-10 * (1.0 + eval.loglik.abs()) {
                converged = true;
                break;
            }
            if beta.iter().any(|v| v.abs() > SEPARATION_BOUND / 2.0) {
                warnings.push(separation_warning(&beta, x));
                break;
            }
            return Err(Error::NonConvergence {
                iterations,
                gradient_norm: eval.gradient_norm(),
            });
        };
        theta = t;
        beta = b;
        eval = problem.evaluate(&a, &beta);
        trace.push(eval.loglik);
        if beta.iter().any(|v| v.abs() > SEPARATION_BOUND) {
            warnings.push(separation_warning(&beta, x));
            break;
        }
        converged = eval.gradient_norm() <= GRADIENT_TOLERANCE;
    }
    if !converged && warnings.is_empty() {
        return Err(Error::NonConvergence {
            iterations,
            gradient_norm: eval.gradient_norm(),
        });
    }
    for w in &warnings {
        log::warn!("{}: {w}", y.name());
    }
    Ok(ModelFit {
        family: Family::CumulativeLink { link, support },
        beta,
        alpha: alpha_from_theta(&theta),
        scale: None,
        loglik: eval.loglik,
        converged,
        iterations,
        gradient_norm: eval.gradient_norm(),
        loglik_trace: trace,
        warnings,
        term_names: x.term_names.clone(),
        n_obs: n,
    })
}

fn separation_warning(beta: &[f64], x: &DesignMatrix) -> String {
    let (j, b) = beta
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(j, b)| (j, *b))
        .unwrap_or((0, f64::NAN));
    let name = x.term_names.get(j).map(String::as_str).unwrap_or("?");
    format!("possible complete separation: coefficient of `{name}` diverged to {b:.1}; returning capped fit")
}
