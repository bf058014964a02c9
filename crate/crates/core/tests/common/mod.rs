//! Simulators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use psr_kit::data::{Column, DesignMatrix, Surv};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn logistic_draw(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random_range(1e-12..1.0 - 1e-12);
    (u / (1.0 - u)).ln()
}

/// Mid-ranks by direct counting: `#{x_j < x_i} + (#{x_j == x_i} + 1) / 2`.
pub fn midranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|a| {
            let below = x.iter().filter(|b| *b < a).count() as f64;
            let equal = x.iter().filter(|b| *b == a).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Ties-adjusted Spearman correlation: Pearson correlation of mid-ranks.
pub fn spearman_oracle(x: &[f64], y: &[f64]) -> f64 {
    pearson(&midranks(x), &midranks(y))
}

/// Logistic regression by iteratively reweighted least squares.
/// Returns `(intercept, slopes)` or `None` if it does not settle.
pub fn irls_logistic(y: &[f64], cols: &[Vec<f64>]) -> Option<(f64, Vec<f64>)> {
    let n = y.len();
    let p = cols.len() + 1;
    let x = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { cols[j - 1][i] });
    let yv = DVector::from_column_slice(y);
    let mut b = DVector::zeros(p);
    for _ in 0..100 {
        let eta = &x * &b;
        let mu = eta.map(|e| 1.0 / (1.0 + (-e).exp()));
        let w = mu.map(|m| m * (1.0 - m));
        let mut xtwx = DMatrix::zeros(p, p);
        for i in 0..n {
            let row = x.row(i);
            xtwx += w[i] * row.transpose() * row;
        }
        let score = x.transpose() * (&yv - &mu);
        let step = xtwx.cholesky()?.solve(&score);
        b += &step;
        if step.amax() < 1e-13 * (1.0 + b.amax()) {
            return Some((b[0], b.iter().skip(1).copied().collect()));
        }
    }
    None
}

/// Proportional-odds data: `Y <= j` iff `eta + logistic noise <= cut_j`.
pub fn proportional_odds(rng: &mut ChaCha8Rng, eta: &[f64], cuts: &[f64]) -> Column {
    let codes: Vec<usize> = eta
        .iter()
        .map(|e| {
            let latent = e + logistic_draw(rng);
            cuts.iter().filter(|c| latent > **c).count()
        })
        .collect();
    let levels = (0..=cuts.len()).map(|k| format!("s{k}")).collect();
    Column::ordinal("y", levels, codes).unwrap()
}

/// Exponential times with rate `exp(b0 + b1 x)` and independent exponential
/// censoring at `censor_ratio` times each subject's event rate, so the
/// censored fraction is `censor_ratio / (1 + censor_ratio)`.
pub fn censored_exponential(rng: &mut ChaCha8Rng, x: &[f64], b0: f64, b1: f64, censor_ratio: f64) -> Column {
    let values = x
        .iter()
        .map(|x| {
            let rate = (b0 + b1 * x).exp();
            let t = Exp::new(rate).unwrap().sample(rng);
            let c = Exp::new(rate * censor_ratio).unwrap().sample(rng);
            Surv { time: t.min(c), event: t <= c }
        })
        .collect();
    Column::censored("t", values).unwrap()
}

/// Proportional-odds outcome with an inverted-U age effect on the latent scale.
pub fn quadratic_age(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Column) {
    let age: Vec<f64> = (0..n).map(|_| rng.random_range(20.0..60.0)).collect();
    let eta: Vec<f64> = age.iter().map(|a| 2.0 - ((a - 40.0) / 10.0).powi(2)).collect();
    let y = proportional_odds(rng, &eta, &[-1.5, 0.0, 1.0, 2.0]);
    (age, y)
}

pub fn design(names: &[&str], cols: &[Vec<f64>]) -> DesignMatrix {
    DesignMatrix::from_columns(names, cols).unwrap()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}
