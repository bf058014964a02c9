//! Acceptance checks. Run with `cargo test --test acceptance`; prints one
//! PASS/FAIL line per check and exits nonzero if any fail.

mod common;

use std::time::{Duration, Instant};

use common::*;
use psr_kit::assoc::{batch_partial_spearman, psr_variance_discrete, spearman, ResamplingConfig, ScanConfig};
use psr_kit::data::{Column, DesignMatrix};
use psr_kit::diag::{ks_test, ks_uniform, residual_by_predictor};
use psr_kit::dist::FittedDistribution;
use psr_kit::fit::{fit_cumulative_link, fit_empirical, fit_exponential_survival, fit_linear_normal, CumLink};
use psr_kit::psr::{psr, psr_all};
use rand::Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok { Ok(detail) } else { Err(detail) }
}

fn worked(probs: &[f64], expected: f64) -> Check {
    let f = FittedDistribution::from_probs((1..=5).map(f64::from).collect(), probs).map_err(|e| e.to_string())?;
    let r = psr(2.0, &f);
    ensure((r - expected).abs() <= 1e-12, format!("psr = {r:.15}, expected {expected}"))
}

fn worked_first() -> Check {
    worked(&[0.10, 0.25, 0.27, 0.27, 0.11], -0.55)
}

fn worked_second() -> Check {
    worked(&[0.26, 0.38, 0.21, 0.12, 0.03], -0.11)
}

fn spearman_bridge() -> Check {
    let mut rng = rng(2);
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let n = rng.random_range(5..=200);
        let ties = k % 2 == 0;
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 {
            let v: f64 = rng.sample(rand_distr::StandardNormal);
            if ties { (v * 2.0).round() } else { v }
        };
        let x: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let y: Vec<f64> = x.iter().map(|x| 0.5 * x + draw(&mut rng)).collect();
        let oracle = spearman_oracle(&x, &y);
        let xc = Column::continuous("x", x).unwrap();
        let yc = Column::continuous("y", y).unwrap();
        let est = spearman(&xc, &yc, &ResamplingConfig::none()).map_err(|e| e.to_string())?.estimate;
        worst = worst.max((est - oracle).abs());
    }
    ensure(worst <= 1e-12, format!("max |psr correlation - midrank spearman| = {worst:.2e} over 50 datasets"))
}

fn sum_to_zero() -> Check {
    let mut rng = rng(3);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.random_range(40..=300);
        let x1 = normals(&mut rng, n);
        let x2: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let eta: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| 0.8 * a - 1.2 * b).collect();
        let y = proportional_odds(&mut rng, &eta, &[-1.0, 0.0, 0.7, 1.5]);
        let d = design(&["x1", "x2"], &[x1, x2]);
        let fit = fit_cumulative_link(&y, &d, CumLink::Logit).map_err(|e| e.to_string())?;
        let r = psr_all(&fit, &y, &d).map_err(|e| e.to_string())?;
        worst = worst.max(r.values.iter().sum::<f64>().abs() / n as f64);
    }
    ensure(worst <= 1e-8, format!("max |sum psr| / n = {worst:.2e} over 20 fits"))
}

fn uniformity() -> Check {
    let start = Instant::now();
    let mut rng = rng(4);
    let n = 5000;
    let x = normals(&mut rng, n);
    let e = normals(&mut rng, n);
    let y: Vec<f64> = x.iter().zip(&e).map(|(x, e)| (0.5 * x + e).exp()).collect();
    let yc = Column::continuous("y", y).unwrap();
    let d = design(&["x"], &[x]);
    let good = fit_cumulative_link(&yc, &d, CumLink::Probit).map_err(|e| e.to_string())?;
    let good_p = ks_uniform(&psr_all(&good, &yc, &d).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?.p_value;
    let bad = fit_linear_normal(&yc, &d).map_err(|e| e.to_string())?;
    let bad_p = ks_uniform(&psr_all(&bad, &yc, &d).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?.p_value;
    let secs = start.elapsed().as_secs_f64();
    ensure(
        good_p > 0.01 && bad_p < 0.001 && secs <= 60.0,
        format!("cumulative probit KS p = {good_p:.3}, normal-on-lognormal KS p = {bad_p:.2e}, {secs:.1}s"),
    )
}

fn diagnostic_shape() -> Check {
    let mut rng = rng(5);
    let (age, y) = quadratic_age(&mut rng, 1000);
    let age2: Vec<f64> = age.iter().map(|a| a * a).collect();
    let xc = Column::continuous("age", age.clone()).unwrap();
    let curve = |d: &DesignMatrix| -> Result<Vec<(f64, f64)>, String> {
        let fit = fit_cumulative_link(&y, d, CumLink::Logit).map_err(|e| e.to_string())?;
        let r = psr_all(&fit, &y, d).map_err(|e| e.to_string())?;
        let plot = residual_by_predictor(&r, &xc).map_err(|e| e.to_string())?;
        Ok(plot.curve.x_grid.into_iter().zip(plot.curve.y_smooth).collect())
    };
    let linear = curve(&design(&["age"], &[age.clone()]))?;
    let (lo, hi) = (linear[0].0, linear[linear.len() - 1].0);
    let third = (hi - lo) / 3.0;
    let interior = linear
        .iter()
        .filter(|(x, _)| *x >= lo + third && *x <= hi - third)
        .map(|p| p.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let (left, right) = (linear[0].1, linear[linear.len() - 1].1);
    let quad = curve(&design(&["age", "age2"], &[age, age2]))?;
    let qmax = quad.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let qmin = quad.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    ensure(
        interior - left >= 0.05 && interior - right >= 0.05 && qmax - qmin < 0.1,
        format!(
            "linear fit: interior max {interior:.3}, edges {left:.3} / {right:.3}; quadratic fit: curve range {:.3}",
            qmax - qmin
        ),
    )
}

fn null_calibration() -> Check {
    let start = Instant::now();
    let mut rng = rng(6);
    let n = 300;
    let z1 = normals(&mut rng, n);
    let genotype = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<u64> {
        let maf: f64 = rng.random_range(0.1..0.5);
        (0..n).map(|_| (rng.random_bool(maf) as u64) + (rng.random_bool(maf) as u64)).collect()
    };
    let planted = genotype(&mut rng);
    let noise = normals(&mut rng, n);
    let y: Vec<f64> = (0..n).map(|i| 0.5 * z1[i] + 0.8 * planted[i] as f64 + noise[i]).collect();
    let mut predictors: Vec<Column> = (0..1000)
        .map(|k| Column::count(format!("null{k}"), genotype(&mut rng)).unwrap())
        .collect();
    predictors.push(Column::count("planted", planted).unwrap());
    let yc = Column::continuous("y", y).unwrap();
    let z = design(&["z1"], &[z1]);
    let cfg = ScanConfig {
        perm: 999,
        seed: 6,
        threads: 4,
        ..ScanConfig::default()
    };
    let rows = batch_partial_spearman(&yc, &z, &predictors, &cfg).map_err(|e| e.to_string())?;
    let null_p: Vec<f64> = rows[..1000].iter().filter_map(|r| r.p_value).collect();
    if null_p.len() != 1000 {
        return Err(format!("only {} of 1000 null predictors produced a p-value", null_p.len()));
    }
    let ks = ks_test(&null_p, |p| p.clamp(0.0, 1.0)).map_err(|e| e.to_string())?;
    let mut ranked = rows.clone();
    psr_kit::assoc::rank_rows(&mut ranked);
    let secs = start.elapsed().as_secs_f64();
    ensure(
        ks.p_value > 0.01 && ranked[0].name == "planted" && Duration::from_secs_f64(secs) <= Duration::from_secs(300),
        format!(
            "null p-values KS p = {:.3}; top predictor `{}` (p = {:.2e}); {secs:.1}s",
            ks.p_value,
            ranked[0].name,
            ranked[0].p_value.unwrap_or(f64::NAN)
        ),
    )
}

fn censored_zero_mean() -> Check {
    let mut rng = rng(7);
    let n = 5000;
    let x = normals(&mut rng, n);
    let t = censored_exponential(&mut rng, &x, -0.5, 0.7, 3.0 / 7.0);
    let events = t.survival().unwrap().iter().filter(|s| s.event).count();
    let d = design(&["x"], &[x]);
    let fit = fit_exponential_survival(&t, &d).map_err(|e| e.to_string())?;
    let r = psr_all(&fit, &t, &d).map_err(|e| e.to_string())?;
    let (m, s) = (mean(&r.values), sd(&r.values));
    let band = 3.0 * s / (n as f64).sqrt();
    ensure(
        m.abs() <= band,
        format!("mean psr {m:.4}, band +/-{band:.4}, censored {:.1}%", 100.0 * (n - events) as f64 / n as f64),
    )
}

fn logistic_equivalence() -> Check {
    let mut rng = rng(8);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 20 {
        let n = rng.random_range(25..=50);
        let p = rng.random_range(1..=3);
        let cols: Vec<Vec<f64>> = (0..p).map(|_| normals(&mut rng, n)).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let eta = 0.3 + cols.iter().enumerate().map(|(j, c)| (0.6 - 0.4 * j as f64) * c[i]).sum::<f64>();
                (eta + logistic_draw(&mut rng) > 0.0) as u8 as f64
            })
            .collect();
        let Some((b0, slopes)) = irls_logistic(&y, &cols) else { continue };
        if slopes.iter().any(|b| b.abs() > 10.0) {
            continue;
        }
        let names: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let d = design(&names, &cols);
        let yc = Column::binary("y", y).unwrap();
        let fit = fit_cumulative_link(&yc, &d, CumLink::Logit).map_err(|e| e.to_string())?;
        // P(Y = 1) = F(eta - alpha), so the oracle intercept is -alpha.
        worst = worst.max((fit.alpha[0] + b0).abs());
        for (a, b) in fit.beta.iter().zip(&slopes) {
            worst = worst.max((a - b).abs());
        }
        done += 1;
    }
    ensure(worst <= 1e-6, format!("max coefficient difference from IRLS = {worst:.2e} over 20 datasets"))
}

fn variance_formula() -> Check {
    let half = psr_variance_discrete(&[0.5, 0.5]).map_err(|e| e.to_string())?;
    let mut rng = rng(9);
    let probs = [0.1, 0.35, 0.2, 0.3, 0.05];
    let n = 10_000;
    let codes: Vec<usize> = (0..n)
        .map(|_| {
            let u: f64 = rng.random_range(0.0..1.0);
            let mut acc = 0.0;
            probs.iter().position(|p| {
                acc += p;
                u < acc
            }).unwrap_or(probs.len() - 1)
        })
        .collect();
    let f_hat: Vec<f64> = (0..probs.len()).map(|k| codes.iter().filter(|c| **c == k).count() as f64 / n as f64).collect();
    let y = Column::ordinal("y", (0..probs.len()).map(|k| k.to_string()).collect(), codes).unwrap();
    let fit = fit_empirical(&y).map_err(|e| e.to_string())?;
    let r = psr_all(&fit, &y, &DesignMatrix::empty(n)).map_err(|e| e.to_string())?;
    let m = mean(&r.values);
    let empirical = r.values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64;
    let formula = psr_variance_discrete(&f_hat).map_err(|e| e.to_string())?;
    let rel = (empirical - formula).abs() / formula;
    ensure(
        half == 0.25 && rel <= 0.02,
        format!("variance(0.5, 0.5) = {half}; n = {n}: empirical {empirical:.5} vs formula {formula:.5} ({:.3}%)", 100.0 * rel),
    )
}

fn main() {
    let checks: [(&str, fn() -> Check); 10] = [
        ("1a worked residual (0.10, 0.25, 0.27, 0.27, 0.11)", worked_first),
        ("1b worked residual (0.26, 0.38, 0.21, 0.12, 0.03)", worked_second),
        ("2 spearman bridge", spearman_bridge),
        ("3 sum to zero", sum_to_zero),
        ("4 uniformity", uniformity),
        ("5 diagnostic shape", diagnostic_shape),
        ("6 null calibration", null_calibration),
        ("7 censored zero mean", censored_zero_mean),
        ("8 logistic equivalence", logistic_equivalence),
        ("9 variance formula", variance_formula),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("{} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
