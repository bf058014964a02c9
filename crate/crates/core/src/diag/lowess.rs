//! Locally weighted linear regression with bisquare robustness iterations.

use serde::Serialize;

use crate::error::{invalid, Result};

pub const DEFAULT_SPAN: f64 = 2.0 / 3.0;
pub const DEFAULT_ROBUST_ITERS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothCurve {
    /// Sorted distinct `x` values.
    pub x_grid: Vec<f64>,
    pub y_smooth: Vec<f64>,
    pub span: f64,
    pub robust_iters: usize,
}

fn tricube(u: f64) -> f64 {
    if u < 1.0 {
        let t = 1.0 - u * u * u;
        t * t * t
    } else {
        0.0
    }
}

fn bisquare(u: f64) -> f64 {
    if u.abs() < 1.0 {
        let t = 1.0 - u * u;
        t * t
    } else {
        0.0
    }
}

/// Weighted local linear fit at `g`; falls back to the weighted mean when the
/// window has no spread in `x`.
fn local_fit(x: &[f64], y: &[f64], w: &[f64], g: f64, h: f64) -> Option<f64> {
    let sw: f64 = w.iter().sum();
    if !(sw > 0.0) {
        return None;
    }
    let mx = w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() / sw;
    let my = w.iter().zip(y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for i in 0..x.len() {
        if w[i] > 0.0 {
            let dx = x[i] - mx;
            sxx += w[i] * dx * dx;
            sxy += w[i] * dx * (y[i] - my);
        }
    }
    if sxx <= sw * (1e-10 * h.max(f64::MIN_POSITIVE)).powi(2) {
        return Some(my);
    }
    Some(my + sxy / sxx * (g - mx))
}

/// Smooth of `y` on `x` evaluated at each distinct `x`. Each local fit uses
/// the `floor(span * n)` nearest points with tricube weights.
pub fn lowess(x: &[f64], y: &[f64], span: f64, robust_iters: usize) -> Result<SmoothCurve> {
    let n = x.len();
    if y.len() != n {
        return Err(invalid(format!("x has {n} values, y has {}", y.len())));
    }
    if n < 5 {
        return Err(invalid(format!("lowess needs at least 5 points, got {n}")));
    }
    if !(span > 0.0 && span <= 1.0) {
        return Err(invalid(format!("span must be in (0, 1], got {span}")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(invalid("lowess inputs must be finite"));
    }
    let q = (span * n as f64 + 1e-7).floor() as usize;
    if q < 2 {
        return Err(invalid(format!("span {span} leaves {q} point(s) per local fit; at least 2 are needed")));
    }
    let mut grid = x.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    // Grid position of every observation.
    let slot: Vec<usize> = x.iter().map(|v| grid.partition_point(|g| g < v)).collect();

    let mut robust = vec![1.0; n];
    let mut dist = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut fitted = vec![0.0; grid.len()];
    for iter in 0..=robust_iters {
        for (k, &g) in grid.iter().enumerate() {
            for i in 0..n {
                dist[i] = (x[i] - g).abs();
            }
            scratch.copy_from_slice(&dist);
            let (_, h, _) = scratch.select_nth_unstable_by(q - 1, f64::total_cmp);
            let h = *h;
            let base = |d: f64| if h > 0.0 { tricube(d / h) } else { (d == 0.0) as u8 as f64 };
            for i in 0..n {
                w[i] = base(dist[i]) * robust[i];
            }
            fitted[k] = match local_fit(x, y, &w, g, h) {
                Some(v) => v,
                None => {
                    // Every point in the window was downweighted to zero.
                    for i in 0..n {
                        w[i] = base(dist[i]);
                    }
                    local_fit(x, y, &w, g, h).expect("window contains the grid point")
                }
            };
        }
        if iter == robust_iters {
            break;
        }
        let resid: Vec<f64> = (0..n).map(|i| y[i] - fitted[slot[i]]).collect();
        let mut abs: Vec<f64> = resid.iter().map(|r| r.abs()).collect();
        abs.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 {
            abs[n / 2]
        } else {
            0.5 * (abs[n / 2 - 1] + abs[n / 2])
        };
        let scale = 6.0 * median;
        let mean_abs = abs.iter().sum::<f64>() / n as f64;
        if !(scale > 1e-7 * mean_abs) || scale == 0.0 {
            break;
        }
        for i in 0..n {
            robust[i] = bisquare(resid[i] / scale);
        }
    }
    Ok(SmoothCurve {
        x_grid: grid,
        y_smooth: fitted,
        span,
        robust_iters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reproduces_lines() {
        let x: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin() * 10.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.5 - 0.75 * v).collect();
        for span in [0.2, 2.0 / 3.0, 1.0] {
            let c = lowess(&x, &y, span, 3).unwrap();
            for (g, s) in c.x_grid.iter().zip(&c.y_smooth) {
                assert!((s - (2.5 - 0.75 * g)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn constant_stays_constant() {
        let x: Vec<f64> = (0..12).map(f64::from).collect();
        let c = lowess(&x, &[0.4; 12], 0.5, 3).unwrap();
        assert!(c.y_smooth.iter().all(|v| (v - 0.4).abs() < 1e-15));
    }

    #[test]
    fn ties_collapse_to_grid() {
        let x = [1.0, 1.0, 2.0, 3.0, 3.0, 4.0, 5.0];
        let y = [0.0, 1.0, 0.5, 0.2, 0.4, 0.9, 0.1];
        let c = lowess(&x, &y, 1.0, 0).unwrap();
        assert_eq!(c.x_grid, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn argument_checks() {
        let x: Vec<f64> = (0..6).map(f64::from).collect();
        assert!(lowess(&x[..4], &x[..4], 0.5, 0).is_err());
        assert!(lowess(&x, &x, 0.2, 0).is_err());
        assert!(lowess(&x, &x, 0.0, 0).is_err());
        assert!(lowess(&x, &x, 1.5, 0).is_err());
    }

    #[test]
    fn robustness_resists_an_outlier() {
        let x: Vec<f64> = (0..40).map(f64::from).collect();
        let mut y: Vec<f64> = x.iter().map(|v| 0.1 * v + 0.05 * (v * 1.7).sin()).collect();
        y[20] = 50.0;
        let plain = lowess(&x, &y, 0.3, 0).unwrap();
        let robust = lowess(&x, &y, 0.3, 3).unwrap();
        assert!((plain.y_smooth[20] - 2.0).abs() > 1.0);
        assert!((robust.y_smooth[20] - 2.0).abs() < 0.1);
    }

    proptest! {
        #[test]
        fn grid_is_strictly_increasing_and_finite(
            pts in proptest::collection::vec((-5i32..5, -3.0f64..3.0), 5..60),
            span in 0.3f64..1.0,
        ) {
            let x: Vec<f64> = pts.iter().map(|p| p.0 as f64).collect();
            let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
            if let Ok(c) = lowess(&x, &y, span, 2) {
                prop_assert!(c.x_grid.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(c.y_smooth.iter().all(|v| v.is_finite()));
            }
        }
    }
}
