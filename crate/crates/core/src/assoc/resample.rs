//! Pairs bootstrap and permutation inference.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::quantile;
use crate::error::{Error, Result};
use crate::rng::{label, substream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResamplingKind {
    Bootstrap,
    Permutation,
}

/// Metadata of one resampling pass, reported with the result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ResamplingRun {
    pub kind: ResamplingKind,
    #[serde(rename = "B")]
    pub b: usize,
    pub seed: u64,
    /// Bootstrap replicates whose refit failed and were dropped.
    pub failed: usize,
}

/// Replicate counts; zero disables that kind of resampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResamplingConfig {
    pub boot: usize,
    pub perm: usize,
    pub seed: u64,
}

impl ResamplingConfig {
    pub fn none() -> Self {
        Self {
            boot: 0,
            perm: 0,
            seed: 0,
        }
    }

    pub fn new(boot: usize, perm: usize, seed: u64) -> Self {
        Self { boot, perm, seed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Statistic {
    Correlation,
    MeanProduct,
}

pub(crate) struct Inference {
    pub ci: Option<(f64, f64)>,
    pub p_value: Option<f64>,
    pub runs: Vec<ResamplingRun>,
    pub warnings: Vec<String>,
}

/// `refit` recomputes the statistic on a bootstrap sample of row indices.
/// `stream` separates independent analyses sharing one seed.
pub(crate) fn infer(
    stat: Statistic,
    rx: &[f64],
    ry: &[f64],
    cfg: &ResamplingConfig,
    stream: u64,
    refit: impl Fn(&[usize]) -> Result<f64> + Sync,
) -> Result<Inference> {
    let mut out = Inference {
        ci: None,
        p_value: None,
        runs: Vec::new(),
        warnings: Vec::new(),
    };
    if cfg.boot > 0 {
        let (ci, failed) = bootstrap(rx.len(), cfg, stream, &refit)?;
        if failed > 0 {
            out.warnings
                .push(format!("{failed} of {} bootstrap refits failed and were dropped", cfg.boot));
        }
        out.ci = Some(ci);
        out.runs.push(ResamplingRun {
            kind: ResamplingKind::Bootstrap,
            b: cfg.boot,
            seed: cfg.seed,
            failed,
        });
    }
    if cfg.perm > 0 {
        out.p_value = Some(permutation_p(stat, rx, ry, cfg.perm, cfg.seed, stream));
        out.runs.push(ResamplingRun {
            kind: ResamplingKind::Permutation,
            b: cfg.perm,
            seed: cfg.seed,
            failed: 0,
        });
    }
    Ok(out)
}

fn bootstrap(
    n: usize,
    cfg: &ResamplingConfig,
    stream: u64,
    refit: &(impl Fn(&[usize]) -> Result<f64> + Sync),
) -> Result<((f64, f64), usize)> {
    let draws: Vec<Option<f64>> = (0..cfg.boot as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(cfg.seed, label::BOOTSTRAP, (stream << 32) | b);
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            refit(&rows).ok()
        })
        .collect();
    let mut ok: Vec<f64> = draws.iter().flatten().copied().collect();
    let failed = cfg.boot - ok.len();
    if ok.len() * 2 < cfg.boot {
        return Err(Error::DegenerateFit(format!(
            "{failed} of {} bootstrap refits failed",
            cfg.boot
        )));
    }
    ok.sort_by(f64::total_cmp);
    Ok(((quantile(&ok, 0.025), quantile(&ok, 0.975)), failed))
}

/// Two-sided permutation p-value `(1 + #{|T*| >= |T|}) / (B + 1)`, permuting
/// `rx` against a fixed `ry`.
pub(crate) fn permutation_p(stat: Statistic, rx: &[f64], ry: &[f64], b: usize, seed: u64, stream: u64) -> f64 {
    let n = rx.len() as f64;
    let (mut x, y, scale) = match stat {
        Statistic::Correlation => {
            let mx = rx.iter().sum::<f64>() / n;
            let my = ry.iter().sum::<f64>() / n;
            let x: Vec<f64> = rx.iter().map(|v| v - mx).collect();
            let y: Vec<f64> = ry.iter().map(|v| v - my).collect();
            let sx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let sy = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            (x, y, sx * sy)
        }
        Statistic::MeanProduct => (rx.to_vec(), ry.to_vec(), n),
    };
    let dot = |x: &[f64]| x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / scale;
    let observed = dot(&x).abs();
    let threshold = observed - 1e-12 * (1.0 + observed);
    let mut rng = substream(seed, label::PERMUTATION, stream);
    let mut hits = 0usize;
    for _ in 0..b {
        x.shuffle(&mut rng);
        if dot(&x).abs() >= threshold {
            hits += 1;
        }
    }
    (1 + hits) as f64 / (b + 1) as f64
}
