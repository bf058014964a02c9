use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::assoc::{
    batch_partial_spearman, conditional_spearman, margin_psr, partial_spearman, pearson, psr_covariance, rank_rows,
    spearman, AssocResult, Bandwidth, ConditionalConfig, ResamplingConfig, ScanConfig,
};
use crate::assoc::resample::{permutation_p, Statistic};
use crate::cli::{Command, Input, ModelSpec};
use crate::data::{build_design, format_real, load_csv, Dataset, DesignMatrix, Kind, Schema, Term};
use crate::diag::{qq_uniform, ks_uniform, render, residual_by_predictor, PlotData, KS_MIN_N};
use crate::error::{invalid, Error, Result};
use crate::fit::{likelihood_ratio_test, FitterSpec};
use crate::psr::{normal_transform, psr_all};

pub(crate) fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Fit { input, model, reduced, dump_dist, out } => fit(&input, &model, reduced.as_deref(), dump_dist.as_deref(), out),
        Command::Psr { input, model, normal, out } => psr(&input, &model, normal, out),
        Command::Diag { input, fit_spec, qq, rbp, csv } => diag(&input, &fit_spec, qq, &rbp, csv),
        Command::Pcor {
            input,
            x,
            y,
            z,
            x_model,
            y_model,
            statistic,
            given,
            bandwidth,
            boot,
            perm,
            seed,
            threads,
            out,
        } => {
            let seed = require_seed(seed, boot + perm)?;
            let args = PcorArgs {
                x,
                y,
                z,
                x_model: FitterSpec::parse(&x_model)?,
                y_model: FitterSpec::parse(&y_model)?,
                statistic,
                given,
                bandwidth,
                cfg: ResamplingConfig::new(boot, perm, seed),
            };
            with_pool(threads, || pcor(&input, &args, out))
        }
        Command::Scan {
            input,
            y,
            z,
            predictors,
            predictor_schema,
            y_model,
            x_model,
            perm,
            seed,
            threads,
            out,
        } => {
            let cfg = ScanConfig {
                y_model: FitterSpec::parse(&y_model)?,
                x_model: FitterSpec::parse(&x_model)?,
                perm,
                seed: require_seed(seed, perm)?,
                threads: threads_checked(threads)?,
            };
            scan(&input, &y, &z, &predictors, &predictor_schema, &cfg, out)
        }
        Command::Corrmat {
            input,
            vars,
            z,
            model,
            perm,
            seed,
            threads,
            out,
            p_out,
        } => {
            let cfg = ResamplingConfig::new(0, perm, require_seed(seed, perm)?);
            let model = FitterSpec::parse(&model)?;
            with_pool(threads, || corrmat(&input, &vars, &z, model, &cfg, out, p_out))
        }
    }
}

fn threads_checked(threads: usize) -> Result<usize> {
    if threads == 0 {
        return Err(invalid("--threads must be at least 1"));
    }
    Ok(threads)
}

fn with_pool(threads: usize, f: impl FnOnce() -> Result<()> + Send) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads_checked(threads)?)
        .build()
        .map_err(|e| invalid(e.to_string()))?;
    pool.install(f)
}

fn require_seed(seed: Option<u64>, replicates: usize) -> Result<u64> {
    match seed {
        Some(s) => Ok(s),
        None if replicates == 0 => Ok(0),
        None => Err(invalid("--seed is required when resampling (or set --boot 0 --perm 0)")),
    }
}

fn parse_schema(text: &str) -> Result<Schema> {
    match text.strip_prefix('@') {
        Some(path) => Schema::parse(&std::fs::read_to_string(path)?),
        None => Schema::parse(text),
    }
}

/// Loads the data; without an id column, rows are labelled by their 1-based
/// position in the file so labels survive listwise deletion.
fn load(input: &Input) -> Result<Dataset> {
    let d = load_csv(&input.data, &parse_schema(&input.schema)?).map_err(|e| match e {
        Error::Io(io) => invalid(format!("{}: {io}", input.data.display())),
        other => other,
    })?;
    if d.row_ids().is_some() {
        return Ok(d);
    }
    let ids = (1..=d.n_rows()).map(|i| i.to_string()).collect();
    Dataset::with_row_ids(d.columns().to_vec(), Some(ids))
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| invalid(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(format_real).unwrap_or_default()
}

fn write_json(value: &serde_json::Value, out: Option<&Path>) -> Result<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| invalid(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn term_columns(terms: &[Term]) -> Vec<&str> {
    let mut cols: Vec<&str> = Vec::new();
    for t in terms {
        if !cols.contains(&t.column()) {
            cols.push(t.column());
        }
    }
    cols
}

/// Listwise deletion over `cols`; returns the reduced data and the number of dropped rows.
fn complete(d: &Dataset, cols: &[&str]) -> Result<(Dataset, usize)> {
    let (kept, dropped) = d.complete_cases(cols)?;
    if dropped > 0 {
        log::info!("dropped {dropped} incomplete row(s)");
    }
    Ok((kept, dropped))
}

fn find_row(d: &Dataset, key: &str) -> Result<usize> {
    (0..d.n_rows())
        .find(|&i| d.row_label(i) == key)
        .ok_or_else(|| invalid(format!("no analysed row `{key}`")))
}

fn fit(input: &Input, model: &str, reduced: Option<&str>, dump: Option<&str>, out: Option<PathBuf>) -> Result<()> {
    let spec = ModelSpec::parse(model)?;
    let reduced = reduced.map(ModelSpec::parse).transpose()?;
    let mut cols = spec.columns();
    if let Some(r) = &reduced {
        if r.outcome != spec.outcome {
            return Err(invalid(format!("reduced model outcome `{}` differs from `{}`", r.outcome, spec.outcome)));
        }
        cols.extend(r.columns());
    }
    let (d, dropped) = complete(&load(input)?, &cols)?;
    let y = d.column(&spec.outcome)?;
    let x = build_design(&d, &spec.terms)?;
    let f = spec.fitter.fit(y, &x)?;
    let coefficients: Vec<_> = f
        .term_names
        .iter()
        .zip(&f.beta)
        .map(|(t, b)| json!({ "term": t, "estimate": b }))
        .collect();
    let mut summary = json!({
        "model": spec.to_string(),
        "n_obs": f.n_obs,
        "n_dropped": dropped,
        "link": f.link(),
        "coefficients": coefficients,
        "intercepts": f.alpha,
        "scale": f.scale,
        "loglik": f.loglik,
        "n_params": f.n_params(),
        "aic": f.aic(),
        "converged": f.converged,
        "iterations": f.iterations,
        "gradient_norm": f.gradient_norm,
        "warnings": f.warnings,
    });
    if let Some(r) = &reduced {
        let small = r.fitter.fit(y, &build_design(&d, &r.terms)?)?;
        let lr = likelihood_ratio_test(&small, &f)?;
        summary["lr_test"] = json!({
            "reduced": r.to_string(),
            "reduced_aic": small.aic(),
            "statistic": lr.statistic,
            "df": lr.df,
            "p_value": lr.p_value,
        });
    }
    if let Some(key) = dump {
        let i = find_row(&d, key)?;
        let dist = f.predict_distribution(&x.row(i))?;
        summary["distribution"] = json!({
            "row": d.row_label(i),
            "fitted": serde_json::to_value(&dist).map_err(|e| invalid(e.to_string()))?,
        });
    }
    write_json(&summary, out.as_deref())
}

fn psr(input: &Input, model: &str, normal: bool, out: Option<PathBuf>) -> Result<()> {
    let spec = ModelSpec::parse(model)?;
    let (d, _) = complete(&load(input)?, &spec.columns())?;
    let y = d.column(&spec.outcome)?;
    let x = build_design(&d, &spec.terms)?;
    let f = spec.fitter.fit(y, &x)?;
    for w in &f.warnings {
        log::warn!("{w}");
    }
    let r = psr_all(&f, y, &x)?;
    let z = normal.then(|| normal_transform(&r));
    let censored = *y.kind() == Kind::RightCensored;
    let mut w = csv::Writer::from_writer(sink(out.as_deref())?);
    let mut header = vec!["row_id", "observed"];
    if censored {
        header.push("event");
    }
    header.push("psr");
    if normal {
        header.push("psr_normal");
    }
    w.write_record(&header)?;
    let surv = if censored { Some(y.survival()?) } else { None };
    for i in 0..d.n_rows() {
        let mut rec = vec![d.row_label(i)];
        match &surv {
            Some(s) => {
                rec.push(format_real(s[i].time));
                rec.push((s[i].event as u8).to_string());
            }
            None => rec.push(y.format_cell(i)),
        }
        rec.push(format_real(r.values[i]));
        if let Some(z) = &z {
            rec.push(format_real(z[i]));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn diag(input: &Input, model: &str, qq: Option<PathBuf>, rbp: &[String], csv_out: bool) -> Result<()> {
    let spec = ModelSpec::parse(model)?;
    let plots = rbp
        .iter()
        .map(|s| {
            s.split_once('=')
                .map(|(n, p)| (n.trim().to_string(), PathBuf::from(p.trim())))
                .ok_or_else(|| invalid(format!("--rbp `{s}` is not `name=path`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut cols = spec.columns();
    cols.extend(plots.iter().map(|(n, _)| n.as_str()));
    let (d, _) = complete(&load(input)?, &cols)?;
    let y = d.column(&spec.outcome)?;
    let x = build_design(&d, &spec.terms)?;
    let f = spec.fitter.fit(y, &x)?;
    let r = psr_all(&f, y, &x)?;
    let mut warnings = f.warnings.clone();
    let continuous = *y.kind() == Kind::Continuous;
    if !continuous {
        warnings.push(format!(
            "`{}` is {}; its residuals are not expected to be uniform",
            y.name(),
            y.kind().name()
        ));
    }
    let ks = if r.len() >= KS_MIN_N {
        let k = ks_uniform(&r)?;
        if continuous {
            warnings.extend(k.warnings.iter().cloned());
        }
        json!({ "statistic": k.statistic, "p_value": k.p_value, "n": k.n })
    } else {
        serde_json::Value::Null
    };
    if let Some(path) = &qq {
        let data = qq_uniform(&r)?;
        if csv_out {
            let mut w = csv::Writer::from_path(path)?;
            w.write_record(["theoretical", "sample"])?;
            for (t, s) in &data.pairs {
                w.write_record([format_real(*t), format_real(*s)])?;
            }
            w.flush()?;
        } else {
            render(&PlotData::Qq(&data), path)?;
        }
    }
    for (name, path) in &plots {
        let plot = residual_by_predictor(&r, d.column(name)?)?;
        if csv_out {
            let mut w = csv::Writer::from_path(path)?;
            w.write_record([name.as_str(), "psr", "smooth"])?;
            for ((px, py), s) in plot.points.iter().zip(plot.smoothed_at_points()) {
                w.write_record([format_real(*px), format_real(*py), format_real(s)])?;
            }
            w.flush()?;
        } else {
            render(&PlotData::Residual(&plot), path)?;
        }
    }
    write_json(
        &json!({
            "model": spec.to_string(),
            "n_obs": r.len(),
            "uniformity_ks": ks,
            "warnings": warnings,
        }),
        None,
    )
}

struct PcorArgs {
    x: String,
    y: String,
    z: String,
    x_model: FitterSpec,
    y_model: FitterSpec,
    statistic: String,
    given: Option<String>,
    bandwidth: String,
    cfg: ResamplingConfig,
}

const PCOR_HEADER: [&str; 20] = [
    "method", "x", "y", "z", "given", "z_value", "estimate", "ci_low", "ci_high", "p_value", "n_used", "n_dropped",
    "x_model", "y_model", "boot", "perm", "seed", "ci_method", "p_method", "warnings",
];

fn pcor(input: &Input, a: &PcorArgs, out: Option<PathBuf>) -> Result<()> {
    let terms = Term::parse_list(&a.z)?;
    if a.given.is_some() && !terms.is_empty() {
        return Err(invalid("use either --z (adjust) or --given (condition), not both"));
    }
    let mut cols = vec![a.x.as_str(), a.y.as_str()];
    cols.extend(term_columns(&terms));
    if let Some(g) = &a.given {
        cols.push(g);
    }
    let (d, dropped) = complete(&load(input)?, &cols)?;
    let (x, y) = (d.column(&a.x)?, d.column(&a.y)?);
    let results: Vec<(String, AssocResult)> = match &a.given {
        Some(g) => {
            let bandwidth = match a.bandwidth.as_str() {
                "auto" => Bandwidth::Auto,
                v => Bandwidth::Fixed(v.parse().map_err(|_| invalid(format!("bad --bandwidth `{v}`")))?),
            };
            let cfg = ConditionalConfig {
                bandwidth,
                x_model: a.x_model,
                y_model: a.y_model,
                resampling: a.cfg,
                ..Default::default()
            };
            conditional_spearman(x, y, d.column(g)?, &cfg)?
                .into_iter()
                .map(|p| (p.label, p.result))
                .collect()
        }
        None => {
            let z = build_design(&d, &terms)?;
            let rank_based = a.x_model.is_rank_based() && a.y_model.is_rank_based();
            let r = match a.statistic.as_str() {
                "correlation" if terms.is_empty() && rank_based => spearman(x, y, &a.cfg)?,
                "correlation" => partial_spearman(x, y, &z, a.x_model, a.y_model, &a.cfg)?,
                "covariance" => psr_covariance(x, y, &z, a.x_model, a.y_model, &a.cfg)?,
                other => return Err(invalid(format!("unknown --statistic `{other}`"))),
            };
            vec![(String::new(), r)]
        }
    };
    let mut w = csv::Writer::from_writer(sink(out.as_deref())?);
    w.write_record(PCOR_HEADER)?;
    let z_text: Vec<String> = terms.iter().map(|t| t.to_string()).collect();
    for (z_value, r) in results {
        w.write_record([
            r.method.name().to_string(),
            a.x.clone(),
            a.y.clone(),
            z_text.join("+"),
            a.given.clone().unwrap_or_default(),
            z_value,
            format_real(r.estimate),
            opt(r.ci_low),
            opt(r.ci_high),
            opt(r.p_value),
            r.n_used.to_string(),
            dropped.to_string(),
            a.x_model.to_string(),
            a.y_model.to_string(),
            a.cfg.boot.to_string(),
            a.cfg.perm.to_string(),
            a.cfg.seed.to_string(),
            if r.ci_low.is_some() { "pairs-bootstrap-percentile" } else { "" }.to_string(),
            if r.p_value.is_some() { "permutation" } else { "" }.to_string(),
            r.warnings.join("; "),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn scan(
    input: &Input,
    y: &str,
    z: &str,
    predictors: &Path,
    predictor_schema: &str,
    cfg: &ScanConfig,
    out: Option<PathBuf>,
) -> Result<()> {
    let terms = Term::parse_list(z)?;
    let data = load(input)?;
    let mut cols = vec![y];
    cols.extend(term_columns(&terms));
    let keep = data.complete_rows(&cols)?;
    let d = data.select_rows(&keep);
    let preds = load_csv(predictors, &parse_schema(predictor_schema)?)
        .map_err(|e| invalid(format!("{}: {e}", predictors.display())))?;
    if preds.n_rows() != data.n_rows() {
        return Err(invalid(format!(
            "{} has {} rows but the data has {}",
            predictors.display(),
            preds.n_rows(),
            data.n_rows()
        )));
    }
    if let (Some(a), Some(b)) = (data.row_ids(), preds.row_ids()) {
        if a != b {
            return Err(invalid("row ids of the predictor file do not match the data"));
        }
    }
    let preds = preds.select_rows(&keep);
    let design = build_design(&d, &terms)?;
    let mut rows = batch_partial_spearman(d.column(y)?, &design, preds.columns(), cfg)?;
    let failed = rows.iter().filter(|r| r.failure.is_some()).count();
    if failed > 0 {
        log::warn!("{failed} predictor(s) could not be analysed; see the status column");
    }
    rank_rows(&mut rows);
    let mut w = csv::Writer::from_writer(sink(out.as_deref())?);
    w.write_record(["rank", "predictor", "estimate", "p_value", "n_used", "status"])?;
    for (k, r) in rows.iter().enumerate() {
        let rank = if r.failure.is_none() { (k + 1).to_string() } else { String::new() };
        w.write_record([
            rank,
            r.name.clone(),
            opt(r.estimate),
            opt(r.p_value),
            r.n_used.to_string(),
            r.failure.clone().unwrap_or_else(|| "ok".into()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Square matrix with unadjusted Spearman correlations above the diagonal and
/// partial Spearman correlations given `Z` below it. Cells whose fits failed
/// are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub estimate: Vec<Vec<Option<f64>>>,
    pub p_value: Vec<Vec<Option<f64>>>,
    pub failures: Vec<String>,
}

pub fn correlation_matrix(
    d: &Dataset,
    vars: &[&str],
    z: &DesignMatrix,
    model: FitterSpec,
    cfg: &ResamplingConfig,
) -> Result<CorrelationMatrix> {
    let k = vars.len();
    if k < 2 {
        return Err(invalid("a correlation matrix needs at least 2 variables"));
    }
    let columns = vars.iter().map(|v| d.column(v)).collect::<Result<Vec<_>>>()?;
    let none = DesignMatrix::empty(d.n_rows());
    let mut failures = Vec::new();
    // Residuals are computed once per variable: unadjusted, then given Z.
    let mut residuals = |zm: &DesignMatrix, spec: FitterSpec, what: &str| -> Vec<Option<Vec<f64>>> {
        columns
            .iter()
            .map(|c| match margin_psr(c, zm, spec) {
                Ok((r, _)) => Some(r.values),
                Err(e) => {
                    failures.push(format!("{} ({what}): {e}", c.name()));
                    None
                }
            })
            .collect()
    };
    let raw = residuals(&none, FitterSpec::Empirical, "unadjusted");
    let adj = residuals(z, model, "adjusted");
    let mut estimate = vec![vec![None; k]; k];
    let mut p_value = vec![vec![None; k]; k];
    let mut pair = 0u64;
    for i in 0..k {
        estimate[i][i] = Some(1.0);
        for j in i + 1..k {
            for (set, (a, b)) in [(&raw, (i, j)), (&adj, (j, i))] {
                if let (Some(ri), Some(rj)) = (&set[i], &set[j]) {
                    match pearson(ri, rj) {
                        Some(e) => {
                            estimate[a][b] = Some(e);
                            if cfg.perm > 0 {
                                p_value[a][b] = Some(permutation_p(Statistic::Correlation, ri, rj, cfg.perm, cfg.seed, pair));
                            }
                        }
                        None => failures.push(format!("{} / {}: zero-variance residuals", vars[i], vars[j])),
                    }
                }
                pair += 1;
            }
        }
    }
    Ok(CorrelationMatrix {
        names: vars.iter().map(|v| v.to_string()).collect(),
        estimate,
        p_value,
        failures,
    })
}

fn write_matrix(names: &[String], cells: &[Vec<Option<f64>>], out: Option<&Path>) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink(out)?);
    let mut header = vec!["variable".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for (name, row) in names.iter().zip(cells) {
        let mut rec = vec![name.clone()];
        rec.extend(row.iter().map(|v| opt(*v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn corrmat(
    input: &Input,
    vars: &str,
    z: &str,
    model: FitterSpec,
    cfg: &ResamplingConfig,
    out: Option<PathBuf>,
    p_out: Option<PathBuf>,
) -> Result<()> {
    let names: Vec<&str> = vars.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    let terms = Term::parse_list(z)?;
    let mut cols = names.clone();
    cols.extend(term_columns(&terms));
    let (d, _) = complete(&load(input)?, &cols)?;
    let design = build_design(&d, &terms)?;
    let m = correlation_matrix(&d, &names, &design, model, cfg)?;
    for f in &m.failures {
        log::warn!("{f}");
    }
    write_matrix(&m.names, &m.estimate, out.as_deref())?;
    if let Some(p) = p_out {
        write_matrix(&m.names, &m.p_value, Some(&p))?;
    }
    Ok(())
}
