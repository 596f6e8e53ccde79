use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use semtrans_core::dataset::Split;
use semtrans_core::metrics::MetricReport;
use semtrans_core::{Image, LatentNorm};

use super::edit::run_edits;
use super::evaluate::Evaluator;
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::manifest::RunDir;
use crate::session::Session;

/// Hyper-parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    #[serde(alias = "lambda_i")]
    LambdaImage,
    #[serde(alias = "lambda_s")]
    LambdaSource,
    #[serde(alias = "lambda_z")]
    LambdaLatent,
    #[serde(alias = "lambda_p")]
    LambdaPerceptual,
    #[serde(alias = "lr")]
    StepSize,
    #[serde(alias = "resolution")]
    EncodeResolution,
    LatentNorm,
    NNetworks,
    #[serde(alias = "d")]
    Augmentations,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::LambdaImage => "lambda_image",
            SweepParam::LambdaSource => "lambda_source",
            SweepParam::LambdaLatent => "lambda_latent",
            SweepParam::LambdaPerceptual => "lambda_perceptual",
            SweepParam::StepSize => "step_size",
            SweepParam::EncodeResolution => "encode_resolution",
            SweepParam::LatentNorm => "latent_norm",
            SweepParam::NNetworks => "n_networks",
            SweepParam::Augmentations => "augmentations",
        }
    }

    /// Set this parameter of `config` to `value`.
    pub fn apply(self, config: &mut RunConfig, value: &Value) -> Result<()> {
        let bad = || CliError::config(format!("{}: invalid sweep value {value}", self.name()));
        let real = || value.as_f64().ok_or_else(bad);
        let count = || value.as_u64().map(|v| v as usize).ok_or_else(bad);
        let hp = &mut config.hyperparams;
        match self {
            SweepParam::LambdaImage => hp.lambda_image = real()?,
            SweepParam::LambdaSource => hp.lambda_source = real()?,
            SweepParam::LambdaLatent => hp.lambda_latent = real()?,
            SweepParam::LambdaPerceptual => hp.lambda_perceptual = real()?,
            SweepParam::StepSize => hp.step_size = real()?,
            SweepParam::EncodeResolution => hp.encode_resolution = count()?,
            SweepParam::LatentNorm => {
                hp.latent_norm = value
                    .as_str()
                    .ok_or_else(bad)?
                    .parse::<LatentNorm>()
                    .map_err(|e| CliError::config(e.to_string()))?
            }
            SweepParam::NNetworks => config.ensemble_members = Some(count()?),
            SweepParam::Augmentations => hp.augmentations = count()?,
        }
        Ok(())
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(Value::String(s.to_string()))
            .map_err(|_| CliError::config(format!("unknown sweep parameter `{s}`")))
    }
}

/// One parameter and its grid; every other setting comes from the run
/// configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<Value>,
}

impl SweepSpec {
    /// Parse a comma-separated grid; each item is read as JSON and otherwise
    /// kept as a string.
    pub fn from_list(param: SweepParam, list: &str) -> Self {
        let values = list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| serde_json::from_str(s).unwrap_or_else(|_| Value::String(s.to_string())))
            .collect();
        SweepSpec { param, values }
    }

    pub fn validate(&self, base: &RunConfig) -> Result<()> {
        if self.values.is_empty() {
            return Err(CliError::config("sweep grid is empty"));
        }
        for v in &self.values {
            let mut cfg = base.clone();
            self.param.apply(&mut cfg, v)?;
            cfg.validate()?;
        }
        Ok(())
    }
}

/// Metric row for one grid value. A failed value keeps its error and no
/// metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: String,
    pub value: String,
    pub queries: usize,
    pub lpips_x100: Option<f64>,
    pub accuracy_pct: Option<f64>,
    pub csfid: Option<f64>,
    pub sfid: Option<f64>,
    pub error: Option<String>,
}

fn value_label(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Run the edit pipeline and evaluation for each grid value over the
/// selected queries (the dev split unless the filter names one). Evaluation
/// always uses the base configuration's backends so rows are comparable.
/// Writes `sweeps/<param>.csv` and `sweeps/<param>.json`.
pub fn sweep(session: &Session, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let base = &session.config;
    spec.validate(base)?;
    let queries = session.selected_queries(Some(Split::Dev))?;
    let eval_backends = session.backends(base, &base.hyperparams)?;
    let evaluator = Evaluator::new(session, &eval_backends, &base.hyperparams, &queries)?;

    let mut rows = Vec::with_capacity(spec.values.len());
    for value in &spec.values {
        let label = value_label(value);
        let result = (|| -> Result<MetricReport> {
            let mut cfg = base.clone();
            spec.param.apply(&mut cfg, value)?;
            let backends = session.backends(&cfg, &cfg.hyperparams)?;
            let outputs = run_edits(session, &cfg, &backends, &cfg.hyperparams, &queries)?;
            let images: Vec<Image> = outputs.into_iter().map(|o| o.image).collect();
            let outcomes = evaluator.outcomes(&queries, &images)?;
            evaluator.report(&format!("{}={label}", spec.param), &outcomes)
        })();
        let row = match result {
            Ok(r) => SweepRow {
                param: spec.param.name().to_string(),
                value: label,
                queries: r.query_count,
                lpips_x100: Some(r.lpips_x100),
                accuracy_pct: Some(r.accuracy_pct),
                csfid: Some(r.csfid),
                sfid: Some(r.sfid),
                error: None,
            },
            Err(e) => {
                log::warn!("{}={label} failed: {e}", spec.param);
                SweepRow {
                    param: spec.param.name().to_string(),
                    value: label,
                    queries: queries.len(),
                    lpips_x100: None,
                    accuracy_pct: None,
                    csfid: None,
                    sfid: None,
                    error: Some(e.to_string()),
                }
            }
        };
        rows.push(row);
    }

    let mut csv_out = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        csv_out.serialize(row)?;
    }
    let csv_bytes = csv_out.into_inner().map_err(|e| CliError::io("sweep csv", e.into_error()))?;
    let mut run = RunDir::open(session.output_dir(), &session.config_hash(), &format!("sweep {}", spec.param))?;
    run.write(&format!("sweeps/{}.csv", spec.param), &csv_bytes)?;
    let mut json = serde_json::to_string_pretty(&rows).expect("rows serialize");
    json.push('\n');
    run.write(&format!("sweeps/{}.json", spec.param), json.as_bytes())?;
    run.finish()?;
    Ok(rows)
}
