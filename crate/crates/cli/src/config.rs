//! Experiment configuration: a JSON file merged with command-line flags.

use std::path::{Path, PathBuf};

use clap::Args;
use lorentz_embed::{ConstantLedger, LorentzParams, WeightSequence};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Every setting a command may use. Unset fields are omitted from reports.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// JSON config file; flags override its entries.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Power-weight exponent (weights i^-r).
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    /// File with one weight per line, non-increasing, first weight 1.
    #[arg(long, value_name = "FILE")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights_file: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Embedding dimension.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Comma-separated eps values for `probe`.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_grid: Option<Vec<f64>>,
    /// Deviation level for the auxiliary-norm chain.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Comma-separated deviation levels for tail checks.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation_trials: Option<u64>,
    /// Samples for median estimates.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    /// Test directions per distortion measurement.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directions: Option<usize>,
    /// Test direction layout: random_sphere or grid2d.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    /// Largest k searched by `probe`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_cap: Option<usize>,
    /// What `verify` checks (embedding, orderorder, schechtman, tail) or
    /// what `calibrate` fits (dimension, tail, or an analytic lemma name).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    /// Success rate demanded by `calibrate --target dimension`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_target: Option<f64>,
    /// Makes `verify --target embedding` fail (exit 2) when the lower CI
    /// edge of the success rate is below this value.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_success: Option<f64>,
    #[arg(long = "seed", value_name = "SEED")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    /// Seed of the validation stream; defaults to the master seed.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation_seed: Option<u64>,
    /// JSON object of ledger constants.
    #[arg(long, value_name = "FILE")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ledger_file: Option<PathBuf>,
    /// Report path; stdout when absent. Output paths are not echoed into
    /// reports, so reruns written to different files compare equal.
    #[arg(long, short = 'o', value_name = "FILE")]
    #[serde(skip_serializing)]
    pub output: Option<PathBuf>,
    /// CSV of per-direction deviations (`simulate` only).
    #[arg(long, value_name = "FILE")]
    #[serde(skip_serializing)]
    pub csv: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $flags:ident, $($f:ident),*) => {
        $( if $flags.$f.is_some() { $base.$f = $flags.$f.clone(); } )*
    };
}

impl ExperimentConfig {
    /// Loads `--config` if given and lays the flags over it.
    pub fn resolve(flags: &ExperimentConfig) -> Result<Self, CliError> {
        let mut cfg = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("config: cannot read {}: {e}", path.display())))?;
                serde_json::from_str::<ExperimentConfig>(&text)
                    .map_err(|e| CliError::Usage(format!("config: {}: {e}", path.display())))?
            }
            None => ExperimentConfig::default(),
        };
        overlay!(
            cfg, flags, r, weights_file, p, n, k, eps, eps_grid, t, t_grid, trials, validation_trials, samples,
            directions, mode, k_cap, target, fit_target, min_success, master_seed, validation_seed, ledger_file,
            output, csv
        );
        Ok(cfg)
    }

    pub fn seed(&self, command: &str) -> Result<u64, CliError> {
        self.master_seed.ok_or_else(|| {
            CliError::Usage(format!(
                "master_seed is required for `{command}`: pass --seed or set \"master_seed\" in the config"
            ))
        })
    }

    pub fn p(&self) -> Result<f64, CliError> {
        self.p.ok_or_else(|| missing("p"))
    }

    pub fn eps(&self) -> Result<f64, CliError> {
        self.eps.ok_or_else(|| missing("eps"))
    }

    pub fn k(&self) -> Result<usize, CliError> {
        match self.k {
            Some(0) => Err(CliError::Usage("k must be at least 1".into())),
            Some(k) => Ok(k),
            None => Err(missing("k")),
        }
    }

    /// Builds the norm from exactly one of `r` and `weights_file`, filling
    /// in `n` from the weights file.
    pub fn params(&mut self) -> Result<LorentzParams, CliError> {
        let p = self.p()?;
        match (self.r, &self.weights_file) {
            (Some(_), Some(_)) => Err(CliError::Usage("give exactly one of r and weights_file, not both".into())),
            (None, None) => Err(CliError::Usage("one of r and weights_file is required".into())),
            (Some(r), None) => {
                let n = self.n.ok_or_else(|| missing("n"))?;
                LorentzParams::power(r, n, p).map_err(|e| CliError::Usage(format!("r/n/p: {e}")))
            }
            (None, Some(path)) => {
                let w = read_weights(path)?;
                match self.n {
                    Some(n) if n != w.len() => {
                        return Err(CliError::Usage(format!(
                            "n: {n} does not match the {} weights in {}",
                            w.len(),
                            path.display()
                        )))
                    }
                    _ => self.n = Some(w.len()),
                }
                LorentzParams::new(w, p).map_err(|e| CliError::Usage(format!("p: {e}")))
            }
        }
    }

    pub fn ledger(&self) -> Result<ConstantLedger, CliError> {
        let Some(path) = &self.ledger_file else {
            return Ok(ConstantLedger::unit());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("ledger_file: cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("ledger_file: {}: {e}", path.display())))
    }

    /// Fills `field` with `value` unless set, so reports show what was used.
    pub fn default_u64(field: &mut Option<u64>, value: u64) -> u64 {
        *field.get_or_insert(value)
    }

    pub fn default_usize(field: &mut Option<usize>, value: usize) -> usize {
        *field.get_or_insert(value)
    }
}

pub fn missing(field: &str) -> CliError {
    CliError::Usage(format!("missing required field {field} (flag --{})", field.replace('_', "-")))
}

fn read_weights(path: &Path) -> Result<WeightSequence, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("weights_file: cannot read {}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| CliError::Usage(format!("weights_file: line {}: not a number: {line:?}", i + 1)))?;
        values.push(v);
    }
    WeightSequence::new(values).map_err(|e| CliError::Usage(format!("weights_file: {e}")))
}
