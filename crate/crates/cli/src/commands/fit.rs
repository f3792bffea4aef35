use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use vac_core::fitting::{
    compare_models, fit, observations_from_outcomes, write_comparison_csv, ComparisonRow,
    FitDataset, FitResult, GoodnessOfFit, ModelSpec, Termination, Variant,
};
use vac_core::kinematics::read_outcomes_csv;

use crate::config::{
    create_file, create_out_dir, load_section, open_file, write_json, write_manifest, EyePoseFile,
};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum VariantChoice {
    #[default]
    Both,
    WithOffset,
    ZeroOffset,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Fit config (JSON).
    #[arg(long, env = "VAC_CONFIG")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-trial outcome CSV, as written by `analyze` or `simulate`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub variant: Option<VariantChoice>,
    /// Fraction of each stratum used for training.
    #[arg(long)]
    pub split: Option<f64>,
    /// Seed of the train/test split.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Eye pose JSON used by the model.
    #[arg(long)]
    pub eye_pose: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub input: Option<PathBuf>,
    pub variant: VariantChoice,
    pub split: f64,
    pub seed: u64,
    pub eye_pose: EyePoseFile,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            input: None,
            variant: VariantChoice::Both,
            split: 0.7,
            seed: 0,
            eye_pose: EyePoseFile::default(),
        }
    }
}

pub fn resolve(args: &FitArgs) -> CliResult<FitConfig> {
    let mut cfg: FitConfig = load_section(args.config.as_deref(), "fit")?;
    if let Some(p) = &args.input {
        cfg.input = Some(p.clone());
    }
    if let Some(v) = args.variant {
        cfg.variant = v;
    }
    if let Some(s) = args.split {
        cfg.split = s;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(p) = &args.eye_pose {
        cfg.eye_pose = EyePoseFile::read(p)?;
    }
    Ok(cfg)
}

/// One fitted variant in human units.
#[derive(Debug, Serialize)]
struct FitReport {
    condition: String,
    variant: Variant,
    beta_deg: f64,
    /// Participant id to IPD (mm).
    ipd_mm: BTreeMap<u32, f64>,
    num_params: usize,
    train: GoodnessOfFit,
    test: Option<GoodnessOfFit>,
    selected: bool,
    iterations: usize,
    converged: bool,
    termination: Termination,
    warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
struct FitOutput {
    n_observations: usize,
    split_seed: u64,
    train_fraction: f64,
    warnings: Vec<String>,
    fits: Vec<FitReport>,
}

fn report(condition: &str, res: FitResult, selected: bool) -> FitReport {
    FitReport {
        condition: condition.to_string(),
        variant: res.variant,
        beta_deg: res.beta.to_degrees(),
        ipd_mm: res
            .participants
            .iter()
            .zip(&res.ipds)
            .map(|(&p, &ipd)| (p, ipd * 1e3))
            .collect(),
        num_params: res.num_params,
        train: res.train,
        test: res.test,
        selected,
        iterations: res.iterations,
        converged: res.converged,
        termination: res.termination,
        warnings: res.warnings,
    }
}

pub fn run(cfg: &FitConfig, out: &Path) -> CliResult<()> {
    let pose = cfg.eye_pose.pose()?;
    let input = cfg
        .input
        .as_deref()
        .ok_or_else(|| CliError::field("input", "an outcome CSV is required"))?;
    let outcomes = read_outcomes_csv(open_file(input)?, &input.display().to_string())?;
    let observations = observations_from_outcomes(&outcomes);
    if observations.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no valid trials to fit",
            input.display()
        )));
    }
    let data = FitDataset::new(observations, cfg.split, cfg.seed)?;

    let (rows, fits) = match cfg.variant {
        VariantChoice::Both => {
            let cmp = compare_models(&data, &pose)?;
            let fits = cmp
                .fits
                .into_iter()
                .zip(&cmp.rows)
                .map(|((cond, res), row)| report(&cond, res, row.selected))
                .collect();
            (cmp.rows, fits)
        }
        VariantChoice::WithOffset | VariantChoice::ZeroOffset => {
            let variant = if cfg.variant == VariantChoice::WithOffset {
                Variant::WithOffset
            } else {
                Variant::ZeroOffset
            };
            let mut rows = Vec::new();
            let mut fits = Vec::new();
            for condition in data.conditions() {
                let res = fit(
                    &ModelSpec::new(variant, pose),
                    &data.for_condition(&condition),
                    None,
                )?;
                rows.push(ComparisonRow {
                    condition: condition.clone(),
                    model: variant,
                    num_params: res.num_params,
                    bic_train: res.train.bic,
                    bic_test: res.test.map(|t| t.bic),
                    r2_train: res.train.r2,
                    r2_test: res.test.map(|t| t.r2),
                    selected: true,
                });
                fits.push(report(&condition, res, true));
            }
            (rows, fits)
        }
    };

    let output = FitOutput {
        n_observations: data.len(),
        split_seed: data.split_seed(),
        train_fraction: data.train_fraction(),
        warnings: data.identifiability_warnings(),
        fits,
    };
    create_out_dir(out)?;
    write_json(&out.join("fit_results.json"), &output)?;
    write_comparison_csv(&rows, create_file(&out.join("comparison.csv"))?)?;
    write_manifest(out, "fit", cfg)
}
