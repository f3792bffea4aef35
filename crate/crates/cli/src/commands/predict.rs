use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use vac_core::correction::{
    predicted_correction_curve, predicted_reach_correction_curve, CorrectionRow,
};
use vac_core::geometry::EyeGeometry;
use vac_core::perception::PerturbationParams;

use crate::config::{create_file, create_out_dir, load_section, write_manifest, EyePoseFile};
use crate::error::{as_field, CliError, CliResult};

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Prediction config (JSON).
    #[arg(long, env = "VAC_CONFIG")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub beta_deg: Option<f64>,
    #[arg(long)]
    pub ipd_mm: Option<f64>,
    /// Comma-separated target distances (m).
    #[arg(long, value_delimiter = ',')]
    pub distances: Option<Vec<f64>>,
    /// Treat distances as reach distances from home seen from the eye pose.
    #[arg(long)]
    pub reach: bool,
    /// Eye position relative to home (mm), for `--reach`.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub eye_offset_mm: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictConfig {
    pub beta_deg: f64,
    pub ipd_mm: f64,
    pub distances_m: Vec<f64>,
    pub reach: bool,
    pub eye_pose: EyePoseFile,
}

impl Default for PredictConfig {
    fn default() -> Self {
        Self {
            beta_deg: 0.22,
            ipd_mm: 63.0,
            distances_m: vec![0.45, 0.50, 0.55],
            reach: false,
            eye_pose: EyePoseFile::default(),
        }
    }
}

pub fn resolve(args: &PredictArgs) -> CliResult<PredictConfig> {
    let mut cfg: PredictConfig = load_section(args.config.as_deref(), "predict")?;
    if let Some(b) = args.beta_deg {
        cfg.beta_deg = b;
    }
    if let Some(i) = args.ipd_mm {
        cfg.ipd_mm = i;
    }
    if let Some(d) = &args.distances {
        cfg.distances_m = d.clone();
    }
    if args.reach {
        cfg.reach = true;
    }
    if let Some(e) = &args.eye_offset_mm {
        cfg.eye_pose.eye_offset_mm = [e[0], e[1], e[2]];
    }
    Ok(cfg)
}

pub fn predictions(cfg: &PredictConfig) -> CliResult<Vec<CorrectionRow>> {
    let params = PerturbationParams::from_degrees(cfg.beta_deg).map_err(as_field("beta_deg"))?;
    let eyes = EyeGeometry::from_mm(cfg.ipd_mm).map_err(as_field("ipd_mm"))?;
    if cfg.distances_m.is_empty() {
        return Err(CliError::field(
            "distances",
            "at least one distance is required",
        ));
    }
    if let Some(d) = cfg
        .distances_m
        .iter()
        .find(|d| !(**d > 0.0) || !d.is_finite())
    {
        return Err(CliError::field(
            "distances",
            format!("must be positive, got {d}"),
        ));
    }
    let rows = if cfg.reach {
        let pose = cfg.eye_pose.pose()?;
        predicted_reach_correction_curve(&cfg.distances_m, &eyes, &params, &pose)
    } else {
        predicted_correction_curve(&cfg.distances_m, &eyes, &params)
    };
    rows.map_err(as_field("distances"))
}

pub fn write_predictions<W: Write>(rows: &[CorrectionRow], out: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CliError::Data(e.to_string());
    w.write_record(["distance_m", "original_error_m", "transformed_error_m"])
        .map_err(io)?;
    for r in rows {
        w.write_record([
            r.distance.to_string(),
            r.original_error.to_string(),
            r.transformed_error.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Data(e.to_string()))
}

pub fn run(cfg: &PredictConfig, out: &Path) -> CliResult<()> {
    let rows = predictions(cfg)?;
    create_out_dir(out)?;
    write_predictions(&rows, create_file(&out.join("predictions.csv"))?)?;
    write_predictions(&rows, std::io::stdout().lock())?;
    write_manifest(out, "predict", cfg)
}
