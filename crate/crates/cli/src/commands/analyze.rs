use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use vac_core::kinematics::{
    analyze_trials, read_trajectories_csv, summarize, write_outcomes_csv, write_summary_csv,
    AnalysisConfig, DepthAxis, SegmentationConfig, TrialTarget,
};

use crate::config::{
    create_file, create_out_dir, load_section, open_file, read_data_json, write_manifest,
    EyePoseFile,
};
use crate::error::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Analysis config (JSON).
    #[arg(long, env = "VAC_CONFIG")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Trajectory CSV with columns trial_id,t,x,y,z (s, m).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// JSON array of trial targets.
    #[arg(long)]
    pub targets: Option<PathBuf>,
    /// Eye pose JSON (`eye_offset_mm`, optional `view_rotation`).
    #[arg(long)]
    pub eye_pose: Option<PathBuf>,
    #[arg(long)]
    pub cutoff_hz: Option<f64>,
    /// Speed threshold for onset and termination (mm/s).
    #[arg(long)]
    pub threshold_mmps: Option<f64>,
    #[arg(long)]
    pub hold_ms: Option<f64>,
    #[arg(long)]
    pub ipd_mm: Option<f64>,
    #[arg(long)]
    pub depth_axis: Option<DepthAxis>,
    #[arg(long)]
    pub sample_rate_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub input: Option<PathBuf>,
    pub targets: Option<PathBuf>,
    pub sample_rate_hz: f64,
    pub cutoff_hz: f64,
    pub threshold_mmps: f64,
    pub hold_ms: f64,
    pub ipd_mm: f64,
    pub depth_axis: DepthAxis,
    pub home_m: [f64; 3],
    pub eye_pose: EyePoseFile,
    pub max_missing: usize,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        let core = AnalysisConfig::default();
        Self {
            input: None,
            targets: None,
            sample_rate_hz: core.sample_rate,
            cutoff_hz: core.cutoff_hz,
            threshold_mmps: core.segmentation.threshold * 1e3,
            hold_ms: core.segmentation.hold * 1e3,
            ipd_mm: core.ipd * 1e3,
            depth_axis: core.depth_axis,
            home_m: core.home,
            eye_pose: EyePoseFile::from_pose(&core.eye_pose),
            max_missing: core.max_missing,
        }
    }
}

impl AnalyzeConfig {
    pub fn to_core(&self) -> CliResult<AnalysisConfig> {
        let cfg = AnalysisConfig {
            sample_rate: self.sample_rate_hz,
            cutoff_hz: self.cutoff_hz,
            segmentation: SegmentationConfig {
                threshold: self.threshold_mmps * 1e-3,
                hold: self.hold_ms * 1e-3,
            },
            home: self.home_m,
            eye_pose: self.eye_pose.pose()?,
            ipd: self.ipd_mm * 1e-3,
            depth_axis: self.depth_axis,
            max_missing: self.max_missing,
        };
        cfg.validate().map_err(|e| match e {
            vac_core::Error::InvalidParameter { name, reason } => {
                CliError::field(cli_field(name), reason)
            }
            other => other.into(),
        })?;
        Ok(cfg)
    }
}

fn cli_field(core_name: &str) -> &str {
    match core_name {
        "sample_rate" => "sample_rate_hz",
        "threshold" => "threshold_mmps",
        "hold" => "hold_ms",
        "ipd" => "ipd_mm",
        "home" => "home_m",
        other => other,
    }
}

pub fn resolve(args: &AnalyzeArgs) -> CliResult<AnalyzeConfig> {
    let mut cfg: AnalyzeConfig = load_section(args.config.as_deref(), "analyze")?;
    if let Some(p) = &args.input {
        cfg.input = Some(p.clone());
    }
    if let Some(p) = &args.targets {
        cfg.targets = Some(p.clone());
    }
    if let Some(p) = &args.eye_pose {
        cfg.eye_pose = EyePoseFile::read(p)?;
    }
    macro_rules! set {
        ($($field:ident),*) => {$(
            if let Some(v) = args.$field {
                cfg.$field = v;
            }
        )*};
    }
    set!(
        cutoff_hz,
        threshold_mmps,
        hold_ms,
        ipd_mm,
        depth_axis,
        sample_rate_hz
    );
    Ok(cfg)
}

pub fn run(cfg: &AnalyzeConfig, out: &Path) -> CliResult<()> {
    let core = cfg.to_core()?;
    let input = cfg
        .input
        .as_deref()
        .ok_or_else(|| CliError::field("input", "a trajectory CSV is required"))?;
    let targets_path = cfg
        .targets
        .as_deref()
        .ok_or_else(|| CliError::field("targets", "a targets JSON file is required"))?;

    let trajectories = read_trajectories_csv(
        open_file(input)?,
        &input.display().to_string(),
        core.sample_rate,
    )?;
    let targets: Vec<TrialTarget> = read_data_json(targets_path)?;
    let outcomes = analyze_trials(&trajectories, &targets, &core)?;

    create_out_dir(out)?;
    write_outcomes_csv(&outcomes, create_file(&out.join("outcomes.csv"))?)?;
    write_summary_csv(
        &summarize(&outcomes),
        create_file(&out.join("summary.csv"))?,
    )?;
    write_manifest(out, "analyze", cfg)
}
