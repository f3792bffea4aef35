use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use vac_core::kinematics::{write_outcomes_csv, TrialOutcome, TrialTarget};
use vac_core::synth::{
    generate_participants, generate_trajectories, generate_trials, write_participants_csv,
    write_trajectories_csv, Condition, Feedback, Heterogeneity, IpdDistribution, SimConfig,
};

use crate::config::{
    create_file, create_out_dir, load_section, write_json, write_manifest, EyePoseFile,
};
use crate::error::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulation config (JSON).
    #[arg(long, env = "VAC_CONFIG")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the true vergence offset (degrees).
    #[arg(long)]
    pub beta_deg: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IpdKind {
    #[default]
    Normal,
    Uniform,
}

/// Simulation settings with angles in degrees and small lengths in mm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub seed: u64,
    pub n_participants: usize,
    pub ipd_distribution: IpdKind,
    pub ipd_mean_mm: f64,
    pub ipd_sd_mm: f64,
    pub ipd_min_mm: f64,
    pub ipd_max_mm: f64,
    pub beta_deg: f64,
    pub noise_sd_mm: f64,
    pub distances_m: Vec<f64>,
    pub repetitions: usize,
    pub duration_s: f64,
    pub condition: Condition,
    pub feedback: Feedback,
    pub feedforward_variance_factor: f64,
    /// Per-participant correction response mixture as (multiplier, weight).
    pub heterogeneity: Option<Vec<(f64, f64)>>,
    pub first_trial_id: u64,
    pub home_m: [f64; 3],
    pub eye_pose: EyePoseFile,
    pub sample_rate_hz: f64,
    pub rest_s: f64,
    pub trajectory_noise_sd_mm: f64,
    pub noise_cutoff_hz: f64,
    pub write_trajectories: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        let core = SimConfig::default();
        let (mean, sd, min, max) = match core.ipd {
            IpdDistribution::Normal { mean, sd, min, max } => (mean, sd, min, max),
            IpdDistribution::Uniform { min, max } => (0.5 * (min + max), 0.0, min, max),
        };
        Self {
            seed: core.seed,
            n_participants: core.n_participants,
            ipd_distribution: IpdKind::Normal,
            ipd_mean_mm: mean * 1e3,
            ipd_sd_mm: sd * 1e3,
            ipd_min_mm: min * 1e3,
            ipd_max_mm: max * 1e3,
            beta_deg: 0.22,
            noise_sd_mm: core.noise_sd * 1e3,
            distances_m: core.distances,
            repetitions: core.repetitions,
            duration_s: core.duration,
            condition: core.condition,
            feedback: core.feedback,
            feedforward_variance_factor: core.feedforward_variance_factor,
            heterogeneity: None,
            first_trial_id: core.first_trial_id,
            home_m: core.home,
            eye_pose: EyePoseFile::from_pose(&core.eye_pose),
            sample_rate_hz: core.sample_rate,
            rest_s: core.rest,
            trajectory_noise_sd_mm: 0.2,
            noise_cutoff_hz: core.noise_cutoff_hz,
            write_trajectories: true,
        }
    }
}

impl SimulateConfig {
    pub fn to_core(&self) -> CliResult<SimConfig> {
        let ipd = match self.ipd_distribution {
            IpdKind::Normal => IpdDistribution::Normal {
                mean: self.ipd_mean_mm * 1e-3,
                sd: self.ipd_sd_mm * 1e-3,
                min: self.ipd_min_mm * 1e-3,
                max: self.ipd_max_mm * 1e-3,
            },
            IpdKind::Uniform => IpdDistribution::Uniform {
                min: self.ipd_min_mm * 1e-3,
                max: self.ipd_max_mm * 1e-3,
            },
        };
        if !self.beta_deg.is_finite() {
            return Err(CliError::field("beta_deg", "must be finite"));
        }
        let cfg = SimConfig {
            n_participants: self.n_participants,
            ipd,
            beta: self.beta_deg.to_radians(),
            noise_sd: self.noise_sd_mm * 1e-3,
            distances: self.distances_m.clone(),
            repetitions: self.repetitions,
            duration: self.duration_s,
            condition: self.condition,
            feedback: self.feedback,
            feedforward_variance_factor: self.feedforward_variance_factor,
            heterogeneity: self
                .heterogeneity
                .clone()
                .map(|components| Heterogeneity { components }),
            seed: self.seed,
            first_trial_id: self.first_trial_id,
            home: self.home_m,
            eye_pose: self.eye_pose.pose()?,
            sample_rate: self.sample_rate_hz,
            rest: self.rest_s,
            trajectory_noise_sd: self.trajectory_noise_sd_mm * 1e-3,
            noise_cutoff_hz: self.noise_cutoff_hz,
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

/// Config-file name of a core parameter.
fn cli_field(core_name: &str) -> &str {
    match core_name {
        "ipd" => "ipd_*_mm",
        "beta" => "beta_deg",
        "noise_sd" => "noise_sd_mm",
        "distances" => "distances_m",
        "duration" => "duration_s",
        "home" => "home_m",
        "sample_rate" => "sample_rate_hz",
        "rest" => "rest_s",
        "trajectory_noise_sd" => "trajectory_noise_sd_mm",
        other => other,
    }
}

pub fn resolve(args: &SimulateArgs) -> CliResult<SimulateConfig> {
    let mut cfg: SimulateConfig = load_section(args.config.as_deref(), "simulate")?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(beta) = args.beta_deg {
        cfg.beta_deg = beta;
    }
    Ok(cfg)
}

pub fn run(cfg: &SimulateConfig, out: &Path) -> CliResult<()> {
    let core = cfg.to_core()?;
    let participants = generate_participants(&core)?;
    let trials = generate_trials(&core, &participants)?;
    create_out_dir(out)?;

    write_participants_csv(&participants, create_file(&out.join("participants.csv"))?)?;
    let outcomes: Vec<TrialOutcome> = trials.iter().map(|t| t.outcome.clone()).collect();
    write_outcomes_csv(&outcomes, create_file(&out.join("trials.csv"))?)?;
    let targets: Vec<TrialTarget> = trials.iter().map(|t| t.target.clone()).collect();
    write_json(&out.join("targets.json"), &targets)?;
    write_json(&out.join("eye_pose.json"), &cfg.eye_pose)?;
    if cfg.write_trajectories {
        let trajectories = generate_trajectories(&core, &trials)?;
        write_trajectories_csv(&trajectories, create_file(&out.join("trajectories.csv"))?)?;
    }
    write_manifest(out, "simulate", cfg)
}
