//! Seeded generator of synthetic participants, trials and reach trajectories.
//!
//! Every participant owns independent ChaCha8 streams, so the output depends
//! only on the configuration and never on generation order.

pub mod minjerk;

pub use minjerk::MinimumJerk;

use std::io::Write;

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::correction::DepthRemap;
use crate::error::{Error, Result};
use crate::geometry::{distance_from_angle, subtended_angle, EyeGeometry, ScenePoint};
use crate::kinematics::{
    error_measures, Butterworth2, Sample, Trajectory, TrialOutcome, TrialTarget,
};
use crate::perception::{PerturbationParams, MAX_BETA};
use crate::pose::EyePose;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum IpdDistribution {
    Uniform {
        min: f64,
        max: f64,
    },
    /// Normal draw clamped to `[min, max]`.
    Normal {
        mean: f64,
        sd: f64,
        min: f64,
        max: f64,
    },
}

impl IpdDistribution {
    fn bounds(&self) -> (f64, f64) {
        match *self {
            IpdDistribution::Uniform { min, max } | IpdDistribution::Normal { min, max, .. } => {
                (min, max)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    /// Scene rendered as specified.
    #[default]
    Original,
    /// Scene rendered through the depth correction.
    Transformed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Feedback {
    /// Disparity-guided movements; endpoints follow the model.
    #[default]
    Online,
    /// Memory-guided movements; unbiased, with inflated variance.
    Feedforward,
}

/// Mixture of per-participant multipliers on the offset the correction
/// removes, as `(multiplier, weight)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heterogeneity {
    pub components: Vec<(f64, f64)>,
}

impl Default for Heterogeneity {
    fn default() -> Self {
        Self {
            components: vec![(1.0, 10.0), (0.0, 6.0), (-0.5, 7.0)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_participants: usize,
    pub ipd: IpdDistribution,
    /// True vergence offset (rad).
    pub beta: f64,
    /// Endpoint motor noise SD along depth (m).
    pub noise_sd: f64,
    /// Target distances from home along the reach line (m).
    pub distances: Vec<f64>,
    pub repetitions: usize,
    /// Movement duration (s).
    pub duration: f64,
    pub condition: Condition,
    pub feedback: Feedback,
    /// Variance multiplier for feedforward endpoints.
    pub feedforward_variance_factor: f64,
    pub heterogeneity: Option<Heterogeneity>,
    pub seed: u64,
    pub first_trial_id: u64,
    pub home: [f64; 3],
    pub eye_pose: EyePose,
    pub sample_rate: f64,
    /// Rest before and after the movement (s).
    pub rest: f64,
    /// SD of white positional noise before filtering (m).
    pub trajectory_noise_sd: f64,
    pub noise_cutoff_hz: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_participants: 20,
            ipd: IpdDistribution::Normal {
                mean: 0.063,
                sd: 0.003,
                min: 0.055,
                max: 0.071,
            },
            beta: 0.22f64.to_radians(),
            noise_sd: 0.005,
            distances: vec![0.20, 0.25, 0.30, 0.35],
            repetitions: 12,
            duration: 0.6,
            condition: Condition::Original,
            feedback: Feedback::Online,
            feedforward_variance_factor: 1.5,
            heterogeneity: None,
            seed: 0,
            first_trial_id: 1,
            home: [0.0; 3],
            eye_pose: EyePose::default(),
            sample_rate: 250.0,
            rest: 0.25,
            trajectory_noise_sd: 0.0,
            noise_cutoff_hz: 20.0,
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be positive, got {v}")))
    }
}

fn non_negative(name: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            name,
            format!("must be non-negative, got {v}"),
        ))
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_participants == 0 {
            return Err(Error::invalid("n_participants", "must be at least 1"));
        }
        let (lo, hi) = self.ipd.bounds();
        if !(lo > 0.0 && lo <= hi && hi < crate::geometry::MAX_IPD) {
            return Err(Error::invalid(
                "ipd",
                format!("bounds must satisfy 0 < min <= max < 0.1 m, got [{lo}, {hi}]"),
            ));
        }
        if let IpdDistribution::Normal { mean, sd, .. } = self.ipd {
            positive("ipd", mean)?;
            non_negative("ipd", sd)?;
        }
        if !(self.beta.abs() < MAX_BETA) {
            return Err(Error::invalid(
                "beta",
                format!("|β| must be below {MAX_BETA} rad, got {}", self.beta),
            ));
        }
        non_negative("noise_sd", self.noise_sd)?;
        if self.distances.is_empty() {
            return Err(Error::invalid("distances", "need at least one distance"));
        }
        for &d in &self.distances {
            positive("distances", d)?;
        }
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions", "must be at least 1"));
        }
        positive("duration", self.duration)?;
        positive(
            "feedforward_variance_factor",
            self.feedforward_variance_factor,
        )?;
        if let Some(h) = &self.heterogeneity {
            if h.components.is_empty()
                || h.components
                    .iter()
                    .any(|&(m, w)| !m.is_finite() || !(w >= 0.0) || !w.is_finite())
                || h.components.iter().all(|&(_, w)| w == 0.0)
            {
                return Err(Error::invalid(
                    "heterogeneity",
                    "needs finite multipliers and non-negative weights, not all zero",
                ));
            }
        }
        if !self.home.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("home", "must be finite"));
        }
        self.eye_pose.validate()?;
        positive("sample_rate", self.sample_rate)?;
        non_negative("rest", self.rest)?;
        non_negative("trajectory_noise_sd", self.trajectory_noise_sd)?;
        if self.trajectory_noise_sd > 0.0 {
            Butterworth2::lowpass(self.noise_cutoff_hz, self.sample_rate)
                .map_err(|_| Error::invalid("noise_cutoff_hz", "must lie below Nyquist"))?;
        }
        Ok(())
    }

    /// Condition label used in outcome tables.
    pub fn label(&self) -> String {
        let c = match self.condition {
            Condition::Original => "original",
            Condition::Transformed => "transformed",
        };
        match self.feedback {
            Feedback::Online => c.to_string(),
            Feedback::Feedforward => format!("{c}-feedforward"),
        }
    }
}

/// Independent random stream for one participant and purpose.
fn stream(seed: u64, participant_index: usize, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(participant_index as u64 * 4 + purpose);
    rng
}

const PARTICIPANT_STREAM: u64 = 0;
const TRIAL_STREAM: u64 = 1;
const TRAJECTORY_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Participant {
    pub participant_id: u32,
    /// m
    pub ipd: f64,
    /// Multiplier on the offset the correction removes for this participant.
    pub correction_response: f64,
}

pub fn generate_participants(config: &SimConfig) -> Result<Vec<Participant>> {
    config.validate()?;
    let weights = config
        .heterogeneity
        .as_ref()
        .map(|h| {
            WeightedIndex::new(h.components.iter().map(|c| c.1))
                .map(|w| (w, h.components.clone()))
                .map_err(|e| Error::invalid("heterogeneity", e.to_string()))
        })
        .transpose()?;
    (0..config.n_participants)
        .map(|i| {
            let mut rng = stream(config.seed, i, PARTICIPANT_STREAM);
            let ipd = match config.ipd {
                IpdDistribution::Uniform { min, max } if min == max => min,
                IpdDistribution::Uniform { min, max } => rng.random_range(min..=max),
                IpdDistribution::Normal { mean, sd, min, max } => {
                    let n =
                        Normal::new(mean, sd).map_err(|e| Error::invalid("ipd", e.to_string()))?;
                    n.sample(&mut rng).clamp(min, max)
                }
            };
            let correction_response = match &weights {
                Some((w, comps)) => comps[w.sample(&mut rng)].0,
                None => 1.0,
            };
            Ok(Participant {
                participant_id: i as u32 + 1,
                ipd,
                correction_response,
            })
        })
        .collect()
}

/// One simulated trial with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrial {
    pub outcome: TrialOutcome,
    pub target: TrialTarget,
    /// Movement end position in the trajectory frame (m).
    pub endpoint: [f64; 3],
    /// Endpoint error before motor noise (m).
    pub systematic_error: f64,
}

/// Noise-free endpoint reach for a target `reach` metres from home.
pub fn systematic_endpoint(
    reach: f64,
    config: &SimConfig,
    participant: &Participant,
) -> Result<f64> {
    let eyes = EyeGeometry::new(participant.ipd)?;
    let pose = &config.eye_pose;
    if config.feedback == Feedback::Feedforward {
        return Ok(reach);
    }
    let target = pose.reach_point(reach);
    let shown = match config.condition {
        Condition::Original => target,
        Condition::Transformed => {
            let removed = PerturbationParams::new(config.beta * participant.correction_response)?;
            DepthRemap::new(eyes, removed).transform_point(&target)?
        }
    };
    if config.beta == 0.0 && shown == target {
        return Ok(reach);
    }
    let tau = subtended_angle(&shown, &eyes)?;
    let endpoint = distance_from_angle(tau + config.beta, &eyes)?;
    pose.reach_at_distance(endpoint)
}

/// Trials ordered by participant, then repetition, then distance.
pub fn generate_trials(config: &SimConfig, participants: &[Participant]) -> Result<Vec<SimTrial>> {
    config.validate()?;
    let sd = match config.feedback {
        Feedback::Online => config.noise_sd,
        Feedback::Feedforward => config.noise_sd * config.feedforward_variance_factor.sqrt(),
    };
    let home = ScenePoint::from(config.home);
    let label = config.label();
    let mut trials = Vec::new();
    let mut trial_id = config.first_trial_id;
    for (i, p) in participants.iter().enumerate() {
        let eyes = EyeGeometry::new(p.ipd)?;
        let mut rng = stream(config.seed, i, TRIAL_STREAM);
        let systematic: Vec<f64> = config
            .distances
            .iter()
            .map(|&r| systematic_endpoint(r, config, p))
            .collect::<Result<_>>()?;
        for _ in 0..config.repetitions {
            for (k, &reach) in config.distances.iter().enumerate() {
                let z: f64 = rng.sample(StandardNormal);
                let end_reach = systematic[k] + sd * z;
                let target = ScenePoint::new(home.x, home.y, home.z + reach);
                let endpoint = ScenePoint::new(home.x, home.y, home.z + end_reach);
                let (md, de, ee, dd) =
                    error_measures(home.z, endpoint, target, home, &eyes, &config.eye_pose)?;
                let outcome = TrialOutcome {
                    trial_id,
                    participant_id: p.participant_id,
                    condition: label.clone(),
                    target_distance_m: reach,
                    valid: true,
                    rejection: None,
                    onset_time_s: None,
                    termination_time_s: None,
                    peak_velocity_mps: None,
                    movement_distance_m: Some(md),
                    distance_error_m: Some(de),
                    endpoint_error_m: Some(ee),
                    disparity_difference_rad: Some(dd),
                };
                trials.push(SimTrial {
                    outcome,
                    target: TrialTarget {
                        trial_id,
                        participant_id: p.participant_id,
                        condition: label.clone(),
                        target: [target.x, target.y, target.z],
                        go_cue: None,
                    },
                    endpoint: [endpoint.x, endpoint.y, endpoint.z],
                    systematic_error: systematic[k] - reach,
                });
                trial_id += 1;
            }
        }
    }
    Ok(trials)
}

/// Minimum-jerk movement from home to each trial's endpoint with rest
/// before and after, plus low-passed white positional noise.
pub fn generate_trajectories(config: &SimConfig, trials: &[SimTrial]) -> Result<Vec<Trajectory>> {
    config.validate()?;
    let fs = config.sample_rate;
    let n = ((2.0 * config.rest + config.duration) * fs).round() as usize + 1;
    let noise_filter = if config.trajectory_noise_sd > 0.0 {
        Some(Butterworth2::lowpass(config.noise_cutoff_hz, fs)?)
    } else {
        None
    };
    let mut participant_ids: Vec<u32> = trials.iter().map(|t| t.target.participant_id).collect();
    participant_ids.sort_unstable();
    participant_ids.dedup();
    let mut rngs: Vec<ChaCha8Rng> = (0..participant_ids.len())
        .map(|i| stream(config.seed, i, TRAJECTORY_STREAM))
        .collect();

    let home = config.home;
    trials
        .iter()
        .map(|trial| {
            let mj = MinimumJerk::new(1.0, config.duration);
            let delta: Vec<f64> = (0..3).map(|a| trial.endpoint[a] - home[a]).collect();
            let mut axes: Vec<Vec<f64>> = (0..3)
                .map(|a| {
                    (0..n)
                        .map(|i| home[a] + delta[a] * mj.position(i as f64 / fs - config.rest))
                        .collect()
                })
                .collect();
            if let Some(f) = &noise_filter {
                let slot = participant_ids
                    .binary_search(&trial.target.participant_id)
                    .expect("id collected above");
                let rng = &mut rngs[slot];
                for axis in &mut axes {
                    let white: Vec<f64> = (0..n)
                        .map(|_| config.trajectory_noise_sd * rng.sample::<f64, _>(StandardNormal))
                        .collect();
                    for (v, e) in axis.iter_mut().zip(f.filtfilt(&white)?) {
                        *v += e;
                    }
                }
            }
            let samples = (0..n)
                .map(|i| Sample::new(i as f64 / fs, axes[0][i], axes[1][i], axes[2][i]))
                .collect();
            Trajectory::new(trial.target.trial_id, fs, samples)
        })
        .collect()
}

pub fn write_participants_csv<W: Write>(participants: &[Participant], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in participants {
        w.serialize(p).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// `trial_id,t,x,y,z` rows.
pub fn write_trajectories_csv<W: Write>(trajectories: &[Trajectory], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["trial_id", "t", "x", "y", "z"])
        .map_err(|e| Error::Io(e.to_string()))?;
    for traj in trajectories {
        for s in traj.samples() {
            w.write_record([
                traj.trial_id().to_string(),
                s.t.to_string(),
                s.x.to_string(),
                s.y.to_string(),
                s.z.to_string(),
            ])
            .map_err(|e| Error::Io(e.to_string()))?;
        }
    }
    w.flush()?;
    Ok(())
}
