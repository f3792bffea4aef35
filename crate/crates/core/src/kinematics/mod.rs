//! Reach-trajectory analysis: zero-phase filtering, differentiation,
//! threshold segmentation and per-trial error measures.

pub mod filter;
pub mod outcome;
pub mod segment;
pub mod summary;
pub mod trajectory;

pub use filter::{lowpass, Butterworth2};
pub use outcome::{
    analyze_trials, error_measures, read_outcomes_csv, trial_outcome, write_outcomes_csv,
    AnalysisConfig, TrialOutcome, TrialTarget,
};
pub use segment::{detect_segment, MovementSegment, Rejection, SegmentationConfig};
pub use summary::{mean_ci95, summarize, write_summary_csv, MeanCi, SummaryRow};
pub use trajectory::{read_trajectories_csv, DepthAxis, GridCheck, Sample, Trajectory};

use crate::diff::central_difference;
use crate::error::Result;

/// Low-passes every axis; timestamps are unchanged.
pub fn lowpass_filter(traj: &Trajectory, cutoff: f64) -> Result<Trajectory> {
    let fs = traj.sample_rate();
    let f = Butterworth2::lowpass(cutoff, fs)?;
    let x = f.filtfilt(&traj.axis(|s| s.x))?;
    let y = f.filtfilt(&traj.axis(|s| s.y))?;
    let z = f.filtfilt(&traj.axis(|s| s.z))?;
    let samples = traj
        .samples()
        .iter()
        .enumerate()
        .map(|(i, s)| Sample::new(s.t, x[i], y[i], z[i]))
        .collect();
    Trajectory::new(traj.trial_id(), fs, samples)
}

/// Velocity of one coordinate (m/s).
pub fn differentiate_axis(traj: &Trajectory, f: impl Fn(&Sample) -> f64) -> Result<Vec<f64>> {
    central_difference(&traj.axis(f), 1.0 / traj.sample_rate())
}

/// Velocity vectors `[vx, vy, vz]` (m/s) at each sample.
pub fn differentiate(traj: &Trajectory) -> Result<Vec<[f64; 3]>> {
    let vx = differentiate_axis(traj, |s| s.x)?;
    let vy = differentiate_axis(traj, |s| s.y)?;
    let vz = differentiate_axis(traj, |s| s.z)?;
    Ok((0..vx.len()).map(|i| [vx[i], vy[i], vz[i]]).collect())
}
