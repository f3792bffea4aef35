use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Velocity threshold and hold time for onset and termination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentationConfig {
    /// Depth speed threshold (m/s).
    pub threshold: f64,
    /// Time the velocity must stay on the far side of the threshold (s).
    pub hold: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            threshold: 0.05,
            hold: 0.02,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold >= 0.0) || !self.threshold.is_finite() {
            return Err(Error::invalid(
                "threshold",
                format!("must be a non-negative speed, got {}", self.threshold),
            ));
        }
        if !(self.hold >= 0.0) || !self.hold.is_finite() {
            return Err(Error::invalid(
                "hold",
                format!("must be non-negative, got {}", self.hold),
            ));
        }
        Ok(())
    }

    /// Hold time in samples, at least one.
    pub fn hold_samples(&self, sample_rate: f64) -> usize {
        ((self.hold * sample_rate).round() as usize).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MovementSegment {
    pub onset_index: usize,
    pub termination_index: usize,
}

impl MovementSegment {
    pub fn onset_time(&self, times: &[f64]) -> f64 {
        times[self.onset_index]
    }

    pub fn termination_time(&self, times: &[f64]) -> f64 {
        times[self.termination_index]
    }
}

/// Why a trial produced no outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rejection {
    /// Movement began before the go cue.
    FalseStart,
    /// Depth velocity never crossed the threshold, or never settled again.
    SlowMovement,
    /// More than the allowed number of consecutive frames missing.
    MissingData,
    /// Fewer samples than the analysis needs.
    TooShort,
}

impl std::fmt::Display for Rejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Rejection::FalseStart => "false-start",
            Rejection::SlowMovement => "slow-movement",
            Rejection::MissingData => "missing-data",
            Rejection::TooShort => "too-short",
        })
    }
}

/// Onset is the first sample above `threshold` that stays above for the hold
/// time. Termination is the first sample after peak velocity at or below
/// `threshold` that stays there for the hold time or until the record ends.
pub fn detect_segment(
    depth_velocity: &[f64],
    sample_rate: f64,
    config: &SegmentationConfig,
) -> std::result::Result<MovementSegment, Rejection> {
    let n = depth_velocity.len();
    let hold = config.hold_samples(sample_rate);
    let thr = config.threshold;
    let above = |v: f64| v > thr;

    let onset = (0..n)
        .find(|&i| i + hold <= n && depth_velocity[i..i + hold].iter().all(|&v| above(v)))
        .ok_or(Rejection::SlowMovement)?;

    let peak = (onset..n)
        .max_by(|&a, &b| {
            depth_velocity[a]
                .total_cmp(&depth_velocity[b])
                .then(b.cmp(&a))
        })
        .unwrap_or(onset);

    let termination = (peak + 1..n)
        .find(|&j| {
            let end = (j + hold).min(n);
            depth_velocity[j..end].iter().all(|&v| !above(v))
        })
        .ok_or(Rejection::SlowMovement)?;

    Ok(MovementSegment {
        onset_index: onset,
        termination_index: termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(threshold: f64) -> SegmentationConfig {
        SegmentationConfig {
            threshold,
            hold: 0.02,
        }
    }

    fn bump() -> Vec<f64> {
        // rest, smooth bump peaking at 1 m/s, rest
        let mut v = vec![0.0; 50];
        v.extend((0..150).map(|i| (std::f64::consts::PI * i as f64 / 150.0).sin().powi(2)));
        v.extend(vec![0.0; 50]);
        v
    }

    #[test]
    fn all_zero_is_slow() {
        assert_eq!(
            detect_segment(&[0.0; 100], 250.0, &cfg(0.05)),
            Err(Rejection::SlowMovement)
        );
    }

    #[test]
    fn hold_rejects_single_sample_spikes() {
        let mut v = bump();
        v[10] = 1.0;
        v[11] = 1.0;
        let s = detect_segment(&v, 250.0, &cfg(0.05)).unwrap();
        assert!(s.onset_index > 50);
        assert!(v[s.onset_index] > 0.05 && v[s.onset_index - 1] <= 0.05);
        assert!(v[s.termination_index] <= 0.05 && v[s.termination_index - 1] > 0.05);
    }

    #[test]
    fn zero_threshold_finds_first_positive_sample() {
        let v = bump();
        let s = detect_segment(&v, 250.0, &cfg(0.0)).unwrap();
        assert_eq!(s.onset_index, 51);
        assert_eq!(s.termination_index, 200);
    }

    #[test]
    fn truncation_is_idempotent() {
        let v = bump();
        let s = detect_segment(&v, 250.0, &cfg(0.05)).unwrap();
        let cut = &v[s.onset_index..=s.termination_index];
        let t = detect_segment(cut, 250.0, &cfg(0.05)).unwrap();
        assert_eq!(t.onset_index, 0);
        assert_eq!(t.termination_index, s.termination_index - s.onset_index);
    }

    #[test]
    fn movement_that_never_stops_is_slow() {
        let v: Vec<f64> = (0..100).map(|i| i as f64 * 0.01).collect();
        assert_eq!(
            detect_segment(&v, 250.0, &cfg(0.05)),
            Err(Rejection::SlowMovement)
        );
    }

    #[test]
    fn config_validation() {
        assert!(cfg(-1.0).validate().is_err());
        assert!(SegmentationConfig::default().validate().is_ok());
        assert_eq!(SegmentationConfig::default().hold_samples(250.0), 5);
    }
}
