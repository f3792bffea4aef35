use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::segment::{detect_segment, Rejection, SegmentationConfig};
use super::trajectory::{DepthAxis, Trajectory, DEFAULT_SAMPLE_RATE, MIN_SAMPLES};
use super::{differentiate_axis, lowpass_filter};
use crate::error::{Error, Result};
use crate::geometry::{subtended_angle, EyeGeometry, ScenePoint};
use crate::pose::EyePose;

/// Target of one trial, in the trajectory frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialTarget {
    pub trial_id: u64,
    #[serde(default)]
    pub participant_id: u32,
    #[serde(default = "default_condition")]
    pub condition: String,
    /// Target position (m), same frame and axes as the trajectory file.
    pub target: [f64; 3],
    /// Go-cue time (s); onsets before it are false starts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub go_cue: Option<f64>,
}

fn default_condition() -> String {
    "original".into()
}

/// Everything `trial_outcome` needs besides the trajectory and target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub sample_rate: f64,
    pub cutoff_hz: f64,
    pub segmentation: SegmentationConfig,
    /// Home (start) position in the trajectory frame (m).
    pub home: [f64; 3],
    pub eye_pose: EyePose,
    pub ipd: f64,
    pub depth_axis: DepthAxis,
    /// Longest run of missing frames that is interpolated rather than rejected.
    pub max_missing: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            sample_rate: DEFAULT_SAMPLE_RATE,
            cutoff_hz: 10.0,
            segmentation: SegmentationConfig::default(),
            home: [0.0; 3],
            eye_pose: EyePose::default(),
            ipd: 0.063,
            depth_axis: DepthAxis::Z,
            max_missing: 2,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate > 0.0) || !self.sample_rate.is_finite() {
            return Err(Error::invalid(
                "sample_rate",
                format!("must be positive, got {}", self.sample_rate),
            ));
        }
        if !(self.cutoff_hz > 0.0 && self.cutoff_hz < 0.5 * self.sample_rate) {
            return Err(Error::invalid(
                "cutoff_hz",
                format!(
                    "must lie in (0, {}) Hz, got {}",
                    0.5 * self.sample_rate,
                    self.cutoff_hz
                ),
            ));
        }
        if !self.home.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("home", "must be finite"));
        }
        self.segmentation.validate()?;
        self.eye_pose.validate()?;
        EyeGeometry::new(self.ipd)?;
        Ok(())
    }

    pub fn eyes(&self) -> Result<EyeGeometry> {
        EyeGeometry::new(self.ipd)
    }
}

/// Per-trial measures. Measures are `None` when the trial was rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial_id: u64,
    pub participant_id: u32,
    pub condition: String,
    /// Target distance from home along the depth axis (m).
    pub target_distance_m: f64,
    pub valid: bool,
    pub rejection: Option<Rejection>,
    pub onset_time_s: Option<f64>,
    pub termination_time_s: Option<f64>,
    pub peak_velocity_mps: Option<f64>,
    pub movement_distance_m: Option<f64>,
    pub distance_error_m: Option<f64>,
    pub endpoint_error_m: Option<f64>,
    pub disparity_difference_rad: Option<f64>,
}

impl TrialOutcome {
    fn rejected(target: &TrialTarget, reach: f64, why: Rejection) -> Self {
        Self {
            trial_id: target.trial_id,
            participant_id: target.participant_id,
            condition: target.condition.clone(),
            target_distance_m: reach,
            valid: false,
            rejection: Some(why),
            onset_time_s: None,
            termination_time_s: None,
            peak_velocity_mps: None,
            movement_distance_m: None,
            distance_error_m: None,
            endpoint_error_m: None,
            disparity_difference_rad: None,
        }
    }
}

/// Depth-axis error measures for a movement that ends at `endpoint`,
/// starting its movement phase at depth `onset_depth`. Positions are in the
/// trajectory frame; returns (movement distance, distance error, endpoint
/// error, disparity difference).
pub fn error_measures(
    onset_depth: f64,
    endpoint: ScenePoint,
    target: ScenePoint,
    home: ScenePoint,
    eyes: &EyeGeometry,
    pose: &EyePose,
) -> Result<(f64, f64, f64, f64)> {
    let movement = endpoint.z - onset_depth;
    let reach = target.z - home.z;
    let to_eye = pose.to_eye_frame();
    let rel = |p: ScenePoint| ScenePoint::new(p.x - home.x, p.y - home.y, p.z - home.z);
    let tau = subtended_angle(&to_eye.apply(&rel(target)), eyes)?;
    let eta = subtended_angle(&to_eye.apply(&rel(endpoint)), eyes)?;
    Ok((movement, movement - reach, endpoint.z - target.z, tau - eta))
}

/// Filters, differentiates and segments one trajectory and derives its
/// error measures. Configuration problems are errors; data problems give an
/// invalid outcome with a rejection reason.
pub fn trial_outcome(
    traj: &Trajectory,
    target: &TrialTarget,
    config: &AnalysisConfig,
) -> Result<TrialOutcome> {
    config.validate()?;
    let eyes = config.eyes()?;
    let home = ScenePoint::from(config.home);
    let target_point = ScenePoint::from(target.target);
    if !target_point.is_finite() {
        return Err(Error::invalid(
            "target",
            format!("trial {}: target must be finite", target.trial_id),
        ));
    }
    let reach = target_point.z - home.z;

    let traj = traj.with_depth_axis(config.depth_axis);
    if traj.len() < MIN_SAMPLES {
        return Ok(TrialOutcome::rejected(target, reach, Rejection::TooShort));
    }
    let Ok(traj) = traj.fill_gaps(config.max_missing) else {
        return Ok(TrialOutcome::rejected(
            target,
            reach,
            Rejection::MissingData,
        ));
    };
    let filtered = lowpass_filter(&traj, config.cutoff_hz)?;
    let z: Vec<f64> = filtered.axis(|s| s.z);
    let vz = differentiate_axis(&filtered, |s| s.z)?;

    let seg = match detect_segment(&vz, traj.sample_rate(), &config.segmentation) {
        Ok(seg) => seg,
        Err(why) => return Ok(TrialOutcome::rejected(target, reach, why)),
    };
    let times = filtered.times();
    let onset_time = seg.onset_time(&times);
    if target.go_cue.is_some_and(|cue| onset_time < cue) {
        return Ok(TrialOutcome::rejected(target, reach, Rejection::FalseStart));
    }
    let end = filtered.samples()[seg.termination_index];
    let endpoint = ScenePoint::new(end.x, end.y, end.z);
    let (movement, de, ee, dd) = error_measures(
        z[seg.onset_index],
        endpoint,
        target_point,
        home,
        &eyes,
        &config.eye_pose,
    )?;
    let peak = vz[seg.onset_index..=seg.termination_index]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);

    Ok(TrialOutcome {
        trial_id: target.trial_id,
        participant_id: target.participant_id,
        condition: target.condition.clone(),
        target_distance_m: reach,
        valid: true,
        rejection: None,
        onset_time_s: Some(onset_time),
        termination_time_s: Some(seg.termination_time(&times)),
        peak_velocity_mps: Some(peak),
        movement_distance_m: Some(movement),
        distance_error_m: Some(de),
        endpoint_error_m: Some(ee),
        disparity_difference_rad: Some(dd),
    })
}

/// Analyses every trajectory against its target; output is ordered by trial id.
pub fn analyze_trials(
    trajectories: &[Trajectory],
    targets: &[TrialTarget],
    config: &AnalysisConfig,
) -> Result<Vec<TrialOutcome>> {
    let by_id: HashMap<u64, &TrialTarget> = targets.iter().map(|t| (t.trial_id, t)).collect();
    let mut out = trajectories
        .iter()
        .map(|traj| {
            let target = by_id
                .get(&traj.trial_id())
                .ok_or(Error::MissingTarget(traj.trial_id()))?;
            trial_outcome(traj, target, config)
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by_key(|o| o.trial_id);
    Ok(out)
}

pub fn write_outcomes_csv<W: Write>(outcomes: &[TrialOutcome], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for o in outcomes {
        w.serialize(o).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_outcomes_csv<R: Read>(input: R, source_name: &str) -> Result<Vec<TrialOutcome>> {
    let mut rdr = csv::Reader::from_reader(input);
    rdr.deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| Error::Parse {
                source_name: source_name.to_string(),
                line: e.position().map_or(i + 2, |p| p.line() as usize),
                message: match e.kind() {
                    csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
                    _ => e.to_string(),
                },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::trajectory::Sample;
    use crate::synth::minjerk::MinimumJerk;

    /// Rest, minimum-jerk reach along +z from `start`, rest.
    fn reach(id: u64, start: [f64; 3], distance: f64, duration: f64) -> Trajectory {
        let mj = MinimumJerk::new(distance, duration);
        let samples = (0..(0.25 * 250.0 + duration * 250.0 + 0.25 * 250.0) as usize + 1)
            .map(|i| {
                let t = i as f64 / 250.0;
                let z = start[2] + mj.position(t - 0.25);
                Sample::new(t, start[0], start[1], z)
            })
            .collect();
        Trajectory::new(id, 250.0, samples).unwrap()
    }

    fn target(id: u64, z: f64) -> TrialTarget {
        TrialTarget {
            trial_id: id,
            participant_id: 1,
            condition: "original".into(),
            target: [0.0, 0.0, z],
            go_cue: None,
        }
    }

    #[test]
    fn endpoint_on_target_has_zero_errors() {
        let eyes = EyeGeometry::new(0.063).unwrap();
        let p = ScenePoint::new(0.01, 0.02, 0.25);
        let (md, de, ee, dd) = error_measures(
            0.0,
            p,
            p,
            ScenePoint::new(0.0, 0.0, 0.0),
            &eyes,
            &EyePose::default(),
        )
        .unwrap();
        assert_eq!((md, de, ee, dd), (0.25, 0.0, 0.0, 0.0));
    }

    #[test]
    fn minimum_jerk_reach() {
        let cfg = AnalysisConfig::default();
        let mj = MinimumJerk::new(0.25, 0.6);
        let o = trial_outcome(&reach(1, [0.0; 3], 0.25, 0.6), &target(1, 0.25), &cfg).unwrap();
        assert!(o.valid);
        // segment endpoints sit on the 50 mm/s crossings of the analytic profile
        let (a, b) = mj.threshold_crossings(0.05).unwrap();
        assert!((o.onset_time_s.unwrap() - 0.25 - a).abs() <= 0.004);
        assert!((o.termination_time_s.unwrap() - 0.25 - b).abs() <= 0.004);
        let expect = mj.position(b) - mj.position(a);
        let md = o.movement_distance_m.unwrap();
        assert!((md - expect).abs() < 1e-3, "{md} vs {expect}");
        assert!(o.endpoint_error_m.unwrap() < 0.0 && o.endpoint_error_m.unwrap() > -1e-3);
        assert!((o.peak_velocity_mps.unwrap() / mj.peak_velocity() - 1.0).abs() < 0.01);
    }

    #[test]
    fn undershoot_is_negative() {
        let cfg = AnalysisConfig::default();
        let o = trial_outcome(&reach(1, [0.0; 3], 0.2278, 0.6), &target(1, 0.25), &cfg).unwrap();
        let ee = o.endpoint_error_m.unwrap();
        assert!((ee + 0.0222).abs() < 1e-3);
        assert!(o.distance_error_m.unwrap() < 0.0);
        assert!(o.disparity_difference_rad.unwrap() < 0.0);
    }

    #[test]
    fn onset_at_home_makes_de_equal_endpoint_error() {
        let traj = reach(1, [0.0; 3], 0.25, 0.6);
        let first = trial_outcome(&traj, &target(1, 0.25), &AnalysisConfig::default()).unwrap();
        let filtered = lowpass_filter(&traj, 10.0).unwrap();
        let idx = (first.onset_time_s.unwrap() * 250.0).round() as usize;
        let cfg = AnalysisConfig {
            home: [0.0, 0.0, filtered.samples()[idx].z],
            ..AnalysisConfig::default()
        };
        let o = trial_outcome(&traj, &target(1, 0.25), &cfg).unwrap();
        assert!((o.distance_error_m.unwrap() - o.endpoint_error_m.unwrap()).abs() < 1e-9);
    }

    #[test]
    fn power_of_two_scaling_is_exact() {
        let traj = reach(1, [0.01, -0.02, 0.03], 0.25, 0.6);
        let cfg = AnalysisConfig {
            home: [0.01, -0.02, 0.03],
            ..AnalysisConfig::default()
        };
        let base = trial_outcome(&traj, &target(1, 0.28), &cfg).unwrap();
        for k in [0.5, 2.0, 4.0] {
            let mut scaled_cfg = cfg.clone();
            scaled_cfg.home = cfg.home.map(|v| v * k);
            scaled_cfg.segmentation.threshold *= k;
            let mut t = target(1, 0.28);
            t.target = t.target.map(|v| v * k);
            let o = trial_outcome(&traj.scaled(k), &t, &scaled_cfg).unwrap();
            assert_eq!(o.onset_time_s, base.onset_time_s);
            assert_eq!(
                o.movement_distance_m,
                base.movement_distance_m.map(|v| v * k)
            );
            assert_eq!(o.distance_error_m, base.distance_error_m.map(|v| v * k));
            assert_eq!(o.endpoint_error_m, base.endpoint_error_m.map(|v| v * k));
        }
    }

    #[test]
    fn rejections() {
        let cfg = AnalysisConfig::default();
        let still = reach(1, [0.0; 3], 0.0, 0.6);
        let o = trial_outcome(&still, &target(1, 0.25), &cfg).unwrap();
        assert_eq!(o.rejection, Some(Rejection::SlowMovement));
        assert!(o.distance_error_m.is_none());

        let mut t = target(1, 0.25);
        t.go_cue = Some(0.5);
        let o = trial_outcome(&reach(1, [0.0; 3], 0.25, 0.6), &t, &cfg).unwrap();
        assert_eq!(o.rejection, Some(Rejection::FalseStart));

        let full = reach(1, [0.0; 3], 0.25, 0.6);
        let mut s = full.samples().to_vec();
        s.drain(100..103);
        let gappy = Trajectory::new(1, 250.0, s).unwrap();
        let o = trial_outcome(&gappy, &target(1, 0.25), &cfg).unwrap();
        assert_eq!(o.rejection, Some(Rejection::MissingData));

        let short = full.slice(0, 10);
        let o = trial_outcome(&short, &target(1, 0.25), &cfg).unwrap();
        assert_eq!(o.rejection, Some(Rejection::TooShort));
    }

    #[test]
    fn bad_config_is_an_error() {
        let cfg = AnalysisConfig {
            cutoff_hz: 200.0,
            ..AnalysisConfig::default()
        };
        let e = trial_outcome(&reach(1, [0.0; 3], 0.25, 0.6), &target(1, 0.25), &cfg);
        assert!(matches!(
            e,
            Err(Error::InvalidParameter {
                name: "cutoff_hz",
                ..
            })
        ));
    }

    #[test]
    fn batch_is_sorted_and_needs_targets() {
        let cfg = AnalysisConfig::default();
        let trajs = vec![reach(7, [0.0; 3], 0.2, 0.6), reach(3, [0.0; 3], 0.3, 0.6)];
        let out = analyze_trials(&trajs, &[target(3, 0.3), target(7, 0.2)], &cfg).unwrap();
        assert_eq!(out.iter().map(|o| o.trial_id).collect::<Vec<_>>(), [3, 7]);
        assert_eq!(
            analyze_trials(&trajs, &[target(3, 0.3)], &cfg),
            Err(Error::MissingTarget(7))
        );
    }

    #[test]
    fn csv_round_trip() {
        let cfg = AnalysisConfig::default();
        let trajs = vec![reach(1, [0.0; 3], 0.25, 0.6), reach(2, [0.0; 3], 0.0, 0.6)];
        let out = analyze_trials(&trajs, &[target(1, 0.25), target(2, 0.25)], &cfg).unwrap();
        let mut buf = Vec::new();
        write_outcomes_csv(&out, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text
            .starts_with("trial_id,participant_id,condition,target_distance_m,valid,rejection,"));
        assert!(text.contains(",false,slow-movement,"));
        assert_eq!(read_outcomes_csv(buf.as_slice(), "o.csv").unwrap(), out);

        let bad = text.replacen("0.25", "far", 1);
        let e = read_outcomes_csv(bad.as_bytes(), "o.csv").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
    }
}
