//! Forward model of the vergence offset: how a constant bias on the vergence
//! angle distorts perceived distance.
//!
//! With vergence `φ`, disparity `δ = φ − τ` and offset `β`, the observer's
//! effective target angle is `τ̂ = (φ + β) − δ` and the perceived distance is
//! `d̂ = (ipd/2) / tan(τ̂/2)`. The distance error is `ε = d̂ − d`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    distance_from_angle, subtended_angle, EyeGeometry, FixationState, ScenePoint,
};
use crate::pose::EyePose;

/// Largest accepted |β| in radians (about 2.9°).
pub const MAX_BETA: f64 = 0.05;

/// The vergence offset and, optionally, the display's accommodation distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationParams {
    beta_offset: f64,
    accommodation_distance: Option<f64>,
}

impl PerturbationParams {
    pub fn new(beta_offset: f64) -> Result<Self> {
        if !(beta_offset.abs() < MAX_BETA) {
            return Err(Error::invalid(
                "beta_offset",
                format!("|β| must be below {MAX_BETA} rad, got {beta_offset}"),
            ));
        }
        Ok(Self {
            beta_offset,
            accommodation_distance: None,
        })
    }

    pub fn from_degrees(beta_deg: f64) -> Result<Self> {
        Self::new(beta_deg.to_radians())
    }

    pub const fn zero() -> Self {
        Self {
            beta_offset: 0.0,
            accommodation_distance: None,
        }
    }

    pub fn with_accommodation_distance(mut self, distance: f64) -> Result<Self> {
        if !(distance > 0.0) || !distance.is_finite() {
            return Err(Error::invalid(
                "accommodation_distance",
                format!("must be positive, got {distance}"),
            ));
        }
        self.accommodation_distance = Some(distance);
        Ok(self)
    }

    /// β in radians.
    pub fn beta(&self) -> f64 {
        self.beta_offset
    }

    pub fn accommodation_distance(&self) -> Option<f64> {
        self.accommodation_distance
    }

    /// The offset expressed as a fixation shift at the accommodation
    /// distance, when one is configured.
    pub fn fixation_shift(&self, eyes: &EyeGeometry) -> Option<Result<f64>> {
        self.accommodation_distance
            .map(|d| offset_as_fixation_shift(self, d, eyes))
    }
}

/// Eyes, where they fixate, and the target being judged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewingConfiguration {
    pub eyes: EyeGeometry,
    pub fixation: FixationState,
    pub target: ScenePoint,
}

impl ViewingConfiguration {
    pub fn new(eyes: EyeGeometry, fixation: ScenePoint, target: ScenePoint) -> Result<Self> {
        target.require_in_front()?;
        Ok(Self {
            eyes,
            fixation: FixationState::new(fixation, &eyes)?,
            target,
        })
    }

    /// The observer fixates the target itself.
    pub fn fixated(eyes: EyeGeometry, target: ScenePoint) -> Result<Self> {
        Self::new(eyes, target, target)
    }
}

/// `φ̂ = φ + β`.
pub fn perturbed_vergence(vergence: f64, params: &PerturbationParams) -> f64 {
    vergence + params.beta()
}

/// `τ̂ = (φ + β) − δ`; must stay inside `(0, π)`.
pub fn effective_target_angle(
    vergence: f64,
    disparity: f64,
    params: &PerturbationParams,
) -> Result<f64> {
    let tau_hat = perturbed_vergence(vergence, params) - disparity;
    if !(tau_hat > 0.0 && tau_hat < std::f64::consts::PI) {
        return Err(Error::domain(format!(
            "effective target angle {tau_hat} rad places the target at or beyond infinity"
        )));
    }
    Ok(tau_hat)
}

/// Perceived cyclopean distance `d̂` of the target under offset `β`.
pub fn perceived_distance(
    config: &ViewingConfiguration,
    params: &PerturbationParams,
) -> Result<f64> {
    let phi = config.fixation.vergence();
    let tau = subtended_angle(&config.target, &config.eyes)?;
    let delta = phi - tau;
    let tau_hat = effective_target_angle(phi, delta, params)?;
    distance_from_angle(tau_hat, &config.eyes)
}

/// `ε = d̂ − d`; negative values mean the target is seen too near.
pub fn distance_error(config: &ViewingConfiguration, params: &PerturbationParams) -> Result<f64> {
    Ok(perceived_distance(config, params)? - config.target.norm())
}

/// How much closer the effective fixation lies when the offset is added to
/// the vergence for a fixation at `fixation_distance`.
pub fn offset_as_fixation_shift(
    params: &PerturbationParams,
    fixation_distance: f64,
    eyes: &EyeGeometry,
) -> Result<f64> {
    if !(fixation_distance > 0.0) {
        return Err(Error::domain(format!(
            "fixation distance must be positive, got {fixation_distance}"
        )));
    }
    let phi = 2.0 * eyes.half_ipd().atan2(fixation_distance);
    Ok(fixation_distance - distance_from_angle(phi + params.beta(), eyes)?)
}

/// Fixation distance in `[lo, hi]` at which the offset equals a fixation
/// shift of `shift` metres. The shift grows monotonically with distance for
/// β > 0, so bisection is exact up to `1e-12` m.
pub fn fixation_distance_for_shift(
    params: &PerturbationParams,
    shift: f64,
    eyes: &EyeGeometry,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    let f = |d: f64| offset_as_fixation_shift(params, d, eyes).map(|s| s - shift);
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (f(a)?, f(b)?);
    if fa.signum() == fb.signum() {
        return Err(Error::domain(format!(
            "shift {shift} m is not bracketed by fixation distances [{lo}, {hi}]"
        )));
    }
    let rising = fa < 0.0;
    while b - a > 1e-12 {
        let m = 0.5 * (a + b);
        if (f(m)? < 0.0) == rising {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Model endpoint of a disparity-matching movement toward a fixated target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndpointPrediction {
    pub target_distance: f64,
    pub endpoint_distance: f64,
    /// `endpoint_distance − target_distance`.
    pub endpoint_error: f64,
    /// Hand disparity minus target disparity, `τ_target − η_endpoint`.
    pub disparity_difference: f64,
}

/// The depth `z_e` whose subtended angle is `τ(z_t) + β`.
pub fn predict_endpoint(
    target_distance: f64,
    params: &PerturbationParams,
    eyes: &EyeGeometry,
) -> Result<EndpointPrediction> {
    let target = ScenePoint::on_axis(target_distance);
    let tau = subtended_angle(&target, eyes)?;
    let endpoint = distance_from_angle(tau + params.beta(), eyes)?;
    let eta = subtended_angle(&ScenePoint::on_axis(endpoint), eyes)?;
    Ok(EndpointPrediction {
        target_distance,
        endpoint_distance: endpoint,
        endpoint_error: endpoint - target_distance,
        disparity_difference: tau - eta,
    })
}

/// [`predict_endpoint`] for a target `reach` metres along the reach line,
/// with distances reported along that line.
pub fn predict_reach_endpoint(
    reach: f64,
    params: &PerturbationParams,
    eyes: &EyeGeometry,
    pose: &EyePose,
) -> Result<EndpointPrediction> {
    let target = pose.reach_point(reach);
    let tau = subtended_angle(&target, eyes)?;
    let endpoint_cyc = distance_from_angle(tau + params.beta(), eyes)?;
    let endpoint = pose.reach_at_distance(endpoint_cyc)?;
    let eta = subtended_angle(&pose.reach_point(endpoint), eyes)?;
    Ok(EndpointPrediction {
        target_distance: reach,
        endpoint_distance: endpoint,
        endpoint_error: endpoint - reach,
        disparity_difference: tau - eta,
    })
}

/// Writes `distance_m,predicted_error_m` rows.
pub fn write_prediction_csv<W: Write>(rows: &[EndpointPrediction], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["distance_m", "predicted_error_m"])
        .map_err(|e| Error::Io(e.to_string()))?;
    for r in rows {
        w.write_record([r.target_distance.to_string(), r.endpoint_error.to_string()])
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
