//! Binocular viewing geometry.
//!
//! All quantities live in the cyclopean eye frame: the midpoint between the
//! eyes is the origin, `+z` points forward (depth), `+x` to the right and `+y`
//! up. The left eye sits at `(-ipd/2, 0, 0)` and the right eye at
//! `(+ipd/2, 0, 0)`. Angles are radians throughout.
//!
//! Two notions of the angle a point subtends at the eyes are provided:
//!
//! * [`subtended_angle`] uses the cyclopean distance `d = |p|` and returns
//!   `2·atan2(ipd/2, d)`. This is the triangulation convention used by the
//!   perception and correction models, and it inverts exactly through
//!   [`distance_from_angle`].
//! * [`binocular_angle`] is the angle between the two lines of sight projected
//!   on the horizontal plane. It is what the per-eye visual angles difference
//!   to, so `disparity(visual_angles(p, f)) == binocular_angle(f) - binocular_angle(p)`
//!   holds everywhere. On the midline both notions agree.

use serde::{Deserialize, Serialize};

use crate::diff::central_difference;
use crate::error::{Error, Result};

/// Upper sanity bound on the interpupillary distance, in metres.
pub const MAX_IPD: f64 = 0.1;

/// Interpupillary distance and the cyclopean frame it defines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEyes", into = "RawEyes")]
pub struct EyeGeometry {
    ipd: f64,
}

#[derive(Serialize, Deserialize)]
struct RawEyes {
    ipd: f64,
}

impl TryFrom<RawEyes> for EyeGeometry {
    type Error = Error;
    fn try_from(raw: RawEyes) -> Result<Self> {
        EyeGeometry::new(raw.ipd)
    }
}

impl From<EyeGeometry> for RawEyes {
    fn from(e: EyeGeometry) -> Self {
        RawEyes { ipd: e.ipd }
    }
}

impl EyeGeometry {
    /// `ipd` in metres; must lie in `(0, 0.1)`.
    pub fn new(ipd: f64) -> Result<Self> {
        if !(ipd > 0.0 && ipd < MAX_IPD) {
            return Err(Error::invalid(
                "ipd",
                format!("must be in (0, {MAX_IPD}) m, got {ipd}"),
            ));
        }
        Ok(Self { ipd })
    }

    pub fn from_mm(ipd_mm: f64) -> Result<Self> {
        Self::new(ipd_mm * 1e-3)
    }

    pub fn ipd(&self) -> f64 {
        self.ipd
    }

    pub fn half_ipd(&self) -> f64 {
        0.5 * self.ipd
    }

    pub fn left_eye(&self) -> ScenePoint {
        ScenePoint::new(-self.half_ipd(), 0.0, 0.0)
    }

    pub fn right_eye(&self) -> ScenePoint {
        ScenePoint::new(self.half_ipd(), 0.0, 0.0)
    }
}

/// A point in the cyclopean eye frame, metres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScenePoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl ScenePoint {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Point straight ahead of the cyclopean eye at depth `z`.
    pub const fn on_axis(z: f64) -> Self {
        Self { x: 0.0, y: 0.0, z }
    }

    /// Distance from the cyclopean eye.
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub(crate) fn require_in_front(&self) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::domain(format!("non-finite point {self:?}")));
        }
        if !(self.z > 0.0) {
            return Err(Error::domain(format!(
                "point must lie in front of the observer (z > 0), got z = {}",
                self.z
            )));
        }
        Ok(())
    }
}

impl From<[f64; 3]> for ScenePoint {
    fn from(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

impl From<ScenePoint> for [f64; 3] {
    fn from(p: ScenePoint) -> Self {
        [p.x, p.y, p.z]
    }
}

/// Signed horizontal visual angles of a point relative to each eye's line of
/// sight. Negative when the point lies to the right of the fixation
/// direction in that eye.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VisualAnglePair {
    pub alpha_left: f64,
    pub alpha_right: f64,
}

impl VisualAnglePair {
    pub const fn new(alpha_left: f64, alpha_right: f64) -> Self {
        Self {
            alpha_left,
            alpha_right,
        }
    }
}

/// Where the eyes are converged, together with the resulting vergence angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixationState {
    point: ScenePoint,
    vergence: f64,
}

impl FixationState {
    /// Vergence is the cyclopean-convention angle subtended by the fixation
    /// point (see [`subtended_angle`]).
    pub fn new(point: ScenePoint, eyes: &EyeGeometry) -> Result<Self> {
        let vergence = subtended_angle(&point, eyes)?;
        Ok(Self { point, vergence })
    }

    pub fn point(&self) -> ScenePoint {
        self.point
    }

    /// Vergence angle φ.
    pub fn vergence(&self) -> f64 {
        self.vergence
    }
}

/// Per-eye visual angles sampled at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleTimeSeries {
    sample_rate: f64,
    samples: Vec<VisualAnglePair>,
}

impl AngleTimeSeries {
    pub fn new(sample_rate: f64, samples: Vec<VisualAnglePair>) -> Result<Self> {
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(Error::invalid(
                "sample_rate",
                format!("must be positive, got {sample_rate}"),
            ));
        }
        Ok(Self {
            sample_rate,
            samples,
        })
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[VisualAnglePair] {
        &self.samples
    }

    fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }
}

/// Full angle τ the point subtends at the two eyes, taken at its cyclopean
/// distance: `τ = 2·atan2(ipd/2, |p|)`.
pub fn subtended_angle(point: &ScenePoint, eyes: &EyeGeometry) -> Result<f64> {
    point.require_in_front()?;
    Ok(2.0 * eyes.half_ipd().atan2(point.norm()))
}

/// Angle between the left and right lines of sight to `point`, measured in
/// the horizontal plane.
pub fn binocular_angle(point: &ScenePoint, eyes: &EyeGeometry) -> Result<f64> {
    point.require_in_front()?;
    let h = eyes.half_ipd();
    Ok((point.x + h).atan2(point.z) - (point.x - h).atan2(point.z))
}

/// Signed horizontal angle of `point` relative to each eye's fixation direction.
pub fn visual_angles(
    point: &ScenePoint,
    fixation: &FixationState,
    eyes: &EyeGeometry,
) -> Result<VisualAnglePair> {
    point.require_in_front()?;
    let f = fixation.point();
    f.require_in_front()?;
    let per_eye = |eye_x: f64| -> Result<f64> {
        let (px, fx) = (point.x - eye_x, f.x - eye_x);
        if px == 0.0 && point.z == 0.0 {
            return Err(Error::domain("point coincides with an eye"));
        }
        // azimuths are positive to the right; a point right of fixation is negative
        Ok(fx.atan2(f.z) - px.atan2(point.z))
    };
    Ok(VisualAnglePair {
        alpha_left: per_eye(-eyes.half_ipd())?,
        alpha_right: per_eye(eyes.half_ipd())?,
    })
}

/// Binocular disparity `δ = α_L − α_R`.
pub fn disparity(angles: &VisualAnglePair) -> f64 {
    angles.alpha_left - angles.alpha_right
}

/// Disparity from vergence and target angle, `δ = φ − τ`.
///
/// Positive for targets farther than fixation (they subtend a smaller angle).
pub fn disparity_from_vergence(vergence: f64, target_angle: f64) -> f64 {
    vergence - target_angle
}

/// Triangulated cyclopean distance, `d = (ipd/2) / tan(τ/2)`.
pub fn distance_from_angle(angle: f64, eyes: &EyeGeometry) -> Result<f64> {
    if !(angle > 0.0 && angle < std::f64::consts::PI) {
        return Err(Error::domain(format!(
            "subtended angle must be in (0, π), got {angle}"
        )));
    }
    Ok(eyes.half_ipd() / (0.5 * angle).tan())
}

/// Change of disparity over time: differentiate `α_L − α_R`.
pub fn cdot(series: &AngleTimeSeries) -> Result<Vec<f64>> {
    let delta: Vec<f64> = series.samples().iter().map(disparity).collect();
    central_difference(&delta, series.dt())
}

/// Interocular velocity difference: differentiate each eye, then subtract.
pub fn iovd(series: &AngleTimeSeries) -> Result<Vec<f64>> {
    let left: Vec<f64> = series.samples().iter().map(|a| a.alpha_left).collect();
    let right: Vec<f64> = series.samples().iter().map(|a| a.alpha_right).collect();
    let dl = central_difference(&left, series.dt())?;
    let dr = central_difference(&right, series.dt())?;
    Ok(dl.iter().zip(&dr).map(|(l, r)| l - r).collect())
}
