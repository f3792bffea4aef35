//! Rigid frames linking the tabletop (trajectory) frame to the cyclopean eye frame.
//!
//! Reaching data are recorded in a frame whose origin is the home position and
//! whose `+z` axis points from home toward the targets. Perception happens in
//! the eye frame. [`EyePose`] places the cyclopean eye relative to the home
//! position, which is all the distance-based models need.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ScenePoint;

/// `p ↦ R·p + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    /// Row-major rotation matrix.
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub const fn identity() -> Self {
        Self {
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            translation: [0.0; 3],
        }
    }

    fn matrix(&self) -> Matrix3<f64> {
        let r = &self.rotation;
        Matrix3::new(
            r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2],
        )
    }

    /// Rejects rotations that are not orthonormal with determinant +1.
    pub fn validate(&self) -> Result<()> {
        let m = self.matrix();
        let err = (m.transpose() * m - Matrix3::identity()).abs().max();
        if err > 1e-9 || (m.determinant() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(
                "rotation",
                "must be a proper rotation matrix",
            ));
        }
        if self.translation.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("translation", "must be finite"));
        }
        Ok(())
    }

    pub fn apply(&self, p: &ScenePoint) -> ScenePoint {
        let v = self.matrix() * Vector3::new(p.x, p.y, p.z) + Vector3::from(self.translation);
        ScenePoint::new(v.x, v.y, v.z)
    }

    pub fn inverse(&self) -> Self {
        let rt = self.matrix().transpose();
        let t = -(rt * Vector3::from(self.translation));
        let mut rotation = [[0.0; 3]; 3];
        for (i, row) in rotation.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = rt[(i, j)];
            }
        }
        Self {
            rotation,
            translation: [t.x, t.y, t.z],
        }
    }
}

/// Position of the cyclopean eye relative to the home position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EyePose {
    /// Cyclopean eye position in the trajectory frame, relative to home (m).
    pub eye_offset: [f64; 3],
    /// Rotation from trajectory axes to eye axes (row-major). Identity means
    /// the eye looks along the reach direction with `+y` up.
    #[serde(default = "identity_rotation")]
    pub view_rotation: [[f64; 3]; 3],
}

fn identity_rotation() -> [[f64; 3]; 3] {
    RigidTransform::identity().rotation
}

impl Default for EyePose {
    /// Eye 0.30 m behind and 0.35 m above the home position.
    fn default() -> Self {
        Self {
            eye_offset: [0.0, 0.35, -0.30],
            view_rotation: identity_rotation(),
        }
    }
}

impl EyePose {
    /// Eye located at the home position itself; reach distance then equals
    /// cyclopean distance.
    pub fn at_home() -> Self {
        Self {
            eye_offset: [0.0; 3],
            view_rotation: identity_rotation(),
        }
    }

    /// Trajectory-frame (relative to home) → eye-frame transform.
    pub fn to_eye_frame(&self) -> RigidTransform {
        let rot = RigidTransform {
            rotation: self.view_rotation,
            translation: [0.0; 3],
        };
        let e = rot.apply(&ScenePoint::from(self.eye_offset));
        RigidTransform {
            rotation: self.view_rotation,
            translation: [-e.x, -e.y, -e.z],
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.to_eye_frame().validate()
    }

    /// Point on the reach line, `r` metres from home along `+z`, in the eye frame.
    pub fn reach_point(&self, reach: f64) -> ScenePoint {
        self.to_eye_frame().apply(&ScenePoint::new(0.0, 0.0, reach))
    }

    /// Cyclopean distance of the point `reach` metres along the reach line.
    pub fn cyclopean_distance(&self, reach: f64) -> f64 {
        let [ex, ey, ez] = self.eye_offset;
        (ex * ex + ey * ey + (reach - ez).powi(2)).sqrt()
    }

    /// Inverse of [`cyclopean_distance`](Self::cyclopean_distance) on the
    /// forward branch: the reach position whose cyclopean distance is `d`.
    pub fn reach_at_distance(&self, d: f64) -> Result<f64> {
        let [ex, ey, ez] = self.eye_offset;
        let radicand = d * d - ex * ex - ey * ey;
        if !(radicand >= 0.0) {
            return Err(Error::domain(format!(
                "no point on the reach line lies {d} m from the eye"
            )));
        }
        Ok(ez + radicand.sqrt())
    }

    /// `d(reach)/d(distance)` at cyclopean distance `d`.
    pub fn reach_slope(&self, d: f64) -> f64 {
        let [ex, ey, _] = self.eye_offset;
        d / (d * d - ex * ex - ey * ey).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_pose_geometry() {
        let pose = EyePose::default();
        let p = pose.reach_point(0.25);
        assert!((p.x).abs() < 1e-15);
        assert!((p.y + 0.35).abs() < 1e-15);
        assert!((p.z - 0.55).abs() < 1e-15);
        assert!((pose.cyclopean_distance(0.25) - p.norm()).abs() < 1e-15);
        let r = pose.reach_at_distance(p.norm()).unwrap();
        assert!((r - 0.25).abs() < 1e-14);
        assert!(pose.reach_at_distance(0.2).is_err());
    }

    #[test]
    fn rotated_pose_preserves_distance() {
        let (s, c) = (0.3f64.sin(), 0.3f64.cos());
        let pose = EyePose {
            eye_offset: [0.02, 0.35, -0.30],
            view_rotation: [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]],
        };
        pose.validate().unwrap();
        let p = pose.reach_point(0.3);
        assert!((p.norm() - pose.cyclopean_distance(0.3)).abs() < 1e-14);
    }

    #[test]
    fn inverse_round_trip() {
        let (s, c) = (0.7f64.sin(), 0.7f64.cos());
        let t = RigidTransform {
            rotation: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
            translation: [0.1, -0.2, 0.3],
        };
        let p = ScenePoint::new(0.4, 0.5, 0.6);
        let q = t.inverse().apply(&t.apply(&p));
        assert!(
            (q.x - p.x).abs() < 1e-15 && (q.y - p.y).abs() < 1e-15 && (q.z - p.z).abs() < 1e-15
        );
        let bad = RigidTransform {
            rotation: [[2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            translation: [0.0; 3],
        };
        assert!(bad.validate().is_err());
    }
}
