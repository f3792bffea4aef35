//! Depth remapping that cancels a known vergence offset.
//!
//! A point whose angle is `τ` is rendered where its angle would be
//! `τ̃ = τ − β`, i.e. at cyclopean distance `d̃ = (ipd/2)/tan(τ̃/2)`. An
//! observer whose vergence is biased by `+β` then perceives it at its
//! original distance. Lateral coordinates are kept and depth is solved from
//! `z̃ = √(d̃² − x² − y²)`.
//!
//! [`AngleConvention::LiteralHalfAngle`] reproduces the shader formulation
//! that subtracts `β` from the half angle `atan2(ipd/2, z)` and divides by
//! `tan` of that half angle. It removes twice the intended offset and is kept
//! only for comparison.

mod mesh;

pub use mesh::{read_points_csv, write_points_csv, MeshModel, MeshReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance_from_angle, subtended_angle, EyeGeometry, ScenePoint};
use crate::perception::{predict_endpoint, predict_reach_endpoint, PerturbationParams};
use crate::pose::{EyePose, RigidTransform};

/// How the offset is removed from a point's angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AngleConvention {
    /// Full subtended angle: `τ = 2·atan2(ipd/2, d)`, `τ̃ = τ − β`, `d̃ = (ipd/2)/tan(τ̃/2)`.
    #[default]
    Reconciled,
    /// Half angle: `θ = atan2(ipd/2, d)`, `θ̃ = θ − β`, `d̃ = (ipd/2)/tan(θ̃)`.
    LiteralHalfAngle,
}

/// A configured correction: eye geometry, offset and angle convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthRemap {
    pub eyes: EyeGeometry,
    pub params: PerturbationParams,
    pub convention: AngleConvention,
}

impl DepthRemap {
    pub fn new(eyes: EyeGeometry, params: PerturbationParams) -> Self {
        Self {
            eyes,
            params,
            convention: AngleConvention::Reconciled,
        }
    }

    pub fn with_convention(mut self, convention: AngleConvention) -> Self {
        self.convention = convention;
        self
    }

    /// Corrected cyclopean distance for a point at cyclopean distance `d`.
    pub fn corrected_distance(&self, d: f64) -> Result<f64> {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::domain(format!("distance must be positive, got {d}")));
        }
        let h = self.eyes.half_ipd();
        let beta = self.params.beta();
        match self.convention {
            AngleConvention::Reconciled => {
                let tau = 2.0 * h.atan2(d);
                let tau_tilde = tau - beta;
                if !(tau_tilde > 0.0) {
                    return Err(Error::domain(format!(
                        "point too distant to correct: angle {tau} rad does not exceed offset {beta} rad"
                    )));
                }
                distance_from_angle(tau_tilde, &self.eyes)
            }
            AngleConvention::LiteralHalfAngle => {
                let theta_tilde = h.atan2(d) - beta;
                if !(theta_tilde > 0.0 && theta_tilde < std::f64::consts::FRAC_PI_2) {
                    return Err(Error::domain(format!(
                        "point too distant to correct: half angle {} rad does not exceed offset {beta} rad",
                        h.atan2(d)
                    )));
                }
                Ok(h / theta_tilde.tan())
            }
        }
    }

    /// On-axis depth remap.
    pub fn remap_depth(&self, z_view: f64) -> Result<f64> {
        if self.params.beta() == 0.0 && z_view > 0.0 {
            return Ok(z_view);
        }
        self.corrected_distance(z_view)
    }

    /// Moves `p` along depth so its cyclopean distance becomes the corrected
    /// distance; `x` and `y` are never modified.
    pub fn transform_point(&self, p: &ScenePoint) -> Result<ScenePoint> {
        p.require_in_front()?;
        if self.params.beta() == 0.0 {
            return Ok(*p);
        }
        let d_tilde = self.corrected_distance(p.norm())?;
        let radicand = d_tilde * d_tilde - p.x * p.x - p.y * p.y;
        if !(radicand > 0.0) {
            return Err(Error::domain(format!(
                "corrected distance {d_tilde} m cannot keep lateral offsets ({}, {})",
                p.x, p.y
            )));
        }
        Ok(ScenePoint::new(p.x, p.y, radicand.sqrt()))
    }

    /// Vertexwise [`transform_point`](Self::transform_point) in the view
    /// frame given by `world_to_view`. Faces and ordering are untouched; the
    /// first failing vertex aborts the whole mesh.
    pub fn transform_mesh(
        &self,
        mesh: &MeshModel,
        world_to_view: &RigidTransform,
    ) -> Result<MeshModel> {
        let identity = *world_to_view == RigidTransform::identity();
        let view_to_world = world_to_view.inverse();
        let vertices = mesh
            .vertices()
            .iter()
            .enumerate()
            .map(|(index, v)| {
                let fail = |e: Error| Error::Vertex {
                    index,
                    x: v.x,
                    y: v.y,
                    z: v.z,
                    reason: e.to_string(),
                };
                if identity {
                    return self.transform_point(v).map_err(fail);
                }
                let view = world_to_view.apply(v);
                let moved = self.transform_point(&view).map_err(fail)?;
                Ok(if moved == view {
                    *v
                } else {
                    view_to_world.apply(&moved)
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(mesh.with_vertices(vertices))
    }
}

/// [`DepthRemap::remap_depth`] with the reconciled convention.
pub fn remap_depth(z_view: f64, eyes: &EyeGeometry, params: &PerturbationParams) -> Result<f64> {
    DepthRemap::new(*eyes, *params).remap_depth(z_view)
}

/// [`DepthRemap::transform_point`] with the reconciled convention.
pub fn transform_point(
    p: &ScenePoint,
    eyes: &EyeGeometry,
    params: &PerturbationParams,
) -> Result<ScenePoint> {
    DepthRemap::new(*eyes, *params).transform_point(p)
}

/// [`DepthRemap::transform_mesh`] with the reconciled convention, mesh already in view space.
pub fn transform_mesh(
    mesh: &MeshModel,
    eyes: &EyeGeometry,
    params: &PerturbationParams,
) -> Result<MeshModel> {
    DepthRemap::new(*eyes, *params).transform_mesh(mesh, &RigidTransform::identity())
}

/// Predicted endpoint error before and after correcting the scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionRow {
    pub distance: f64,
    pub original_error: f64,
    pub transformed_error: f64,
}

/// Endpoint errors for targets straight ahead at the given cyclopean
/// distances, in the original scene and in the corrected one.
pub fn predicted_correction_curve(
    distances: &[f64],
    eyes: &EyeGeometry,
    params: &PerturbationParams,
) -> Result<Vec<CorrectionRow>> {
    let remap = DepthRemap::new(*eyes, *params);
    distances
        .iter()
        .map(|&d| {
            let original = predict_endpoint(d, params, eyes)?;
            let rendered = remap.remap_depth(d)?;
            let corrected = predict_endpoint(rendered, params, eyes)?;
            Ok(CorrectionRow {
                distance: d,
                original_error: original.endpoint_error,
                transformed_error: corrected.endpoint_distance - d,
            })
        })
        .collect()
}

/// Same as [`predicted_correction_curve`] for reach distances along the
/// reach line seen from `pose`.
pub fn predicted_reach_correction_curve(
    reaches: &[f64],
    eyes: &EyeGeometry,
    params: &PerturbationParams,
    pose: &EyePose,
) -> Result<Vec<CorrectionRow>> {
    let remap = DepthRemap::new(*eyes, *params);
    reaches
        .iter()
        .map(|&r| {
            let original = predict_reach_endpoint(r, params, eyes, pose)?;
            let rendered = remap.transform_point(&pose.reach_point(r))?;
            let tau = subtended_angle(&rendered, eyes)?;
            let seen = distance_from_angle(tau + params.beta(), eyes)?;
            Ok(CorrectionRow {
                distance: r,
                original_error: original.endpoint_error,
                transformed_error: pose.reach_at_distance(seen)? - r,
            })
        })
        .collect()
}
