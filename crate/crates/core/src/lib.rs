//! Binocular viewing geometry under a vergence offset, depth remapping that
//! cancels it, reach-trajectory analysis, model fitting and seeded
//! simulation of reaching experiments.
//!
//! All quantities are SI: metres, seconds, radians.
//!
//! ```
//! use vac_core::geometry::EyeGeometry;
//! use vac_core::perception::{predict_endpoint, PerturbationParams};
//!
//! let eyes = EyeGeometry::from_mm(63.0)?;
//! let beta = PerturbationParams::from_degrees(0.22)?;
//! let p = predict_endpoint(0.5, &beta, &eyes)?;
//! assert!(p.endpoint_error < 0.0);
//! # Ok::<(), vac_core::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correction;
pub mod diff;
pub mod error;
pub mod fitting;
pub mod geometry;
pub mod kinematics;
pub mod perception;
pub mod pose;
pub mod synth;

pub use error::{Error, Result};
pub use nalgebra;
