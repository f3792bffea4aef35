//! The guide's chapters, compiled as doc comments so `cargo test --doc`
//! runs every listing against the current library. One module per chapter
//! keeps failures traceable to their file.

#[doc = include_str!("src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("src/geometry.md")]
pub mod geometry {}
#[doc = include_str!("src/perception.md")]
pub mod perception {}
#[doc = include_str!("src/correction.md")]
pub mod correction {}
#[doc = include_str!("src/kinematics.md")]
pub mod kinematics {}
#[doc = include_str!("src/fitting.md")]
pub mod fitting {}
#[doc = include_str!("src/simulation.md")]
pub mod simulation {}
#[doc = include_str!("src/cli.md")]
pub mod cli {}
