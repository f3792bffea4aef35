pub mod analyze;
pub mod fit;
pub mod predict;
pub mod simulate;
pub mod transform;
