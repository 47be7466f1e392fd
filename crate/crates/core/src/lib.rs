//! Feature-aware remeshing of iso-surfaced triangle meshes.
//!
//! Coarse meshes extracted from signed distance grids lose sharp edges to
//! chamfers. This crate restores them by snapping vertices onto feature
//! curves and flipping edges, guided by three per-element fields: distance
//! to the nearest feature, direction to it, and the expected gain in normal
//! consistency from flipping each edge. The fields come from a
//! [`providers::FieldProvider`]: exact ones computed from a ground-truth
//! mesh, a geometric heuristic, or files written by an external predictor.

pub mod bvh;
pub mod error;
pub mod fieldgen;
pub mod geom;
pub mod mesh;
pub mod metrics;
pub mod patchwork;
pub mod providers;
pub mod remesh;
pub mod shapes;

pub use error::{Error, Result};
