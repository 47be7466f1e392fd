//! Simulated reconstruction data: adaptive scaling, signed distance grids,
//! iso-surfacing, correspondence maps and the three guidance fields
//! computed from ground truth.

mod correspondence;
mod curves;
mod fields;
mod mc;
mod nc;
pub mod sampling;
mod scaling;
mod sdf;
pub mod sidecar;

pub use correspondence::{
    correspondence_map, Correspondence, CorrespondenceMap, MapDirection, SamplePattern,
};
pub use curves::{curves_from_abc_yaml, CurveIndex, FeatureCurve, FeatureCurveSet};
pub use fields::{
    distance_direction_fields, distance_direction_fields_indexed, EdgeField, FeatureFields,
    ON_CURVE,
};
pub use mc::marching_cubes;
pub use nc::{
    canonical_face, face_deviation, face_sample_points, normal_consistency_faces,
    normal_consistency_stratified, surface_improvement_field, FaceConsistency, NcSampler,
    ReferenceSurface,
};
pub use scaling::{characteristic_size, scale_for_sampling, Scaled, ScalingConfig};
pub use sdf::{random_rotation, sdf_grid, winding_number, SdfGrid, SdfReport};
pub use sidecar::{FieldManifest, FieldSet, SidecarFormat};
