use std::path::PathBuf;

use thiserror::Error;

use crate::mesh::Edge;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("face {face} references vertex {index} but the mesh has {count} vertices")]
    FaceIndexOutOfRange {
        face: usize,
        index: usize,
        count: usize,
    },
    #[error("face {face} repeats vertex {vertex}")]
    RepeatedVertex { face: usize, vertex: usize },
    #[error("non-manifold edge ({}, {}) is shared by {faces} faces", .edge.0, .edge.1)]
    NonManifoldEdge { edge: Edge, faces: usize },
    #[error("vertex {vertex} has a non-finite coordinate")]
    NonFiniteVertex { vertex: usize },
    #[error("feature curve {curve}: {reason}")]
    InvalidCurve { curve: usize, reason: String },
    #[error("no feature curves to derive a characteristic size from")]
    NoFeatureCurves,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(
        "grid of {dims:?} voxels exceeds the per-axis budget of {max_grid}; lower the samples-per-feature count"
    )]
    GridBudgetExceeded { dims: [usize; 3], max_grid: usize },
    #[error("seed point is {distance} from the nearest vertex, beyond the patch radius {radius}")]
    SeedTooFar { distance: f64, radius: f64 },
    #[error("{path}: expected {expected} entries, found {found}")]
    ElementCountMismatch {
        path: PathBuf,
        expected: usize,
        found: usize,
    },
    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Format(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input data or parameters rather than
    /// I/O failures or broken internal invariants.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::Invariant(_))
    }
}
