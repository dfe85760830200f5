//! Error type shared by every module in the crate.
//!
//! Errors are split along one line that matters to callers: [`Error::Internal`]
//! means the library broke one of its own invariants (a bug), everything else
//! means the caller handed us inconsistent input. The CLI maps the former to
//! exit code 2 and the latter to exit code 1.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Two rasters that must share a pixel grid do not.
    #[error("dimension mismatch: {expected_w}x{expected_h} vs {got_w}x{got_h}")]
    DimensionMismatch {
        expected_w: usize,
        expected_h: usize,
        got_w: usize,
        got_h: usize,
    },

    /// Buffer length does not match the declared raster shape.
    #[error("buffer of length {got} does not match shape ({expected} values expected)")]
    DataLength { expected: usize, got: usize },

    /// A box with non-positive width or height, possibly after clamping.
    #[error("degenerate box [{x0}, {y0}, {x1}, {y1}]: both sides must be positive")]
    DegenerateBox { x0: f32, y0: f32, x1: f32, y1: f32 },

    /// A sampling grid with zero resolution.
    #[error("sampling grid resolution must be at least 1")]
    ZeroResolution,

    /// Run-length encoding whose runs do not cover the raster exactly.
    #[error("run-length total {total} does not cover a {width}x{height} mask")]
    RleCoverage {
        total: usize,
        width: usize,
        height: usize,
    },

    /// Feature map or canvas with a zero-sized dimension.
    #[error("feature maps must have positive width, height and channel count")]
    EmptyFeatureMap,

    /// Patch and canvas disagree on channel count.
    #[error("channel mismatch: {expected} vs {got}")]
    ChannelMismatch { expected: usize, got: usize },

    /// Detection score outside the closed unit interval.
    #[error("score {score} outside [0, 1]")]
    ScoreRange { score: f32 },

    /// Instance prediction whose mask has no foreground pixels.
    #[error("instance {id} has an empty mask")]
    EmptyMask { id: u32 },

    /// Two instance predictions in one scene share an id.
    #[error("duplicate instance id {id}")]
    DuplicateId { id: u32 },

    /// Appearance similarity queried over an empty pixel set or region.
    #[error("appearance similarity over an empty pixel set or region")]
    EmptyRegion,

    /// Category table without any entries.
    #[error("category table is empty")]
    EmptyCategories,

    /// Category table entry that collides with the reserved void id or a
    /// previously declared id.
    #[error("invalid category id {id}: {reason}")]
    BadCategory { id: u32, reason: String },

    /// A raster or segment references a category missing from the table.
    #[error("unknown category id {id}")]
    UnknownCategory { id: u32 },

    /// An instance carries a category that the table declares as stuff.
    #[error("category {id} is not a thing category")]
    NotAThing { id: u32 },

    /// Two datasets that must agree on categories do not.
    #[error("category tables differ: {reason}")]
    CategoryTableMismatch { reason: String },

    /// Segment id too large for the 24-bit id-map encoding.
    #[error("segment id {id} exceeds the 24-bit id-map range")]
    SegmentIdOverflow { id: u32 },

    /// Panoptic raster and segment table disagree.
    #[error("inconsistent panoptic map: {reason}")]
    InconsistentPanoptic { reason: String },

    /// A synthetic scene specification that cannot be rendered.
    #[error("invalid scene spec: {reason}")]
    BadSceneSpec { reason: String },

    /// A referenced input file does not exist or cannot be opened.
    #[error("cannot read input file {path}: {source}")]
    MissingFile {
        path: PathBuf,
        source: std::io::Error,
    },

    /// Malformed or unsupported content in an input file.
    #[error("malformed input {path}: {reason}")]
    MalformedFile { path: PathBuf, reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// The library violated one of its own invariants; always a bug.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    /// True for errors that indicate a bug in this crate rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Internal(_))
    }
}
