//! Learning-free post-processing for panoptic segmentation.
//!
//! The crate covers the full pipeline from raw per-image predictions to
//! evaluated panoptic maps, with no learned components anywhere:
//!
//! * [`mask`] — rasters, binary masks, boxes, category tables, panoptic maps.
//! * [`roi`] — region interpolation kernels: RoIAlign cropping plus the
//!   RoIInlay / RoIUpsample family that restores per-region patches onto a
//!   shared canvas, with batch drivers and a deterministic benchmark harness.
//! * [`occlusion`] — score filtering, mask NMS, and appearance-based
//!   resolution of overlapping instances into a per-pixel ownership map.
//! * [`fusion`] — combines resolved instances with a semantic segmentation
//!   into a panoptic map.
//! * [`metrics`] — segment matching, the PQ/SQ/RQ family, and stuff mIoU.
//! * [`io`] — the panoptic JSON + id-map PNG interchange format, instance
//!   manifests, semantic rasters, and a synthetic scene generator for tests.
//!
//! With the default `parallel` feature the batch kernels and per-image
//! pipeline stages fan out across threads via rayon; outputs are bit-identical
//! to the sequential fallback regardless of thread count.

pub mod error;
pub mod fusion;
pub mod io;
pub mod mask;
pub mod metrics;
pub mod occlusion;
pub mod roi;

pub use error::{Error, Result};
