//! Batch drivers for the restoration kernels.
//!
//! Restoring many patches onto one canvas parallelizes by *canvas ownership*:
//! the canvas is split into disjoint row bands, and every worker walks the
//! full patch list but deposits only into the rows its band owns. Each pixel
//! therefore receives its contributions in patch order no matter how many
//! workers run, which keeps floating-point accumulation bit-identical to the
//! sequential drivers.
//!
//! With the `parallel` feature (on by default) the banded drivers fan out via
//! rayon; without it they degenerate to a single band. The `_sequential`
//! variants always run single-threaded and exist so tests and benchmarks can
//! compare the two paths directly.

use super::{roi_align, Canvas, FeatureMap, FeaturePatch, SamplingGrid};
use crate::error::Result;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

fn check_batch(patches: &[FeaturePatch], canvas: &Canvas) -> Result<()> {
    for patch in patches {
        super::check_channels(patch, canvas.channels())?;
    }
    Ok(())
}

/// Crops one patch per grid. The sequential variant preserves input order;
/// so does the parallel one (ordered collect).
pub fn align_batch_sequential(src: &FeatureMap, grids: &[SamplingGrid]) -> Vec<FeaturePatch> {
    grids.iter().map(|g| roi_align(src, g)).collect()
}

/// Parallel crop over grids; falls back to the sequential driver without the
/// `parallel` feature.
pub fn align_batch(src: &FeatureMap, grids: &[SamplingGrid]) -> Vec<FeaturePatch> {
    #[cfg(feature = "parallel")]
    {
        grids.par_iter().map(|g| roi_align(src, g)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        align_batch_sequential(src, grids)
    }
}

fn run_banded(
    patches: &[FeaturePatch],
    canvas: &mut Canvas,
    kernel: impl Fn(&FeaturePatch, &mut super::BandMut<'_>) + Sync,
) {
    #[cfg(feature = "parallel")]
    {
        let bands = canvas.bands(rayon::current_num_threads().max(1));
        bands.into_par_iter().for_each(|mut band| {
            for patch in patches {
                kernel(patch, &mut band);
            }
        });
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut band = canvas.full_band();
        for patch in patches {
            kernel(patch, &mut band);
        }
    }
}

/// Inlays every patch onto the canvas, single-threaded, in order.
pub fn inlay_batch_sequential(patches: &[FeaturePatch], canvas: &mut Canvas) -> Result<()> {
    check_batch(patches, canvas)?;
    let mut band = canvas.full_band();
    for patch in patches {
        super::inlay_into(patch, &mut band);
    }
    Ok(())
}

/// Inlays every patch onto the canvas using banded parallelism. Bit-identical
/// to [`inlay_batch_sequential`] for any worker count.
pub fn inlay_batch(patches: &[FeaturePatch], canvas: &mut Canvas) -> Result<()> {
    check_batch(patches, canvas)?;
    run_banded(patches, canvas, super::inlay_into);
    Ok(())
}

/// Scatters every patch onto the canvas, single-threaded, in order. Serves
/// both upsample variants; pick the finalization to match.
pub fn upsample_batch_sequential(patches: &[FeaturePatch], canvas: &mut Canvas) -> Result<()> {
    check_batch(patches, canvas)?;
    let mut band = canvas.full_band();
    for patch in patches {
        super::scatter_into(patch, &mut band);
    }
    Ok(())
}

/// Scatters every patch onto the canvas using banded parallelism.
/// Bit-identical to [`upsample_batch_sequential`] for any worker count.
pub fn upsample_batch(patches: &[FeaturePatch], canvas: &mut Canvas) -> Result<()> {
    check_batch(patches, canvas)?;
    run_banded(patches, canvas, super::scatter_into);
    Ok(())
}
