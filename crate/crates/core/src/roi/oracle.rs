//! Brute-force reference kernels for validating the production RoI paths.
//!
//! Each reference evaluates the kernel's defining sum over its *entire*
//! support in 64-bit arithmetic — the whole raster for align, the whole
//! `m x m` lattice for inlay, every sampling point for upsample — with none
//! of the index arithmetic, neighbour selection, or banding the production
//! kernels use. Agreement between the two paths is therefore meaningful.
//!
//! This module only exists for test suites (feature `oracles`); nothing in
//! the production pipeline may call it.

use super::{FeatureMap, FeaturePatch, SamplingGrid};

/// The unit triangle (hat) kernel: `max(0, 1 - |d| / width)`.
fn hat(d: f64, width: f64) -> f64 {
    (1.0 - d.abs() / width).max(0.0)
}

/// RoIAlign reference: each sampling point, clamped to the span of pixel
/// centers, integrates the source against the unit-width bilinear hat in
/// both axes, scanning every pixel of the raster.
///
/// Returns `m * m * channels` interleaved values.
pub fn align(src: &FeatureMap, grid: &SamplingGrid) -> Vec<f64> {
    let m = grid.resolution();
    let c = src.channels();
    let w = src.width();
    let h = src.height();
    let mut out = vec![0.0f64; m * m * c];
    for row in 0..m {
        for col in 0..m {
            let (u, v) = grid.point(row, col);
            let u = (u as f64).clamp(0.5, w as f64 - 0.5);
            let v = (v as f64).clamp(0.5, h as f64 - 0.5);
            let base = (row * m + col) * c;
            for py in 0..h {
                let wy = hat(v - (py as f64 + 0.5), 1.0);
                if wy == 0.0 {
                    continue;
                }
                for px in 0..w {
                    let wx = hat(u - (px as f64 + 0.5), 1.0);
                    if wx == 0.0 {
                        continue;
                    }
                    for ch in 0..c {
                        out[base + ch] += wx * wy * src.get(px, py, ch) as f64;
                    }
                }
            }
        }
    }
    out
}

/// Per-axis lattice weights for the inlay reference: triangle weights against
/// every lattice position, negatives floored to zero, then the axis
/// renormalized to sum to one. Coordinates outside the lattice hull clamp to
/// the boundary first.
fn lattice_weights(a: f64, first: f64, bin: f64, m: usize) -> Vec<f64> {
    if m == 1 {
        return vec![1.0];
    }
    let last = first + (m - 1) as f64 * bin;
    let a = a.clamp(first, last);
    let mut weights: Vec<f64> = (0..m)
        .map(|i| hat(a - (first + i as f64 * bin), bin))
        .collect();
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        for w in &mut weights {
            *w /= total;
        }
    }
    weights
}

/// RoIInlay reference: for every pixel whose center falls inside the patch
/// box, evaluate the full tensor-product lattice sum. Returns the finalized
/// single-patch restoration as `height * width * channels` interleaved
/// values, zero outside the box.
pub fn inlay(patch: &FeaturePatch, width: usize, height: usize) -> Vec<f64> {
    let grid = patch.grid();
    let rect = grid.rect();
    let m = grid.resolution();
    let c = patch.channels();
    let (first_x, first_y) = grid.point(0, 0);
    let mut out = vec![0.0f64; width * height * c];
    for py in 0..height {
        let b = py as f64 + 0.5;
        if b < rect.y0 as f64 || b > rect.y1 as f64 {
            continue;
        }
        let wys = lattice_weights(b, first_y as f64, grid.bin_height() as f64, m);
        for px in 0..width {
            let a = px as f64 + 0.5;
            if a < rect.x0 as f64 || a > rect.x1 as f64 {
                continue;
            }
            let wxs = lattice_weights(a, first_x as f64, grid.bin_width() as f64, m);
            let base = (py * width + px) * c;
            for (row, &wy) in wys.iter().enumerate() {
                if wy == 0.0 {
                    continue;
                }
                for (col, &wx) in wxs.iter().enumerate() {
                    if wx == 0.0 {
                        continue;
                    }
                    for ch in 0..c {
                        out[base + ch] += wx * wy * patch.get(row, col, ch) as f64;
                    }
                }
            }
        }
    }
    out
}

/// RoIUpsample reference: for every raster pixel, sum over *all* sampling
/// points the hat-weighted deposits that reach it. Returns interleaved
/// channel sums, per-pixel scatter weights, and per-pixel touch counts.
pub fn upsample(
    patch: &FeaturePatch,
    width: usize,
    height: usize,
) -> (Vec<f64>, Vec<f64>, Vec<u32>) {
    let grid = patch.grid();
    let m = grid.resolution();
    let c = patch.channels();
    let mut sums = vec![0.0f64; width * height * c];
    let mut weights = vec![0.0f64; width * height];
    let mut counts = vec![0u32; width * height];
    for py in 0..height {
        let cy = py as f64 + 0.5;
        for px in 0..width {
            let cx = px as f64 + 0.5;
            let pix = py * width + px;
            for row in 0..m {
                for col in 0..m {
                    let (u, v) = grid.point(row, col);
                    let w = hat(u as f64 - cx, 1.0) * hat(v as f64 - cy, 1.0);
                    if w == 0.0 {
                        continue;
                    }
                    for ch in 0..c {
                        sums[pix * c + ch] += w * patch.get(row, col, ch) as f64;
                    }
                    weights[pix] += w;
                    counts[pix] += 1;
                }
            }
        }
    }
    (sums, weights, counts)
}
