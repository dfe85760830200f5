//! Region-of-interest interpolation kernels.
//!
//! Three kernels share one geometric convention: a box is divided into an
//! `m x m` grid of bins, and the sampling point of bin `(row, col)` sits at
//! the bin center,
//!
//! ```text
//!   x = x0 + (col + 0.5) * bin_w      bin_w = (x1 - x0) / m
//!   y = y0 + (row + 0.5) * bin_h      bin_h = (y1 - y0) / m
//! ```
//!
//! with pixel `(i, j)` of the raster centered at `(j + 0.5, i + 0.5)`.
//!
//! * [`roi_align`] crops: every sampling point gathers a bilinearly
//!   interpolated value from the source map, yielding an `m x m` patch.
//! * [`roi_inlay`] restores: every raster pixel inside the box gathers one
//!   interpolated value from the patch lattice, so the box interior is
//!   covered wall to wall no matter how coarse the patch is. Pixels outside
//!   the lattice hull clamp to its boundary. Overlapping patches average.
//! * [`roi_upsample`] restores by scattering: every sampling point deposits
//!   its value onto the (up to four) surrounding pixel centers with bilinear
//!   weights. Pixels no point reaches stay empty — when bins grow wider than
//!   two pixels the output develops periodic holes. [`avg_roi_upsample`]
//!   accumulates identically but finalizes to the scatter-weighted mean
//!   instead of the raw sum.
//!
//! All three restoration kernels deposit into a shared [`Canvas`] that keeps
//! 64-bit running sums alongside per-pixel scatter weights and contribution
//! counts; kernel arithmetic itself is 32-bit. Accumulation is commutative in
//! exact arithmetic, but to keep floating-point results reproducible the
//! batch drivers in [`batch`] fix the accumulation order per pixel regardless
//! of thread count.

pub mod batch;
pub mod bench;
#[cfg(feature = "oracles")]
pub mod oracle;

use crate::error::{Error, Result};
use crate::mask::RgbImage;
// Re-exported because every grid construction starts from a box.
pub use crate::mask::Rect;

// ── Feature maps ────────────────────────────────────────────────────────────

/// A dense `H x W x C` float raster, row-major with interleaved channels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    width: usize,
    height: usize,
    channels: usize,
    values: Vec<f32>,
}

impl FeatureMap {
    /// An all-zero map. All dimensions must be positive.
    pub fn new(width: usize, height: usize, channels: usize) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::EmptyFeatureMap);
        }
        Ok(Self {
            width,
            height,
            channels,
            values: vec![0.0; width * height * channels],
        })
    }

    /// A map filled with one value.
    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Result<Self> {
        let mut map = Self::new(width, height, channels)?;
        map.values.fill(value);
        Ok(map)
    }

    /// Builds a map from `width * height * channels` interleaved values.
    pub fn from_values(
        width: usize,
        height: usize,
        channels: usize,
        values: Vec<f32>,
    ) -> Result<Self> {
        let map = Self::new(width, height, channels)?;
        if values.len() != map.values.len() {
            return Err(Error::DataLength {
                expected: map.values.len(),
                got: values.len(),
            });
        }
        Ok(Self { values, ..map })
    }

    /// Widens an RGB image into a 3-channel map with values in `[0, 255]`.
    pub fn from_rgb(image: &RgbImage) -> Self {
        Self {
            width: image.width(),
            height: image.height(),
            channels: 3,
            values: image.raw().iter().map(|&b| b as f32).collect(),
        }
    }

    /// Rounds a 3-channel map back to an RGB image, clamping to `[0, 255]`.
    pub fn to_rgb_clamped(&self) -> Result<RgbImage> {
        if self.channels != 3 {
            return Err(Error::ChannelMismatch {
                expected: 3,
                got: self.channels,
            });
        }
        let data = self
            .values
            .iter()
            .map(|&v| v.round().clamp(0.0, 255.0) as u8)
            .collect();
        RgbImage::from_raw(self.width, self.height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn get(&self, x: usize, y: usize, channel: usize) -> f32 {
        self.values[(y * self.width + x) * self.channels + channel]
    }

    pub fn set(&mut self, x: usize, y: usize, channel: usize, value: f32) {
        self.values[(y * self.width + x) * self.channels + channel] = value;
    }

    /// Interleaved values, row-major.
    pub fn values(&self) -> &[f32] {
        &self.values
    }
}

// ── Sampling grids ──────────────────────────────────────────────────────────

/// An `m x m` lattice of bin-center sampling points over a box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingGrid {
    rect: Rect,
    resolution: usize,
    bin_w: f32,
    bin_h: f32,
}

/// Builds the sampling lattice for `rect` at resolution `m`.
pub fn make_grid(rect: Rect, resolution: usize) -> Result<SamplingGrid> {
    if resolution == 0 {
        return Err(Error::ZeroResolution);
    }
    Ok(SamplingGrid {
        rect,
        resolution,
        bin_w: rect.width() / resolution as f32,
        bin_h: rect.height() / resolution as f32,
    })
}

impl SamplingGrid {
    pub fn rect(&self) -> Rect {
        self.rect
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn bin_width(&self) -> f32 {
        self.bin_w
    }

    pub fn bin_height(&self) -> f32 {
        self.bin_h
    }

    /// Continuous coordinates of the sampling point of bin `(row, col)`.
    pub fn point(&self, row: usize, col: usize) -> (f32, f32) {
        (
            self.rect.x0 + (col as f32 + 0.5) * self.bin_w,
            self.rect.y0 + (row as f32 + 0.5) * self.bin_h,
        )
    }
}

// ── Patches ─────────────────────────────────────────────────────────────────

/// An `m x m x C` patch of values sampled on (or destined for) a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePatch {
    grid: SamplingGrid,
    channels: usize,
    values: Vec<f32>,
}

impl FeaturePatch {
    /// Builds a patch from `m * m * channels` interleaved values.
    pub fn from_values(grid: SamplingGrid, channels: usize, values: Vec<f32>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::EmptyFeatureMap);
        }
        let expected = grid.resolution() * grid.resolution() * channels;
        if values.len() != expected {
            return Err(Error::DataLength {
                expected,
                got: values.len(),
            });
        }
        Ok(Self {
            grid,
            channels,
            values,
        })
    }

    pub fn grid(&self) -> &SamplingGrid {
        &self.grid
    }

    pub fn resolution(&self) -> usize {
        self.grid.resolution()
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> f32 {
        self.values[(row * self.grid.resolution() + col) * self.channels + channel]
    }

    /// Interleaved values, row-major over the lattice.
    pub fn values(&self) -> &[f32] {
        &self.values
    }
}

// ── Canvas ──────────────────────────────────────────────────────────────────

/// Shared accumulation target for the restoration kernels.
///
/// Per pixel the canvas keeps 64-bit channel sums, a 64-bit total scatter
/// weight, and a 32-bit contribution count. Restorations only ever add, so
/// partial results from disjoint pixel regions can be combined with
/// [`Canvas::merge`].
#[derive(Debug, Clone, PartialEq)]
pub struct Canvas {
    width: usize,
    height: usize,
    channels: usize,
    sums: Vec<f64>,
    weights: Vec<f64>,
    counts: Vec<u32>,
}

impl Canvas {
    /// An empty canvas. All dimensions must be positive.
    pub fn new(width: usize, height: usize, channels: usize) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::EmptyFeatureMap);
        }
        Ok(Self {
            width,
            height,
            channels,
            sums: vec![0.0; width * height * channels],
            weights: vec![0.0; width * height],
            counts: vec![0; width * height],
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Clears all accumulators.
    pub fn reset(&mut self) {
        self.sums.fill(0.0);
        self.weights.fill(0.0);
        self.counts.fill(0);
    }

    /// Adds another canvas of identical shape element-wise.
    pub fn merge(&mut self, other: &Canvas) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch {
                expected_w: self.width,
                expected_h: self.height,
                got_w: other.width,
                got_h: other.height,
            });
        }
        if self.channels != other.channels {
            return Err(Error::ChannelMismatch {
                expected: self.channels,
                got: other.channels,
            });
        }
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            *a += b;
        }
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    /// Contribution count at a pixel.
    pub fn count(&self, x: usize, y: usize) -> u32 {
        self.counts[y * self.width + x]
    }

    /// Accumulated scatter weight at a pixel.
    pub fn weight(&self, x: usize, y: usize) -> f64 {
        self.weights[y * self.width + x]
    }

    /// Accumulated channel sum at a pixel.
    pub fn sum(&self, x: usize, y: usize, channel: usize) -> f64 {
        self.sums[(y * self.width + x) * self.channels + channel]
    }

    /// Row-major contribution counts.
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Weighted mean per pixel: `sum / weight` where anything landed, zero
    /// elsewhere. This is the finalization for [`roi_inlay`] (every
    /// contribution carries weight 1, so it reduces to the plain mean) and
    /// for [`avg_roi_upsample`].
    pub fn finalize_mean(&self) -> FeatureMap {
        let mut values = vec![0.0f32; self.sums.len()];
        for pix in 0..self.width * self.height {
            if self.counts[pix] == 0 {
                continue;
            }
            let w = self.weights[pix];
            let base = pix * self.channels;
            for ch in 0..self.channels {
                values[base + ch] = (self.sums[base + ch] / w) as f32;
            }
        }
        FeatureMap {
            width: self.width,
            height: self.height,
            channels: self.channels,
            values,
        }
    }

    /// Raw accumulated sums per pixel — the finalization for
    /// [`roi_upsample`], which deliberately leaves overlap seams bright and
    /// unreached pixels at zero.
    pub fn finalize_sum(&self) -> FeatureMap {
        FeatureMap {
            width: self.width,
            height: self.height,
            channels: self.channels,
            values: self.sums.iter().map(|&s| s as f32).collect(),
        }
    }

    /// Number of pixels whose centers lie inside `rect` (clipped to the
    /// raster) that no contribution has reached.
    pub fn hole_count(&self, rect: &Rect) -> usize {
        let ys = covered_range(rect.y0, rect.y1, self.height);
        let xs = covered_range(rect.x0, rect.x1, self.width);
        let mut holes = 0;
        for y in ys {
            for x in xs.clone() {
                if self.counts[y * self.width + x] == 0 {
                    holes += 1;
                }
            }
        }
        holes
    }
}

// ── Kernels ─────────────────────────────────────────────────────────────────

#[inline]
fn lerp(a: f32, b: f32, f: f32) -> f32 {
    a + f * (b - a)
}

/// Raster indices whose pixel centers fall inside `[lo, hi]`, clipped to `n`.
fn covered_range(lo: f32, hi: f32, n: usize) -> std::ops::Range<usize> {
    let first = ((lo - 0.5).ceil() as i64).max(0);
    let last = ((hi - 0.5).floor() as i64).min(n as i64 - 1); // inclusive
    if first > last {
        0..0
    } else {
        first as usize..last as usize + 1
    }
}

/// Per-axis interpolation support on an `m`-point lattice starting at `first`
/// with spacing `bin`: the two neighbouring lattice indices of coordinate `a`
/// and the fraction assigned to the second one.
///
/// Coordinates outside the lattice hull clamp to the boundary point, which is
/// exactly the triangle-weight rule with negative weights floored to zero and
/// the axis renormalized. Inside the hull the fraction reproduces the
/// triangle weights `1 - |a - x_i| / bin` verbatim.
#[inline]
fn axis_support(a: f32, first: f32, bin: f32, m: usize) -> (usize, usize, f32) {
    if m == 1 {
        return (0, 0, 0.0);
    }
    // The offset/spacing division runs in f64: subtracting nearly equal f32
    // coordinates and dividing by a small bin would otherwise amplify a
    // single rounding into the ppm range.
    let (a, first, bin) = (a as f64, first as f64, bin as f64);
    let last = first + (m - 1) as f64 * bin;
    let t = (a.clamp(first, last) - first) / bin;
    let i0 = (t.floor() as usize).min(m - 2);
    let f = ((t - i0 as f64) as f32).clamp(0.0, 1.0);
    (i0, i0 + 1, f)
}

/// Crops `src` on `grid`: each sampling point bilinearly interpolates between
/// the four surrounding pixel centers. Points outside the raster clamp to the
/// span of pixel centers, so border boxes replicate edge pixels.
pub fn roi_align(src: &FeatureMap, grid: &SamplingGrid) -> FeaturePatch {
    let m = grid.resolution();
    let c = src.channels;
    let mut values = vec![0.0f32; m * m * c];
    let max_x = src.width as f32 - 0.5;
    let max_y = src.height as f32 - 0.5;
    for row in 0..m {
        for col in 0..m {
            let (u, v) = grid.point(row, col);
            let x = u.clamp(0.5, max_x) - 0.5;
            let y = v.clamp(0.5, max_y) - 0.5;
            let c0 = (x.floor() as usize).min(src.width - 1);
            let c1 = (c0 + 1).min(src.width - 1);
            let r0 = (y.floor() as usize).min(src.height - 1);
            let r1 = (r0 + 1).min(src.height - 1);
            let fx = x - c0 as f32;
            let fy = y - r0 as f32;
            let out = &mut values[(row * m + col) * c..][..c];
            for ch in 0..c {
                let top = lerp(src.get(c0, r0, ch), src.get(c1, r0, ch), fx);
                let bottom = lerp(src.get(c0, r1, ch), src.get(c1, r1, ch), fx);
                out[ch] = lerp(top, bottom, fy);
            }
        }
    }
    FeaturePatch {
        grid: *grid,
        channels: c,
        values,
    }
}

/// A mutable window of `rows` consecutive canvas rows starting at
/// `row_start`. The batch drivers hand disjoint bands to worker threads; the
/// single-patch kernels use one band spanning the whole canvas.
struct BandMut<'a> {
    row_start: usize,
    row_end: usize,
    width: usize,
    channels: usize,
    sums: &'a mut [f64],
    weights: &'a mut [f64],
    counts: &'a mut [u32],
}

impl Canvas {
    fn full_band(&mut self) -> BandMut<'_> {
        BandMut {
            row_start: 0,
            row_end: self.height,
            width: self.width,
            channels: self.channels,
            sums: &mut self.sums,
            weights: &mut self.weights,
            counts: &mut self.counts,
        }
    }

    /// Splits the canvas into at most `bands` disjoint row bands.
    fn bands(&mut self, bands: usize) -> Vec<BandMut<'_>> {
        let rows_per = self.height.div_ceil(bands.max(1));
        let w = self.width;
        let c = self.channels;
        let mut out = Vec::new();
        let mut row = 0;
        let mut sums = self.sums.as_mut_slice();
        let mut weights = self.weights.as_mut_slice();
        let mut counts = self.counts.as_mut_slice();
        while row < self.height {
            let rows = rows_per.min(self.height - row);
            let (s, s_rest) = sums.split_at_mut(rows * w * c);
            let (wt, w_rest) = weights.split_at_mut(rows * w);
            let (ct, c_rest) = counts.split_at_mut(rows * w);
            out.push(BandMut {
                row_start: row,
                row_end: row + rows,
                width: w,
                channels: c,
                sums: s,
                weights: wt,
                counts: ct,
            });
            sums = s_rest;
            weights = w_rest;
            counts = c_rest;
            row += rows;
        }
        out
    }
}

fn check_channels(patch: &FeaturePatch, canvas_channels: usize) -> Result<()> {
    if patch.channels != canvas_channels {
        return Err(Error::ChannelMismatch {
            expected: canvas_channels,
            got: patch.channels,
        });
    }
    Ok(())
}

/// Inlay gather restricted to the rows a band owns.
fn inlay_into(patch: &FeaturePatch, band: &mut BandMut<'_>) {
    let grid = patch.grid;
    let rect = grid.rect;
    let m = grid.resolution;
    let c = band.channels;
    let (first_x, first_y) = grid.point(0, 0);

    let ys = covered_range(rect.y0, rect.y1, band.row_end);
    let y_start = ys.start.max(band.row_start);
    if y_start >= ys.end {
        return;
    }
    let xs = covered_range(rect.x0, rect.x1, band.width);
    if xs.is_empty() {
        return;
    }
    // Column geometry is identical for every row; compute it once.
    let cols: Vec<(usize, usize, f32)> = xs
        .clone()
        .map(|x| axis_support(x as f32 + 0.5, first_x, grid.bin_w, m))
        .collect();

    for y in y_start..ys.end {
        let (r0, r1, fy) = axis_support(y as f32 + 0.5, first_y, grid.bin_h, m);
        let row_base = (y - band.row_start) * band.width;
        let row0 = &patch.values[r0 * m * c..][..m * c];
        let row1 = &patch.values[r1 * m * c..][..m * c];
        for (x, &(c0, c1, fx)) in xs.clone().zip(&cols) {
            let p00 = row0[c0 * c..][..c].iter();
            let p01 = row0[c1 * c..][..c].iter();
            let p10 = row1[c0 * c..][..c].iter();
            let p11 = row1[c1 * c..][..c].iter();
            let pix = row_base + x;
            let out = band.sums[pix * c..][..c].iter_mut();
            for ((((out, &a), &b), &g), &h) in out.zip(p00).zip(p01).zip(p10).zip(p11) {
                let top = lerp(a, b, fx);
                let bottom = lerp(g, h, fx);
                *out += lerp(top, bottom, fy) as f64;
            }
            band.weights[pix] += 1.0;
            band.counts[pix] += 1;
        }
    }
}

/// Scatter accumulation restricted to the rows a band owns. Used by both
/// upsample variants — they differ only in finalization.
fn scatter_into(patch: &FeaturePatch, band: &mut BandMut<'_>) {
    let grid = patch.grid;
    let m = grid.resolution;
    let c = band.channels;
    for row in 0..m {
        let (_, v) = grid.point(row, 0);
        let y = v - 0.5;
        let y0 = y.floor();
        let fy = y - y0;
        let y0 = y0 as i64;
        let row_targets = [(y0, 1.0 - fy), (y0 + 1, fy)];
        for col in 0..m {
            let (u, _) = grid.point(row, col);
            let x = u - 0.5;
            let x0 = x.floor();
            let fx = x - x0;
            let x0 = x0 as i64;
            let col_targets = [(x0, 1.0 - fx), (x0 + 1, fx)];
            let value = &patch.values[(row * m + col) * c..][..c];
            for &(ty, wy) in &row_targets {
                if wy <= 0.0 || ty < band.row_start as i64 || ty >= band.row_end as i64 {
                    continue;
                }
                for &(tx, wx) in &col_targets {
                    let w = wx * wy;
                    if w <= 0.0 || tx < 0 || tx >= band.width as i64 {
                        continue;
                    }
                    let pix = (ty as usize - band.row_start) * band.width + tx as usize;
                    let out = band.sums[pix * c..][..c].iter_mut();
                    for (out, &v) in out.zip(value) {
                        *out += (w * v) as f64;
                    }
                    band.weights[pix] += w as f64;
                    band.counts[pix] += 1;
                }
            }
        }
    }
}

/// Restores `patch` onto the canvas by per-pixel gathering: every pixel whose
/// center lies inside the patch box receives exactly one interpolated value.
/// Finalize with [`Canvas::finalize_mean`].
pub fn roi_inlay(patch: &FeaturePatch, canvas: &mut Canvas) -> Result<()> {
    check_channels(patch, canvas.channels)?;
    inlay_into(patch, &mut canvas.full_band());
    Ok(())
}

/// Restores `patch` onto the canvas by scattering each sampling point onto
/// the surrounding pixel centers. Finalize with [`Canvas::finalize_sum`];
/// pixels out of reach of every sampling point stay at zero.
pub fn roi_upsample(patch: &FeaturePatch, canvas: &mut Canvas) -> Result<()> {
    check_channels(patch, canvas.channels)?;
    scatter_into(patch, &mut canvas.full_band());
    Ok(())
}

/// Scatter accumulation identical to [`roi_upsample`] — same deposits, same
/// hole pattern — but meant to be finalized with [`Canvas::finalize_mean`],
/// which divides by the accumulated scatter weight.
pub fn avg_roi_upsample(patch: &FeaturePatch, canvas: &mut Canvas) -> Result<()> {
    roi_upsample(patch, canvas)
}
