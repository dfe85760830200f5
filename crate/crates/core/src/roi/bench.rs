//! Deterministic wall-clock comparison of the restoration kernels.
//!
//! The workload mirrors how the kernels are used in a real pipeline: a fixed
//! number of objects, each an `s x s` patch placed at a random off-lattice
//! position inside an `N x N` output canvas, restored once per object per
//! pass. Both kernels consume *identical* patches built from one seeded
//! stream, timings cover accumulation passes only (canvas clearing and
//! workload generation are excluded), and the reported time per kernel is
//! the median over repetitions.
//!
//! Channels are processed in blocks of at most [`CHANNEL_BLOCK`] so that
//! wide-channel configurations do not need gigabytes of resident canvas;
//! per-channel independence makes the blocked pass arithmetically identical
//! to a monolithic one, and each repetition sums its block times.
//!
//! Passes run on the single-threaded drivers so that reported ratios reflect
//! kernel arithmetic, not scheduling.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::batch::{inlay_batch_sequential, upsample_batch_sequential};
use super::{make_grid, Canvas, FeaturePatch, SamplingGrid};
use crate::error::Result;
use crate::mask::Rect;

/// Maximum channels restored per blocked pass.
pub const CHANNEL_BLOCK: usize = 128;

/// One benchmark configuration: `objects` patches of side `object_size`
/// restored into an `output_size x output_size` canvas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BenchConfig {
    pub objects: usize,
    pub object_size: usize,
    pub output_size: usize,
}

/// Measured medians for one configuration.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRecord {
    pub objects: usize,
    pub object_size: usize,
    pub output_size: usize,
    pub inlay_ns: u64,
    pub upsample_ns: u64,
    /// `upsample_ns / inlay_ns`: how many times faster inlay ran.
    pub speedup: f64,
}

/// Full benchmark output.
#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub channels: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub records: Vec<BenchRecord>,
}

impl BenchReport {
    /// Fixed-width text table, one line per record.
    pub fn text_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "kernel benchmark: {} channels, median of {} repetitions, seed {}\n",
            self.channels, self.repetitions, self.seed
        ));
        out.push_str(&format!(
            "{:>8} {:>6} {:>7} {:>12} {:>12} {:>8}\n",
            "objects", "size", "output", "inlay_ms", "upsample_ms", "speedup"
        ));
        for r in &self.records {
            out.push_str(&format!(
                "{:>8} {:>6} {:>7} {:>12.2} {:>12.2} {:>7.2}x\n",
                r.objects,
                r.object_size,
                r.output_size,
                r.inlay_ns as f64 / 1e6,
                r.upsample_ns as f64 / 1e6,
                r.speedup,
            ));
        }
        out
    }
}

/// The default configuration sweep: object counts, patch sizes, and output
/// sizes spanning the regimes where the gather/scatter trade-off shifts.
pub fn default_grid() -> Vec<BenchConfig> {
    [
        (50, 28, 300),
        (100, 28, 300),
        (100, 28, 800),
        (100, 56, 300),
        (100, 128, 300),
    ]
    .into_iter()
    .map(|(objects, object_size, output_size)| BenchConfig {
        objects,
        object_size,
        output_size,
    })
    .collect()
}

/// Square boxes of side `min(object_size, output_size)` at seeded random
/// real-valued positions, each with an `object_size`-resolution grid.
///
/// Positions are deliberately not snapped to the pixel lattice: a box whose
/// corner lands on an integer puts every sampling point exactly on a pixel
/// center, which collapses the scatter kernel's four targets to one and
/// would benchmark a degenerate special case instead of the general one.
fn generate_grids(rng: &mut ChaCha8Rng, config: &BenchConfig) -> Vec<SamplingGrid> {
    let side = config.object_size.min(config.output_size);
    let max_pos = (config.output_size - side) as f32;
    (0..config.objects)
        .map(|_| {
            let x0 = rng.gen_range(0.0..max_pos.max(f32::MIN_POSITIVE));
            let y0 = rng.gen_range(0.0..max_pos.max(f32::MIN_POSITIVE));
            let rect = Rect::new(x0, y0, x0 + side as f32, y0 + side as f32)
                .expect("bench boxes have positive sides");
            make_grid(rect, config.object_size).expect("bench resolution is nonzero")
        })
        .collect()
}

/// One patch per grid with image-like values in `[0, 255]`.
fn generate_patches(
    rng: &mut ChaCha8Rng,
    grids: &[SamplingGrid],
    channels: usize,
) -> Vec<FeaturePatch> {
    grids
        .iter()
        .map(|grid| {
            let m = grid.resolution();
            let values = (0..m * m * channels)
                .map(|_| rng.gen_range(0.0..255.0f32))
                .collect();
            FeaturePatch::from_values(*grid, channels, values)
                .expect("generated patch matches its grid")
        })
        .collect()
}

fn median(mut samples: Vec<u64>) -> u64 {
    samples.sort_unstable();
    samples[samples.len() / 2]
}

/// Times both restoration kernels over `grid`, returning one record per
/// configuration with at least one object. Identical seeds produce identical
/// workloads, so timings differ between runs but nothing else does.
pub fn bench_kernels(
    grid: &[BenchConfig],
    channels: usize,
    repetitions: usize,
    seed: u64,
) -> Result<BenchReport> {
    let repetitions = repetitions.max(1);
    let channels = channels.max(1);
    let mut records = Vec::new();
    for config in grid {
        if config.objects == 0 || config.object_size == 0 || config.output_size == 0 {
            continue;
        }
        // Distinct stream per configuration so reordering the grid cannot
        // change any workload.
        let mut rng = ChaCha8Rng::seed_from_u64(
            seed ^ (config.objects as u64)
                .wrapping_mul(0x9e37_79b9_7f4a_7c15)
                .wrapping_add((config.object_size as u64) << 24)
                .wrapping_add(config.output_size as u64),
        );
        let grids = generate_grids(&mut rng, config);

        let mut inlay_times = vec![0u64; repetitions];
        let mut upsample_times = vec![0u64; repetitions];
        let mut remaining = channels;
        while remaining > 0 {
            let block = remaining.min(CHANNEL_BLOCK);
            remaining -= block;
            let patches = generate_patches(&mut rng, &grids, block);
            let mut canvas = Canvas::new(config.output_size, config.output_size, block)?;
            for rep in 0..repetitions {
                canvas.reset();
                let start = Instant::now();
                inlay_batch_sequential(&patches, &mut canvas)?;
                inlay_times[rep] += start.elapsed().as_nanos() as u64;

                canvas.reset();
                let start = Instant::now();
                upsample_batch_sequential(&patches, &mut canvas)?;
                upsample_times[rep] += start.elapsed().as_nanos() as u64;
            }
        }

        let inlay_ns = median(inlay_times);
        let upsample_ns = median(upsample_times);
        records.push(BenchRecord {
            objects: config.objects,
            object_size: config.object_size,
            output_size: config.output_size,
            inlay_ns,
            upsample_ns,
            speedup: upsample_ns as f64 / inlay_ns.max(1) as f64,
        });
    }
    Ok(BenchReport {
        channels,
        repetitions,
        seed,
        records,
    })
}
