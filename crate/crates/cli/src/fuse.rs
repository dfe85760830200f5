//! The `fuse` subcommand: instance manifest + semantic maps + RGB images in,
//! panoptic dataset out.

use std::path::PathBuf;

use clap::Args;
use panoptic_core::fusion::{fuse, FusionConfig};
use panoptic_core::io::{
    read_instances, read_rgb, read_semantic, write_panoptic, InstanceImage, PanopticDataset,
};
use panoptic_core::mask::{CategoryTable, PanopticMap};
use panoptic_core::occlusion::{filter_and_nms, resolve_scene, OcclusionConfig};
use panoptic_core::{Error, Result};

#[derive(Args)]
pub struct FuseArgs {
    /// Directory of RGB input images (PNG, named as in the manifest).
    #[arg(long, value_name = "DIR")]
    pub images: PathBuf,

    /// Instance manifest JSON.
    #[arg(long, value_name = "FILE")]
    pub instances: PathBuf,

    /// Directory of semantic category-id PNGs, named like the images.
    #[arg(long, value_name = "DIR")]
    pub semantic: PathBuf,

    /// Output directory; receives panoptic.json plus its id-map PNGs.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,

    /// Detections must score strictly above this to enter resolution.
    #[arg(long, default_value_t = 0.6)]
    pub score_floor: f32,

    /// Mask-IoU threshold for the class-agnostic suppression pass.
    #[arg(long, default_value_t = 0.5)]
    pub nms_iou: f32,

    /// Two instances count as occluded when their overlap exceeds this
    /// fraction of either one's area.
    #[arg(long, default_value_t = 0.2)]
    pub overlap_ratio: f32,

    /// Instances retaining at most this fraction of their mask are removed.
    #[arg(long, default_value_t = 0.5)]
    pub removal_ratio: f32,

    /// Stuff segments ending below this many pixels become void.
    #[arg(long, default_value_t = 4096)]
    pub stuff_area_floor: usize,

    /// Worker threads for per-image parallelism; 0 means one per core.
    /// Output bytes do not depend on this.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

fn check_ratio(name: &str, value: f32) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::MalformedFile {
            path: PathBuf::from(format!("--{name}")),
            reason: format!("{value} is outside [0, 1]"),
        });
    }
    Ok(())
}

/// Everything `fuse` reports about one processed image.
struct ImageOutcome {
    name: String,
    map: PanopticMap,
    dropped: usize,
    kept: usize,
    removed: usize,
    resolved_pairs: usize,
    set_aside: usize,
}

fn process_image(
    args: &FuseArgs,
    categories: &CategoryTable,
    image: &InstanceImage,
    occlusion: &OcclusionConfig,
    fusion: &FusionConfig,
) -> Result<ImageOutcome> {
    let rgb = read_rgb(&args.images.join(&image.file_name))?;
    if (rgb.width(), rgb.height()) != (image.width, image.height) {
        return Err(Error::DimensionMismatch {
            expected_w: image.width,
            expected_h: image.height,
            got_w: rgb.width(),
            got_h: rgb.height(),
        });
    }
    let semantic = read_semantic(&args.semantic.join(&image.file_name), categories)?;
    if (semantic.width(), semantic.height()) != (image.width, image.height) {
        return Err(Error::DimensionMismatch {
            expected_w: image.width,
            expected_h: image.height,
            got_w: semantic.width(),
            got_h: semantic.height(),
        });
    }

    let survivors = filter_and_nms(&image.instances, occlusion)?;
    let resolved = resolve_scene(&rgb, &survivors, occlusion);
    let map = fuse(&resolved, &semantic, fusion)?;
    Ok(ImageOutcome {
        name: image
            .file_name
            .strip_suffix(".png")
            .unwrap_or(&image.file_name)
            .to_string(),
        map,
        dropped: image.instances.len() - survivors.len(),
        kept: resolved.kept().len(),
        removed: resolved.removed().len(),
        resolved_pairs: resolved.relations().len(),
        set_aside: resolved.set_aside().len(),
    })
}

pub fn run(args: &FuseArgs) -> Result<()> {
    check_ratio("score-floor", args.score_floor)?;
    check_ratio("nms-iou", args.nms_iou)?;
    check_ratio("overlap-ratio", args.overlap_ratio)?;
    check_ratio("removal-ratio", args.removal_ratio)?;
    let occlusion = OcclusionConfig {
        score_floor: args.score_floor,
        nms_iou: args.nms_iou,
        overlap_ratio: args.overlap_ratio,
        removal_ratio: args.removal_ratio,
    };
    let fusion = FusionConfig {
        stuff_area_floor: args.stuff_area_floor,
    };

    let dataset = read_instances(&args.instances)?;
    eprintln!(
        "fusing {} image(s) from {}",
        dataset.images.len(),
        args.instances.display()
    );

    // Images are independent; the pool maps them in parallel and the indexed
    // collect restores manifest order, so output never depends on --jobs.
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    let outcomes: Vec<ImageOutcome> = pool.install(|| {
        use rayon::prelude::*;
        dataset
            .images
            .par_iter()
            .map(|image| process_image(args, &dataset.categories, image, &occlusion, &fusion))
            .collect::<Result<_>>()
    })?;

    for o in &outcomes {
        println!(
            "{}: dropped {}, kept {}, removed {}, resolved {} pair(s), set aside {}",
            o.name, o.dropped, o.kept, o.removed, o.resolved_pairs, o.set_aside
        );
    }

    let out_json = args.out.join("panoptic.json");
    write_panoptic(
        &PanopticDataset {
            categories: dataset.categories.clone(),
            images: outcomes.into_iter().map(|o| (o.name, o.map)).collect(),
        },
        &out_json,
    )?;
    eprintln!("wrote {}", out_json.display());
    Ok(())
}
