//! The `kernel-demo` subcommand: crop a box out of an RGB image with
//! RoIAlign, then restore it with all three kernels side by side.
//!
//! Writes four PNGs into the output directory, each on a black canvas the
//! size of the input:
//!
//! * `roi_inlay.png` — interpolated restoration, hole-free by construction;
//! * `roi_upsample.png` — scatter restoration; once bins grow past two
//!   pixels the unreached pixels show up as black stripes;
//! * `avg_roi_upsample.png` — the same scatter normalized by its weights;
//! * `holes.png` — white where the scatter restoration left in-box pixels
//!   untouched.

use std::path::PathBuf;

use clap::Args;
use panoptic_core::io::{read_rgb, write_mask, write_rgb};
use panoptic_core::mask::BinaryMask;
use panoptic_core::roi::{
    avg_roi_upsample, make_grid, roi_align, roi_inlay, roi_upsample, Canvas, FeatureMap, Rect,
};
use panoptic_core::{Error, Result};

#[derive(Args)]
pub struct DemoArgs {
    /// Input RGB PNG.
    #[arg(long, value_name = "FILE")]
    pub image: PathBuf,

    /// Box to crop, as `x0,y0,x1,y1` in pixel coordinates.
    #[arg(long = "box", value_name = "X0,Y0,X1,Y1", allow_hyphen_values = true)]
    pub box_spec: String,

    /// Patch resolution: the crop samples an m×m lattice.
    #[arg(long, default_value_t = 28)]
    pub m: usize,

    /// Output directory for the four PNGs.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

fn parse_box(spec: &str) -> Result<Rect> {
    let bad = |reason: String| Error::MalformedFile {
        path: PathBuf::from("--box"),
        reason,
    };
    let coords: Vec<f32> = spec
        .split(',')
        .map(|f| f.trim().parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| bad(format!("{spec:?}: {e}")))?;
    match coords[..] {
        [x0, y0, x1, y1] => Rect::new(x0, y0, x1, y1),
        _ => Err(bad(format!("{spec:?}: expected x0,y0,x1,y1"))),
    }
}

pub fn run(args: &DemoArgs) -> Result<()> {
    let rect = parse_box(&args.box_spec)?;
    let image = read_rgb(&args.image)?;
    let src = FeatureMap::from_rgb(&image);
    let grid = make_grid(rect, args.m)?;
    let patch = roi_align(&src, &grid);

    let mut canvas = Canvas::new(src.width(), src.height(), src.channels())?;

    roi_inlay(&patch, &mut canvas)?;
    write_rgb(
        &args.out.join("roi_inlay.png"),
        &canvas.finalize_mean().to_rgb_clamped()?,
    )?;
    let inlay_holes = canvas.hole_count(&rect);

    canvas.reset();
    roi_upsample(&patch, &mut canvas)?;
    write_rgb(
        &args.out.join("roi_upsample.png"),
        &canvas.finalize_sum().to_rgb_clamped()?,
    )?;
    let upsample_holes = canvas.hole_count(&rect);
    // White where the box interior was never touched by a deposit.
    let mut holes = BinaryMask::new(src.width(), src.height());
    for y in 0..src.height() {
        let cy = y as f32 + 0.5;
        for x in 0..src.width() {
            let cx = x as f32 + 0.5;
            let inside =
                cx >= rect.x0 && cx <= rect.x1 && cy >= rect.y0 && cy <= rect.y1;
            if inside && canvas.count(x, y) == 0 {
                holes.set(x, y, true);
            }
        }
    }
    write_mask(&args.out.join("holes.png"), &holes)?;

    canvas.reset();
    avg_roi_upsample(&patch, &mut canvas)?;
    write_rgb(
        &args.out.join("avg_roi_upsample.png"),
        &canvas.finalize_mean().to_rgb_clamped()?,
    )?;

    println!(
        "box {}x{} at ({}, {}), m = {}: inlay holes {}, upsample holes {}",
        rect.width(),
        rect.height(),
        rect.x0,
        rect.y0,
        args.m,
        inlay_holes,
        upsample_holes
    );
    eprintln!("wrote 4 image(s) under {}", args.out.display());
    Ok(())
}
