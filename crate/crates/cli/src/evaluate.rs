//! The `evaluate` subcommand: PQ/SQ/RQ plus stuff mIoU for a predicted
//! panoptic dataset against ground truth.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use panoptic_core::io::read_panoptic;
use panoptic_core::metrics::{compute_pq, match_segments, MatchResult, StuffIouAccumulator};
use panoptic_core::{Error, Result};

#[derive(Args)]
pub struct EvaluateArgs {
    /// Predicted panoptic JSON (id-map PNGs beside it).
    #[arg(long, value_name = "FILE")]
    pub pred: PathBuf,

    /// Ground-truth panoptic JSON.
    #[arg(long, value_name = "FILE")]
    pub gt: PathBuf,

    /// Optional path for the machine-readable JSON report.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

pub fn run(args: &EvaluateArgs) -> Result<()> {
    let pred = read_panoptic(&args.pred)?;
    let gt = read_panoptic(&args.gt)?;
    if pred.categories != gt.categories {
        return Err(Error::CategoryTableMismatch {
            reason: "prediction and ground truth declare different vocabularies".into(),
        });
    }
    let categories = gt.categories;

    let by_name: BTreeMap<&str, _> = pred
        .images
        .iter()
        .map(|(name, map)| (name.as_str(), map))
        .collect();
    if pred.images.len() != gt.images.len() {
        return Err(Error::MalformedFile {
            path: args.pred.clone(),
            reason: format!(
                "{} predicted image(s) for {} ground-truth image(s)",
                pred.images.len(),
                gt.images.len()
            ),
        });
    }

    let mut results: Vec<MatchResult> = Vec::new();
    let mut stuff_iou = StuffIouAccumulator::new(categories.clone());
    for (name, gt_map) in &gt.images {
        let pred_map = by_name.get(name.as_str()).ok_or_else(|| Error::MalformedFile {
            path: args.pred.clone(),
            reason: format!("no prediction for image {name}"),
        })?;
        results.push(match_segments(pred_map, gt_map)?);
        stuff_iou.add(
            &pred_map.to_semantic(&categories)?,
            &gt_map.to_semantic(&categories)?,
        )?;
    }

    let mut report = compute_pq(&results, &categories)?;
    report.miou_stuff = stuff_iou.mean();

    print!("{}", report.text());
    if let Some(out) = &args.out {
        if let Some(parent) = out.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut body = serde_json::to_string_pretty(&report)?;
        body.push('\n');
        std::fs::write(out, body)?;
        eprintln!("wrote {}", out.display());
    }
    Ok(())
}
