//! Fusing resolved instances with a semantic segmentation into one panoptic
//! map.
//!
//! The priority rules, applied per pixel:
//!
//! 1. A pixel owned by a surviving instance belongs to that instance's
//!    segment — instances always overwrite the semantic layer.
//! 2. Otherwise a stuff-labeled pixel joins its category's stuff segment
//!    (one segment per stuff category).
//! 3. Thing-labeled semantic pixels without an owning instance become void:
//!    thing shapes are only ever trusted from the instance branch.
//!
//! Stuff segments whose *final* area — after instances have overwritten them
//! — falls below the area floor are dropped to void entirely.
//!
//! Segment ids are dense and deterministic: instances take `1..=k` in
//! descending score order (ties by ascending instance id), surviving stuff
//! segments follow in ascending category order.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::mask::{PanopticMap, SegmentInfo, SemanticMap, VOID_CATEGORY};
use crate::occlusion::ResolvedScene;

/// Fusion thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FusionConfig {
    /// Stuff segments with final area strictly below this become void.
    pub stuff_area_floor: usize,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            stuff_area_floor: 4096,
        }
    }
}

/// Combines a resolved scene and a semantic map into a panoptic map.
///
/// The semantic map's category table is the vocabulary: every surviving
/// instance must carry a thing category declared there. The scene and map
/// must share dimensions.
pub fn fuse(
    scene: &ResolvedScene,
    semantic: &SemanticMap,
    config: &FusionConfig,
) -> Result<PanopticMap> {
    let width = semantic.width();
    let height = semantic.height();
    if scene.width() != width || scene.height() != height {
        return Err(Error::DimensionMismatch {
            expected_w: width,
            expected_h: height,
            got_w: scene.width(),
            got_h: scene.height(),
        });
    }
    let categories = semantic.categories();
    for summary in scene.kept() {
        match categories.get(summary.category_id) {
            None => {
                return Err(Error::UnknownCategory {
                    id: summary.category_id,
                })
            }
            Some(category) if !category.is_thing => {
                return Err(Error::NotAThing {
                    id: summary.category_id,
                })
            }
            Some(_) => {}
        }
    }

    // Dense instance segment ids in descending score order, ties by id.
    let mut order: Vec<usize> = (0..scene.kept().len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (&scene.kept()[i], &scene.kept()[j]);
        b.score.total_cmp(&a.score).then(a.id.cmp(&b.id))
    });
    let mut segment_of_instance: BTreeMap<u32, u32> = BTreeMap::new();
    let mut instance_segments: Vec<SegmentInfo> = Vec::new();
    for (rank, &idx) in order.iter().enumerate() {
        let summary = &scene.kept()[idx];
        segment_of_instance.insert(summary.id, rank as u32 + 1);
        instance_segments.push(SegmentInfo {
            id: rank as u32 + 1,
            category_id: summary.category_id,
            area: 0, // counted below
        });
    }

    // First pass: instances overwrite everything; what remains is stuff,
    // thing-labeled leftovers, or void.
    let mut raster = vec![0u32; width * height];
    let mut stuff_area: BTreeMap<u32, u64> = BTreeMap::new();
    for (i, owner) in scene.assignments().iter().enumerate() {
        if let Some(id) = owner {
            let segment = segment_of_instance
                .get(id)
                .ok_or(Error::InconsistentPanoptic {
                    reason: format!("pixel owned by unknown instance id {id}"),
                })?;
            raster[i] = *segment;
            instance_segments[*segment as usize - 1].area += 1;
        } else {
            let label = semantic.labels()[i];
            if label != VOID_CATEGORY && categories.is_stuff(label) {
                *stuff_area.entry(label).or_insert(0) += 1;
            }
            // Thing-labeled or void pixels stay 0 here; small stuff joins
            // them after the area check.
        }
    }
    for segment in &instance_segments {
        if segment.area == 0 {
            return Err(Error::InconsistentPanoptic {
                reason: format!("surviving instance segment {} owns no pixels", segment.id),
            });
        }
    }

    // Stuff segments surviving the area floor, in ascending category order.
    let mut next_id = instance_segments.len() as u32 + 1;
    let mut segment_of_stuff: BTreeMap<u32, u32> = BTreeMap::new();
    let mut stuff_segments: Vec<SegmentInfo> = Vec::new();
    for (&category_id, &area) in &stuff_area {
        if (area as usize) < config.stuff_area_floor {
            continue;
        }
        segment_of_stuff.insert(category_id, next_id);
        stuff_segments.push(SegmentInfo {
            id: next_id,
            category_id,
            area,
        });
        next_id += 1;
    }

    // Second pass: fill surviving stuff pixels.
    for (i, slot) in raster.iter_mut().enumerate() {
        if *slot != 0 || scene.assignments()[i].is_some() {
            continue;
        }
        let label = semantic.labels()[i];
        if let Some(&segment) = segment_of_stuff.get(&label) {
            *slot = segment;
        }
    }

    let mut segments = instance_segments;
    segments.extend(stuff_segments);
    PanopticMap::new(width, height, raster, segments)
}
