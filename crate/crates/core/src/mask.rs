//! Rasters, binary masks, boxes, and the panoptic map representation.
//!
//! Everything downstream (kernels, occlusion resolution, fusion, metrics)
//! builds on the types in this module. Conventions that hold everywhere:
//!
//! * Pixel `(x, y)` in an `H x W` raster covers the unit square whose center
//!   is at continuous coordinates `(x + 0.5, y + 0.5)`.
//! * Rasters are stored row-major; run-length encodings are column-major and
//!   always start with a (possibly zero-length) background run.
//! * Category id 0 and segment id 0 are reserved for void and never appear in
//!   category tables or segment tables.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Reserved category id for unlabeled pixels.
pub const VOID_CATEGORY: u32 = 0;

/// Reserved segment id for unassigned pixels in a panoptic map.
pub const VOID_SEGMENT: u32 = 0;

// ── RGB images ──────────────────────────────────────────────────────────────

/// An 8-bit RGB raster, row-major, three bytes per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    /// Builds an image from interleaved RGB bytes (`width * height * 3` of them).
    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        let expected = width * height * 3;
        if data.len() != expected {
            return Err(Error::DataLength {
                expected,
                got: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// A solid-color image.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&rgb);
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Interleaved RGB bytes, row-major.
    pub fn raw(&self) -> &[u8] {
        &self.data
    }
}

// ── Binary masks ────────────────────────────────────────────────────────────

/// A per-pixel boolean raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    /// An all-background mask.
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    /// Builds a mask from row-major booleans (`width * height` of them).
    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        let expected = width * height;
        if bits.len() != expected {
            return Err(Error::DataLength {
                expected,
                got: bits.len(),
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    /// Row-major booleans.
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Number of foreground pixels.
    pub fn area(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    fn check_dims(&self, other: &BinaryMask) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch {
                expected_w: self.width,
                expected_h: self.height,
                got_w: other.width,
                got_h: other.height,
            });
        }
        Ok(())
    }

    /// Foreground pixels shared with `other`.
    pub fn intersection_area(&self, other: &BinaryMask) -> Result<usize> {
        self.check_dims(other)?;
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(&a, &b)| a && b)
            .count())
    }

    /// The intersection as a mask of its own.
    pub fn intersection(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.check_dims(other)?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(&a, &b)| a && b)
            .collect();
        Ok(BinaryMask {
            width: self.width,
            height: self.height,
            bits,
        })
    }

    /// Intersection over union. Two empty masks have IoU 0 by convention.
    pub fn iou(&self, other: &BinaryMask) -> Result<f64> {
        self.check_dims(other)?;
        let mut inter = 0usize;
        let mut union = 0usize;
        for (&a, &b) in self.bits.iter().zip(&other.bits) {
            inter += (a && b) as usize;
            union += (a || b) as usize;
        }
        if union == 0 {
            return Ok(0.0);
        }
        Ok(inter as f64 / union as f64)
    }

    /// Tight bounding box of the foreground in continuous pixel coordinates,
    /// or `None` for an empty mask. Corners land on integer pixel edges.
    pub fn bounding_rect(&self) -> Option<Rect> {
        let mut min_x = usize::MAX;
        let mut min_y = usize::MAX;
        let mut max_x = 0usize;
        let mut max_y = 0usize;
        let mut any = false;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    any = true;
                    min_x = min_x.min(x);
                    min_y = min_y.min(y);
                    max_x = max_x.max(x);
                    max_y = max_y.max(y);
                }
            }
        }
        if !any {
            return None;
        }
        Some(Rect {
            x0: min_x as f32,
            y0: min_y as f32,
            x1: (max_x + 1) as f32,
            y1: (max_y + 1) as f32,
        })
    }

    /// Column-major run-length encoding starting with a background run.
    ///
    /// Runs alternate background/foreground; the first entry is 0 when the
    /// scan starts on a foreground pixel. An all-background `4x4` mask
    /// encodes to `[16]`, an all-foreground one to `[0, 16]`.
    pub fn to_rle(&self) -> Vec<u32> {
        let mut runs = Vec::new();
        let mut current = false; // encoding always starts in background
        let mut run = 0u32;
        for x in 0..self.width {
            for y in 0..self.height {
                let bit = self.get(x, y);
                if bit == current {
                    run += 1;
                } else {
                    runs.push(run);
                    current = bit;
                    run = 1;
                }
            }
        }
        runs.push(run);
        runs
    }

    /// Decodes a column-major run-length encoding produced by [`Self::to_rle`].
    ///
    /// The runs must cover the raster exactly.
    pub fn from_rle(width: usize, height: usize, runs: &[u32]) -> Result<Self> {
        let total: usize = runs.iter().map(|&r| r as usize).sum();
        if total != width * height {
            return Err(Error::RleCoverage {
                total,
                width,
                height,
            });
        }
        let mut mask = BinaryMask::new(width, height);
        let mut value = false;
        let mut cursor = 0usize; // column-major pixel index
        for &run in runs {
            if value {
                for i in cursor..cursor + run as usize {
                    let x = i / height.max(1);
                    let y = i % height.max(1);
                    mask.set(x, y, true);
                }
            }
            cursor += run as usize;
            value = !value;
        }
        Ok(mask)
    }
}

// ── Boxes ───────────────────────────────────────────────────────────────────

/// An axis-aligned box in continuous pixel coordinates, corners exclusive of
/// nothing: `x0 < x1`, `y0 < y1`. Pixel `(0, 0)` spans `[0, 1] x [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f32,
    pub y0: f32,
    pub x1: f32,
    pub y1: f32,
}

impl Rect {
    /// Validates that both sides are positive and all coordinates finite.
    pub fn new(x0: f32, y0: f32, x1: f32, y1: f32) -> Result<Self> {
        let finite = [x0, y0, x1, y1].iter().all(|v| v.is_finite());
        if !finite || x1 <= x0 || y1 <= y0 {
            return Err(Error::DegenerateBox { x0, y0, x1, y1 });
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    pub fn width(&self) -> f32 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f32 {
        self.y1 - self.y0
    }

    /// Clips the box to an `W x H` raster. Boxes that collapse to zero area
    /// under clipping are rejected.
    pub fn clamp_to(&self, width: usize, height: usize) -> Result<Rect> {
        let x0 = self.x0.max(0.0);
        let y0 = self.y0.max(0.0);
        let x1 = self.x1.min(width as f32);
        let y1 = self.y1.min(height as f32);
        Rect::new(x0, y0, x1, y1)
    }
}

// ── Categories ──────────────────────────────────────────────────────────────

/// One category in a dataset vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Category {
    pub id: u32,
    pub name: String,
    pub is_thing: bool,
}

/// The category vocabulary, stored sorted by id for deterministic iteration.
///
/// Id 0 is reserved for void and may not be declared.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryTable {
    entries: Vec<Category>,
}

impl CategoryTable {
    pub fn new(mut entries: Vec<Category>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyCategories);
        }
        entries.sort_by_key(|c| c.id);
        for pair in entries.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::BadCategory {
                    id: pair[0].id,
                    reason: "duplicate category id".into(),
                });
            }
        }
        if entries[0].id == VOID_CATEGORY {
            return Err(Error::BadCategory {
                id: VOID_CATEGORY,
                reason: "category id 0 is reserved for void".into(),
            });
        }
        Ok(Self { entries })
    }

    pub fn get(&self, id: u32) -> Option<&Category> {
        self.entries
            .binary_search_by_key(&id, |c| c.id)
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn contains(&self, id: u32) -> bool {
        self.get(id).is_some()
    }

    /// Whether `id` is declared and flagged as a thing (instance) category.
    pub fn is_thing(&self, id: u32) -> bool {
        self.get(id).map(|c| c.is_thing).unwrap_or(false)
    }

    /// Whether `id` is declared and flagged as a stuff category.
    pub fn is_stuff(&self, id: u32) -> bool {
        self.get(id).map(|c| !c.is_thing).unwrap_or(false)
    }

    /// Entries in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = &Category> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

// ── Semantic maps ───────────────────────────────────────────────────────────

/// Per-pixel category labels plus the vocabulary they come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    categories: CategoryTable,
}

impl SemanticMap {
    /// Builds a map and validates that every label is either void or declared
    /// in the table.
    pub fn new(
        width: usize,
        height: usize,
        labels: Vec<u32>,
        categories: CategoryTable,
    ) -> Result<Self> {
        let expected = width * height;
        if labels.len() != expected {
            return Err(Error::DataLength {
                expected,
                got: labels.len(),
            });
        }
        for &label in &labels {
            if label != VOID_CATEGORY && !categories.contains(label) {
                return Err(Error::UnknownCategory { id: label });
            }
        }
        Ok(Self {
            width,
            height,
            labels,
            categories,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn label(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// Row-major labels.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn categories(&self) -> &CategoryTable {
        &self.categories
    }
}

// ── Panoptic maps ───────────────────────────────────────────────────────────

/// Table entry for one segment of a panoptic map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentInfo {
    pub id: u32,
    pub category_id: u32,
    pub area: u64,
}

/// A panoptic segmentation: per-pixel segment ids plus a segment table.
///
/// Invariants, checked by [`PanopticMap::new`]:
/// * segment ids in the raster and the table are in bijection (void excluded),
/// * every table area equals the pixel count of its segment,
/// * segment ids are nonzero and unique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PanopticMap {
    width: usize,
    height: usize,
    segment_ids: Vec<u32>,
    segments: Vec<SegmentInfo>,
}

impl PanopticMap {
    /// Builds a map from a raster and a segment table, enforcing the
    /// raster/table bijection and per-segment area consistency.
    pub fn new(
        width: usize,
        height: usize,
        segment_ids: Vec<u32>,
        mut segments: Vec<SegmentInfo>,
    ) -> Result<Self> {
        let expected = width * height;
        if segment_ids.len() != expected {
            return Err(Error::DataLength {
                expected,
                got: segment_ids.len(),
            });
        }
        segments.sort_by_key(|s| s.id);
        for pair in segments.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::InconsistentPanoptic {
                    reason: format!("duplicate segment id {}", pair[0].id),
                });
            }
        }
        if segments.first().map(|s| s.id) == Some(VOID_SEGMENT) {
            return Err(Error::InconsistentPanoptic {
                reason: "segment id 0 is reserved for void".into(),
            });
        }

        let mut areas: BTreeMap<u32, u64> = BTreeMap::new();
        for &id in &segment_ids {
            if id != VOID_SEGMENT {
                *areas.entry(id).or_insert(0) += 1;
            }
        }
        for segment in &segments {
            match areas.remove(&segment.id) {
                Some(area) if area == segment.area => {}
                Some(area) => {
                    return Err(Error::InconsistentPanoptic {
                        reason: format!(
                            "segment {} covers {} pixels but declares area {}",
                            segment.id, area, segment.area
                        ),
                    });
                }
                None => {
                    return Err(Error::InconsistentPanoptic {
                        reason: format!("segment {} absent from the raster", segment.id),
                    });
                }
            }
        }
        if let Some((&id, _)) = areas.iter().next() {
            return Err(Error::InconsistentPanoptic {
                reason: format!("raster segment {id} missing from the table"),
            });
        }

        Ok(Self {
            width,
            height,
            segment_ids,
            segments,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn segment_id(&self, x: usize, y: usize) -> u32 {
        self.segment_ids[y * self.width + x]
    }

    /// Row-major segment ids; 0 is void.
    pub fn segment_ids(&self) -> &[u32] {
        &self.segment_ids
    }

    /// Segment table in ascending id order.
    pub fn segments(&self) -> &[SegmentInfo] {
        &self.segments
    }

    pub fn segment(&self, id: u32) -> Option<&SegmentInfo> {
        self.segments
            .binary_search_by_key(&id, |s| s.id)
            .ok()
            .map(|i| &self.segments[i])
    }

    /// Collapses the map to per-pixel category labels (void stays void).
    ///
    /// Fails if a segment references a category that `categories` does not
    /// declare.
    pub fn to_semantic(&self, categories: &CategoryTable) -> Result<SemanticMap> {
        let mut category_of: BTreeMap<u32, u32> = BTreeMap::new();
        for segment in &self.segments {
            if !categories.contains(segment.category_id) {
                return Err(Error::UnknownCategory {
                    id: segment.category_id,
                });
            }
            category_of.insert(segment.id, segment.category_id);
        }
        let labels = self
            .segment_ids
            .iter()
            .map(|&id| {
                if id == VOID_SEGMENT {
                    VOID_CATEGORY
                } else {
                    category_of[&id]
                }
            })
            .collect();
        SemanticMap::new(self.width, self.height, labels, categories.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask_from_rows(rows: &[&str]) -> BinaryMask {
        let height = rows.len();
        let width = rows[0].len();
        let mut mask = BinaryMask::new(width, height);
        for (y, row) in rows.iter().enumerate() {
            for (x, ch) in row.chars().enumerate() {
                mask.set(x, y, ch == '#');
            }
        }
        mask
    }

    #[test]
    fn iou_of_identical_masks_is_one() {
        let mask = mask_from_rows(&["##..", "##..", "....", "...."]);
        assert_eq!(mask.iou(&mask).unwrap(), 1.0);
    }

    #[test]
    fn iou_of_disjoint_masks_is_zero() {
        let a = mask_from_rows(&["##..", "....", "....", "...."]);
        let b = mask_from_rows(&["....", "....", "..##", "..##"]);
        assert_eq!(a.iou(&b).unwrap(), 0.0);
    }

    #[test]
    fn iou_of_half_overlapping_strips() {
        // a covers columns 0-2, b covers columns 1-3 on one row:
        // intersection 2, union 4.
        let a = mask_from_rows(&["###.", "....", "....", "...."]);
        let b = mask_from_rows(&[".###", "....", "....", "...."]);
        assert_eq!(a.iou(&b).unwrap(), 0.5);
    }

    #[test]
    fn iou_of_two_empty_masks_is_zero() {
        let a = BinaryMask::new(3, 3);
        let b = BinaryMask::new(3, 3);
        assert_eq!(a.iou(&b).unwrap(), 0.0);
    }

    #[test]
    fn iou_rejects_dimension_mismatch() {
        let a = BinaryMask::new(3, 3);
        let b = BinaryMask::new(4, 3);
        assert!(a.iou(&b).is_err());
    }

    #[test]
    fn intersection_area_counts_shared_pixels() {
        let a = mask_from_rows(&["###", "###", "..."]);
        let b = mask_from_rows(&["...", "###", "###"]);
        assert_eq!(a.intersection_area(&b).unwrap(), 3);
    }

    #[test]
    fn bounding_rect_is_tight() {
        let mask = mask_from_rows(&["....", ".##.", ".#..", "...."]);
        let rect = mask.bounding_rect().unwrap();
        assert_eq!((rect.x0, rect.y0, rect.x1, rect.y1), (1.0, 1.0, 3.0, 3.0));
        assert!(BinaryMask::new(4, 4).bounding_rect().is_none());
    }

    #[test]
    fn rle_of_empty_mask_is_single_run() {
        let mask = BinaryMask::new(4, 4);
        assert_eq!(mask.to_rle(), vec![16]);
    }

    #[test]
    fn rle_of_full_mask_starts_with_zero_run() {
        let mask = mask_from_rows(&["####", "####", "####", "####"]);
        assert_eq!(mask.to_rle(), vec![0, 16]);
    }

    #[test]
    fn rle_scans_column_major() {
        // Only pixel (x=0, y=1) set in a 3x2 mask: column-major order visits
        // (0,0), (0,1), (1,0), (1,1), (2,0), (2,1) so the encoding is 1 off,
        // 1 on, 4 off.
        let mask = mask_from_rows(&["...", "#.."]);
        assert_eq!(mask.to_rle(), vec![1, 1, 4]);
    }

    #[test]
    fn rle_round_trips_exhaustively_on_3x3() {
        for bits in 0u16..512 {
            let mask = BinaryMask::from_bits(
                3,
                3,
                (0..9).map(|i| bits >> i & 1 == 1).collect(),
            )
            .unwrap();
            let decoded = BinaryMask::from_rle(3, 3, &mask.to_rle()).unwrap();
            assert_eq!(mask, decoded, "bits {bits:#011b}");
        }
    }

    #[test]
    fn rle_rejects_wrong_total() {
        assert!(BinaryMask::from_rle(3, 3, &[8]).is_err());
        assert!(BinaryMask::from_rle(3, 3, &[10]).is_err());
    }

    #[test]
    fn rect_rejects_degenerate_boxes() {
        assert!(Rect::new(1.0, 1.0, 1.0, 4.0).is_err());
        assert!(Rect::new(1.0, 1.0, 0.5, 4.0).is_err());
        assert!(Rect::new(0.0, 0.0, f32::NAN, 1.0).is_err());
        assert!(Rect::new(0.0, 0.0, 4.0, 4.0).is_ok());
    }

    #[test]
    fn rect_clamp_clips_and_rejects_outside_boxes() {
        let rect = Rect::new(-2.0, 1.0, 6.0, 3.0).unwrap();
        let clamped = rect.clamp_to(4, 4).unwrap();
        assert_eq!(
            (clamped.x0, clamped.y0, clamped.x1, clamped.y1),
            (0.0, 1.0, 4.0, 3.0)
        );
        let outside = Rect::new(5.0, 0.0, 8.0, 2.0).unwrap();
        assert!(outside.clamp_to(4, 4).is_err());
    }

    #[test]
    fn category_table_rejects_void_and_duplicates() {
        let void = vec![Category {
            id: 0,
            name: "void".into(),
            is_thing: false,
        }];
        assert!(CategoryTable::new(void).is_err());
        let dup = vec![
            Category {
                id: 1,
                name: "a".into(),
                is_thing: true,
            },
            Category {
                id: 1,
                name: "b".into(),
                is_thing: false,
            },
        ];
        assert!(CategoryTable::new(dup).is_err());
        assert!(CategoryTable::new(Vec::new()).is_err());
    }

    #[test]
    fn semantic_map_rejects_undeclared_labels() {
        let table = CategoryTable::new(vec![Category {
            id: 7,
            name: "sky".into(),
            is_thing: false,
        }])
        .unwrap();
        assert!(SemanticMap::new(2, 1, vec![7, 0], table.clone()).is_ok());
        assert!(SemanticMap::new(2, 1, vec![7, 9], table).is_err());
    }

    #[test]
    fn panoptic_map_enforces_bijection_and_areas() {
        let ids = vec![1, 1, 0, 2];
        let ok = PanopticMap::new(
            2,
            2,
            ids.clone(),
            vec![
                SegmentInfo {
                    id: 1,
                    category_id: 3,
                    area: 2,
                },
                SegmentInfo {
                    id: 2,
                    category_id: 4,
                    area: 1,
                },
            ],
        );
        assert!(ok.is_ok());

        let bad_area = PanopticMap::new(
            2,
            2,
            ids.clone(),
            vec![
                SegmentInfo {
                    id: 1,
                    category_id: 3,
                    area: 3,
                },
                SegmentInfo {
                    id: 2,
                    category_id: 4,
                    area: 1,
                },
            ],
        );
        assert!(bad_area.is_err());

        let missing_row = PanopticMap::new(
            2,
            2,
            ids.clone(),
            vec![SegmentInfo {
                id: 1,
                category_id: 3,
                area: 2,
            }],
        );
        assert!(missing_row.is_err());

        let phantom_row = PanopticMap::new(
            2,
            2,
            ids,
            vec![
                SegmentInfo {
                    id: 1,
                    category_id: 3,
                    area: 2,
                },
                SegmentInfo {
                    id: 2,
                    category_id: 4,
                    area: 1,
                },
                SegmentInfo {
                    id: 9,
                    category_id: 4,
                    area: 0,
                },
            ],
        );
        assert!(phantom_row.is_err());
    }

    #[test]
    fn to_semantic_collapses_segments_to_categories() {
        let table = CategoryTable::new(vec![
            Category {
                id: 3,
                name: "car".into(),
                is_thing: true,
            },
            Category {
                id: 4,
                name: "road".into(),
                is_thing: false,
            },
        ])
        .unwrap();
        let map = PanopticMap::new(
            2,
            2,
            vec![1, 1, 0, 2],
            vec![
                SegmentInfo {
                    id: 1,
                    category_id: 3,
                    area: 2,
                },
                SegmentInfo {
                    id: 2,
                    category_id: 4,
                    area: 1,
                },
            ],
        )
        .unwrap();
        let semantic = map.to_semantic(&table).unwrap();
        assert_eq!(semantic.labels(), &[3, 3, 0, 4]);
    }
}
