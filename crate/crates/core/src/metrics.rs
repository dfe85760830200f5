//! Panoptic quality metrics: segment matching, the PQ/SQ/RQ family, and
//! stuff mIoU.
//!
//! Matching follows the standard panoptic protocol: a predicted and a ground
//! truth segment of the same category match when their IoU strictly exceeds
//! 0.5, with ground-truth void pixels excluded from the union. The > 0.5
//! rule makes matches provably unique in both directions — the matcher still
//! asserts that, so a violation surfaces as an internal error instead of a
//! silently wrong score.
//!
//! Scores pool *dataset-wide*: true/false positives, false negatives, and
//! matched-IoU sums accumulate per category across all images first, and
//! only then turn into per-category quality numbers, which average into the
//! overall / things / stuff figures.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mask::{CategoryTable, PanopticMap, SemanticMap, VOID_CATEGORY, VOID_SEGMENT};

// ── Matching ────────────────────────────────────────────────────────────────

/// One matched (true positive) segment pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchedPair {
    pub category_id: u32,
    pub pred_segment: u32,
    pub gt_segment: u32,
    pub iou: f64,
}

/// Per-image matching outcome: true positives plus the leftover predicted
/// (false positive) and ground truth (false negative) segments, each tagged
/// with its category.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MatchResult {
    pub matched: Vec<MatchedPair>,
    /// `(category_id, pred_segment)` — predictions matching nothing.
    /// Predictions mostly covering ground-truth void are *not* listed; they
    /// are discarded before false-positive counting.
    pub unmatched_pred: Vec<(u32, u32)>,
    /// `(category_id, gt_segment)` — ground truth segments left unmatched.
    pub unmatched_gt: Vec<(u32, u32)>,
}

/// Matches predicted against ground truth segments for one image.
///
/// Both maps must share dimensions. Segments match when categories agree and
/// IoU > 0.5, where the union excludes the prediction's overlap with ground
/// truth void. Unmatched predictions with more than half their area on
/// ground-truth void are dropped entirely.
pub fn match_segments(pred: &PanopticMap, gt: &PanopticMap) -> Result<MatchResult> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(Error::DimensionMismatch {
            expected_w: gt.width(),
            expected_h: gt.height(),
            got_w: pred.width(),
            got_h: pred.height(),
        });
    }

    // Pairwise pixel intersections, void included on both sides.
    let mut intersections: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    for (&p, &g) in pred.segment_ids().iter().zip(gt.segment_ids()) {
        *intersections.entry((p, g)).or_insert(0) += 1;
    }

    let mut matched = Vec::new();
    let mut matched_pred: BTreeSet<u32> = BTreeSet::new();
    let mut matched_gt: BTreeSet<u32> = BTreeSet::new();
    for (&(p, g), &inter) in &intersections {
        if p == VOID_SEGMENT || g == VOID_SEGMENT {
            continue;
        }
        let pred_info = pred.segment(p).ok_or_else(|| {
            Error::Internal(format!("pred raster segment {p} missing from table"))
        })?;
        let gt_info = gt
            .segment(g)
            .ok_or_else(|| Error::Internal(format!("gt raster segment {g} missing from table")))?;
        if pred_info.category_id != gt_info.category_id {
            continue;
        }
        let void_overlap = intersections.get(&(p, VOID_SEGMENT)).copied().unwrap_or(0);
        let union = pred_info.area + gt_info.area - inter - void_overlap;
        let iou = inter as f64 / union as f64;
        if iou > 0.5 {
            if !matched_pred.insert(p) || !matched_gt.insert(g) {
                return Err(Error::Internal(format!(
                    "segment matched twice (pred {p}, gt {g}); IoU > 0.5 should forbid this"
                )));
            }
            matched.push(MatchedPair {
                category_id: pred_info.category_id,
                pred_segment: p,
                gt_segment: g,
                iou,
            });
        }
    }

    let mut unmatched_pred = Vec::new();
    for info in pred.segments() {
        if matched_pred.contains(&info.id) {
            continue;
        }
        // Predictions mostly explained by ground-truth void are neither
        // right nor wrong: the region simply is not annotated.
        let void_overlap = intersections
            .get(&(info.id, VOID_SEGMENT))
            .copied()
            .unwrap_or(0);
        if void_overlap * 2 > info.area {
            continue;
        }
        unmatched_pred.push((info.category_id, info.id));
    }
    let unmatched_gt = gt
        .segments()
        .iter()
        .filter(|info| !matched_gt.contains(&info.id))
        .map(|info| (info.category_id, info.id))
        .collect();

    Ok(MatchResult {
        matched,
        unmatched_pred,
        unmatched_gt,
    })
}

// ── PQ ──────────────────────────────────────────────────────────────────────

/// Averaged quality over one group of categories.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PqStats {
    pub pq: f64,
    pub sq: f64,
    pub rq: f64,
    /// Number of categories the average runs over.
    pub categories: usize,
}

/// Pooled counts and quality for a single category.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryPq {
    pub category_id: u32,
    pub name: String,
    pub is_thing: bool,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub iou_sum: f64,
    pub pq: f64,
    pub sq: f64,
    pub rq: f64,
}

/// The full evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PqReport {
    pub all: PqStats,
    pub things: PqStats,
    pub stuff: PqStats,
    /// Mean IoU over ground-truth-present stuff categories, when a semantic
    /// comparison was run alongside the panoptic one.
    pub miou_stuff: Option<f64>,
    /// Per-category rows in ascending category id order; categories with no
    /// pooled counts at all are omitted.
    pub per_category: Vec<CategoryPq>,
}

impl PqReport {
    /// Human-readable summary in percent.
    pub fn text(&self) -> String {
        let row = |name: &str, s: &PqStats| {
            format!(
                "{:<12} {:>6.1} {:>6.1} {:>6.1} {:>6}\n",
                name,
                s.pq * 100.0,
                s.sq * 100.0,
                s.rq * 100.0,
                s.categories
            )
        };
        let mut out = String::new();
        out.push_str(&format!(
            "{:<12} {:>6} {:>6} {:>6} {:>6}\n",
            "", "PQ", "SQ", "RQ", "N"
        ));
        out.push_str(&row("all", &self.all));
        out.push_str(&row("things", &self.things));
        out.push_str(&row("stuff", &self.stuff));
        if let Some(miou) = self.miou_stuff {
            out.push_str(&format!("{:<12} {:>6.1}\n", "stuff mIoU", miou * 100.0));
        }
        out
    }
}

#[derive(Default)]
struct CategoryCounts {
    tp: u64,
    fp: u64,
    fn_: u64,
    iou_sum: f64,
}

/// Pools per-image match results dataset-wide and computes PQ, SQ, and RQ
/// per category and averaged over all / thing / stuff categories. Categories
/// without any pooled counts do not participate in the averages.
pub fn compute_pq(results: &[MatchResult], categories: &CategoryTable) -> Result<PqReport> {
    fn touch<'a>(
        counts: &'a mut BTreeMap<u32, CategoryCounts>,
        categories: &CategoryTable,
        category_id: u32,
    ) -> Result<&'a mut CategoryCounts> {
        if !categories.contains(category_id) {
            return Err(Error::UnknownCategory { id: category_id });
        }
        Ok(counts.entry(category_id).or_default())
    }
    let mut counts: BTreeMap<u32, CategoryCounts> = BTreeMap::new();
    for result in results {
        for pair in &result.matched {
            let c = touch(&mut counts, categories, pair.category_id)?;
            c.tp += 1;
            c.iou_sum += pair.iou;
        }
        for &(category_id, _) in &result.unmatched_pred {
            touch(&mut counts, categories, category_id)?.fp += 1;
        }
        for &(category_id, _) in &result.unmatched_gt {
            touch(&mut counts, categories, category_id)?.fn_ += 1;
        }
    }

    let mut per_category = Vec::new();
    for (&category_id, c) in &counts {
        if c.tp + c.fp + c.fn_ == 0 {
            continue;
        }
        let info = categories
            .get(category_id)
            .expect("checked during pooling");
        let denom = c.tp as f64 + 0.5 * c.fp as f64 + 0.5 * c.fn_ as f64;
        let pq = c.iou_sum / denom;
        let sq = if c.tp > 0 {
            c.iou_sum / c.tp as f64
        } else {
            0.0
        };
        let rq = c.tp as f64 / denom;
        per_category.push(CategoryPq {
            category_id,
            name: info.name.clone(),
            is_thing: info.is_thing,
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
            iou_sum: c.iou_sum,
            pq,
            sq,
            rq,
        });
    }

    let average = |rows: &[&CategoryPq]| -> PqStats {
        if rows.is_empty() {
            return PqStats::default();
        }
        let n = rows.len() as f64;
        PqStats {
            pq: rows.iter().map(|r| r.pq).sum::<f64>() / n,
            sq: rows.iter().map(|r| r.sq).sum::<f64>() / n,
            rq: rows.iter().map(|r| r.rq).sum::<f64>() / n,
            categories: rows.len(),
        }
    };
    let all: Vec<&CategoryPq> = per_category.iter().collect();
    let things: Vec<&CategoryPq> = per_category.iter().filter(|r| r.is_thing).collect();
    let stuff: Vec<&CategoryPq> = per_category.iter().filter(|r| !r.is_thing).collect();

    Ok(PqReport {
        all: average(&all),
        things: average(&things),
        stuff: average(&stuff),
        miou_stuff: None,
        per_category,
    })
}

// ── Stuff mIoU ──────────────────────────────────────────────────────────────

/// Pools per-stuff-category pixel intersections and unions across images.
///
/// Pixels whose ground truth is void are ignored entirely. The mean runs
/// over stuff categories present in the pooled ground truth.
pub struct StuffIouAccumulator {
    categories: CategoryTable,
    inter: BTreeMap<u32, u64>,
    union: BTreeMap<u32, u64>,
    gt_present: BTreeSet<u32>,
}

impl StuffIouAccumulator {
    pub fn new(categories: CategoryTable) -> Self {
        Self {
            categories,
            inter: BTreeMap::new(),
            union: BTreeMap::new(),
            gt_present: BTreeSet::new(),
        }
    }

    /// Accumulates one image pair. Both maps must share dimensions and carry
    /// the accumulator's category table.
    pub fn add(&mut self, pred: &SemanticMap, gt: &SemanticMap) -> Result<()> {
        if pred.width() != gt.width() || pred.height() != gt.height() {
            return Err(Error::DimensionMismatch {
                expected_w: gt.width(),
                expected_h: gt.height(),
                got_w: pred.width(),
                got_h: pred.height(),
            });
        }
        for map in [pred, gt] {
            if map.categories() != &self.categories {
                return Err(Error::CategoryTableMismatch {
                    reason: "semantic maps must share the evaluation vocabulary".into(),
                });
            }
        }
        for (&p, &g) in pred.labels().iter().zip(gt.labels()) {
            if g == VOID_CATEGORY {
                continue; // unannotated: never counted for or against
            }
            let p_stuff = self.categories.is_stuff(p);
            let g_stuff = self.categories.is_stuff(g);
            if g_stuff {
                self.gt_present.insert(g);
            }
            if p_stuff && p == g {
                *self.inter.entry(p).or_insert(0) += 1;
                *self.union.entry(p).or_insert(0) += 1;
            } else {
                if p_stuff {
                    *self.union.entry(p).or_insert(0) += 1;
                }
                if g_stuff {
                    *self.union.entry(g).or_insert(0) += 1;
                }
            }
        }
        Ok(())
    }

    /// Mean IoU over ground-truth-present stuff categories, or `None` when
    /// the pooled ground truth contains no stuff at all.
    pub fn mean(&self) -> Option<f64> {
        if self.gt_present.is_empty() {
            return None;
        }
        let sum: f64 = self
            .gt_present
            .iter()
            .map(|c| {
                let inter = self.inter.get(c).copied().unwrap_or(0) as f64;
                let union = self.union.get(c).copied().unwrap_or(0) as f64;
                inter / union // present ⇒ union ≥ gt pixel count > 0
            })
            .sum();
        Some(sum / self.gt_present.len() as f64)
    }
}

/// Single-pair convenience wrapper around [`StuffIouAccumulator`].
pub fn compute_miou_stuff(pred: &SemanticMap, gt: &SemanticMap) -> Result<Option<f64>> {
    let mut acc = StuffIouAccumulator::new(gt.categories().clone());
    acc.add(pred, gt)?;
    Ok(acc.mean())
}
