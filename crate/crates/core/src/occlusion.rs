//! Occlusion handling: from raw instance candidates to a per-pixel ownership
//! map, using nothing but mask geometry and RGB appearance.
//!
//! The stages, in pipeline order:
//!
//! 1. [`filter_and_nms`] drops low-scoring candidates and suppresses
//!    duplicates by class-agnostic mask IoU.
//! 2. [`find_occluded_pairs`] flags every surviving pair whose overlap
//!    exceeds a fraction of either member's area.
//! 3. [`resolve_scene`] decides each pair by appearance — the instance whose
//!    mean RGB is closer (by cosine) to the overlap's pixels claims it —
//!    working through pairs in descending pair-score order, keeping the
//!    winner→loser relation graph acyclic by setting contradictory pairs
//!    aside, and finally removing instances that retain at most half of
//!    their mask.
//!
//! Everything is deterministic: every ordering has a total tie-break
//! (ultimately by instance id) and no step depends on iteration order of a
//! hash map or on thread scheduling.

use crate::error::{Error, Result};
use crate::mask::{BinaryMask, RgbImage};

// ── Inputs ──────────────────────────────────────────────────────────────────

/// One instance candidate: a mask, a confidence score, and a thing category.
#[derive(Debug, Clone, PartialEq)]
pub struct InstancePrediction {
    pub id: u32,
    pub mask: BinaryMask,
    pub score: f32,
    pub category_id: u32,
}

impl InstancePrediction {
    /// Validates the score range and rejects empty masks.
    pub fn new(id: u32, mask: BinaryMask, score: f32, category_id: u32) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::ScoreRange { score });
        }
        if mask.area() == 0 {
            return Err(Error::EmptyMask { id });
        }
        Ok(Self {
            id,
            mask,
            score,
            category_id,
        })
    }
}

/// Thresholds for the occlusion stages. The defaults are the operating point
/// the whole pipeline is tuned around; every CLI flag maps onto one field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcclusionConfig {
    /// Candidates must score strictly above this to survive filtering.
    pub score_floor: f32,
    /// Suppress a candidate when its mask IoU with a kept one strictly
    /// exceeds this.
    pub nms_iou: f32,
    /// A pair is occluded when the overlap strictly exceeds this fraction of
    /// either member's area.
    pub overlap_ratio: f32,
    /// Remove an instance once it retains at most this fraction of its mask.
    pub removal_ratio: f32,
}

impl Default for OcclusionConfig {
    fn default() -> Self {
        Self {
            score_floor: 0.6,
            nms_iou: 0.5,
            overlap_ratio: 0.2,
            removal_ratio: 0.5,
        }
    }
}

// ── Outputs ─────────────────────────────────────────────────────────────────

/// An overlapping pair flagged for resolution. `a` and `b` index the
/// instance slice handed to [`find_occluded_pairs`], with `a < b`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccludedPair {
    pub a: usize,
    pub b: usize,
    /// The shared pixels (intersection of the two masks).
    pub overlap: BinaryMask,
    /// The higher of the two member scores; pairs are resolved in descending
    /// order of this.
    pub pair_score: f32,
}

/// Score and category snapshot of one surviving instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceSummary {
    pub id: u32,
    pub category_id: u32,
    pub score: f32,
}

/// The result of resolving one scene: per-pixel ownership plus the decisions
/// that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedScene {
    width: usize,
    height: usize,
    /// Row-major owner per pixel, by instance id; `None` where no surviving
    /// instance claims the pixel.
    assignments: Vec<Option<u32>>,
    /// Surviving instances, in input order.
    kept: Vec<InstanceSummary>,
    /// Ids of instances removed for retaining too little of their mask.
    removed: Vec<u32>,
    /// Resolved occlusion relations as (winner id, loser id), in decision
    /// order. Always acyclic.
    relations: Vec<(u32, u32)>,
    /// Pairs whose decision would have closed a cycle, as (id, id) with the
    /// lower-indexed member first, in decision order.
    set_aside: Vec<(u32, u32)>,
}

impl ResolvedScene {
    /// An empty scene with no instances and no owned pixels.
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            assignments: vec![None; width * height],
            kept: Vec::new(),
            removed: Vec::new(),
            relations: Vec::new(),
            set_aside: Vec::new(),
        }
    }

    /// Builds a scene directly from an ownership raster and instance
    /// summaries, for callers that obtained assignments elsewhere (tests,
    /// decompositions of existing panoptic maps). The decision logs start
    /// empty.
    pub fn from_parts(
        width: usize,
        height: usize,
        assignments: Vec<Option<u32>>,
        kept: Vec<InstanceSummary>,
    ) -> Result<Self> {
        if assignments.len() != width * height {
            return Err(Error::DataLength {
                expected: width * height,
                got: assignments.len(),
            });
        }
        let mut ids: Vec<u32> = kept.iter().map(|s| s.id).collect();
        ids.sort_unstable();
        for pair in ids.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::DuplicateId { id: pair[0] });
            }
        }
        Ok(Self {
            width,
            height,
            assignments,
            kept,
            removed: Vec::new(),
            relations: Vec::new(),
            set_aside: Vec::new(),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Owner of pixel `(x, y)`, by instance id.
    pub fn owner(&self, x: usize, y: usize) -> Option<u32> {
        self.assignments[y * self.width + x]
    }

    /// Row-major per-pixel owners.
    pub fn assignments(&self) -> &[Option<u32>] {
        &self.assignments
    }

    pub fn kept(&self) -> &[InstanceSummary] {
        &self.kept
    }

    pub fn removed(&self) -> &[u32] {
        &self.removed
    }

    pub fn relations(&self) -> &[(u32, u32)] {
        &self.relations
    }

    pub fn set_aside(&self) -> &[(u32, u32)] {
        &self.set_aside
    }

    /// Pixels owned by the given instance id, as a mask.
    pub fn owned_mask(&self, id: u32) -> BinaryMask {
        let mut mask = BinaryMask::new(self.width, self.height);
        for (i, owner) in self.assignments.iter().enumerate() {
            if *owner == Some(id) {
                mask.set(i % self.width, i / self.width, true);
            }
        }
        mask
    }
}

// ── Filtering and NMS ───────────────────────────────────────────────────────

fn check_instances(instances: &[InstancePrediction]) -> Result<()> {
    let mut ids: Vec<u32> = instances.iter().map(|p| p.id).collect();
    ids.sort_unstable();
    for pair in ids.windows(2) {
        if pair[0] == pair[1] {
            return Err(Error::DuplicateId { id: pair[0] });
        }
    }
    if let Some(first) = instances.first() {
        for p in &instances[1..] {
            if p.mask.width() != first.mask.width() || p.mask.height() != first.mask.height() {
                return Err(Error::DimensionMismatch {
                    expected_w: first.mask.width(),
                    expected_h: first.mask.height(),
                    got_w: p.mask.width(),
                    got_h: p.mask.height(),
                });
            }
        }
    }
    Ok(())
}

/// Indices sorted by descending score, ties by ascending id.
fn by_descending_score(instances: &[InstancePrediction]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..instances.len()).collect();
    order.sort_by(|&i, &j| {
        instances[j]
            .score
            .total_cmp(&instances[i].score)
            .then(instances[i].id.cmp(&instances[j].id))
    });
    order
}

/// Drops candidates scoring at or below `score_floor`, then greedily
/// suppresses by class-agnostic mask IoU: walking the survivors in
/// descending score order, a candidate is dropped when its IoU with an
/// already kept one strictly exceeds `nms_iou`.
///
/// Returns the kept instances in descending score order (ties by id).
pub fn filter_and_nms(
    candidates: &[InstancePrediction],
    config: &OcclusionConfig,
) -> Result<Vec<InstancePrediction>> {
    check_instances(candidates)?;
    let order = by_descending_score(candidates);
    let mut kept: Vec<InstancePrediction> = Vec::new();
    for idx in order {
        let candidate = &candidates[idx];
        if candidate.score <= config.score_floor {
            continue; // sorted by score: everything after is below too
        }
        let mut suppressed = false;
        for survivor in &kept {
            if candidate.mask.iou(&survivor.mask)? > config.nms_iou as f64 {
                suppressed = true;
                break;
            }
        }
        if !suppressed {
            kept.push(candidate.clone());
        }
    }
    Ok(kept)
}

// ── Pair detection ──────────────────────────────────────────────────────────

/// Flags every pair whose overlap strictly exceeds `overlap_ratio` of either
/// member's area. Pairs come back in ascending `(a, b)` index order.
pub fn find_occluded_pairs(
    instances: &[InstancePrediction],
    overlap_ratio: f32,
) -> Result<Vec<OccludedPair>> {
    check_instances(instances)?;
    let mut pairs = Vec::new();
    for a in 0..instances.len() {
        for b in a + 1..instances.len() {
            let overlap = instances[a].mask.intersection(&instances[b].mask)?;
            let inter = overlap.area() as f64;
            if inter == 0.0 {
                continue;
            }
            let ratio = overlap_ratio as f64;
            let area_a = instances[a].mask.area() as f64;
            let area_b = instances[b].mask.area() as f64;
            if inter > ratio * area_a || inter > ratio * area_b {
                pairs.push(OccludedPair {
                    a,
                    b,
                    overlap,
                    pair_score: instances[a].score.max(instances[b].score),
                });
            }
        }
    }
    Ok(pairs)
}

// ── Appearance ──────────────────────────────────────────────────────────────

fn mean_rgb(image: &RgbImage, mask: &BinaryMask) -> Option<[f64; 3]> {
    let mut sum = [0.0f64; 3];
    let mut count = 0u64;
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if mask.get(x, y) {
                let [r, g, b] = image.pixel(x, y);
                sum[0] += r as f64;
                sum[1] += g as f64;
                sum[2] += b as f64;
                count += 1;
            }
        }
    }
    if count == 0 {
        return None;
    }
    Some([
        sum[0] / count as f64,
        sum[1] / count as f64,
        sum[2] / count as f64,
    ])
}

/// Cosine similarity in RGB space. Two zero vectors count as identical (1);
/// a zero vector against a nonzero one counts as dissimilar (0).
fn cosine(p: [f64; 3], q: [f64; 3]) -> f64 {
    let np = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    let nq = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
    match (np == 0.0, nq == 0.0) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        (false, false) => {
            let dot = p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
            (dot / (np * nq)).clamp(-1.0, 1.0)
        }
    }
}

/// Mean similarity of the pixels in `pixels` to the mean color of `region`:
/// for each set pixel, the cosine between its RGB and the region prototype,
/// averaged over the set.
///
/// Cosine compares color *direction*, so uniform brightness changes cancel
/// out. Both masks must be nonempty.
pub fn appearance_similarity(
    image: &RgbImage,
    pixels: &BinaryMask,
    region: &BinaryMask,
) -> Result<f64> {
    if pixels.width() != image.width() || pixels.height() != image.height() {
        return Err(Error::DimensionMismatch {
            expected_w: image.width(),
            expected_h: image.height(),
            got_w: pixels.width(),
            got_h: pixels.height(),
        });
    }
    if region.width() != image.width() || region.height() != image.height() {
        return Err(Error::DimensionMismatch {
            expected_w: image.width(),
            expected_h: image.height(),
            got_w: region.width(),
            got_h: region.height(),
        });
    }
    let prototype = mean_rgb(image, region).ok_or(Error::EmptyRegion)?;
    let mut sum = 0.0f64;
    let mut count = 0u64;
    for y in 0..pixels.height() {
        for x in 0..pixels.width() {
            if pixels.get(x, y) {
                let [r, g, b] = image.pixel(x, y);
                sum += cosine([r as f64, g as f64, b as f64], prototype);
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::EmptyRegion);
    }
    Ok(sum / count as f64)
}

// ── Scene resolution ────────────────────────────────────────────────────────

/// True when `to` is reachable from `from` in the winner→loser digraph.
fn reachable(edges: &[Vec<usize>], from: usize, to: usize) -> bool {
    if from == to {
        return true;
    }
    let mut seen = vec![false; edges.len()];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(node) = stack.pop() {
        for &next in &edges[node] {
            if next == to {
                return true;
            }
            if !seen[next] {
                seen[next] = true;
                stack.push(next);
            }
        }
    }
    false
}

/// Resolves a scene of post-NMS instances into per-pixel ownership.
///
/// Stages:
///
/// 1. Every instance gets an appearance prototype: the mean RGB over the
///    pixels only it claims, falling back to its whole mask when every pixel
///    is contested.
/// 2. Occluded pairs are decided in descending pair-score order (ties broken
///    by ascending index pair): the member whose prototype is more similar
///    to the overlap wins; similarity ties go to the higher score, then the
///    lower id. The winner→loser relation is recorded unless it would close
///    a cycle with earlier decisions, in which case the pair is set aside.
///    Overlap pixels not yet assigned by an earlier decision go to the
///    winner.
/// 3. Remaining pixels go to their sole claimant, or — for contested pixels
///    left open by set-asides or below-threshold overlaps — to the claimant
///    with the highest score (ties to the lower id).
/// 4. While any instance retains at most `removal_ratio` of its mask, the
///    worst-retained one (ties to the lower id) is removed and its pixels
///    are re-resolved among the survivors by the same rules: first matching
///    recorded relation, then highest score.
///
/// The instances must share the image's dimensions and carry unique ids;
/// both are validated by the upstream stages and asserted here.
pub fn resolve_scene(
    image: &RgbImage,
    instances: &[InstancePrediction],
    config: &OcclusionConfig,
) -> ResolvedScene {
    let width = image.width();
    let height = image.height();
    let n = instances.len();
    if n == 0 {
        return ResolvedScene::empty(width, height);
    }
    check_instances(instances).expect("resolve_scene requires consistent instances");
    for p in instances {
        assert!(
            p.mask.width() == width && p.mask.height() == height,
            "instance masks must match the image dimensions"
        );
    }

    // How many instances claim each pixel.
    let mut claims = vec![0u32; width * height];
    for p in instances {
        for (i, &bit) in p.mask.bits().iter().enumerate() {
            claims[i] += bit as u32;
        }
    }

    // Appearance prototypes over uncontested pixels (whole mask fallback).
    let prototypes: Vec<[f64; 3]> = instances
        .iter()
        .map(|p| {
            let mut own = BinaryMask::new(width, height);
            for y in 0..height {
                for x in 0..width {
                    if p.mask.get(x, y) && claims[y * width + x] == 1 {
                        own.set(x, y, true);
                    }
                }
            }
            mean_rgb(image, &own)
                .or_else(|| mean_rgb(image, &p.mask))
                .expect("instance masks are nonempty")
        })
        .collect();

    // Decide pairs in descending pair-score order.
    let mut pairs = find_occluded_pairs(instances, config.overlap_ratio)
        .expect("instances already validated");
    pairs.sort_by(|p, q| {
        q.pair_score
            .total_cmp(&p.pair_score)
            .then((p.a, p.b).cmp(&(q.a, q.b)))
    });

    let mut assignments: Vec<Option<usize>> = vec![None; width * height];
    let mut edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut relations: Vec<(usize, usize)> = Vec::new();
    let mut set_aside: Vec<(usize, usize)> = Vec::new();
    for pair in &pairs {
        let mut sim_a = 0.0f64;
        let mut sim_b = 0.0f64;
        let mut count = 0u64;
        for y in 0..height {
            for x in 0..width {
                if pair.overlap.get(x, y) {
                    let [r, g, b] = image.pixel(x, y);
                    let rgb = [r as f64, g as f64, b as f64];
                    sim_a += cosine(rgb, prototypes[pair.a]);
                    sim_b += cosine(rgb, prototypes[pair.b]);
                    count += 1;
                }
            }
        }
        debug_assert!(count > 0, "occluded pairs have nonempty overlaps");
        let (winner, loser) = if sim_a > sim_b {
            (pair.a, pair.b)
        } else if sim_b > sim_a {
            (pair.b, pair.a)
        } else {
            // Appearance tie: higher score wins, then the lower id.
            let (pa, pb) = (&instances[pair.a], &instances[pair.b]);
            match pa.score.total_cmp(&pb.score) {
                std::cmp::Ordering::Greater => (pair.a, pair.b),
                std::cmp::Ordering::Less => (pair.b, pair.a),
                std::cmp::Ordering::Equal => {
                    if pa.id <= pb.id {
                        (pair.a, pair.b)
                    } else {
                        (pair.b, pair.a)
                    }
                }
            }
        };
        // A winner→loser edge closes a cycle exactly when the winner is
        // already reachable from the loser.
        if reachable(&edges, loser, winner) {
            set_aside.push((pair.a, pair.b));
            continue;
        }
        edges[winner].push(loser);
        relations.push((winner, loser));
        for (i, &bit) in pair.overlap.bits().iter().enumerate() {
            if bit && assignments[i].is_none() {
                assignments[i] = Some(winner);
            }
        }
    }

    // Close out the map: sole claimants own their pixels; contested pixels
    // not settled by a relation go to the highest-scoring claimant.
    let score_order = by_descending_score(instances);
    let mut best: Vec<Option<usize>> = vec![None; width * height];
    for &idx in &score_order {
        for (i, &bit) in instances[idx].mask.bits().iter().enumerate() {
            if bit && best[i].is_none() {
                best[i] = Some(idx);
            }
        }
    }
    for i in 0..assignments.len() {
        if claims[i] == 1 {
            assignments[i] = best[i];
        } else if claims[i] > 1 && assignments[i].is_none() {
            assignments[i] = best[i];
        }
    }

    // Removal cascade: drop instances that retain at most `removal_ratio`
    // of their mask, worst first, re-resolving their pixels each time.
    let mut alive = vec![true; n];
    let mut removed: Vec<usize> = Vec::new();
    loop {
        let mut owned = vec![0usize; n];
        for owner in assignments.iter().flatten() {
            owned[*owner] += 1;
        }
        let mut worst: Option<(f64, u32, usize)> = None;
        for idx in 0..n {
            if !alive[idx] {
                continue;
            }
            let retention = owned[idx] as f64 / instances[idx].mask.area() as f64;
            if retention <= config.removal_ratio as f64 {
                let key = (retention, instances[idx].id, idx);
                let better = match &worst {
                    None => true,
                    Some((r, id, _)) => retention < *r || (retention == *r && key.1 < *id),
                };
                if better {
                    worst = Some(key);
                }
            }
        }
        let Some((_, _, worst_idx)) = worst else {
            break;
        };
        alive[worst_idx] = false;
        removed.push(worst_idx);
        for i in 0..assignments.len() {
            if assignments[i] != Some(worst_idx) {
                continue;
            }
            assignments[i] = None;
            // First recorded relation whose two members both survive and
            // both claim the pixel wins it back...
            let x = i % width;
            let y = i / width;
            for &(w, l) in &relations {
                if alive[w] && alive[l] && instances[w].mask.get(x, y) && instances[l].mask.get(x, y)
                {
                    assignments[i] = Some(w);
                    break;
                }
            }
            // ...otherwise the best-scoring surviving claimant does.
            if assignments[i].is_none() {
                for &idx in &score_order {
                    if alive[idx] && instances[idx].mask.get(x, y) {
                        assignments[i] = Some(idx);
                        break;
                    }
                }
            }
        }
    }

    ResolvedScene {
        width,
        height,
        assignments: assignments
            .iter()
            .map(|owner| owner.map(|idx| instances[idx].id))
            .collect(),
        kept: instances
            .iter()
            .enumerate()
            .filter(|(idx, _)| alive[*idx])
            .map(|(_, p)| InstanceSummary {
                id: p.id,
                category_id: p.category_id,
                score: p.score,
            })
            .collect(),
        removed: removed.iter().map(|&idx| instances[idx].id).collect(),
        relations: relations
            .iter()
            .map(|&(w, l)| (instances[w].id, instances[l].id))
            .collect(),
        set_aside: set_aside
            .iter()
            .map(|&(a, b)| (instances[a].id, instances[b].id))
            .collect(),
    }
}
