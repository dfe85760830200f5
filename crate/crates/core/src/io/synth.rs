//! Synthetic scene generation for tests and fixtures.
//!
//! Scenes are flat-colored shapes stacked on a uniform background. Because
//! every surface has exactly one color and overlap pixels take the color of
//! the shape in front, the renderer knows the true occluder of every
//! overlapping pair — which is precisely the ground truth the occlusion
//! resolver is supposed to recover from appearance alone.
//!
//! A [`SceneSpec`] lists objects front-to-back; [`render`] turns it into an
//! RGB image, full (unoccluded) instance masks, a visible-region panoptic
//! ground truth, a semantic ground truth, and the occluded-pair relation.
//! Rendering is deterministic; randomness only enters through the
//! generator helpers, which draw from a caller-supplied RNG.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::mask::{
    BinaryMask, Category, CategoryTable, PanopticMap, RgbImage, SegmentInfo, SemanticMap,
};
use crate::occlusion::InstancePrediction;

/// One flat-colored shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// Axis-aligned rectangle covering pixels `[x, x+w) × [y, y+h)`.
    Rect {
        x: usize,
        y: usize,
        w: usize,
        h: usize,
    },
    /// Axis-aligned ellipse; a pixel belongs when its center lies inside.
    Ellipse { cx: f32, cy: f32, rx: f32, ry: f32 },
}

/// One object in a scene: a shape, its color, and its detection metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectSpec {
    pub shape: Shape,
    pub color: [u8; 3],
    /// Must be a thing category in the scene's vocabulary.
    pub category_id: u32,
    pub score: f32,
}

/// A renderable scene. `objects[0]` is frontmost; later objects are painted
/// behind earlier ones.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub background_color: [u8; 3],
    /// Must be a stuff category in the vocabulary.
    pub background_category: u32,
    pub objects: Vec<ObjectSpec>,
    pub categories: CategoryTable,
}

/// Ground-truth record of one overlapping pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GtOcclusion {
    /// Instance id of the object in front (the true occluder).
    pub front: u32,
    /// Instance id of the partially hidden object.
    pub back: u32,
    /// Number of shared full-mask pixels.
    pub overlap: u64,
}

/// Everything [`render`] produces for one scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub image: RgbImage,
    /// Full (unoccluded) masks, ids equal to the scene's object indices.
    pub instances: Vec<InstancePrediction>,
    /// Visible-region ground truth: object `i` is segment `i + 1`, the
    /// background is segment `objects.len() + 1`.
    pub panoptic: PanopticMap,
    /// Per-pixel category of the frontmost surface.
    pub semantic: SemanticMap,
    /// All full-mask overlaps, front first.
    pub occlusions: Vec<GtOcclusion>,
    pub categories: CategoryTable,
}

fn rasterize(shape: &Shape, width: usize, height: usize) -> Result<BinaryMask> {
    let mut bits = vec![false; width * height];
    match *shape {
        Shape::Rect { x, y, w, h } => {
            if w == 0 || h == 0 {
                return Err(Error::BadSceneSpec {
                    reason: "rectangle with zero extent".into(),
                });
            }
            if x + w > width || y + h > height {
                return Err(Error::BadSceneSpec {
                    reason: format!(
                        "rectangle [{x}, {}) × [{y}, {}) exceeds the {width}×{height} canvas",
                        x + w,
                        y + h
                    ),
                });
            }
            for row in y..y + h {
                bits[row * width + x..row * width + x + w].fill(true);
            }
        }
        Shape::Ellipse { cx, cy, rx, ry } => {
            if !(rx > 0.0 && ry > 0.0) {
                return Err(Error::BadSceneSpec {
                    reason: "ellipse with non-positive radius".into(),
                });
            }
            if cx - rx < 0.0 || cy - ry < 0.0 || cx + rx > width as f32 || cy + ry > height as f32
            {
                return Err(Error::BadSceneSpec {
                    reason: format!("ellipse at ({cx}, {cy}) exceeds the {width}×{height} canvas"),
                });
            }
            for row in 0..height {
                for col in 0..width {
                    let dx = (col as f32 + 0.5 - cx) / rx;
                    let dy = (row as f32 + 0.5 - cy) / ry;
                    if dx * dx + dy * dy <= 1.0 {
                        bits[row * width + col] = true;
                    }
                }
            }
        }
    }
    BinaryMask::from_bits(width, height, bits)
}

/// Renders a scene. Fails when a shape leaves the canvas, an object ends up
/// with no pixels at all or none visible, or categories are used against
/// their thing/stuff role.
pub fn render(spec: &SceneSpec) -> Result<SyntheticScene> {
    if spec.width == 0 || spec.height == 0 {
        return Err(Error::BadSceneSpec {
            reason: "empty canvas".into(),
        });
    }
    if !spec.categories.is_stuff(spec.background_category) {
        return Err(Error::BadSceneSpec {
            reason: format!(
                "background category {} is not a declared stuff category",
                spec.background_category
            ),
        });
    }
    for object in &spec.objects {
        if !spec.categories.is_thing(object.category_id) {
            return Err(Error::BadSceneSpec {
                reason: format!(
                    "object category {} is not a declared thing category",
                    object.category_id
                ),
            });
        }
    }

    let masks: Vec<BinaryMask> = spec
        .objects
        .iter()
        .map(|o| rasterize(&o.shape, spec.width, spec.height))
        .collect::<Result<_>>()?;

    // Frontmost covering object per pixel, painting and labeling in one pass.
    let pixels = spec.width * spec.height;
    let mut image_data = Vec::with_capacity(pixels * 3);
    let mut segment_ids = Vec::with_capacity(pixels);
    let mut labels = Vec::with_capacity(pixels);
    let background_segment = spec.objects.len() as u32 + 1;
    for p in 0..pixels {
        match masks.iter().position(|m| m.bits()[p]) {
            Some(front) => {
                image_data.extend_from_slice(&spec.objects[front].color);
                segment_ids.push(front as u32 + 1);
                labels.push(spec.objects[front].category_id);
            }
            None => {
                image_data.extend_from_slice(&spec.background_color);
                segment_ids.push(background_segment);
                labels.push(spec.background_category);
            }
        }
    }

    let mut segments = Vec::new();
    for (index, object) in spec.objects.iter().enumerate() {
        let id = index as u32 + 1;
        let visible = segment_ids.iter().filter(|&&s| s == id).count() as u64;
        if visible == 0 {
            return Err(Error::BadSceneSpec {
                reason: format!("object {index} is completely hidden"),
            });
        }
        segments.push(SegmentInfo {
            id,
            category_id: object.category_id,
            area: visible,
        });
    }
    let background_area = segment_ids
        .iter()
        .filter(|&&s| s == background_segment)
        .count() as u64;
    if background_area == 0 {
        return Err(Error::BadSceneSpec {
            reason: "objects cover the entire background".into(),
        });
    }
    segments.push(SegmentInfo {
        id: background_segment,
        category_id: spec.background_category,
        area: background_area,
    });

    let mut occlusions = Vec::new();
    for front in 0..masks.len() {
        for back in front + 1..masks.len() {
            let overlap = masks[front].intersection_area(&masks[back])? as u64;
            if overlap > 0 {
                occlusions.push(GtOcclusion {
                    front: front as u32,
                    back: back as u32,
                    overlap,
                });
            }
        }
    }

    let instances = spec
        .objects
        .iter()
        .zip(masks)
        .enumerate()
        .map(|(index, (object, mask))| {
            InstancePrediction::new(index as u32, mask, object.score, object.category_id)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SyntheticScene {
        image: RgbImage::from_raw(spec.width, spec.height, image_data)?,
        instances,
        panoptic: PanopticMap::new(spec.width, spec.height, segment_ids, segments)?,
        semantic: SemanticMap::new(spec.width, spec.height, labels, spec.categories.clone())?,
        occlusions,
        categories: spec.categories.clone(),
    })
}

// ── Generators ──────────────────────────────────────────────────────────────

/// Thing ids used by the generated scenes.
pub const THING_CATEGORIES: [u32; 2] = [1, 2];
/// Stuff ids used by the generated scenes.
pub const STUFF_CATEGORIES: [u32; 2] = [10, 11];

/// The vocabulary all generated scenes share: two things, two stuff.
pub fn standard_categories() -> CategoryTable {
    CategoryTable::new(vec![
        Category {
            id: 1,
            name: "box".into(),
            is_thing: true,
        },
        Category {
            id: 2,
            name: "blob".into(),
            is_thing: true,
        },
        Category {
            id: 10,
            name: "backdrop".into(),
            is_thing: false,
        },
        Category {
            id: 11,
            name: "floor".into(),
            is_thing: false,
        },
    ])
    .unwrap()
}

/// Saturated, pairwise non-collinear colors. Collinear RGB vectors would
/// defeat cosine-based appearance matching, so grays are excluded and the
/// background below stays dark.
const PALETTE: [[u8; 3]; 8] = [
    [220, 30, 30],
    [40, 200, 60],
    [40, 80, 220],
    [230, 210, 40],
    [200, 40, 190],
    [40, 200, 210],
    [240, 130, 30],
    [130, 50, 200],
];

const BACKGROUND_COLOR: [u8; 3] = [16, 16, 16];

fn draw_score(rng: &mut impl Rng) -> f32 {
    rng.gen_range(0.65..0.99)
}

/// A chain of equal squares along the diagonal, each overlapping only its
/// neighbors by ≈23% of a square — above the 20% occlusion threshold, far
/// below the 50% suppression threshold. Depth order is a random permutation
/// of the chain, so front/back is independent of position and score.
///
/// Supports 2 ≤ `objects` ≤ 4 on canvases of at least 48 pixels.
pub fn cascade_scene(rng: &mut impl Rng, objects: usize, size: usize) -> Result<SyntheticScene> {
    if !(2..=4).contains(&objects) || size < 48 {
        return Err(Error::BadSceneSpec {
            reason: format!("cascade wants 2–4 objects on ≥48px, got {objects} on {size}px"),
        });
    }
    let side = 39 * size / 100;
    let step = (52 * side + 50) / 100;
    let extent = side + (objects - 1) * step;
    debug_assert!(extent <= size);
    // Overlap of neighbors is (side − step)² of side² ≈ 0.23.
    debug_assert!((side - step) * (side - step) * 5 > side * side);

    let x0 = rng.gen_range(0..=size - extent);
    let y0 = rng.gen_range(0..=size - extent);
    let positions: Vec<(usize, usize)> = (0..objects)
        .map(|i| (x0 + i * step, y0 + i * step))
        .collect();

    let mut order: Vec<usize> = (0..objects).collect();
    order.shuffle(rng);
    let mut colors = PALETTE;
    colors.shuffle(rng);

    let spec = SceneSpec {
        width: size,
        height: size,
        background_color: BACKGROUND_COLOR,
        background_category: STUFF_CATEGORIES[0],
        objects: order
            .iter()
            .enumerate()
            .map(|(depth, &slot)| ObjectSpec {
                shape: Shape::Rect {
                    x: positions[slot].0,
                    y: positions[slot].1,
                    w: side,
                    h: side,
                },
                color: colors[depth],
                category_id: THING_CATEGORIES[depth % THING_CATEGORIES.len()],
                score: draw_score(rng),
            })
            .collect(),
        categories: standard_categories(),
    };
    render(&spec)
}

/// A loose cluster of random rectangles and ellipses with arbitrary
/// overlaps; useful for exercising multi-way occlusion without a planned
/// relation structure. Retries placement until every object keeps at least
/// one visible pixel.
pub fn random_cluster_scene(
    rng: &mut impl Rng,
    objects: usize,
    size: usize,
) -> Result<SyntheticScene> {
    if objects > PALETTE.len() || size < 32 {
        return Err(Error::BadSceneSpec {
            reason: format!(
                "cluster wants ≤{} objects on ≥32px, got {objects} on {size}px",
                PALETTE.len()
            ),
        });
    }
    let mut colors = PALETTE;
    colors.shuffle(rng);
    for _ in 0..100 {
        let spec = SceneSpec {
            width: size,
            height: size,
            background_color: BACKGROUND_COLOR,
            background_category: STUFF_CATEGORIES[0],
            objects: (0..objects)
                .map(|depth| {
                    let w = rng.gen_range(size / 4..=size / 2);
                    let h = rng.gen_range(size / 4..=size / 2);
                    let x = rng.gen_range(0..=size - w);
                    let y = rng.gen_range(0..=size - h);
                    let shape = if rng.gen_bool(0.5) {
                        Shape::Rect { x, y, w, h }
                    } else {
                        Shape::Ellipse {
                            cx: x as f32 + w as f32 / 2.0,
                            cy: y as f32 + h as f32 / 2.0,
                            rx: w as f32 / 2.0,
                            ry: h as f32 / 2.0,
                        }
                    };
                    ObjectSpec {
                        shape,
                        color: colors[depth],
                        category_id: THING_CATEGORIES[depth % THING_CATEGORIES.len()],
                        score: draw_score(rng),
                    }
                })
                .collect(),
            categories: standard_categories(),
        };
        match render(&spec) {
            Ok(scene) => return Ok(scene),
            Err(Error::BadSceneSpec { .. }) => continue, // someone fully hidden
            Err(e) => return Err(e),
        }
    }
    Err(Error::BadSceneSpec {
        reason: "could not place a fully visible cluster in 100 attempts".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_rect_spec() -> SceneSpec {
        SceneSpec {
            width: 16,
            height: 16,
            background_color: BACKGROUND_COLOR,
            background_category: 10,
            objects: vec![ObjectSpec {
                shape: Shape::Rect {
                    x: 2,
                    y: 3,
                    w: 5,
                    h: 4,
                },
                color: PALETTE[0],
                category_id: 1,
                score: 0.9,
            }],
            categories: standard_categories(),
        }
    }

    #[test]
    fn one_rectangle_gives_one_instance_and_one_stuff_segment() {
        let scene = render(&one_rect_spec()).unwrap();
        assert_eq!(scene.instances.len(), 1);
        assert_eq!(scene.instances[0].mask.area(), 20);
        assert_eq!(scene.panoptic.segments().len(), 2);
        assert_eq!(scene.panoptic.segment(1).unwrap().area, 20);
        assert_eq!(scene.panoptic.segment(2).unwrap().area, 16 * 16 - 20);
        assert!(scene.occlusions.is_empty());
        assert_eq!(scene.image.pixel(2, 3), PALETTE[0]);
        assert_eq!(scene.image.pixel(0, 0), BACKGROUND_COLOR);
        assert_eq!(scene.semantic.label(2, 3), 1);
        assert_eq!(scene.semantic.label(0, 0), 10);
    }

    #[test]
    fn front_object_owns_and_colors_the_overlap() {
        // Red square in front of blue square; their overlap must be red,
        // attributed red→blue, and missing from blue's visible area.
        let red = [220, 30, 30];
        let blue = [40, 80, 220];
        let spec = SceneSpec {
            width: 20,
            height: 20,
            background_color: BACKGROUND_COLOR,
            background_category: 10,
            objects: vec![
                ObjectSpec {
                    shape: Shape::Rect {
                        x: 2,
                        y: 2,
                        w: 8,
                        h: 8,
                    },
                    color: red,
                    category_id: 1,
                    score: 0.6,
                },
                ObjectSpec {
                    shape: Shape::Rect {
                        x: 6,
                        y: 6,
                        w: 8,
                        h: 8,
                    },
                    color: blue,
                    category_id: 1,
                    score: 0.9,
                },
            ],
            categories: standard_categories(),
        };
        let scene = render(&spec).unwrap();
        assert_eq!(
            scene.occlusions,
            vec![GtOcclusion {
                front: 0,
                back: 1,
                overlap: 16
            }]
        );
        assert_eq!(scene.image.pixel(8, 8), red); // inside the overlap
        assert_eq!(scene.panoptic.segment_id(8, 8), 1);
        assert_eq!(scene.panoptic.segment(1).unwrap().area, 64);
        assert_eq!(scene.panoptic.segment(2).unwrap().area, 64 - 16);
        // Full masks are unoccluded: both instances keep all 64 pixels.
        assert_eq!(scene.instances[1].mask.area(), 64);
    }

    #[test]
    fn out_of_bounds_shapes_are_rejected() {
        let mut spec = one_rect_spec();
        spec.objects[0].shape = Shape::Rect {
            x: 12,
            y: 3,
            w: 5,
            h: 4,
        };
        assert!(matches!(render(&spec), Err(Error::BadSceneSpec { .. })));

        spec.objects[0].shape = Shape::Ellipse {
            cx: 15.0,
            cy: 8.0,
            rx: 2.0,
            ry: 2.0,
        };
        assert!(matches!(render(&spec), Err(Error::BadSceneSpec { .. })));
    }

    #[test]
    fn fully_hidden_objects_are_rejected() {
        let mut spec = one_rect_spec();
        // Identical rectangle behind the first: zero visible pixels.
        let hidden = spec.objects[0].clone();
        spec.objects.push(hidden);
        let err = render(&spec).unwrap_err();
        assert!(err.to_string().contains("hidden"));
    }

    #[test]
    fn stuff_categories_cannot_be_objects_nor_things_background() {
        let mut spec = one_rect_spec();
        spec.objects[0].category_id = 10;
        assert!(matches!(render(&spec), Err(Error::BadSceneSpec { .. })));

        let mut spec = one_rect_spec();
        spec.background_category = 1;
        assert!(matches!(render(&spec), Err(Error::BadSceneSpec { .. })));
    }

    #[test]
    fn ellipse_rasterizes_by_pixel_center() {
        let spec = SceneSpec {
            width: 8,
            height: 8,
            background_color: BACKGROUND_COLOR,
            background_category: 10,
            objects: vec![ObjectSpec {
                shape: Shape::Ellipse {
                    cx: 4.0,
                    cy: 4.0,
                    rx: 2.0,
                    ry: 2.0,
                },
                color: PALETTE[1],
                category_id: 1,
                score: 0.8,
            }],
            categories: standard_categories(),
        };
        let scene = render(&spec).unwrap();
        let mask = &scene.instances[0].mask;
        assert!(mask.get(4, 4) && mask.get(4, 2) && mask.get(2, 4));
        assert!(!mask.get(2, 2)); // corner center is √2 radii away
        assert!(!mask.get(4, 1));
    }

    #[test]
    fn same_seed_renders_byte_identical_scenes() {
        let a = cascade_scene(&mut ChaCha8Rng::seed_from_u64(7), 3, 64).unwrap();
        let b = cascade_scene(&mut ChaCha8Rng::seed_from_u64(7), 3, 64).unwrap();
        assert_eq!(a, b);
        let c = cascade_scene(&mut ChaCha8Rng::seed_from_u64(8), 3, 64).unwrap();
        assert_ne!(a.image.raw(), c.image.raw());
    }

    #[test]
    fn cascade_overlaps_only_neighbors_above_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let scene = cascade_scene(&mut rng, 3, 64).unwrap();
            // Exactly the two neighbor pairs overlap, regardless of depth
            // order, and each overlap clears 20% of a square.
            assert_eq!(scene.occlusions.len(), 2);
            for gt in &scene.occlusions {
                let area = scene.instances[gt.front as usize].mask.area() as f64;
                assert!(gt.overlap as f64 > 0.2 * area, "{gt:?} vs area {area}");
            }
        }
    }

    #[test]
    fn cascade_colors_overlaps_like_the_front_object() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let scene = cascade_scene(&mut rng, 2, 64).unwrap();
        let gt = scene.occlusions[0];
        let front = &scene.instances[gt.front as usize];
        let back = &scene.instances[gt.back as usize];
        let both = front.mask.intersection(&back.mask).unwrap();
        let front_color = {
            // Any pixel the front object does not share with the other.
            let only = front
                .mask
                .bits()
                .iter()
                .zip(back.mask.bits())
                .position(|(&f, &b)| f && !b)
                .unwrap();
            let (w, x, y) = (scene.image.width(), only % 64, only / 64);
            assert_eq!(w, 64);
            scene.image.pixel(x, y)
        };
        for (p, &inside) in both.bits().iter().enumerate() {
            if inside {
                assert_eq!(scene.image.pixel(p % 64, p / 64), front_color);
            }
        }
    }

    #[test]
    fn cluster_scenes_render_with_everyone_visible() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for objects in [3, 4, 5] {
            let scene = random_cluster_scene(&mut rng, objects, 64).unwrap();
            assert_eq!(scene.instances.len(), objects);
            assert_eq!(scene.panoptic.segments().len(), objects + 1);
        }
    }
}
