//! Regenerates the committed fixture corpus under `tests/fixtures/`.
//!
//! The corpus is three rendered synthetic scenes plus one hand-built
//! area-floor scene, with everything the `fuse` and `evaluate` subcommands
//! consume — RGB images, semantic maps, an instance manifest, ground truth —
//! and the golden outputs the acceptance tests compare against byte for
//! byte. Goldens are produced through the same library calls the binary
//! makes, then audited via the assertions at the bottom before being
//! committed.
//!
//! Run explicitly after an intentional behavior change:
//!
//! ```text
//! cargo test -p panoptic-cli --test generate_fixtures -- --ignored
//! ```

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use panoptic_core::fusion::{fuse, FusionConfig};
use panoptic_core::io::synth::{cascade_scene, random_cluster_scene, standard_categories};
use panoptic_core::io::{
    write_instances, write_panoptic, write_rgb, write_semantic, InstanceDataset, InstanceImage,
    PanopticDataset,
};
use panoptic_core::mask::{BinaryMask, PanopticMap, RgbImage, SegmentInfo, SemanticMap};
use panoptic_core::metrics::{compute_pq, match_segments, StuffIouAccumulator};
use panoptic_core::occlusion::{filter_and_nms, resolve_scene, InstancePrediction, OcclusionConfig};

const SIZE: usize = 128;

/// The hand-built boundary fixture: one instance plus a stuff region of
/// exactly 4095 pixels, one below the fusion floor.
struct AreaFloorScene {
    image: RgbImage,
    semantic: SemanticMap,
    instances: Vec<InstancePrediction>,
    gt: PanopticMap,
}

fn area_floor_scene() -> AreaFloorScene {
    const SKY: u32 = 10; // 65×63 rectangle → area 4095, dropped to void
    const FLOOR: u32 = 11;
    const CAR: u32 = 1;
    let categories = standard_categories();

    // Sky rectangle at the top-left corner; instance square well clear of it.
    let (sky_w, sky_h) = (65, 63);
    let (car_x, car_y, car_side) = (63, 64, 64);

    let mut labels = vec![FLOOR; SIZE * SIZE];
    let mut image = RgbImage::filled(SIZE, SIZE, [16, 16, 16]);
    let mut car_mask = BinaryMask::new(SIZE, SIZE);
    let mut gt_ids = vec![2u32; SIZE * SIZE];
    for y in 0..sky_h {
        for x in 0..sky_w {
            labels[y * SIZE + x] = SKY;
            gt_ids[y * SIZE + x] = 0; // below the floor → void after fusion
        }
    }
    for y in car_y..car_y + car_side {
        for x in car_x..car_x + car_side {
            image.set_pixel(x, y, [220, 30, 30]);
            car_mask.set(x, y, true);
            gt_ids[y * SIZE + x] = 1;
        }
    }

    let gt = PanopticMap::new(
        SIZE,
        SIZE,
        gt_ids,
        vec![
            SegmentInfo {
                id: 1,
                category_id: CAR,
                area: (car_side * car_side) as u64,
            },
            SegmentInfo {
                id: 2,
                category_id: FLOOR,
                area: (SIZE * SIZE - car_side * car_side - sky_w * sky_h) as u64,
            },
        ],
    )
    .unwrap();
    AreaFloorScene {
        image,
        semantic: SemanticMap::new(SIZE, SIZE, labels, categories).unwrap(),
        instances: vec![InstancePrediction::new(0, car_mask, 0.9, CAR).unwrap()],
        gt,
    }
}

fn reset_dir(path: &Path) {
    if path.exists() {
        std::fs::remove_dir_all(path).unwrap();
    }
    std::fs::create_dir_all(path).unwrap();
}

#[test]
#[ignore = "rewrites the committed corpus; run explicitly and audit the diff"]
fn regenerate_fixture_corpus() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    reset_dir(&root);
    let categories = standard_categories();

    // name → (image, semantic, instances, gt map)
    let mut entries: Vec<(String, RgbImage, SemanticMap, Vec<InstancePrediction>, PanopticMap)> =
        Vec::new();
    let scenes = [
        ("scene_000", cascade_scene(&mut ChaCha8Rng::seed_from_u64(1001), 3, SIZE).unwrap()),
        ("scene_001", cascade_scene(&mut ChaCha8Rng::seed_from_u64(1002), 2, SIZE).unwrap()),
        ("scene_002", random_cluster_scene(&mut ChaCha8Rng::seed_from_u64(1003), 4, SIZE).unwrap()),
    ];
    for (name, scene) in scenes {
        entries.push((
            name.to_string(),
            scene.image,
            scene.semantic,
            scene.instances,
            scene.panoptic,
        ));
    }
    let floor = area_floor_scene();
    entries.push((
        "area_floor".to_string(),
        floor.image,
        floor.semantic,
        floor.instances,
        floor.gt,
    ));

    for (name, image, semantic, _, _) in &entries {
        write_rgb(&root.join(format!("images/{name}.png")), image).unwrap();
        write_semantic(&root.join(format!("semantic/{name}.png")), semantic).unwrap();
    }
    write_instances(
        &InstanceDataset {
            categories: categories.clone(),
            images: entries
                .iter()
                .map(|(name, _, _, instances, _)| InstanceImage {
                    file_name: format!("{name}.png"),
                    width: SIZE,
                    height: SIZE,
                    instances: instances.clone(),
                })
                .collect(),
        },
        &root.join("instances.json"),
    )
    .unwrap();
    write_panoptic(
        &PanopticDataset {
            categories: categories.clone(),
            images: entries
                .iter()
                .map(|(name, _, _, _, gt)| (name.clone(), gt.clone()))
                .collect(),
        },
        &root.join("gt/panoptic.json"),
    )
    .unwrap();

    // Golden fuse output: the same resolve → fuse calls the binary makes,
    // with the default thresholds.
    let occlusion = OcclusionConfig::default();
    let fusion = FusionConfig::default();
    let fused: Vec<(String, PanopticMap)> = entries
        .iter()
        .map(|(name, image, semantic, instances, _)| {
            let survivors = filter_and_nms(instances, &occlusion).unwrap();
            let resolved = resolve_scene(image, &survivors, &occlusion);
            (name.clone(), fuse(&resolved, semantic, &fusion).unwrap())
        })
        .collect();
    write_panoptic(
        &PanopticDataset {
            categories: categories.clone(),
            images: fused.clone(),
        },
        &root.join("golden/panoptic.json"),
    )
    .unwrap();

    // Golden evaluation of that output against the ground truth, matching
    // what `panoptic evaluate` prints.
    let mut results = Vec::new();
    let mut stuff_iou = StuffIouAccumulator::new(categories.clone());
    for ((_, pred), (_, _, _, _, gt)) in fused.iter().zip(&entries) {
        results.push(match_segments(pred, gt).unwrap());
        stuff_iou
            .add(
                &pred.to_semantic(&categories).unwrap(),
                &gt.to_semantic(&categories).unwrap(),
            )
            .unwrap();
    }
    let mut report = compute_pq(&results, &categories).unwrap();
    report.miou_stuff = stuff_iou.mean();
    std::fs::write(root.join("golden/report.txt"), report.text()).unwrap();

    // ── Audit ───────────────────────────────────────────────────────────
    // Cascade scenes have perfect inputs, so their fused maps must equal
    // the ground truth up to segment numbering; with the true occluders
    // recovered, every gt segment matches at IoU 1.
    for (index, (name, pred)) in fused.iter().enumerate() {
        let gt = &entries[index].4;
        if name.starts_with("scene_00") && name != "scene_002" {
            let result = match_segments(pred, gt).unwrap();
            assert_eq!(result.matched.len(), gt.segments().len(), "{name}");
            assert!(result.matched.iter().all(|m| m.iou == 1.0), "{name}");
        }
    }
    // The area-floor fixture fuses to exactly its hand-built expectation:
    // the 4095-pixel sky is void, the instance overwrote the floor.
    let area_floor = &fused.last().unwrap().1;
    assert_eq!(area_floor, &entries.last().unwrap().4);

    eprintln!("--- fixture audit ---");
    eprintln!("{}", report.text());
}
