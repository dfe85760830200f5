//! File formats: PNG primitives, the COCO panoptic interchange layout, and
//! the instance manifest consumed by the fusion pipeline.
//!
//! Readers are strict: inconsistent files are rejected, never repaired. All
//! writers use pinned PNG settings (fixed filter and compression level, no
//! ancillary chunks) and struct-ordered JSON, so a given input produces the
//! same bytes on every run — the golden-file tests depend on that.
//!
//! # Panoptic layout
//!
//! A panoptic dataset is one JSON document plus one id-map PNG per image:
//!
//! ```text
//! out/panoptic.json        ← images, annotations, categories
//! out/panoptic/img_a.png   ← segment ids, pixel = R + 256·G + 256²·B
//! out/panoptic/img_b.png
//! ```
//!
//! The PNG directory sits next to the JSON and shares its file stem. Each
//! annotation's `file_name` is resolved inside that directory. Segment id 0
//! (void) is the black pixel; ids must stay below 2²⁴.
//!
//! # Instance manifest
//!
//! The fusion input lists, per image, the detections to resolve:
//!
//! ```json
//! {
//!   "categories": [ {"id": 1, "name": "car", "isthing": 1} ],
//!   "images": [
//!     {
//!       "file_name": "scene_000.png",
//!       "width": 64,
//!       "height": 64,
//!       "instances": [
//!         { "category_id": 1, "score": 0.9, "mask": { "rle": [12, 4, 48] } },
//!         { "category_id": 1, "score": 0.7, "mask": { "png": "masks/scene_000_1.png" } }
//!       ]
//!     }
//!   ]
//! }
//! ```
//!
//! Masks come either as inline run-length runs (column-major, zero run
//! first, as produced by [`BinaryMask::to_rle`]) or as paths to 8-bit
//! grayscale PNGs, resolved relative to the manifest; PNG masks threshold at
//! nonzero. Instance ids are assigned by position within each image's list.
//! Semantic maps travel as single-channel 8- or 16-bit PNGs of category ids.

pub mod synth;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write as _};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{
    BinaryMask, Category, CategoryTable, PanopticMap, RgbImage, SegmentInfo, SemanticMap,
};
use crate::occlusion::InstancePrediction;

// ── PNG primitives ──────────────────────────────────────────────────────────

fn open_input(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| Error::MissingFile {
            path: path.to_path_buf(),
            source,
        })
}

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::MalformedFile {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Decodes a PNG into its raw 8-bit-per-sample form (16-bit stays 16-bit).
fn decode_png(path: &Path) -> Result<(png::OutputInfo, Vec<u8>)> {
    let decoder = png::Decoder::new(open_input(path)?);
    let mut reader = decoder
        .read_info()
        .map_err(|e| malformed(path, e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| malformed(path, "image too large to decode"))?;
    let mut buf = vec![0u8; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| malformed(path, e.to_string()))?;
    buf.truncate(info.buffer_size());
    Ok((info, buf))
}

/// Encodes one frame with the crate-wide deterministic settings.
fn encode_png(
    path: &Path,
    width: usize,
    height: usize,
    color: png::ColorType,
    depth: png::BitDepth,
    data: &[u8],
) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let file = BufWriter::new(File::create(path)?);
    let mut encoder = png::Encoder::new(file, width as u32, height as u32);
    encoder.set_color(color);
    encoder.set_depth(depth);
    // Pinned so repeated runs produce identical bytes.
    encoder.set_compression(png::Compression::Balanced);
    encoder.set_filter(png::Filter::NoFilter);
    let mut writer = encoder.write_header().map_err(std::io::Error::other)?;
    writer
        .write_image_data(data)
        .map_err(std::io::Error::other)?;
    Ok(())
}

/// Reads an 8-bit RGB PNG. Anything else (palette, grayscale, alpha,
/// 16-bit) is rejected — inputs are expected in the exact interchange form.
pub fn read_rgb(path: &Path) -> Result<RgbImage> {
    let (info, data) = decode_png(path)?;
    if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
        return Err(malformed(
            path,
            format!(
                "expected 8-bit RGB, found {:?} {:?}",
                info.color_type, info.bit_depth
            ),
        ));
    }
    RgbImage::from_raw(info.width as usize, info.height as usize, data)
}

/// Writes an image as 8-bit RGB.
pub fn write_rgb(path: &Path, image: &RgbImage) -> Result<()> {
    encode_png(
        path,
        image.width(),
        image.height(),
        png::ColorType::Rgb,
        png::BitDepth::Eight,
        image.raw(),
    )
}

/// Decodes a single-channel PNG to one `u16` per pixel (8- or 16-bit).
fn read_gray(path: &Path) -> Result<(usize, usize, Vec<u16>)> {
    let (info, data) = decode_png(path)?;
    if info.color_type != png::ColorType::Grayscale {
        return Err(malformed(
            path,
            format!("expected grayscale, found {:?}", info.color_type),
        ));
    }
    let values = match info.bit_depth {
        png::BitDepth::Eight => data.iter().map(|&v| v as u16).collect(),
        png::BitDepth::Sixteen => data
            .chunks_exact(2)
            .map(|pair| u16::from_be_bytes([pair[0], pair[1]]))
            .collect(),
        other => {
            return Err(malformed(path, format!("unsupported bit depth {other:?}")));
        }
    };
    Ok((info.width as usize, info.height as usize, values))
}

/// Reads an 8-bit grayscale PNG as a binary mask (nonzero → foreground) and
/// checks it against the expected image dimensions.
pub fn read_mask(path: &Path, width: usize, height: usize) -> Result<BinaryMask> {
    let (info, data) = decode_png(path)?;
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(malformed(
            path,
            format!(
                "expected 8-bit grayscale mask, found {:?} {:?}",
                info.color_type, info.bit_depth
            ),
        ));
    }
    if (info.width as usize, info.height as usize) != (width, height) {
        return Err(Error::DimensionMismatch {
            expected_w: width,
            expected_h: height,
            got_w: info.width as usize,
            got_h: info.height as usize,
        });
    }
    BinaryMask::from_bits(width, height, data.iter().map(|&v| v > 0).collect())
}

/// Writes a mask as an 8-bit grayscale PNG (background 0, foreground 255).
pub fn write_mask(path: &Path, mask: &BinaryMask) -> Result<()> {
    let data: Vec<u8> = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    encode_png(
        path,
        mask.width(),
        mask.height(),
        png::ColorType::Grayscale,
        png::BitDepth::Eight,
        &data,
    )
}

/// Reads a semantic map from a single-channel PNG of category ids and
/// validates every label against the vocabulary.
pub fn read_semantic(path: &Path, categories: &CategoryTable) -> Result<SemanticMap> {
    let (width, height, values) = read_gray(path)?;
    let labels = values.into_iter().map(|v| v as u32).collect();
    SemanticMap::new(width, height, labels, categories.clone())
}

/// Writes a semantic map as a single-channel PNG: 8-bit when every label
/// fits a byte, 16-bit otherwise.
pub fn write_semantic(path: &Path, map: &SemanticMap) -> Result<()> {
    let max = map.labels().iter().copied().max().unwrap_or(0);
    if max > u16::MAX as u32 {
        return Err(Error::BadCategory {
            id: max,
            reason: "category id does not fit a 16-bit semantic PNG".into(),
        });
    }
    if max <= u8::MAX as u32 {
        let data: Vec<u8> = map.labels().iter().map(|&v| v as u8).collect();
        encode_png(
            path,
            map.width(),
            map.height(),
            png::ColorType::Grayscale,
            png::BitDepth::Eight,
            &data,
        )
    } else {
        let mut data = Vec::with_capacity(map.labels().len() * 2);
        for &v in map.labels() {
            data.extend_from_slice(&(v as u16).to_be_bytes());
        }
        encode_png(
            path,
            map.width(),
            map.height(),
            png::ColorType::Grayscale,
            png::BitDepth::Sixteen,
            &data,
        )
    }
}

// ── Segment id-map encoding ─────────────────────────────────────────────────

/// Packs segment ids into RGB bytes: pixel = `(id, id >> 8, id >> 16)`.
fn encode_segment_ids(ids: &[u32]) -> Result<Vec<u8>> {
    let mut data = Vec::with_capacity(ids.len() * 3);
    for &id in ids {
        if id >= 1 << 24 {
            return Err(Error::SegmentIdOverflow { id });
        }
        data.push(id as u8);
        data.push((id >> 8) as u8);
        data.push((id >> 16) as u8);
    }
    Ok(data)
}

/// Inverse of [`encode_segment_ids`]: id = R + 256·G + 256²·B.
fn decode_segment_ids(rgb: &[u8]) -> Vec<u32> {
    rgb.chunks_exact(3)
        .map(|p| p[0] as u32 + 256 * p[1] as u32 + 65536 * p[2] as u32)
        .collect()
}

// ── Panoptic dataset ────────────────────────────────────────────────────────

#[derive(Debug, Serialize, Deserialize)]
struct CategoryRecord {
    id: u32,
    name: String,
    isthing: u8,
}

#[derive(Debug, Serialize, Deserialize)]
struct ImageRecord {
    id: u32,
    width: u32,
    height: u32,
    file_name: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct SegmentRecord {
    id: u32,
    category_id: u32,
    area: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct AnnotationRecord {
    image_id: u32,
    file_name: String,
    segments_info: Vec<SegmentRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PanopticJson {
    images: Vec<ImageRecord>,
    annotations: Vec<AnnotationRecord>,
    categories: Vec<CategoryRecord>,
}

fn categories_to_records(categories: &CategoryTable) -> Vec<CategoryRecord> {
    categories
        .iter()
        .map(|c| CategoryRecord {
            id: c.id,
            name: c.name.clone(),
            isthing: c.is_thing as u8,
        })
        .collect()
}

fn categories_from_records(records: &[CategoryRecord], path: &Path) -> Result<CategoryTable> {
    let mut categories = Vec::with_capacity(records.len());
    for r in records {
        if r.isthing > 1 {
            return Err(malformed(
                path,
                format!("category {}: isthing must be 0 or 1, got {}", r.id, r.isthing),
            ));
        }
        categories.push(Category {
            id: r.id,
            name: r.name.clone(),
            is_thing: r.isthing == 1,
        });
    }
    CategoryTable::new(categories)
}

/// A set of named panoptic maps sharing one category vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct PanopticDataset {
    pub categories: CategoryTable,
    /// `(image name, map)` pairs; the name becomes the PNG file stem.
    pub images: Vec<(String, PanopticMap)>,
}

/// Directory holding the id-map PNGs for a given JSON path: sibling
/// directory named after the JSON file stem.
fn png_dir(json_path: &Path) -> Result<PathBuf> {
    let stem = json_path
        .file_stem()
        .ok_or_else(|| malformed(json_path, "path has no file stem"))?;
    Ok(json_path.parent().unwrap_or(Path::new("")).join(stem))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    file.flush()?;
    Ok(())
}

/// Writes the dataset as `panoptic.json` plus one id-map PNG per image (see
/// the module docs for the layout). Byte-deterministic.
pub fn write_panoptic(dataset: &PanopticDataset, json_path: &Path) -> Result<()> {
    let dir = png_dir(json_path)?;
    let mut images = Vec::new();
    let mut annotations = Vec::new();
    for (index, (name, map)) in dataset.images.iter().enumerate() {
        for segment in map.segments() {
            if !dataset.categories.contains(segment.category_id) {
                return Err(Error::UnknownCategory {
                    id: segment.category_id,
                });
            }
        }
        let file_name = format!("{name}.png");
        let rgb = encode_segment_ids(map.segment_ids())?;
        encode_png(
            &dir.join(&file_name),
            map.width(),
            map.height(),
            png::ColorType::Rgb,
            png::BitDepth::Eight,
            &rgb,
        )?;
        images.push(ImageRecord {
            id: index as u32 + 1,
            width: map.width() as u32,
            height: map.height() as u32,
            file_name: file_name.clone(),
        });
        annotations.push(AnnotationRecord {
            image_id: index as u32 + 1,
            file_name,
            segments_info: map
                .segments()
                .iter()
                .map(|s| SegmentRecord {
                    id: s.id,
                    category_id: s.category_id,
                    area: s.area,
                })
                .collect(),
        });
    }
    write_json(
        json_path,
        &PanopticJson {
            images,
            annotations,
            categories: categories_to_records(&dataset.categories),
        },
    )
}

/// Reads a dataset written by [`write_panoptic`], re-validating everything:
/// the raster/table bijection, declared areas, and category references.
pub fn read_panoptic(json_path: &Path) -> Result<PanopticDataset> {
    let doc: PanopticJson =
        serde_json::from_reader(open_input(json_path)?).map_err(Error::Json)?;
    let categories = categories_from_records(&doc.categories, json_path)?;
    let dir = png_dir(json_path)?;

    let mut images = Vec::new();
    for annotation in &doc.annotations {
        let image = doc
            .images
            .iter()
            .find(|i| i.id == annotation.image_id)
            .ok_or_else(|| {
                malformed(
                    json_path,
                    format!("annotation references unknown image id {}", annotation.image_id),
                )
            })?;
        let png_path = dir.join(&annotation.file_name);
        let (info, data) = decode_png(&png_path)?;
        if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
            return Err(malformed(
                &png_path,
                format!(
                    "id maps must be 8-bit RGB, found {:?} {:?}",
                    info.color_type, info.bit_depth
                ),
            ));
        }
        if (info.width, info.height) != (image.width, image.height) {
            return Err(Error::DimensionMismatch {
                expected_w: image.width as usize,
                expected_h: image.height as usize,
                got_w: info.width as usize,
                got_h: info.height as usize,
            });
        }
        let segments = annotation
            .segments_info
            .iter()
            .map(|s| {
                if !categories.contains(s.category_id) {
                    return Err(Error::UnknownCategory { id: s.category_id });
                }
                Ok(SegmentInfo {
                    id: s.id,
                    category_id: s.category_id,
                    area: s.area,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        // PanopticMap::new enforces the bijection and the declared areas.
        let map = PanopticMap::new(
            image.width as usize,
            image.height as usize,
            decode_segment_ids(&data),
            segments,
        )?;
        let name = annotation
            .file_name
            .strip_suffix(".png")
            .unwrap_or(&annotation.file_name)
            .to_string();
        images.push((name, map));
    }
    Ok(PanopticDataset { categories, images })
}

// ── Instance manifest ───────────────────────────────────────────────────────

/// Mask payload in a manifest: inline runs or a PNG path.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum MaskRef {
    Rle { rle: Vec<u32> },
    Png { png: String },
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestInstance {
    category_id: u32,
    score: f32,
    mask: MaskRef,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestImage {
    file_name: String,
    width: u32,
    height: u32,
    instances: Vec<ManifestInstance>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestJson {
    categories: Vec<CategoryRecord>,
    images: Vec<ManifestImage>,
}

/// Decoded detections for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceImage {
    /// RGB image file name, relative to wherever the caller keeps images.
    pub file_name: String,
    pub width: usize,
    pub height: usize,
    pub instances: Vec<InstancePrediction>,
}

/// A parsed instance manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceDataset {
    pub categories: CategoryTable,
    pub images: Vec<InstanceImage>,
}

/// Reads an instance manifest (see the module docs for the schema),
/// decoding every mask and validating scores, categories, and dimensions.
/// PNG mask paths resolve relative to the manifest's directory.
pub fn read_instances(manifest_path: &Path) -> Result<InstanceDataset> {
    let doc: ManifestJson =
        serde_json::from_reader(open_input(manifest_path)?).map_err(Error::Json)?;
    let categories = categories_from_records(&doc.categories, manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new(""));

    let mut images = Vec::new();
    for image in &doc.images {
        let (width, height) = (image.width as usize, image.height as usize);
        let mut instances = Vec::new();
        for (index, instance) in image.instances.iter().enumerate() {
            if !categories.contains(instance.category_id) {
                return Err(Error::UnknownCategory {
                    id: instance.category_id,
                });
            }
            if !categories.is_thing(instance.category_id) {
                return Err(Error::NotAThing {
                    id: instance.category_id,
                });
            }
            let mask = match &instance.mask {
                MaskRef::Rle { rle } => BinaryMask::from_rle(width, height, rle)?,
                MaskRef::Png { png } => read_mask(&base.join(png), width, height)?,
            };
            instances.push(InstancePrediction::new(
                index as u32,
                mask,
                instance.score,
                instance.category_id,
            )?);
        }
        images.push(InstanceImage {
            file_name: image.file_name.clone(),
            width,
            height,
            instances,
        });
    }
    Ok(InstanceDataset { categories, images })
}

/// Writes a manifest with every mask inline as RLE (the PNG-path form is
/// read-only convenience for externally produced masks).
pub fn write_instances(dataset: &InstanceDataset, manifest_path: &Path) -> Result<()> {
    let doc = ManifestJson {
        categories: categories_to_records(&dataset.categories),
        images: dataset
            .images
            .iter()
            .map(|image| ManifestImage {
                file_name: image.file_name.clone(),
                width: image.width as u32,
                height: image.height as u32,
                instances: image
                    .instances
                    .iter()
                    .map(|p| ManifestInstance {
                        category_id: p.category_id,
                        score: p.score,
                        mask: MaskRef::Rle {
                            rle: p.mask.to_rle(),
                        },
                    })
                    .collect(),
            })
            .collect(),
    };
    write_json(manifest_path, &doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::TempDir;

    fn table() -> CategoryTable {
        CategoryTable::new(vec![
            Category {
                id: 1,
                name: "car".into(),
                is_thing: true,
            },
            Category {
                id: 10,
                name: "sky".into(),
                is_thing: false,
            },
        ])
        .unwrap()
    }

    #[test]
    fn rgb_round_trip_is_identity() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("img.png");
        let data: Vec<u8> = (0..4 * 3 * 3).map(|i| (i * 7 % 256) as u8).collect();
        let image = RgbImage::from_raw(4, 3, data).unwrap();
        write_rgb(&path, &image).unwrap();
        assert_eq!(read_rgb(&path).unwrap(), image);
    }

    #[test]
    fn rgb_reader_rejects_grayscale() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("gray.png");
        encode_png(
            &path,
            2,
            2,
            png::ColorType::Grayscale,
            png::BitDepth::Eight,
            &[0, 1, 2, 3],
        )
        .unwrap();
        assert!(matches!(
            read_rgb(&path),
            Err(Error::MalformedFile { .. })
        ));
    }

    #[test]
    fn missing_file_error_names_the_path() {
        let err = read_rgb(Path::new("/nonexistent/nope.png")).unwrap_err();
        assert!(err.to_string().contains("nope.png"));
    }

    #[test]
    fn mask_round_trip_and_nonzero_threshold() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("mask.png");
        let mask =
            BinaryMask::from_bits(3, 2, vec![true, false, true, false, true, false]).unwrap();
        write_mask(&path, &mask).unwrap();
        assert_eq!(read_mask(&path, 3, 2).unwrap(), mask);

        // Any nonzero value is foreground, not just 255.
        let faint = dir.path().join("faint.png");
        encode_png(
            &faint,
            2,
            1,
            png::ColorType::Grayscale,
            png::BitDepth::Eight,
            &[7, 0],
        )
        .unwrap();
        let decoded = read_mask(&faint, 2, 1).unwrap();
        assert_eq!(decoded.bits(), &[true, false]);
    }

    #[test]
    fn mask_reader_checks_dimensions() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("mask.png");
        write_mask(&path, &BinaryMask::new(3, 2)).unwrap();
        assert!(matches!(
            read_mask(&path, 2, 3),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn semantic_round_trip_uses_16_bit_for_large_ids() {
        let mut categories = vec![Category {
            id: 300,
            name: "wide".into(),
            is_thing: false,
        }];
        categories.push(Category {
            id: 10,
            name: "sky".into(),
            is_thing: false,
        });
        let table = CategoryTable::new(categories).unwrap();
        let map = SemanticMap::new(2, 2, vec![300, 10, 0, 300], table.clone()).unwrap();

        let dir = TempDir::new().unwrap();
        let path = dir.path().join("sem.png");
        write_semantic(&path, &map).unwrap();
        assert_eq!(read_semantic(&path, &table).unwrap(), map);

        // Small ids take the 8-bit path and round trip as well.
        let small = SemanticMap::new(2, 1, vec![10, 0], table.clone()).unwrap();
        let path8 = dir.path().join("sem8.png");
        write_semantic(&path8, &small).unwrap();
        assert_eq!(read_semantic(&path8, &table).unwrap(), small);
    }

    #[test]
    fn semantic_reader_rejects_undeclared_labels() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("sem.png");
        encode_png(
            &path,
            2,
            1,
            png::ColorType::Grayscale,
            png::BitDepth::Eight,
            &[99, 0],
        )
        .unwrap();
        assert!(matches!(
            read_semantic(&path, &table()),
            Err(Error::UnknownCategory { id: 99 })
        ));
    }

    #[test]
    fn id_pixel_encoding_matches_the_base_256_rule() {
        // (R, G, B) = (1, 1, 0) → 1 + 256·1 = 257.
        assert_eq!(decode_segment_ids(&[1, 1, 0]), vec![257]);
        assert_eq!(encode_segment_ids(&[257]).unwrap(), vec![1, 1, 0]);
        // Round trip at the extremes of the 24-bit range.
        let ids = [0, 1, 255, 256, 65536, (1 << 24) - 1];
        assert_eq!(
            decode_segment_ids(&encode_segment_ids(&ids).unwrap()),
            ids.to_vec()
        );
        assert!(matches!(
            encode_segment_ids(&[1 << 24]),
            Err(Error::SegmentIdOverflow { id }) if id == 1 << 24
        ));
    }

    fn sample_dataset() -> PanopticDataset {
        let map = PanopticMap::new(
            3,
            2,
            vec![1, 1, 257, 257, 0, 2],
            vec![
                SegmentInfo {
                    id: 1,
                    category_id: 1,
                    area: 2,
                },
                SegmentInfo {
                    id: 2,
                    category_id: 10,
                    area: 1,
                },
                SegmentInfo {
                    id: 257,
                    category_id: 10,
                    area: 2,
                },
            ],
        )
        .unwrap();
        PanopticDataset {
            categories: table(),
            images: vec![("scene_000".into(), map)],
        }
    }

    #[test]
    fn panoptic_write_read_is_identity() {
        let dir = TempDir::new().unwrap();
        let json_path = dir.path().join("panoptic.json");
        let dataset = sample_dataset();
        write_panoptic(&dataset, &json_path).unwrap();
        assert!(dir.path().join("panoptic/scene_000.png").exists());
        assert_eq!(read_panoptic(&json_path).unwrap(), dataset);
    }

    #[test]
    fn panoptic_writes_are_byte_deterministic() {
        let dir = TempDir::new().unwrap();
        let a = dir.path().join("a/panoptic.json");
        let b = dir.path().join("b/panoptic.json");
        let dataset = sample_dataset();
        write_panoptic(&dataset, &a).unwrap();
        write_panoptic(&dataset, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        assert_eq!(
            std::fs::read(dir.path().join("a/panoptic/scene_000.png")).unwrap(),
            std::fs::read(dir.path().join("b/panoptic/scene_000.png")).unwrap()
        );
    }

    #[test]
    fn tampered_area_is_rejected_on_read() {
        let dir = TempDir::new().unwrap();
        let json_path = dir.path().join("panoptic.json");
        write_panoptic(&sample_dataset(), &json_path).unwrap();

        let mut doc: serde_json::Value =
            serde_json::from_reader(File::open(&json_path).unwrap()).unwrap();
        doc["annotations"][0]["segments_info"][0]["area"] = 5.into();
        std::fs::write(&json_path, serde_json::to_string(&doc).unwrap()).unwrap();

        assert!(matches!(
            read_panoptic(&json_path),
            Err(Error::InconsistentPanoptic { .. })
        ));
    }

    #[test]
    fn unknown_annotation_category_is_rejected_on_read() {
        let dir = TempDir::new().unwrap();
        let json_path = dir.path().join("panoptic.json");
        write_panoptic(&sample_dataset(), &json_path).unwrap();

        let mut doc: serde_json::Value =
            serde_json::from_reader(File::open(&json_path).unwrap()).unwrap();
        doc["annotations"][0]["segments_info"][0]["category_id"] = 42.into();
        std::fs::write(&json_path, serde_json::to_string(&doc).unwrap()).unwrap();

        assert!(matches!(
            read_panoptic(&json_path),
            Err(Error::UnknownCategory { id: 42 })
        ));
    }

    fn write_manifest_json(dir: &Path, body: &str) -> PathBuf {
        let path = dir.join("instances.json");
        std::fs::write(&path, body).unwrap();
        path
    }

    #[test]
    fn manifest_inline_rle_decodes_to_run_sum() {
        let dir = TempDir::new().unwrap();
        let path = write_manifest_json(
            dir.path(),
            r#"{
              "categories": [{"id": 1, "name": "car", "isthing": 1}],
              "images": [{
                "file_name": "scene.png", "width": 4, "height": 4,
                "instances": [
                  {"category_id": 1, "score": 0.9, "mask": {"rle": [4, 8, 4]}}
                ]
              }]
            }"#,
        );
        let dataset = read_instances(&path).unwrap();
        assert_eq!(dataset.images.len(), 1);
        let image = &dataset.images[0];
        assert_eq!(image.instances.len(), 1);
        assert_eq!(image.instances[0].id, 0);
        assert_eq!(image.instances[0].mask.area(), 8);
        assert_eq!(image.instances[0].score, 0.9);
    }

    #[test]
    fn manifest_png_masks_resolve_relative_to_the_manifest() {
        let dir = TempDir::new().unwrap();
        let mask = BinaryMask::from_bits(2, 2, vec![true, true, false, false]).unwrap();
        write_mask(&dir.path().join("masks/m.png"), &mask).unwrap();
        let path = write_manifest_json(
            dir.path(),
            r#"{
              "categories": [{"id": 1, "name": "car", "isthing": 1}],
              "images": [{
                "file_name": "scene.png", "width": 2, "height": 2,
                "instances": [
                  {"category_id": 1, "score": 0.5, "mask": {"png": "masks/m.png"}}
                ]
              }]
            }"#,
        );
        let dataset = read_instances(&path).unwrap();
        assert_eq!(dataset.images[0].instances[0].mask, mask);
    }

    #[test]
    fn manifest_with_no_instances_yields_an_empty_list() {
        let dir = TempDir::new().unwrap();
        let path = write_manifest_json(
            dir.path(),
            r#"{
              "categories": [{"id": 1, "name": "car", "isthing": 1}],
              "images": [{
                "file_name": "scene.png", "width": 2, "height": 2,
                "instances": []
              }]
            }"#,
        );
        let dataset = read_instances(&path).unwrap();
        assert!(dataset.images[0].instances.is_empty());
    }

    #[test]
    fn manifest_rejects_bad_scores_and_stuff_instances() {
        let dir = TempDir::new().unwrap();
        let bad_score = write_manifest_json(
            dir.path(),
            r#"{
              "categories": [{"id": 1, "name": "car", "isthing": 1}],
              "images": [{
                "file_name": "scene.png", "width": 2, "height": 2,
                "instances": [
                  {"category_id": 1, "score": 1.5, "mask": {"rle": [0, 4]}}
                ]
              }]
            }"#,
        );
        assert!(matches!(
            read_instances(&bad_score),
            Err(Error::ScoreRange { .. })
        ));

        let stuff = write_manifest_json(
            dir.path(),
            r#"{
              "categories": [{"id": 10, "name": "sky", "isthing": 0}],
              "images": [{
                "file_name": "scene.png", "width": 2, "height": 2,
                "instances": [
                  {"category_id": 10, "score": 0.9, "mask": {"rle": [0, 4]}}
                ]
              }]
            }"#,
        );
        assert!(matches!(
            read_instances(&stuff),
            Err(Error::NotAThing { id: 10 })
        ));
    }

    #[test]
    fn manifest_rle_must_cover_the_image() {
        let dir = TempDir::new().unwrap();
        let path = write_manifest_json(
            dir.path(),
            r#"{
              "categories": [{"id": 1, "name": "car", "isthing": 1}],
              "images": [{
                "file_name": "scene.png", "width": 4, "height": 4,
                "instances": [
                  {"category_id": 1, "score": 0.9, "mask": {"rle": [4, 8]}}
                ]
              }]
            }"#,
        );
        assert!(matches!(
            read_instances(&path),
            Err(Error::RleCoverage { .. })
        ));
    }

    #[test]
    fn manifest_write_read_round_trips() {
        let dir = TempDir::new().unwrap();
        let mask = BinaryMask::from_bits(2, 2, vec![true, false, true, true]).unwrap();
        let dataset = InstanceDataset {
            categories: table(),
            images: vec![InstanceImage {
                file_name: "scene.png".into(),
                width: 2,
                height: 2,
                instances: vec![InstancePrediction::new(0, mask, 0.75, 1).unwrap()],
            }],
        };
        let path = dir.path().join("instances.json");
        write_instances(&dataset, &path).unwrap();
        assert_eq!(read_instances(&path).unwrap(), dataset);
    }
}
