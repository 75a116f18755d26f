//! Reading DICOM and PNG inputs into 8-bit images.

use std::collections::BTreeMap;
use std::path::Path;

use dicom_dictionary_std::tags;
use dicom_object::{from_reader, DefaultDicomObject, Tag};
use image::{DynamicImage, GrayImage};
use sha2::{Digest, Sha256};

use crate::error::ImagingError;

const NATIVE_TRANSFER_SYNTAXES: [&str; 2] = ["1.2.840.10008.1.2", "1.2.840.10008.1.2.1"];

/// A decoded input image plus what is known about its source.
#[derive(Debug, Clone)]
pub struct SourceImage {
    pub image: DynamicImage,
    pub is_dicom: bool,
    pub metadata: BTreeMap<String, String>,
    /// Hex sha256 of the input bytes.
    pub digest: String,
}

impl SourceImage {
    pub fn width(&self) -> u32 {
        self.image.width()
    }

    pub fn height(&self) -> u32 {
        self.image.height()
    }
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, ImagingError> {
    std::fs::read(path).map_err(|e| ImagingError::unreadable(format!("{}: {e}", path.display())))
}

pub fn is_dicom(bytes: &[u8]) -> bool {
    bytes.len() >= 132 && &bytes[128..132] == b"DICM"
}

pub fn decode(bytes: &[u8]) -> Result<SourceImage, ImagingError> {
    if is_dicom(bytes) {
        decode_dicom(bytes)
    } else {
        let image = image::load_from_memory(bytes)
            .map_err(|e| ImagingError::unreadable(format!("not a DICOM or decodable image: {e}")))?;
        let mut metadata = BTreeMap::new();
        metadata.insert("rows".to_string(), image.height().to_string());
        metadata.insert("columns".to_string(), image.width().to_string());
        Ok(SourceImage {
            image,
            is_dicom: false,
            metadata,
            digest: digest(bytes),
        })
    }
}

fn text(obj: &DefaultDicomObject, tag: Tag) -> Option<String> {
    obj.element_opt(tag)
        .ok()
        .flatten()
        .and_then(|e| e.to_str().ok())
        .map(|s| s.trim().trim_end_matches('\0').to_string())
        .filter(|s| !s.is_empty())
}

fn int(obj: &DefaultDicomObject, tag: Tag, name: &str) -> Result<u32, ImagingError> {
    obj.element(tag)
        .map_err(|_| ImagingError::unreadable(format!("missing {name}")))?
        .to_int::<u32>()
        .map_err(|e| ImagingError::unreadable(format!("bad {name}: {e}")))
}

fn decode_dicom(bytes: &[u8]) -> Result<SourceImage, ImagingError> {
    let obj = from_reader(&bytes[128..])
        .map_err(|e| ImagingError::unreadable(format!("invalid DICOM: {e}")))?;
    let ts = obj.meta().transfer_syntax().trim_end_matches('\0');
    if !NATIVE_TRANSFER_SYNTAXES.contains(&ts) {
        return Err(ImagingError::unreadable(format!(
            "unsupported transfer syntax {ts}"
        )));
    }
    let rows = int(&obj, tags::ROWS, "Rows")?;
    let cols = int(&obj, tags::COLUMNS, "Columns")?;
    let bits = int(&obj, tags::BITS_ALLOCATED, "BitsAllocated")?;
    let samples = int(&obj, tags::SAMPLES_PER_PIXEL, "SamplesPerPixel").unwrap_or(1);
    let signed = int(&obj, tags::PIXEL_REPRESENTATION, "PixelRepresentation").unwrap_or(0) == 1;
    let photometric = text(&obj, tags::PHOTOMETRIC_INTERPRETATION).unwrap_or_else(|| "MONOCHROME2".into());
    if samples != 1 || !photometric.starts_with("MONOCHROME") {
        return Err(ImagingError::unreadable(format!(
            "unsupported pixel layout: {samples} samples, {photometric}"
        )));
    }
    let data = obj
        .element(tags::PIXEL_DATA)
        .map_err(|_| ImagingError::unreadable("missing PixelData"))?
        .to_bytes()
        .map_err(|e| ImagingError::unreadable(format!("bad PixelData: {e}")))?;
    let n = rows as usize * cols as usize;
    if n == 0 {
        return Err(ImagingError::unreadable("empty image"));
    }
    let values: Vec<f64> = match bits {
        8 if data.len() >= n => data[..n].iter().map(|&b| b as f64).collect(),
        16 if data.len() >= 2 * n => data[..2 * n]
            .chunks_exact(2)
            .map(|c| {
                let raw = u16::from_le_bytes([c[0], c[1]]);
                if signed {
                    raw as i16 as f64
                } else {
                    raw as f64
                }
            })
            .collect(),
        8 | 16 => return Err(ImagingError::unreadable("PixelData shorter than Rows x Columns")),
        other => {
            return Err(ImagingError::unreadable(format!(
                "unsupported BitsAllocated {other}"
            )))
        }
    };
    let (lo, hi) = values
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let invert = photometric == "MONOCHROME1";
    let pixels: Vec<u8> = values
        .iter()
        .map(|&v| {
            let g = ((v - lo) / span * 255.0).round() as u8;
            if invert {
                255 - g
            } else {
                g
            }
        })
        .collect();
    let gray = GrayImage::from_raw(cols, rows, pixels).expect("buffer sized from rows x cols");

    let mut metadata = BTreeMap::new();
    metadata.insert("rows".to_string(), rows.to_string());
    metadata.insert("columns".to_string(), cols.to_string());
    metadata.insert("bits_allocated".to_string(), bits.to_string());
    metadata.insert("photometric_interpretation".to_string(), photometric);
    for (key, tag) in [
        ("view_position", tags::VIEW_POSITION),
        ("modality", tags::MODALITY),
        ("study_instance_uid", tags::STUDY_INSTANCE_UID),
    ] {
        if let Some(v) = text(&obj, tag) {
            metadata.insert(key.to_string(), v);
        }
    }
    Ok(SourceImage {
        image: DynamicImage::ImageLuma8(gray),
        is_dicom: true,
        metadata,
        digest: digest(bytes),
    })
}
