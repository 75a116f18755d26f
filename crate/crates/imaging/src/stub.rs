//! Deterministic offline backend.
//!
//! Outputs are test plumbing derived from sidecar label files or from a hash
//! of the image bytes. They carry no clinical meaning.

use std::path::{Path, PathBuf};

use base64::Engine;
use clinseek_core::names;
use clinseek_core::ErrorCode;
use image::imageops::FilterType;
use image::{DynamicImage, GrayImage, Luma};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value as Json;

use crate::constants::{
    anatomy, fit_within, HalfPlane, CHEST_LABELS, NO_ACUTE_FINDING, NO_FINDING, REPORT_THRESHOLD,
};
use crate::decode::{decode, read_bytes, SourceImage};
use crate::error::ImagingError;
use crate::sidecar::Sidecar;
use crate::wire::{
    BoundingBox, ConvertedImage, FindingProbabilities, FindingProbability, Grounding, ImageRequest,
    RenderedImage, Segmentation, StructureMask, WireResponse, XrayReport,
};

/// Handles wire requests locally, writing artifacts under `artifact_dir`.
#[derive(Debug, Clone)]
pub struct StubBackend {
    artifact_dir: PathBuf,
}

struct Input {
    source: SourceImage,
    sidecar: Option<Sidecar>,
}

fn to_json<T: serde::Serialize>(v: Result<T, ImagingError>) -> Result<Json, ImagingError> {
    v.map(|p| serde_json::to_value(p).expect("payload serializes"))
}

impl StubBackend {
    pub fn new(artifact_dir: impl Into<PathBuf>) -> Self {
        Self {
            artifact_dir: artifact_dir.into(),
        }
    }

    pub fn artifact_dir(&self) -> &Path {
        &self.artifact_dir
    }

    /// Serves one request body for `tool`; never fails at the transport level.
    pub fn handle(&self, tool: &str, body: &Json) -> WireResponse {
        let result = serde_json::from_value::<ImageRequest>(body.clone())
            .map_err(|e| ImagingError::new(ErrorCode::MalformedInput, e.to_string()))
            .and_then(|req| self.dispatch(tool, &req));
        match result {
            Ok(payload) => WireResponse {
                status: crate::wire::WireStatus::Ok,
                payload: Some(payload),
                error_code: None,
                message: None,
            },
            Err(e) => WireResponse::error(&e),
        }
    }

    fn dispatch(&self, tool: &str, req: &ImageRequest) -> Result<Json, ImagingError> {
        match tool {
            names::DICOM_PROCESSOR => to_json(self.dicom_processor(req)),
            names::IMAGE_VISUALIZER => to_json(self.image_visualizer(req)),
            names::CHEST_XRAY_CLASSIFIER => to_json(self.classify(req)),
            names::CHEST_XRAY_REPORT_GENERATOR => to_json(self.report(req)),
            names::XRAY_PHRASE_GROUNDING => to_json(self.ground(req)),
            names::CHEST_XRAY_SEGMENTATION => to_json(self.segment(req)),
            other => Err(ImagingError::new(
                ErrorCode::UnknownTool,
                format!("unknown imaging tool {other}"),
            )),
        }
    }

    fn input(&self, req: &ImageRequest) -> Result<Input, ImagingError> {
        match (&req.image_path, &req.image_base64) {
            (Some(path), None) => {
                let path = Path::new(path);
                let bytes = read_bytes(path)?;
                Ok(Input {
                    source: decode(&bytes)?,
                    sidecar: Sidecar::load_for(path)?,
                })
            }
            (None, Some(b64)) => {
                let bytes = base64::engine::general_purpose::STANDARD
                    .decode(b64)
                    .map_err(|e| ImagingError::unreadable(format!("invalid base64: {e}")))?;
                Ok(Input {
                    source: decode(&bytes)?,
                    sidecar: None,
                })
            }
            _ => Err(ImagingError::new(
                ErrorCode::MalformedInput,
                "exactly one of image_path and image_base64 is required",
            )),
        }
    }

    fn write_png(&self, image: &DynamicImage, name: &str) -> Result<String, ImagingError> {
        std::fs::create_dir_all(&self.artifact_dir)
            .map_err(|e| ImagingError::unavailable(format!("{}: {e}", self.artifact_dir.display())))?;
        let path = self.artifact_dir.join(name);
        image
            .save_with_format(&path, image::ImageFormat::Png)
            .map_err(|e| ImagingError::unavailable(format!("{}: {e}", path.display())))?;
        Ok(path.to_string_lossy().into_owned())
    }

    fn fitted(source: &SourceImage) -> DynamicImage {
        let (w, h) = fit_within(source.width(), source.height());
        if (w, h) == (source.width(), source.height()) {
            source.image.clone()
        } else {
            source.image.resize_exact(w, h, FilterType::Triangle)
        }
    }

    pub fn dicom_processor(&self, req: &ImageRequest) -> Result<ConvertedImage, ImagingError> {
        let input = self.input(req)?;
        if !input.source.is_dicom {
            return Err(ImagingError::unreadable("input is not a DICOM file"));
        }
        let png = Self::fitted(&input.source);
        let png_path = self.write_png(&png, &format!("{}.png", &input.source.digest[..16]))?;
        Ok(ConvertedImage {
            png_path,
            width: png.width(),
            height: png.height(),
            metadata: input.source.metadata,
        })
    }

    pub fn image_visualizer(&self, req: &ImageRequest) -> Result<RenderedImage, ImagingError> {
        let input = self.input(req)?;
        let view = Self::fitted(&input.source);
        let artifact_path = self.write_png(&view, &format!("{}.view.png", &input.source.digest[..16]))?;
        Ok(RenderedImage {
            artifact_path,
            width: view.width(),
            height: view.height(),
            source_width: input.source.width(),
            source_height: input.source.height(),
        })
    }

    fn probabilities(input: &Input) -> FindingProbabilities {
        let findings = match &input.sidecar {
            Some(sc) => CHEST_LABELS
                .iter()
                .map(|l| FindingProbability {
                    label: l.to_string(),
                    probability: sc.probability(l).unwrap_or(0.0),
                })
                .collect(),
            None => {
                let seed_bytes: [u8; 32] = hex::decode(&input.source.digest)
                    .expect("digest is hex")
                    .try_into()
                    .expect("sha256 is 32 bytes");
                let mut rng = ChaCha8Rng::from_seed(seed_bytes);
                CHEST_LABELS
                    .iter()
                    .map(|l| FindingProbability {
                        label: l.to_string(),
                        probability: (rng.gen::<f64>() * 1e4).round() / 1e4,
                    })
                    .collect()
            }
        };
        FindingProbabilities { findings }
    }

    pub fn classify(&self, req: &ImageRequest) -> Result<FindingProbabilities, ImagingError> {
        Ok(Self::probabilities(&self.input(req)?))
    }

    pub fn report(&self, req: &ImageRequest) -> Result<XrayReport, ImagingError> {
        let probs = Self::probabilities(&self.input(req)?);
        Ok(report_from(&probs))
    }

    pub fn ground(&self, req: &ImageRequest) -> Result<Grounding, ImagingError> {
        let phrase = req.phrase.clone().unwrap_or_default();
        if phrase.trim().is_empty() {
            return Err(ImagingError::new(ErrorCode::EmptyQuery, "phrase is empty"));
        }
        let input = self.input(req)?;
        let (w, h) = (input.source.width() as f64, input.source.height() as f64);
        let boxes = input
            .sidecar
            .as_ref()
            .and_then(|sc| sc.phrase_box(&phrase))
            .map(|[x, y, bw, bh, c]| {
                let x = x.clamp(0.0, w);
                let y = y.clamp(0.0, h);
                BoundingBox {
                    x,
                    y,
                    w: bw.min(w - x),
                    h: bh.min(h - y),
                    confidence: c,
                }
            })
            .into_iter()
            .collect();
        Ok(Grounding {
            phrase,
            image_width: input.source.width(),
            image_height: input.source.height(),
            boxes,
        })
    }

    pub fn segment(&self, req: &ImageRequest) -> Result<Segmentation, ImagingError> {
        let requested = req.structures.clone().unwrap_or_default();
        if requested.is_empty() {
            return Err(ImagingError::new(
                ErrorCode::InvalidArguments,
                "at least one structure is required",
            ));
        }
        let resolved = requested
            .iter()
            .map(|s| {
                anatomy(s).ok_or_else(|| {
                    ImagingError::new(ErrorCode::UnknownStructure, format!("unknown structure {s:?}"))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let input = self.input(req)?;
        let (w, h) = (input.source.width(), input.source.height());
        let mut masks = Vec::with_capacity(resolved.len());
        for (name, plane) in resolved {
            let inside = |x: u32, y: u32| match plane {
                HalfPlane::Left => x < w / 2,
                HalfPlane::Right => x >= w / 2,
                HalfPlane::Top => y < h / 2,
                HalfPlane::Bottom => y >= h / 2,
            };
            let mask = GrayImage::from_fn(w, h, |x, y| Luma([if inside(x, y) { 255 } else { 0 }]));
            let area = mask.pixels().filter(|p| p.0[0] > 0).count() as u64;
            let file = format!("{}.{}.mask.png", &input.source.digest[..16], name.replace(' ', "_"));
            let mask_path = self.write_png(&DynamicImage::ImageLuma8(mask), &file)?;
            masks.push(StructureMask {
                structure: name.to_string(),
                mask_path,
                area_pixels: area,
            });
        }
        Ok(Segmentation {
            image_width: w,
            image_height: h,
            masks,
        })
    }
}

/// Template report: every finding above the threshold is named in the
/// impression; otherwise the impression is [`NO_ACUTE_FINDING`].
pub fn report_from(probs: &FindingProbabilities) -> XrayReport {
    let positive: Vec<&FindingProbability> = probs
        .findings
        .iter()
        .filter(|f| f.label != NO_FINDING && f.probability > REPORT_THRESHOLD)
        .collect();
    if positive.is_empty() {
        return XrayReport {
            findings: "No finding exceeds the reporting threshold.".to_string(),
            impression: NO_ACUTE_FINDING.to_string(),
        };
    }
    let findings = positive
        .iter()
        .map(|f| format!("{} (probability {:.2}).", f.label, f.probability))
        .collect::<Vec<_>>()
        .join(" ");
    let names: Vec<String> = positive.iter().map(|f| f.label.to_lowercase()).collect();
    XrayReport {
        findings,
        impression: format!("Findings consistent with {}.", names.join(", ")),
    }
}
