//! JSON wire contract shared by every imaging backend.
//!
//! One endpoint per tool, `POST /tools/<tool name>`. The request body is an
//! [`ImageRequest`]; the response body is a [`WireResponse`] whose payload
//! deserializes into the tool's result type.

use std::collections::BTreeMap;

use clinseek_core::ErrorCode;
use serde::{Deserialize, Serialize};

use crate::error::ImagingError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ImageRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_base64: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phrase: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structures: Option<Vec<String>>,
}

impl ImageRequest {
    pub fn path(path: impl Into<String>) -> Self {
        Self {
            image_path: Some(path.into()),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WireStatus {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireResponse {
    pub status: WireStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_code: Option<ErrorCode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl WireResponse {
    pub fn ok<T: Serialize>(payload: &T) -> Self {
        Self {
            status: WireStatus::Ok,
            payload: Some(serde_json::to_value(payload).expect("payload serializes")),
            error_code: None,
            message: None,
        }
    }

    pub fn error(e: &ImagingError) -> Self {
        Self {
            status: WireStatus::Error,
            payload: None,
            error_code: Some(e.code),
            message: Some(e.message.clone()),
        }
    }

    pub fn into_result(self) -> Result<serde_json::Value, ImagingError> {
        match self.status {
            WireStatus::Ok => self
                .payload
                .ok_or_else(|| ImagingError::unavailable("ok response without payload")),
            WireStatus::Error => Err(ImagingError::new(
                self.error_code.unwrap_or(ErrorCode::BackendUnavailable),
                self.message.unwrap_or_default(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvertedImage {
    pub png_path: String,
    pub width: u32,
    pub height: u32,
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderedImage {
    pub artifact_path: String,
    pub width: u32,
    pub height: u32,
    pub source_width: u32,
    pub source_height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FindingProbability {
    pub label: String,
    pub probability: f64,
}

/// Fourteen entries in the order of [`crate::CHEST_LABELS`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FindingProbabilities {
    pub findings: Vec<FindingProbability>,
}

impl FindingProbabilities {
    pub fn get(&self, label: &str) -> Option<f64> {
        let label = crate::constants::canonical_label(label)?;
        self.findings
            .iter()
            .find(|f| f.label == label)
            .map(|f| f.probability)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XrayReport {
    pub findings: String,
    pub impression: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grounding {
    pub phrase: String,
    pub image_width: u32,
    pub image_height: u32,
    pub boxes: Vec<BoundingBox>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureMask {
    pub structure: String,
    pub mask_path: String,
    pub area_pixels: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    pub image_width: u32,
    pub image_height: u32,
    pub masks: Vec<StructureMask>,
}
