use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constants::{canonical_label, normalize_label, SIDECAR_EXTENSION};
use crate::error::ImagingError;

/// Declared labels for a test image.
///
/// ```json
/// {"findings": {"Pneumonia": 0.9},
///  "phrases": {"left lower lobe opacity": [120, 340, 200, 150, 0.8]}}
/// ```
/// Phrase boxes are `[x, y, w, h, confidence]` in source-image pixels.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    #[serde(default)]
    pub findings: BTreeMap<String, f64>,
    #[serde(default)]
    pub phrases: BTreeMap<String, [f64; 5]>,
}

pub fn sidecar_path(image: &Path) -> PathBuf {
    image.with_extension(SIDECAR_EXTENSION)
}

impl Sidecar {
    /// The sidecar next to `image`, if there is one.
    pub fn load_for(image: &Path) -> Result<Option<Self>, ImagingError> {
        let path = sidecar_path(image);
        if !path.exists() {
            return Ok(None);
        }
        let raw = std::fs::read_to_string(&path)
            .map_err(|e| ImagingError::unreadable(format!("{}: {e}", path.display())))?;
        let sidecar: Sidecar = serde_json::from_str(&raw)
            .map_err(|e| ImagingError::unreadable(format!("{}: {e}", path.display())))?;
        sidecar
            .validate()
            .map_err(|m| ImagingError::unreadable(format!("{}: {m}", path.display())))?;
        Ok(Some(sidecar))
    }

    pub fn validate(&self) -> Result<(), String> {
        for (label, p) in &self.findings {
            if canonical_label(label).is_none() {
                return Err(format!("unknown finding label {label:?}"));
            }
            if !(0.0..=1.0).contains(p) {
                return Err(format!("probability for {label:?} outside [0, 1]"));
            }
        }
        for (phrase, b) in &self.phrases {
            if b.iter().any(|v| !v.is_finite()) || b[2] < 0.0 || b[3] < 0.0 {
                return Err(format!("invalid box for phrase {phrase:?}"));
            }
            if !(0.0..=1.0).contains(&b[4]) {
                return Err(format!("confidence for phrase {phrase:?} outside [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn probability(&self, label: &str) -> Option<f64> {
        self.findings
            .iter()
            .find(|(k, _)| canonical_label(k) == canonical_label(label))
            .map(|(_, p)| *p)
    }

    pub fn phrase_box(&self, phrase: &str) -> Option<[f64; 5]> {
        let want = normalize_label(phrase);
        self.phrases
            .iter()
            .find(|(k, _)| normalize_label(k) == want)
            .map(|(_, b)| *b)
    }

    pub fn write_for(&self, image: &Path) -> std::io::Result<PathBuf> {
        let path = sidecar_path(image);
        let json = serde_json::to_string_pretty(self).expect("sidecar serializes");
        std::fs::write(&path, json + "\n")?;
        Ok(path)
    }
}
