//! Pinned vocabularies and limits shared by every imaging backend.

/// Longest edge of any emitted PNG.
pub const MAX_EDGE: u32 = 1568;

/// Chest-pathology labels, in output order (the CheXpert label set).
pub const CHEST_LABELS: [&str; 14] = [
    "No Finding",
    "Enlarged Cardiomediastinum",
    "Cardiomegaly",
    "Lung Opacity",
    "Lung Lesion",
    "Edema",
    "Consolidation",
    "Pneumonia",
    "Atelectasis",
    "Pneumothorax",
    "Pleural Effusion",
    "Pleural Other",
    "Fracture",
    "Support Devices",
];

/// The label whose probability never counts as an abnormal finding.
pub const NO_FINDING: &str = "No Finding";

/// Findings strictly above this probability are reported in the impression.
pub const REPORT_THRESHOLD: f64 = 0.5;

pub const NO_ACUTE_FINDING: &str = "No acute cardiopulmonary abnormality.";

/// Sidecar label files sit next to the image: `a.dcm` -> `a.labels.json`.
pub const SIDECAR_EXTENSION: &str = "labels.json";

/// Structures accepted by segmentation, with the half-plane the stub masks.
/// Image coordinates: the patient's left lung appears on the image right.
pub const ANATOMY: [(&str, HalfPlane); 4] = [
    ("left lung", HalfPlane::Right),
    ("right lung", HalfPlane::Left),
    ("heart", HalfPlane::Bottom),
    ("mediastinum", HalfPlane::Top),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HalfPlane {
    Left,
    Right,
    Top,
    Bottom,
}

pub const DEFAULT_INFLIGHT: usize = 4;

pub(crate) fn normalize_label(s: &str) -> String {
    s.trim().replace(['_', '-'], " ").to_lowercase()
}

pub fn canonical_label(s: &str) -> Option<&'static str> {
    let n = normalize_label(s);
    CHEST_LABELS.iter().copied().find(|l| l.to_lowercase() == n)
}

pub fn anatomy(s: &str) -> Option<(&'static str, HalfPlane)> {
    let n = normalize_label(s);
    ANATOMY.iter().copied().find(|(name, _)| *name == n)
}

/// Output size that fits within [`MAX_EDGE`], preserving aspect ratio with
/// round-half-up on the short edge. Never upscales.
pub fn fit_within(width: u32, height: u32) -> (u32, u32) {
    let long = width.max(height);
    if long <= MAX_EDGE {
        return (width, height);
    }
    let scale = |short: u32| -> u32 {
        let v = (2 * short as u64 * MAX_EDGE as u64 + long as u64) / (2 * long as u64);
        (v as u32).max(1)
    };
    if width >= height {
        (MAX_EDGE, scale(height))
    } else {
        (scale(width), MAX_EDGE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_lookup() {
        assert_eq!(canonical_label("pleural_effusion"), Some("Pleural Effusion"));
        assert_eq!(canonical_label("PNEUMONIA"), Some("Pneumonia"));
        assert_eq!(canonical_label("flu"), None);
        assert_eq!(anatomy("Left_Lung").unwrap().0, "left lung");
    }

    #[test]
    fn fit_examples() {
        assert_eq!(fit_within(2048, 1536), (1568, 1176));
        assert_eq!(fit_within(1536, 2048), (1176, 1568));
        assert_eq!(fit_within(800, 600), (800, 600));
        assert_eq!(fit_within(1568, 1568), (1568, 1568));
        assert_eq!(fit_within(100_000, 1), (1568, 1));
    }
}
