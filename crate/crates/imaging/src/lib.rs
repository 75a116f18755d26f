//! The six chest X-ray tools as a typed client over a JSON wire contract.
//!
//! [`StubBackend`] serves the contract in-process and deterministically:
//! classifier and grounding outputs come from a sidecar label file next to
//! the image, or from a hash of the image bytes when there is none.
//! [`RemoteBackend`] sends the same requests to an HTTP service.

mod client;
mod constants;
mod decode;
mod error;
pub mod fixture;
mod sidecar;
mod stub;
mod tools;
mod wire;

pub use client::{ImagingBackend, ImagingClient, RemoteBackend};
pub use constants::{
    anatomy, canonical_label, fit_within, HalfPlane, ANATOMY, CHEST_LABELS, DEFAULT_INFLIGHT, MAX_EDGE,
    NO_ACUTE_FINDING, NO_FINDING, REPORT_THRESHOLD, SIDECAR_EXTENSION,
};
pub use decode::{decode, SourceImage};
pub use error::ImagingError;
pub use sidecar::{sidecar_path, Sidecar};
pub use stub::{report_from, StubBackend};
pub use tools::{tool_schemas, ImagingTools};
pub use wire::{
    BoundingBox, ConvertedImage, FindingProbabilities, FindingProbability, Grounding, ImageRequest,
    RenderedImage, Segmentation, StructureMask, WireResponse, WireStatus, XrayReport,
};
