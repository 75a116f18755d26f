use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use clinseek_core::names;
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::de::DeserializeOwned;
use serde_json::Value as Json;

use crate::constants::DEFAULT_INFLIGHT;
use crate::error::ImagingError;
use crate::stub::StubBackend;
use crate::wire::{
    ConvertedImage, FindingProbabilities, Grounding, ImageRequest, RenderedImage, Segmentation,
    WireResponse, XrayReport,
};
use clinseek_core::ErrorCode;

/// Transport for wire requests.
pub trait ImagingBackend: Send + Sync {
    /// Sends one request body to `tool` and returns the response envelope.
    fn invoke(&self, tool: &str, request: &Json) -> Result<WireResponse, ImagingError>;
}

impl ImagingBackend for StubBackend {
    fn invoke(&self, tool: &str, request: &Json) -> Result<WireResponse, ImagingError> {
        Ok(self.handle(tool, request))
    }
}

/// POSTs to `{base}/tools/<tool>`.
pub struct RemoteBackend {
    base: String,
    client: Client,
}

impl RemoteBackend {
    pub fn new(base: &str, timeout: Duration) -> Result<Self, ImagingError> {
        let client = Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ImagingError::unavailable(e.to_string()))?;
        Ok(Self {
            base: base.trim_end_matches('/').to_string(),
            client,
        })
    }
}

impl ImagingBackend for RemoteBackend {
    fn invoke(&self, tool: &str, request: &Json) -> Result<WireResponse, ImagingError> {
        let url = format!("{}/tools/{tool}", self.base);
        let resp = self
            .client
            .post(&url)
            .json(request)
            .send()
            .map_err(|e| ImagingError::unavailable(format!("{url}: {e}")))?;
        let status = resp.status();
        if status == StatusCode::PAYLOAD_TOO_LARGE {
            return Err(ImagingError::new(ErrorCode::RequestTooLarge, format!("{url}: HTTP 413")));
        }
        let text = resp
            .text()
            .map_err(|e| ImagingError::unavailable(format!("{url}: {e}")))?;
        serde_json::from_str(&text).map_err(|_| {
            ImagingError::unavailable(format!("{url}: HTTP {status} with non-contract body"))
        })
    }
}

/// Counting gate limiting concurrent backend requests.
#[derive(Debug)]
struct Gate {
    cap: usize,
    state: Mutex<(usize, usize)>,
    freed: Condvar,
}

impl Gate {
    fn enter(&self) -> GateGuard<'_> {
        let mut s = self.state.lock().unwrap_or_else(|p| p.into_inner());
        while s.0 >= self.cap {
            s = self.freed.wait(s).unwrap_or_else(|p| p.into_inner());
        }
        s.0 += 1;
        s.1 = s.1.max(s.0);
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a Gate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        let mut s = self.0.state.lock().unwrap_or_else(|p| p.into_inner());
        s.0 -= 1;
        self.0.freed.notify_one();
    }
}

/// Typed access to the six imaging tools over any backend.
#[derive(Clone)]
pub struct ImagingClient {
    backend: Arc<dyn ImagingBackend>,
    gate: Arc<Gate>,
}

impl ImagingClient {
    pub fn new(backend: Arc<dyn ImagingBackend>, max_in_flight: usize) -> Self {
        Self {
            backend,
            gate: Arc::new(Gate {
                cap: max_in_flight.max(1),
                state: Mutex::new((0, 0)),
                freed: Condvar::new(),
            }),
        }
    }

    pub fn stub(artifact_dir: impl Into<std::path::PathBuf>) -> Self {
        Self::new(Arc::new(StubBackend::new(artifact_dir)), DEFAULT_INFLIGHT)
    }

    /// Highest number of simultaneous backend requests seen so far.
    pub fn peak_in_flight(&self) -> usize {
        self.gate.state.lock().unwrap_or_else(|p| p.into_inner()).1
    }

    /// Sends a request and returns the raw payload.
    pub fn call_raw(&self, tool: &str, request: &ImageRequest) -> Result<Json, ImagingError> {
        let body = serde_json::to_value(request).expect("request serializes");
        let _slot = self.gate.enter();
        self.backend.invoke(tool, &body)?.into_result()
    }

    fn call<T: DeserializeOwned>(&self, tool: &str, request: &ImageRequest) -> Result<T, ImagingError> {
        let payload = self.call_raw(tool, request)?;
        serde_json::from_value(payload)
            .map_err(|e| ImagingError::unavailable(format!("{tool}: payload violates contract: {e}")))
    }

    pub fn dicom_processor(&self, req: &ImageRequest) -> Result<ConvertedImage, ImagingError> {
        self.call(names::DICOM_PROCESSOR, req)
    }

    pub fn image_visualizer(&self, req: &ImageRequest) -> Result<RenderedImage, ImagingError> {
        self.call(names::IMAGE_VISUALIZER, req)
    }

    pub fn chest_xray_classifier(&self, req: &ImageRequest) -> Result<FindingProbabilities, ImagingError> {
        self.call(names::CHEST_XRAY_CLASSIFIER, req)
    }

    pub fn chest_xray_report_generator(&self, req: &ImageRequest) -> Result<XrayReport, ImagingError> {
        self.call(names::CHEST_XRAY_REPORT_GENERATOR, req)
    }

    pub fn xray_phrase_grounding(&self, req: &ImageRequest) -> Result<Grounding, ImagingError> {
        self.call(names::XRAY_PHRASE_GROUNDING, req)
    }

    pub fn chest_xray_segmentation(&self, req: &ImageRequest) -> Result<Segmentation, ImagingError> {
        self.call(names::CHEST_XRAY_SEGMENTATION, req)
    }
}
