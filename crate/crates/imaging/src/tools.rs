use clinseek_core::names;
use clinseek_core::{
    Arguments, ErrorCode, ImageRef, ParamType, ToolFailure, ToolOutput, ToolParam, ToolSchema,
};
use serde_json::Value as Json;

use crate::client::ImagingClient;
use crate::constants::ANATOMY;
use crate::wire::ImageRequest;

/// Image tools bound to one task's images, addressed by `image_id`.
#[derive(Clone)]
pub struct ImagingTools {
    client: ImagingClient,
    images: Vec<ImageRef>,
}

impl ImagingTools {
    pub fn new(client: ImagingClient, images: Vec<ImageRef>) -> Self {
        Self { client, images }
    }

    pub fn call(&self, name: &str, args: &Arguments) -> ToolOutput {
        let schema = tool_schemas()
            .into_iter()
            .find(|s| s.name == name)
            .ok_or_else(|| ToolFailure::new(ErrorCode::UnknownTool, format!("unknown tool {name}")))?;
        schema
            .check_arguments(args)
            .map_err(|m| ToolFailure::new(ErrorCode::InvalidArguments, m))?;
        let id = args.get("image_id").and_then(Json::as_str).unwrap_or_default();
        let image = self.images.iter().find(|i| i.image_id == id).ok_or_else(|| {
            let known: Vec<&str> = self.images.iter().map(|i| i.image_id.as_str()).collect();
            ToolFailure::new(
                ErrorCode::NotFound,
                format!("no image {id:?}; available: {}", known.join(", ")),
            )
        })?;
        let mut req = ImageRequest::path(image.path.to_string_lossy());
        req.phrase = args.get("phrase").and_then(Json::as_str).map(str::to_string);
        req.structures = args.get("structures").and_then(Json::as_array).map(|a| {
            a.iter()
                .filter_map(Json::as_str)
                .map(str::to_string)
                .collect()
        });
        let payload = self.client.call_raw(name, &req)?;
        Ok(serde_json::to_string_pretty(&payload).expect("payload serializes"))
    }
}

pub fn tool_schemas() -> Vec<ToolSchema> {
    use ParamType::*;
    let image = || ToolParam::required("image_id", String, "Image identifier from the task's image list.");
    let structures = ANATOMY.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ");
    vec![
        ToolSchema::new(
            names::DICOM_PROCESSOR,
            "Convert a DICOM image to PNG (longest edge at most 1568 px) and report its metadata.",
            vec![image()],
        ),
        ToolSchema::new(
            names::IMAGE_VISUALIZER,
            "Render an image for inspection and report its dimensions.",
            vec![image()],
        ),
        ToolSchema::new(
            names::CHEST_XRAY_CLASSIFIER,
            "Predict probabilities for 14 chest X-ray findings.",
            vec![image()],
        ),
        ToolSchema::new(
            names::CHEST_XRAY_REPORT_GENERATOR,
            "Generate structured chest X-ray findings and impression.",
            vec![image()],
        ),
        ToolSchema::new(
            names::XRAY_PHRASE_GROUNDING,
            "Ground a specified radiographic finding as bounding boxes.",
            vec![image(), ToolParam::required("phrase", String, "Finding to locate.")],
        ),
        ToolSchema::new(
            names::CHEST_XRAY_SEGMENTATION,
            "Segment anatomical structures in a chest radiograph.",
            vec![
                image(),
                ToolParam::required("structures", StringList, &format!("Any of: {structures}.")),
            ],
        ),
    ]
}
