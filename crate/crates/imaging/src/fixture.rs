//! Synthetic DICOM and PNG inputs for tests and demos.

use std::path::Path;

use dicom_core::{DataElement, PrimitiveValue, VR};
use dicom_dictionary_std::{tags, uids};
use dicom_object::{FileMetaTableBuilder, InMemDicomObject};
use image::{GrayImage, Luma};

/// Writes a 16-bit monochrome DICOM with a diagonal gradient.
pub fn write_dicom(path: &Path, width: u16, height: u16, view: Option<&str>) -> Result<(), String> {
    let mut obj = InMemDicomObject::new_empty();
    let sop_instance = format!("2.25.{}{}", width, height);
    let put_str = |obj: &mut InMemDicomObject, tag, vr, v: &str| {
        obj.put(DataElement::new(tag, vr, PrimitiveValue::from(v)));
    };
    put_str(&mut obj, tags::SOP_CLASS_UID, VR::UI, uids::DIGITAL_X_RAY_IMAGE_STORAGE_FOR_PRESENTATION);
    put_str(&mut obj, tags::SOP_INSTANCE_UID, VR::UI, &sop_instance);
    put_str(&mut obj, tags::MODALITY, VR::CS, "DX");
    put_str(&mut obj, tags::PHOTOMETRIC_INTERPRETATION, VR::CS, "MONOCHROME2");
    if let Some(v) = view {
        put_str(&mut obj, tags::VIEW_POSITION, VR::CS, v);
    }
    let us = |obj: &mut InMemDicomObject, tag, v: u16| {
        obj.put(DataElement::new(tag, VR::US, PrimitiveValue::from(v)));
    };
    us(&mut obj, tags::SAMPLES_PER_PIXEL, 1);
    us(&mut obj, tags::ROWS, height);
    us(&mut obj, tags::COLUMNS, width);
    us(&mut obj, tags::BITS_ALLOCATED, 16);
    us(&mut obj, tags::BITS_STORED, 12);
    us(&mut obj, tags::HIGH_BIT, 11);
    us(&mut obj, tags::PIXEL_REPRESENTATION, 0);
    let span = (width as u32 + height as u32).max(1);
    let pixels: Vec<u16> = (0..height as u32)
        .flat_map(|y| (0..width as u32).map(move |x| ((x + y) * 4095 / span) as u16))
        .collect();
    obj.put(DataElement::new(
        tags::PIXEL_DATA,
        VR::OW,
        PrimitiveValue::U16(pixels.into()),
    ));
    let file = obj
        .with_meta(
            FileMetaTableBuilder::new()
                .transfer_syntax(uids::EXPLICIT_VR_LITTLE_ENDIAN)
                .media_storage_sop_class_uid(uids::DIGITAL_X_RAY_IMAGE_STORAGE_FOR_PRESENTATION)
                .media_storage_sop_instance_uid(&sop_instance),
        )
        .map_err(|e| e.to_string())?;
    file.write_to_file(path).map_err(|e| e.to_string())
}

/// Writes an 8-bit grayscale PNG with a gradient.
pub fn write_png(path: &Path, width: u32, height: u32) -> Result<(), String> {
    let img = GrayImage::from_fn(width, height, |x, y| Luma([((x * 7 + y * 3) % 256) as u8]));
    img.save(path).map_err(|e| e.to_string())
}
