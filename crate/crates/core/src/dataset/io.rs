use std::path::{Path, PathBuf};
use std::sync::Arc;

use image::{DynamicImage, GrayImage, Luma};

use super::{FrameRef, ImageFrame};
use crate::error::{Error, Result};

const EXTENSIONS: &[&str] = &["png", "pgm", "ppm", "pnm", "pbm"];

/// Image files in `dir`, sorted by file name.
pub fn list_image_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let known = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
        if path.is_file() && known {
            files.push(path);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

/// Loads every image in `dir` in file-name order as a grayscale frame of
/// `resolution`×`resolution`.
pub fn load_frames(dir: &Path, resolution: usize) -> Result<Vec<FrameRef>> {
    if resolution == 0 {
        return Err(Error::invalid("resolution must be positive"));
    }
    let files = list_image_files(dir)?;
    if files.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no image files in {}",
            dir.display()
        )));
    }
    files
        .iter()
        .enumerate()
        .map(|(i, path)| load_frame(path, resolution, i).map(Arc::new))
        .collect()
}

/// Loads `<root>/left` and `<root>/right`.
pub fn load_stereo_dir(root: &Path, resolution: usize) -> Result<(Vec<FrameRef>, Vec<FrameRef>)> {
    let left = load_frames(&root.join("left"), resolution)?;
    let right = load_frames(&root.join("right"), resolution)?;
    Ok((left, right))
}

fn load_frame(path: &Path, resolution: usize, index: usize) -> Result<ImageFrame> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = to_gray(img);
    let frame = ImageFrame::new(w, h, 1, data, index)?;
    Ok(frame.resized(resolution, resolution))
}

fn to_gray(img: DynamicImage) -> Vec<f64> {
    const R: f64 = 0.299;
    const G: f64 = 0.587;
    const B: f64 = 0.114;
    match img {
        DynamicImage::ImageLuma8(g) => g.into_raw().into_iter().map(|v| v as f64 / 255.0).collect(),
        DynamicImage::ImageLuma16(g) => g
            .into_raw()
            .into_iter()
            .map(|v| v as f64 / 65535.0)
            .collect(),
        DynamicImage::ImageLumaA8(g) => g
            .into_raw()
            .chunks_exact(2)
            .map(|p| p[0] as f64 / 255.0)
            .collect(),
        DynamicImage::ImageLumaA16(g) => g
            .into_raw()
            .chunks_exact(2)
            .map(|p| p[0] as f64 / 65535.0)
            .collect(),
        DynamicImage::ImageRgb16(_) | DynamicImage::ImageRgba16(_) => img
            .to_rgb16()
            .into_raw()
            .chunks_exact(3)
            .map(|p| {
                ((R * p[0] as f64 + G * p[1] as f64 + B * p[2] as f64) / 65535.0).clamp(0.0, 1.0)
            })
            .collect(),
        other => other
            .to_rgb8()
            .into_raw()
            .chunks_exact(3)
            .map(|p| {
                ((R * p[0] as f64 + G * p[1] as f64 + B * p[2] as f64) / 255.0).clamp(0.0, 1.0)
            })
            .collect(),
    }
}

/// Writes channel 0 of a frame as an 8-bit grayscale PNG.
pub fn write_frame_png(frame: &ImageFrame, path: &Path) -> Result<()> {
    let plane = frame.channel(0);
    let img = GrayImage::from_fn(frame.width() as u32, frame.height() as u32, |x, y| {
        let v = plane[y as usize * frame.width() + x as usize];
        Luma([(v * 255.0).round() as u8])
    });
    img.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `frames` as `frame_00000.png`, `frame_00001.png`, ... into `dir`.
pub fn save_frames(frames: &[FrameRef], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, frame) in frames.iter().enumerate() {
        write_frame_png(frame, &dir.join(format!("frame_{i:05}.png")))?;
    }
    Ok(())
}
