//! Dense optical flow and its encoding as model input.

mod farneback;

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::dataset::{FrameRef, ImageFrame};
use crate::error::{Error, Result};
use crate::imgproc::resize_bilinear;
use crate::tensorcore::{read_header, read_planes, write_header, write_planes, FORMAT_VERSION};

/// Displacements beyond ±FLOW_RANGE pixels saturate when encoded.
pub const FLOW_RANGE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams {
    pub levels: usize,
    pub pyr_scale: f64,
    pub window: usize,
    pub iterations: usize,
    pub poly_n: usize,
    pub poly_sigma: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            levels: 3,
            pyr_scale: 0.5,
            window: 15,
            iterations: 3,
            poly_n: 5,
            poly_sigma: 1.1,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        if self.levels < 1 {
            return Err(Error::invalid("flow pyramid needs at least one level"));
        }
        if !(self.pyr_scale > 0.0 && self.pyr_scale < 1.0) {
            return Err(Error::invalid(format!(
                "pyramid scale {} outside (0, 1)",
                self.pyr_scale
            )));
        }
        if self.window < 3 || self.window.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "flow window {} must be odd and ≥ 3",
                self.window
            )));
        }
        if self.poly_n < 1 || self.poly_sigma.is_nan() || self.poly_sigma <= 0.0 {
            return Err(Error::invalid(
                "polynomial neighbourhood and sigma must be positive",
            ));
        }
        Ok(())
    }
}

/// Per-pixel displacement (dx, dy) in pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub width: usize,
    pub height: usize,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
}

impl FlowField {
    pub fn zeros(width: usize, height: usize) -> Self {
        FlowField {
            width,
            height,
            dx: vec![0.0; width * height],
            dy: vec![0.0; width * height],
        }
    }

    pub fn uniform(width: usize, height: usize, dx: f64, dy: f64) -> Self {
        FlowField {
            width,
            height,
            dx: vec![dx; width * height],
            dy: vec![dy; width * height],
        }
    }

    pub fn at(&self, x: usize, y: usize) -> (f64, f64) {
        let p = y * self.width + x;
        (self.dx[p], self.dy[p])
    }

    /// Resized field with displacements rescaled to the new pixel size.
    pub(crate) fn upsampled(&self, width: usize, height: usize) -> FlowField {
        let sx = width as f64 / self.width as f64;
        let sy = height as f64 / self.height as f64;
        let dx = resize_bilinear(&self.dx, self.width, self.height, 1, width, height);
        let dy = resize_bilinear(&self.dy, self.width, self.height, 1, width, height);
        FlowField {
            width,
            height,
            dx: dx.into_iter().map(|v| v * sx).collect(),
            dy: dy.into_iter().map(|v| v * sy).collect(),
        }
    }

    /// Two planes `[2, height, width]` (dx then dy) after the shared header.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        let values: Vec<f64> = self.dx.iter().chain(&self.dy).copied().collect();
        write_header(&mut buf, FORMAT_VERSION, 0)
            .and_then(|_| write_planes(&mut buf, &[2, self.height, self.width], &values))
            .map_err(|e| Error::io(path, e))?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let mut r = bytes.as_slice();
        read_header(&mut r, "flow file")?;
        let (shape, values) = read_planes(&mut r, "flow file")?;
        if shape.len() != 3 || shape[0] != 2 {
            return Err(Error::format(
                "flow file",
                format!("expected [2, h, w] planes, got {shape:?}"),
            ));
        }
        let n = shape[1] * shape[2];
        Ok(FlowField {
            width: shape[2],
            height: shape[1],
            dx: values[..n].to_vec(),
            dy: values[n..].to_vec(),
        })
    }
}

/// Dense Farnebäck flow from `prev` to `next`.
pub fn farneback_flow(
    prev: &ImageFrame,
    next: &ImageFrame,
    params: &FlowParams,
) -> Result<FlowField> {
    params.validate()?;
    if prev.channels() != 1 || next.channels() != 1 {
        return Err(Error::invalid("optical flow needs grayscale frames"));
    }
    if (prev.width(), prev.height()) != (next.width(), next.height()) {
        return Err(Error::shape(
            "farneback_flow",
            format!(
                "frames are {}×{} and {}×{}",
                prev.width(),
                prev.height(),
                next.width(),
                next.height()
            ),
        ));
    }
    Ok(farneback::farneback(
        prev.data(),
        next.data(),
        prev.width(),
        prev.height(),
        params,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FlowEncoding {
    /// Two channels, dx and dy each mapped from [-R, R] to [0, 1].
    #[default]
    TwoChannel,
    /// One channel, |d| mapped from [0, R] to [0, 1].
    Magnitude,
}

/// Encodes a flow field as a frame of `resolution`×`resolution`.
pub fn flow_to_frame(
    flow: &FlowField,
    resolution: usize,
    encoding: FlowEncoding,
    index: usize,
) -> Result<ImageFrame> {
    let enc = |d: f64| ((d + FLOW_RANGE) / (2.0 * FLOW_RANGE)).clamp(0.0, 1.0);
    let (channels, data) = match encoding {
        FlowEncoding::TwoChannel => (
            2,
            flow.dx
                .iter()
                .zip(&flow.dy)
                .flat_map(|(&x, &y)| [enc(x), enc(y)])
                .collect::<Vec<_>>(),
        ),
        FlowEncoding::Magnitude => (
            1,
            flow.dx
                .iter()
                .zip(&flow.dy)
                .map(|(x, y)| (x.hypot(*y) / FLOW_RANGE).clamp(0.0, 1.0))
                .collect(),
        ),
    };
    let frame = ImageFrame::new(flow.width, flow.height, channels, data, index)?;
    Ok(frame.resized(resolution, resolution))
}

/// Flow between consecutive frames of one stream: entry `t` encodes the
/// motion from frame `t` to frame `t + 1`.
pub fn flow_stream(
    frames: &[FrameRef],
    params: &FlowParams,
    resolution: usize,
    encoding: FlowEncoding,
) -> Result<Vec<FrameRef>> {
    if frames.len() < 2 {
        return Err(Error::InsufficientData(
            "flow needs at least two frames".into(),
        ));
    }
    (0..frames.len() - 1)
        .into_par_iter()
        .map(|t| {
            let flow = farneback_flow(&frames[t], &frames[t + 1], params)?;
            flow_to_frame(&flow, resolution, encoding, frames[t].index()).map(Arc::new)
        })
        .collect()
}
