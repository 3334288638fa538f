//! Shared convolutional feature extractor:
//! Conv 32 → pool → Conv 48 → pool → Conv 48 → pool → Conv 64 → pool → GAP,
//! 3×3 kernels, stride 1, valid padding, ReLU after each convolution.

use rand_chacha::ChaCha8Rng;

use crate::dataset::ImageFrame;
use crate::error::{Error, Result};
use crate::tensorcore::{glorot_uniform, Graph, ParamSet, Tensor, Var};

pub const CONV_FILTERS: [usize; 4] = [32, 48, 48, 64];
pub const KERNEL: usize = 3;
pub const EMBEDDING_LEN: usize = 64;

/// Smallest square input that survives the four conv/pool stages.
pub const MIN_RESOLUTION: usize = 46;

fn kernel_name(layer: usize) -> String {
    format!("branch.conv{}.kernel", layer + 1)
}

fn bias_name(layer: usize) -> String {
    format!("branch.conv{}.bias", layer + 1)
}

/// Spatial size after each conv and pool stage for a square input, or an
/// error naming the stage that no longer fits.
pub fn shape_trace(resolution: usize) -> Result<Vec<usize>> {
    let mut size = resolution;
    let mut trace = Vec::with_capacity(8);
    for layer in 0..CONV_FILTERS.len() {
        if size < KERNEL {
            return Err(Error::shape(
                "cnn branch",
                format!(
                    "input {resolution}×{resolution} is too small: conv{} sees {size}×{size}",
                    layer + 1
                ),
            ));
        }
        size = size - KERNEL + 1;
        trace.push(size);
        if size < 2 {
            return Err(Error::shape(
                "cnn branch",
                format!(
                    "input {resolution}×{resolution} is too small: pool{} sees {size}×{size}",
                    layer + 1
                ),
            ));
        }
        size /= 2;
        trace.push(size);
    }
    Ok(trace)
}

pub fn init_params(params: &mut ParamSet, in_channels: usize, rng: &mut ChaCha8Rng) -> Result<()> {
    let mut c = in_channels;
    for (layer, &f) in CONV_FILTERS.iter().enumerate() {
        let fan_in = KERNEL * KERNEL * c;
        let fan_out = KERNEL * KERNEL * f;
        params.insert(
            kernel_name(layer),
            glorot_uniform(&[KERNEL, KERNEL, c, f], fan_in, fan_out, rng),
        )?;
        params.insert(bias_name(layer), Tensor::zeros(&[f]))?;
        c = f;
    }
    Ok(())
}

/// Input channel count recorded in the first kernel.
pub fn in_channels(params: &ParamSet) -> Result<usize> {
    Ok(params.get(&kernel_name(0))?.shape()[2])
}

/// Branch parameters bound onto one graph; every branch evaluation on that
/// graph reuses the same nodes, so gradients from all branches add up.
#[derive(Debug, Clone)]
pub struct BranchVars {
    layers: Vec<(Var, Var)>,
    in_channels: usize,
}

impl BranchVars {
    pub fn bind(graph: &mut Graph, params: &ParamSet) -> Result<Self> {
        let layers = (0..CONV_FILTERS.len())
            .map(|l| {
                Ok((
                    graph.param(params, &kernel_name(l))?,
                    graph.param(params, &bias_name(l))?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BranchVars {
            layers,
            in_channels: in_channels(params)?,
        })
    }

    pub fn forward(&self, graph: &mut Graph, frame: &ImageFrame) -> Result<Var> {
        if frame.channels() != self.in_channels {
            return Err(Error::shape(
                "cnn branch",
                format!(
                    "model expects {} channel(s), frame has {}",
                    self.in_channels,
                    frame.channels()
                ),
            ));
        }
        let mut x = graph.constant(frame.to_tensor());
        for &(k, b) in &self.layers {
            x = graph.conv2d(x, k, b)?;
            x = graph.relu(x);
            x = graph.maxpool2d(x)?;
        }
        graph.global_avg_pool(x)
    }
}
