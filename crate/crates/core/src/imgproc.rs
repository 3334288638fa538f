//! Small image helpers shared by the loaders, the flow estimator and the
//! synthetic renderer. Buffers are row-major HWC `f64`.

/// Bilinear resampling with pixel-center alignment and edge clamping.
pub fn resize_bilinear(
    src: &[f64],
    width: usize,
    height: usize,
    channels: usize,
    new_width: usize,
    new_height: usize,
) -> Vec<f64> {
    if width == new_width && height == new_height {
        return src.to_vec();
    }
    let sx = width as f64 / new_width as f64;
    let sy = height as f64 / new_height as f64;
    let mut out = Vec::with_capacity(new_width * new_height * channels);
    for y in 0..new_height {
        let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (height - 1) as f64);
        let y0 = fy.floor() as usize;
        let y1 = (y0 + 1).min(height - 1);
        let ty = fy - y0 as f64;
        for x in 0..new_width {
            let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (width - 1) as f64);
            let x0 = fx.floor() as usize;
            let x1 = (x0 + 1).min(width - 1);
            let tx = fx - x0 as f64;
            for c in 0..channels {
                let at = |xx: usize, yy: usize| src[(yy * width + xx) * channels + c];
                let top = at(x0, y0) * (1.0 - tx) + at(x1, y0) * tx;
                let bottom = at(x0, y1) * (1.0 - tx) + at(x1, y1) * tx;
                out.push(top * (1.0 - ty) + bottom * ty);
            }
        }
    }
    out
}

/// Samples a single-channel plane at a fractional position, clamping to the border.
pub fn sample_bilinear(plane: &[f64], width: usize, height: usize, x: f64, y: f64) -> f64 {
    let x = x.clamp(0.0, (width - 1) as f64);
    let y = y.clamp(0.0, (height - 1) as f64);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(width - 1);
    let y1 = (y0 + 1).min(height - 1);
    let tx = x - x0 as f64;
    let ty = y - y0 as f64;
    let top = plane[y0 * width + x0] * (1.0 - tx) + plane[y0 * width + x1] * tx;
    let bottom = plane[y1 * width + x0] * (1.0 - tx) + plane[y1 * width + x1] * tx;
    top * (1.0 - ty) + bottom * ty
}

/// Normalized 1-D Gaussian taps for offsets `-radius..=radius`.
pub fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let mut k: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= total);
    k
}

/// Separable correlation of a single-channel plane with replicated borders.
pub fn convolve_separable(plane: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; plane.len()];
    for y in 0..height {
        let row = &plane[y * width..(y + 1) * width];
        for x in 0..width {
            tmp[y * width + x] = kernel
                .iter()
                .enumerate()
                .map(|(i, k)| k * row[clamp(x as isize + i as isize - r, width)])
                .sum();
        }
    }
    let mut out = vec![0.0; plane.len()];
    for y in 0..height {
        for x in 0..width {
            out[y * width + x] = kernel
                .iter()
                .enumerate()
                .map(|(i, k)| k * tmp[clamp(y as isize + i as isize - r, height) * width + x])
                .sum();
        }
    }
    out
}
