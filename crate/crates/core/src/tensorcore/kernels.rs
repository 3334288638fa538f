//! Raw forward/backward kernels on flat slices. Images are HWC row-major.

use std::cell::RefCell;

/// Geometry of a valid, stride-1 2-D correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeometry {
    pub height: usize,
    pub width: usize,
    pub in_channels: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub filters: usize,
}

impl ConvGeometry {
    pub fn out_height(&self) -> usize {
        self.height - self.kernel_h + 1
    }

    pub fn out_width(&self) -> usize {
        self.width - self.kernel_w + 1
    }

    pub fn out_len(&self) -> usize {
        self.out_height() * self.out_width() * self.filters
    }
}

thread_local! {
    // Unfolded patches are megabytes at larger resolutions; reusing the
    // buffers avoids fresh page faults on every call.
    static COL: RefCell<Vec<f64>> = const { RefCell::new(Vec::new()) };
    static D_COL: RefCell<Vec<f64>> = const { RefCell::new(Vec::new()) };
}

/// Unfolds every receptive field into a row of `col`:
/// `[out_h * out_w, kh * kw * C]`.
fn im2col(g: &ConvGeometry, input: &[f64], col: &mut Vec<f64>) {
    let (oh, ow) = (g.out_height(), g.out_width());
    let row_len = g.kernel_w * g.in_channels;
    col.clear();
    for oy in 0..oh {
        for ox in 0..ow {
            for ky in 0..g.kernel_h {
                let start = ((oy + ky) * g.width + ox) * g.in_channels;
                col.extend_from_slice(&input[start..start + row_len]);
            }
        }
    }
}

/// `c[m×n] += a[m×k] · b[k×n]` with arbitrary row/column strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: usize,
    csa: usize,
    b: &[f64],
    rsb: usize,
    csb: usize,
    c: &mut [f64],
) {
    debug_assert!(c.len() >= m * n);
    // SAFETY: the strides and extents describe in-bounds views of `a`, `b`
    // and `c`, and `c` does not alias either input.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            1.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

pub fn conv2d_forward(g: &ConvGeometry, input: &[f64], kernels: &[f64], bias: &[f64]) -> Vec<f64> {
    let (p, f) = (g.out_height() * g.out_width(), g.filters);
    let k = g.kernel_h * g.kernel_w * g.in_channels;
    let mut out = Vec::with_capacity(p * f);
    for _ in 0..p {
        out.extend_from_slice(bias);
    }
    COL.with_borrow_mut(|col| {
        im2col(g, input, col);
        gemm(p, k, f, col, k, 1, kernels, f, 1, &mut out);
    });
    out
}

/// Accumulates gradients into `d_input` (when given), `d_kernels` and `d_bias`.
pub fn conv2d_backward(
    g: &ConvGeometry,
    input: &[f64],
    kernels: &[f64],
    d_out: &[f64],
    d_input: Option<&mut [f64]>,
    d_kernels: &mut [f64],
    d_bias: &mut [f64],
) {
    let (oh, ow, f) = (g.out_height(), g.out_width(), g.filters);
    let (p, row_len) = (oh * ow, g.kernel_w * g.in_channels);
    let k = g.kernel_h * row_len;
    for px in d_out.chunks_exact(f) {
        for (b, &d) in d_bias.iter_mut().zip(px) {
            *b += d;
        }
    }
    COL.with_borrow_mut(|col| {
        im2col(g, input, col);
        // dK = colᵀ · dOut
        gemm(k, p, f, col, 1, k, d_out, f, 1, d_kernels);
    });
    let Some(d_input) = d_input else {
        return;
    };
    D_COL.with_borrow_mut(|d_col| {
        // dcol = dOut · Kᵀ, folded back onto the input positions.
        d_col.clear();
        d_col.resize(p * k, 0.0);
        gemm(p, f, k, d_out, f, 1, kernels, 1, f, d_col);
        let mut rows = d_col.chunks_exact(row_len);
        for oy in 0..oh {
            for ox in 0..ow {
                for ky in 0..g.kernel_h {
                    let start = ((oy + ky) * g.width + ox) * g.in_channels;
                    let src = rows.next().expect("one row per receptive-field line");
                    for (di, &d) in d_input[start..start + row_len].iter_mut().zip(src) {
                        *di += d;
                    }
                }
            }
        }
    });
}

/// 2×2 stride-2 max pooling (floor on odd sizes). Returns values and the
/// flat input index each output came from (first maximum in scan order).
pub fn maxpool2x2_forward(input: &[f64], h: usize, w: usize, c: usize) -> (Vec<f64>, Vec<usize>) {
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(oh * ow * c);
    let mut arg = Vec::with_capacity(oh * ow * c);
    for oy in 0..oh {
        for ox in 0..ow {
            for ch in 0..c {
                let mut best_idx = ((2 * oy) * w + 2 * ox) * c + ch;
                let mut best = input[best_idx];
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let idx = ((2 * oy + dy) * w + 2 * ox + dx) * c + ch;
                    if input[idx] > best {
                        best = input[idx];
                        best_idx = idx;
                    }
                }
                out.push(best);
                arg.push(best_idx);
            }
        }
    }
    (out, arg)
}

pub fn dense_forward(x: &[f64], weights: &[f64], bias: &[f64]) -> Vec<f64> {
    let m = bias.len();
    let mut out = bias.to_vec();
    for (&xi, row) in x.iter().zip(weights.chunks_exact(m)) {
        for (o, &w) in out.iter_mut().zip(row) {
            *o += xi * w;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn conv_matches_direct_sum() {
        let g = ConvGeometry {
            height: 5,
            width: 4,
            in_channels: 2,
            kernel_h: 3,
            kernel_w: 2,
            filters: 3,
        };
        let input: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
        let kernels: Vec<f64> = (0..36).map(|i| (i as f64 * 0.11).cos()).collect();
        let bias = [0.1, -0.2, 0.3];
        let out = conv2d_forward(&g, &input, &kernels, &bias);
        for oy in 0..3 {
            for ox in 0..3 {
                for f in 0..3 {
                    let mut want = bias[f];
                    for ky in 0..3 {
                        for kx in 0..2 {
                            for c in 0..2 {
                                want += input[((oy + ky) * 4 + ox + kx) * 2 + c]
                                    * kernels[((ky * 2 + kx) * 2 + c) * 3 + f];
                            }
                        }
                    }
                    assert!((out[(oy * 3 + ox) * 3 + f] - want).abs() < 1e-12);
                }
            }
        }
        let d_out: Vec<f64> = (0..27).map(|i| i as f64 * 0.1 - 1.0).collect();
        let (mut di, mut dk, mut db) = (vec![0.0; 40], vec![0.0; 36], vec![0.0; 3]);
        conv2d_backward(
            &g,
            &input,
            &kernels,
            &d_out,
            Some(&mut di),
            &mut dk,
            &mut db,
        );
        // <d_out, conv(x)> is linear in x; its input gradient is `di`.
        let lin = |x: &[f64]| dot(&conv2d_forward(&g, x, &kernels, &[0.0; 3]), &d_out);
        let mut e = vec![0.0; 40];
        for i in 0..40 {
            e[i] = 1.0;
            assert!((lin(&e) - di[i]).abs() < 1e-12);
            e[i] = 0.0;
        }
    }

    #[test]
    fn maxpool_ties_pick_first() {
        let (v, a) = maxpool2x2_forward(&[2.0, 2.0, 2.0, 2.0], 2, 2, 1);
        assert_eq!(v, vec![2.0]);
        assert_eq!(a, vec![0]);
    }
}
