//! Two-frame dense flow by polynomial expansion.
//!
//! Each frame is locally approximated by `f(p) ≈ pᵀ A p + bᵀ p + c` with a
//! Gaussian-weighted least-squares fit. For a pure translation `d` between
//! the frames, `A d = -(b₂ - b₁) / 2`; with a prior estimate the second
//! frame's expansion is sampled at the displaced position and only the
//! residual is solved for. Constraints are averaged over a Gaussian window
//! and refined coarse-to-fine over an image pyramid.

use nalgebra::SMatrix;

use super::{FlowField, FlowParams};
use crate::imgproc::{convolve_separable, gaussian_kernel, resize_bilinear, sample_bilinear};

/// Pyramid levels smaller than this (in either dimension) are skipped.
const MIN_LEVEL_SIZE: usize = 32;

/// Expansion coefficients per pixel: bx, by, axx, ayy, axy (A is
/// `[[axx, axy], [axy, ayy]]`).
struct Expansion {
    width: usize,
    height: usize,
    planes: [Vec<f64>; 5],
}

fn expand(img: &[f64], width: usize, height: usize, n: usize, sigma: f64) -> Expansion {
    let g = gaussian_kernel(sigma, n);
    let offsets: Vec<f64> = (-(n as isize)..=n as isize).map(|k| k as f64).collect();

    // Normal matrix of the basis {1, x, y, x², y², xy} under weight g(x)g(y).
    let mut gram = SMatrix::<f64, 6, 6>::zeros();
    for (iy, &y) in offsets.iter().enumerate() {
        for (ix, &x) in offsets.iter().enumerate() {
            let w = g[ix] * g[iy];
            let basis = [1.0, x, y, x * x, y * y, x * y];
            for a in 0..6 {
                for b in 0..6 {
                    gram[(a, b)] += w * basis[a] * basis[b];
                }
            }
        }
    }
    let inv = gram
        .try_inverse()
        .expect("Gaussian-weighted normal matrix is positive definite");

    let clamp = |v: isize, len: usize| v.clamp(0, len as isize - 1) as usize;
    let r = n as isize;
    let npx = width * height;
    // Vertical moments: Σ g f, Σ y g f, Σ y² g f.
    let mut v = [vec![0.0; npx], vec![0.0; npx], vec![0.0; npx]];
    for y in 0..height {
        for x in 0..width {
            let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
            for (i, k) in (-r..=r).enumerate() {
                let f = img[clamp(y as isize + k, height) * width + x];
                let (gk, o) = (g[i], offsets[i]);
                s0 += gk * f;
                s1 += gk * o * f;
                s2 += gk * o * o * f;
            }
            let p = y * width + x;
            v[0][p] = s0;
            v[1][p] = s1;
            v[2][p] = s2;
        }
    }
    let mut planes: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; npx]);
    for y in 0..height {
        for x in 0..width {
            // Moments in basis order {1, x, y, x², y², xy}.
            let mut m = [0.0f64; 6];
            for (i, k) in (-r..=r).enumerate() {
                let p = y * width + clamp(x as isize + k, width);
                let (gk, o) = (g[i], offsets[i]);
                m[0] += gk * v[0][p];
                m[1] += gk * o * v[0][p];
                m[2] += gk * v[1][p];
                m[3] += gk * o * o * v[0][p];
                m[4] += gk * v[2][p];
                m[5] += gk * o * v[1][p];
            }
            let coef = |row: usize| (0..6).map(|c| inv[(row, c)] * m[c]).sum::<f64>();
            let p = y * width + x;
            planes[0][p] = coef(1);
            planes[1][p] = coef(2);
            planes[2][p] = coef(3);
            planes[3][p] = coef(4);
            planes[4][p] = coef(5) * 0.5;
        }
    }
    Expansion {
        width,
        height,
        planes,
    }
}

/// One refinement: builds per-pixel normal equations around the current
/// flow, averages them over the window and solves.
fn refine(e1: &Expansion, e2: &Expansion, flow: &mut FlowField, window: &[f64]) {
    let (w, h) = (e1.width, e1.height);
    let npx = w * h;
    let mut eq: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; npx]);
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            let (dx, dy) = (flow.dx[p], flow.dy[p]);
            let (sx, sy) = (x as f64 + dx, y as f64 + dy);
            let s2: [f64; 5] =
                std::array::from_fn(|c| sample_bilinear(&e2.planes[c], w, h, sx, sy));
            let axx = 0.5 * (e1.planes[2][p] + s2[2]);
            let ayy = 0.5 * (e1.planes[3][p] + s2[3]);
            let axy = 0.5 * (e1.planes[4][p] + s2[4]);
            let bx = -0.5 * (s2[0] - e1.planes[0][p]) + axx * dx + axy * dy;
            let by = -0.5 * (s2[1] - e1.planes[1][p]) + axy * dx + ayy * dy;
            // AᵀA and AᵀΔb for symmetric A.
            eq[0][p] = axx * axx + axy * axy;
            eq[1][p] = axy * (axx + ayy);
            eq[2][p] = axy * axy + ayy * ayy;
            eq[3][p] = axx * bx + axy * by;
            eq[4][p] = axy * bx + ayy * by;
        }
    }
    let eq: Vec<Vec<f64>> = eq
        .iter()
        .map(|plane| convolve_separable(plane, w, h, window))
        .collect();
    let [e0, e1, e2, e3, e4] = &eq[..] else {
        unreachable!("five equation planes")
    };
    for p in 0..npx {
        let (g11, g12, g22, h1, h2) = (e0[p], e1[p], e2[p], e3[p], e4[p]);
        let det = g11 * g22 - g12 * g12 + 1e-3;
        let dx = (g22 * h1 - g12 * h2) / det;
        let dy = (g11 * h2 - g12 * h1) / det;
        if dx.is_finite() && dy.is_finite() {
            flow.dx[p] = dx;
            flow.dy[p] = dy;
        }
    }
}

/// Pyramid level sizes from finest (the input) to coarsest.
fn level_sizes(width: usize, height: usize, params: &FlowParams) -> Vec<(usize, usize, f64)> {
    let mut sizes = vec![(width, height, 1.0)];
    let mut scale = 1.0;
    for _ in 1..params.levels {
        scale *= params.pyr_scale;
        let (lw, lh) = (
            (width as f64 * scale).round() as usize,
            (height as f64 * scale).round() as usize,
        );
        if lw < MIN_LEVEL_SIZE || lh < MIN_LEVEL_SIZE {
            break;
        }
        sizes.push((lw, lh, scale));
    }
    sizes
}

fn pyramid_level(
    img: &[f64],
    width: usize,
    height: usize,
    lw: usize,
    lh: usize,
    scale: f64,
) -> Vec<f64> {
    if lw == width && lh == height {
        return img.to_vec();
    }
    let sigma = (1.0 / scale - 1.0) * 0.5;
    let radius = ((sigma * 5.0).round() as usize | 1) / 2;
    let smoothed = convolve_separable(img, width, height, &gaussian_kernel(sigma, radius.max(1)));
    resize_bilinear(&smoothed, width, height, 1, lw, lh)
}

/// Flow from `prev` to `next` (both `width`×`height`, intensities in [0, 1]):
/// a pixel at `p` in `prev` appears at `p + flow(p)` in `next`.
pub fn farneback(
    prev: &[f64],
    next: &[f64],
    width: usize,
    height: usize,
    params: &FlowParams,
) -> FlowField {
    // Work on the 0-255 scale so the solver's regularizer has its usual weight.
    let prev: Vec<f64> = prev.iter().map(|v| v * 255.0).collect();
    let next: Vec<f64> = next.iter().map(|v| v * 255.0).collect();
    let half = params.window / 2;
    let window = gaussian_kernel(0.3 * half as f64, half);
    let sizes = level_sizes(width, height, params);
    let mut flow: Option<FlowField> = None;
    for &(lw, lh, scale) in sizes.iter().rev() {
        let p = pyramid_level(&prev, width, height, lw, lh, scale);
        let q = pyramid_level(&next, width, height, lw, lh, scale);
        let mut current = match flow.take() {
            None => FlowField::zeros(lw, lh),
            Some(coarse) => coarse.upsampled(lw, lh),
        };
        let e1 = expand(&p, lw, lh, params.poly_n, params.poly_sigma);
        let e2 = expand(&q, lw, lh, params.poly_n, params.poly_sigma);
        for _ in 0..params.iterations {
            refine(&e1, &e2, &mut current, &window);
        }
        flow = Some(current);
    }
    flow.expect("at least one pyramid level")
}
