#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stereosync::opticalflow::{farneback_flow, FlowParams};
use stereosync::{ImageFrame, Polarity, SEQUENCE_LEN};

/// Smooth random texture: a sum of sinusoids with 5-20 px wavelengths,
/// scaled into [0, 1]. Sampled at `(x - sx, y - sy)`, so the content moves
/// by `(sx, sy)`.
pub fn texture(size: usize, seed: u64, sx: f64, sy: f64) -> ImageFrame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<(f64, f64, f64, f64)> = (0..12)
        .map(|_| {
            let angle = rng.gen_range(0.0..std::f64::consts::TAU);
            let freq = std::f64::consts::TAU / rng.gen_range(5.0..20.0);
            (
                freq * angle.cos(),
                freq * angle.sin(),
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0.3..1.0),
            )
        })
        .collect();
    let total: f64 = waves.iter().map(|w| w.3).sum();
    let data = (0..size * size)
        .map(|i| {
            let (x, y) = ((i % size) as f64 - sx, (i / size) as f64 - sy);
            let v: f64 = waves
                .iter()
                .map(|(fx, fy, ph, a)| a * (fx * x + fy * y + ph).sin())
                .sum();
            0.5 + 0.5 * v / total
        })
        .collect();
    ImageFrame::new(size, size, 1, data, 0).unwrap()
}

/// Pixels this close to the edge are left out of flow scoring.
pub const BORDER: usize = 10;

/// Share of interior pixels whose estimated flow lies within 0.5 px of the
/// true shift of a `size`×`size` texture.
pub fn shift_recovery(size: usize, sx: f64, sy: f64, seed: u64) -> f64 {
    let prev = texture(size, seed, 0.0, 0.0);
    let next = texture(size, seed, sx, sy);
    let flow = farneback_flow(&prev, &next, &FlowParams::default()).unwrap();
    let mut good = 0;
    let mut total = 0;
    for y in BORDER..size - BORDER {
        for x in BORDER..size - BORDER {
            let (dx, dy) = flow.at(x, y);
            total += 1;
            if (dx - sx).hypot(dy - sy) <= 0.5 {
                good += 1;
            }
        }
    }
    good as f64 / total as f64
}

/// Counts each diagonal's votes by scanning every row for its own best
/// column, then orders candidates by (votes desc, |k| asc, k asc).
pub fn brute_force_delay(scores: &[f64], polarity: Polarity) -> i32 {
    let n = SEQUENCE_LEN;
    let better = |a: f64, b: f64| match polarity {
        Polarity::HigherIsMatch => a > b,
        Polarity::LowerIsMatch => a < b,
    };
    let mut candidates: Vec<(usize, i32)> = Vec::new();
    for k in -(n as i32 - 1)..=(n as i32 - 1) {
        let mut votes = 0;
        for i in 0..n {
            let row = &scores[i * n..(i + 1) * n];
            let mut best = 0;
            for j in 1..n {
                if better(row[j], row[best]) {
                    best = j;
                }
            }
            if i as i32 - best as i32 == k {
                votes += 1;
            }
        }
        candidates.push((votes, k));
    }
    candidates.sort_by_key(|&(v, k)| (std::cmp::Reverse(v), k.abs(), k));
    candidates[0].1
}

pub mod gradcheck;
