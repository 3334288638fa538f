//! Procedural stereo scenes: a static noisy background, a drifting grating
//! and Gaussian blobs on smooth random trajectories, seen from two
//! viewpoints separated by a fixed horizontal pixel shift.

use std::f64::consts::TAU;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{FrameRef, ImageFrame};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    /// Horizontal shift between the two viewpoints, in pixels.
    pub disparity: usize,
    pub blobs: usize,
    /// Amplitude of the static per-pixel background noise.
    pub noise: f64,
    /// Multiplier on every temporal frequency.
    pub speed: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            width: 64,
            height: 64,
            frames: 120,
            disparity: 2,
            blobs: 5,
            noise: 0.05,
            speed: 1.0,
        }
    }
}

impl SceneConfig {
    pub fn with_resolution(mut self, resolution: usize) -> Self {
        self.width = resolution;
        self.height = resolution;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("scene resolution must be positive"));
        }
        if self.frames == 0 {
            return Err(Error::invalid("scene must have at least one frame"));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite())
            || !(self.speed > 0.0 && self.speed.is_finite())
        {
            return Err(Error::invalid("scene noise must be ≥ 0 and speed > 0"));
        }
        Ok(())
    }
}

/// Sum of a few sinusoids with random periods; smooth and aperiodic over
/// the stream lengths used here.
#[derive(Debug, Clone)]
struct Wave {
    terms: Vec<(f64, f64, f64)>,
}

impl Wave {
    fn random(rng: &mut ChaCha8Rng, min_period: f64, max_period: f64) -> Self {
        let terms = (0..3)
            .map(|k| {
                let amp = 1.0 / (1 + k) as f64;
                (
                    amp,
                    rng.gen_range(min_period..max_period),
                    rng.gen_range(0.0..TAU),
                )
            })
            .collect::<Vec<_>>();
        Wave { terms }
    }

    /// Roughly in [-1, 1].
    fn at(&self, t: f64) -> f64 {
        let norm: f64 = self.terms.iter().map(|t| t.0).sum();
        self.terms
            .iter()
            .map(|&(a, p, ph)| a * (TAU * t / p + ph).sin())
            .sum::<f64>()
            / norm
    }
}

#[derive(Debug, Clone)]
struct Blob {
    x: Wave,
    y: Wave,
    radius: Wave,
    gain: Wave,
    amplitude: f64,
}

#[derive(Debug)]
struct Scene {
    world_width: usize,
    width: usize,
    height: usize,
    background: Vec<f64>,
    grating_angle: Wave,
    grating_freq: Wave,
    grating_phase: Wave,
    grating_rate: f64,
    blobs: Vec<Blob>,
    speed: f64,
}

impl Scene {
    fn new(config: &SceneConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let world_width = config.width + config.disparity;
        let (w, h) = (config.width as f64, config.height as f64);
        let smooth: Vec<(f64, f64, f64, f64)> = (0..4)
            .map(|_| {
                (
                    rng.gen_range(0.5..2.5) / w,
                    rng.gen_range(0.5..2.5) / h,
                    rng.gen_range(0.0..TAU),
                    rng.gen_range(0.04..0.1),
                )
            })
            .collect();
        let mut background = Vec::with_capacity(world_width * config.height);
        for y in 0..config.height {
            for x in 0..world_width {
                let s: f64 = smooth
                    .iter()
                    .map(|&(fx, fy, ph, a)| a * (TAU * (fx * x as f64 + fy * y as f64) + ph).sin())
                    .sum();
                background.push(s + config.noise * rng.gen_range(-1.0..1.0));
            }
        }
        let blobs = (0..config.blobs)
            .map(|i| Blob {
                x: Wave::random(&mut rng, 20.0, 70.0),
                y: Wave::random(&mut rng, 20.0, 70.0),
                radius: Wave::random(&mut rng, 15.0, 50.0),
                gain: Wave::random(&mut rng, 10.0, 40.0),
                amplitude: if i % 2 == 0 { 1.0 } else { -1.0 } * rng.gen_range(0.25..0.4),
            })
            .collect();
        Scene {
            world_width,
            width: config.width,
            height: config.height,
            background,
            grating_angle: Wave::random(&mut rng, 40.0, 120.0),
            grating_freq: Wave::random(&mut rng, 30.0, 90.0),
            grating_phase: Wave::random(&mut rng, 15.0, 45.0),
            grating_rate: rng.gen_range(0.08..0.16),
            blobs,
            speed: config.speed,
        }
    }

    /// Renders the view whose left edge sits at world column `x0`.
    fn render(&self, t: usize, x0: usize) -> Vec<f64> {
        let t = t as f64 * self.speed;
        let (w, h) = (self.width as f64, self.height as f64);
        let angle = std::f64::consts::PI * self.grating_angle.at(t);
        let cycles = 3.0 + 1.5 * self.grating_freq.at(t);
        let phase = TAU * self.grating_rate * t + 2.0 * self.grating_phase.at(t);
        let (ca, sa) = (angle.cos() * cycles / w, angle.sin() * cycles / h);
        let blobs: Vec<(f64, f64, f64, f64)> = self
            .blobs
            .iter()
            .map(|b| {
                let cx = self.world_width as f64 * (0.5 + 0.4 * b.x.at(t));
                let cy = h * (0.5 + 0.4 * b.y.at(t));
                let r = w * (0.08 + 0.04 * b.radius.at(t));
                let a = b.amplitude * (0.75 + 0.25 * b.gain.at(t));
                (cx, cy, 1.0 / (2.0 * r * r), a)
            })
            .collect();
        let mut out = Vec::with_capacity(self.width * self.height);
        for y in 0..self.height {
            let fy = y as f64;
            for x in 0..self.width {
                let xw = x + x0;
                let fx = xw as f64;
                let mut v = 0.5 + self.background[y * self.world_width + xw];
                v += 0.12 * (TAU * (ca * fx + sa * fy) + phase).sin();
                for &(cx, cy, inv, a) in &blobs {
                    let d2 = (fx - cx) * (fx - cx) + (fy - cy) * (fy - cy);
                    v += a * (-d2 * inv).exp();
                }
                out.push(v.clamp(0.0, 1.0));
            }
        }
        out
    }
}

/// Renders `(left, right)` streams. The left view is the scene shifted by
/// `disparity` pixels relative to the right view; both are deterministic
/// per `seed`.
pub fn render_synthetic_stereo(
    config: &SceneConfig,
    seed: u64,
) -> Result<(Vec<FrameRef>, Vec<FrameRef>)> {
    config.validate()?;
    let scene = Scene::new(config, seed);
    let mut left = Vec::with_capacity(config.frames);
    let mut right = Vec::with_capacity(config.frames);
    for t in 0..config.frames {
        let l = scene.render(t, config.disparity);
        let r = scene.render(t, 0);
        left.push(Arc::new(ImageFrame::new(
            config.width,
            config.height,
            1,
            l,
            t,
        )?));
        right.push(Arc::new(ImageFrame::new(
            config.width,
            config.height,
            1,
            r,
            t,
        )?));
    }
    Ok((left, right))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SceneConfig {
        SceneConfig {
            width: 32,
            height: 32,
            frames: 12,
            ..SceneConfig::default()
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = render_synthetic_stereo(&small(), 4).unwrap();
        let b = render_synthetic_stereo(&small(), 4).unwrap();
        let c = render_synthetic_stereo(&small(), 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn zero_disparity_views_coincide() {
        let cfg = SceneConfig {
            disparity: 0,
            ..small()
        };
        let (l, r) = render_synthetic_stereo(&cfg, 1).unwrap();
        assert_eq!(l, r);
    }

    #[test]
    fn views_differ_by_horizontal_shift() {
        let cfg = SceneConfig {
            disparity: 3,
            ..small()
        };
        let (l, r) = render_synthetic_stereo(&cfg, 2).unwrap();
        let (lf, rf) = (l[5].data(), r[5].data());
        for y in 0..32 {
            for x in 0..29 {
                assert_eq!(lf[y * 32 + x], rf[y * 32 + x + 3]);
            }
        }
    }

    #[test]
    fn adjacent_frames_show_motion() {
        let (l, _) = render_synthetic_stereo(&small(), 3).unwrap();
        for pair in l.windows(2) {
            let changed = pair[0]
                .data()
                .iter()
                .zip(pair[1].data())
                .filter(|(a, b)| (*a - *b).abs() > 1e-3)
                .count();
            assert!(
                changed * 100 >= pair[0].data().len(),
                "only {changed} pixels changed"
            );
        }
    }

    #[test]
    fn rejects_degenerate_config() {
        assert!(render_synthetic_stereo(
            &SceneConfig {
                frames: 0,
                ..small()
            },
            0
        )
        .is_err());
        assert!(render_synthetic_stereo(
            &SceneConfig {
                width: 0,
                ..small()
            },
            0
        )
        .is_err());
    }
}
