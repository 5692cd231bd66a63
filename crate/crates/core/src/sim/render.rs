//! Synthetic fingertip images: a fixed textured background per finger plus a
//! Gaussian imprint whose height follows the normal force and whose width
//! follows the indentation depth `sqrt(force / stiffness)`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{ObjectSpec, SimError};
use crate::finger::FingerId;
use crate::tactile::TactileFrame;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub width: usize,
    pub height: usize,
    /// Channel increment at the imprint centre per newton, before sharpness.
    pub peak_gain: f64,
    /// Imprint standard deviation in pixels per `sqrt(N / (N/mm))`.
    pub radius_gain: f64,
    /// Additive per-channel noise, in 8-bit counts.
    pub noise_sd: f64,
    /// Relative imprint strength in R, G, B.
    pub tint: [f64; 3],
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            width: 24,
            height: 32,
            peak_gain: 8.0,
            radius_gain: 4.0,
            noise_sd: 0.1,
            tint: [1.0, 0.85, 0.7],
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.width == 0 || self.height == 0 {
            return Err(SimError::InvalidParameter(
                "image dimensions must be non-zero".into(),
            ));
        }
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.peak_gain)
            || !ok(self.radius_gain)
            || !ok(self.noise_sd)
            || !self.tint.iter().all(|&t| ok(t))
        {
            return Err(SimError::InvalidParameter(
                "render gains must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }

    fn imprint_centre(&self, finger: FingerId) -> (f64, f64) {
        let (dx, dy) = match finger {
            FingerId::Thumb => (0.3, -0.4),
            FingerId::Index => (-0.6, 0.2),
            FingerId::Middle => (0.1, 0.6),
            FingerId::Ring => (-0.3, -0.2),
        };
        (
            (self.width as f64 - 1.0) / 2.0 + dx,
            (self.height as f64 - 1.0) / 2.0 + dy,
        )
    }
}

/// Noise-free background colour of the gel at `(x, y)` for `finger`, in
/// whole counts.
pub fn baseline_pixel(finger: FingerId, x: usize, y: usize) -> [f64; 3] {
    let phase = finger.index() as f64 * 0.7;
    let (xf, yf) = (x as f64, y as f64);
    [
        70.0 + 12.0 * (0.45 * xf + phase).sin() + 6.0 * (0.3 * yf).cos(),
        60.0 + 10.0 * (0.35 * yf + phase).sin() + 5.0 * (0.5 * xf).cos(),
        80.0 + 8.0 * (0.25 * (xf + yf) + phase).sin(),
    ]
    .map(f64::round)
}

/// Render one fingertip image for the given normal force.
pub fn render_tactile<R: Rng + ?Sized>(
    finger: FingerId,
    force: f64,
    object: &ObjectSpec,
    cfg: &RenderConfig,
    timestamp: f64,
    rng: &mut R,
) -> TactileFrame {
    Renderer::new(cfg.clone()).render(finger, force, object, timestamp, rng)
}

/// Renderer with the background textures precomputed, for repeated use.
#[derive(Debug, Clone)]
pub struct Renderer {
    cfg: RenderConfig,
    textures: Vec<Vec<[f64; 3]>>,
}

impl Renderer {
    pub fn new(cfg: RenderConfig) -> Self {
        let textures = FingerId::ALL
            .iter()
            .map(|&f| {
                (0..cfg.height)
                    .flat_map(|y| (0..cfg.width).map(move |x| baseline_pixel(f, x, y)))
                    .collect()
            })
            .collect();
        Self { cfg, textures }
    }

    pub fn config(&self) -> &RenderConfig {
        &self.cfg
    }

    pub fn render<R: Rng + ?Sized>(
        &self,
        finger: FingerId,
        force: f64,
        object: &ObjectSpec,
        timestamp: f64,
        rng: &mut R,
    ) -> TactileFrame {
        let cfg = &self.cfg;
        let (w, h) = (cfg.width, cfg.height);
        let force = if force.is_finite() {
            force.max(0.0)
        } else {
            0.0
        };
        let peak = cfg.peak_gain * force * object.contact_sharpness;
        let spread = cfg.radius_gain * (force / object.stiffness).sqrt();
        let (cx, cy) = cfg.imprint_centre(finger);

        let profile = |n: usize, c: f64| -> Vec<f64> {
            if peak <= 0.0 || spread <= 0.0 {
                return vec![0.0; n];
            }
            let inv = 1.0 / (2.0 * spread * spread);
            (0..n)
                .map(|i| (-(i as f64 - c).powi(2) * inv).exp())
                .collect()
        };
        let gx = profile(w, cx);
        let gy = profile(h, cy);
        let texture = &self.textures[finger.index()];

        let mut pixels = Vec::with_capacity(w * h);
        for (y, &ey) in gy.iter().enumerate() {
            for (x, &ex) in gx.iter().enumerate() {
                let bump = peak * ex * ey;
                let base = texture[y * w + x];
                let mut px = [0u8; 3];
                for c in 0..3 {
                    let mut v = base[c] + cfg.tint[c] * bump;
                    if cfg.noise_sd > 0.0 {
                        let n: f64 = rng.sample(StandardNormal);
                        v += cfg.noise_sd * n;
                    }
                    px[c] = v.round().clamp(0.0, 255.0) as u8;
                }
                pixels.push(px);
            }
        }
        TactileFrame::new(finger, timestamp, w, h, pixels).expect("pixel count matches dimensions")
    }
}
