//! Independent reference implementations shared by the integration tests.
//! Each is written directly from the defining formula, without calling into
//! the library.
#![allow(dead_code)]

use hapgrip_core::tactile::TactileFrame;
use hapgrip_core::FingerId;
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleMetrics {
    pub mu_x: f64,
    pub mu_y: f64,
    pub sigma: f64,
    pub threshold: f64,
    pub eda: u32,
    pub cci: f64,
}

/// Contact metrics of `frame` against the mean of `baseline`, computed in one
/// pass of plain loops. `None` means no contact.
pub fn oracle_metrics(
    baseline: &[Vec<[u8; 3]>],
    frame: &[[u8; 3]],
    w: usize,
    h: usize,
) -> Option<OracleMetrics> {
    let k = baseline.len() as f64;
    let mut intensity = vec![0.0f64; w * h];
    for i in 0..w * h {
        let mut d = [0.0f64; 3];
        for c in 0..3 {
            let mut sum = 0.0;
            for b in baseline {
                sum += b[i][c] as f64;
            }
            let mean = sum / k;
            let diff = frame[i][c] as f64 - mean;
            d[c] = if diff > 0.0 { diff } else { 0.0 };
        }
        intensity[i] = 0.299 * d[0] + 0.587 * d[1] + 0.114 * d[2];
    }

    let mut mass = 0.0;
    let mut sx = 0.0;
    let mut sy = 0.0;
    for y in 0..h {
        for x in 0..w {
            let v = intensity[y * w + x];
            mass += v;
            sx += x as f64 * v;
            sy += y as f64 * v;
        }
    }
    if mass < 1e-9 {
        return None;
    }
    let mu_x = sx / mass;
    let mu_y = sy / mass;

    let mut second = 0.0;
    for y in 0..h {
        for x in 0..w {
            let dx = x as f64 - mu_x;
            let dy = y as f64 - mu_y;
            second += (dx * dx + dy * dy) * intensity[y * w + x];
        }
    }
    let sigma = (second / mass).sqrt();

    let cx = ((mu_x + 0.5).floor() as usize).min(w - 1);
    let cy = ((mu_y + 0.5).floor() as usize).min(h - 1);
    let mut threshold = intensity[cy * w + cx] - 1.28 * sigma;
    if threshold < 0.0 {
        threshold = 0.0;
    }

    let mut eda = 0u32;
    let mut peak = 0.0f64;
    for &v in &intensity {
        if v >= threshold {
            eda += 1;
        }
        if v > peak {
            peak = v;
        }
    }
    let cci = if eda == 0 { 0.0 } else { peak / eda as f64 };
    Some(OracleMetrics {
        mu_x,
        mu_y,
        sigma,
        threshold,
        eda,
        cci,
    })
}

/// A random baseline stack and frame of at most 8x8 pixels. About one case
/// in eight presses nothing, so the no-contact path is exercised too.
pub struct FrameCase {
    pub w: usize,
    pub h: usize,
    pub baseline: Vec<Vec<[u8; 3]>>,
    pub frame: Vec<[u8; 3]>,
}

impl FrameCase {
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let w = rng.random_range(1..=8);
        let h = rng.random_range(1..=8);
        let n = w * h;
        let texture: Vec<[u8; 3]> = (0..n)
            .map(|_| rng.random::<[u8; 3]>().map(|v| v / 2))
            .collect();
        let baseline: Vec<Vec<[u8; 3]>> = (0..10)
            .map(|_| {
                texture
                    .iter()
                    .map(|px| px.map(|v| v.saturating_add(rng.random_range(0..4))))
                    .collect()
            })
            .collect();
        let frame = if rng.random_ratio(1, 8) {
            texture.clone()
        } else {
            let cx = rng.random_range(0.0..w as f64);
            let cy = rng.random_range(0.0..h as f64);
            let peak = rng.random_range(5.0..120.0);
            let sd = rng.random_range(0.5..3.0);
            texture
                .iter()
                .enumerate()
                .map(|(i, px)| {
                    let (x, y) = ((i % w) as f64, (i / w) as f64);
                    let r2 = (x - cx).powi(2) + (y - cy).powi(2);
                    let bump = peak * (-r2 / (2.0 * sd * sd)).exp();
                    let jitter: i16 = rng.random_range(-3..=3);
                    px.map(|v| (v as f64 + bump + jitter as f64).round().clamp(0.0, 255.0) as u8)
                })
                .collect()
        };
        Self {
            w,
            h,
            baseline,
            frame,
        }
    }

    pub fn baseline_frames(&self, finger: FingerId) -> Vec<TactileFrame> {
        self.baseline
            .iter()
            .map(|px| TactileFrame::new(finger, 0.0, self.w, self.h, px.clone()).unwrap())
            .collect()
    }

    pub fn frame(&self, finger: FingerId) -> TactileFrame {
        TactileFrame::new(finger, 1.0, self.w, self.h, self.frame.clone()).unwrap()
    }

    pub fn oracle(&self) -> Option<OracleMetrics> {
        oracle_metrics(&self.baseline, &self.frame, self.w, self.h)
    }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    let scale = a.abs().max(b.abs());
    (a - b).abs() <= tol * scale.max(1e-12) || (a - b).abs() <= 1e-12
}

/// Magnitude of a bilinear-transform Butterworth low-pass of the given order,
/// from the closed form `1 / sqrt(1 + (W / Wc)^(2n))` on the prewarped axis.
pub fn butterworth_magnitude(order: u32, cutoff_hz: f64, sample_rate_hz: f64, freq_hz: f64) -> f64 {
    let warp = |f: f64| (std::f64::consts::PI * f / sample_rate_hz).tan();
    let ratio = warp(freq_hz) / warp(cutoff_hz);
    1.0 / (1.0 + ratio.powi(2 * order as i32)).sqrt()
}

/// Two-of-three vote over poses 1..=5, else the floored mean.
pub fn fusion_oracle(p: [u8; 3]) -> u8 {
    for candidate in 1..=5u8 {
        if p.iter().filter(|&&v| v == candidate).count() >= 2 {
            return candidate;
        }
    }
    ((p[0] as u32 + p[1] as u32 + p[2] as u32) / 3) as u8
}

/// Pose band of `e` on `[0, e_max]`, by scanning band edges.
pub fn quantize_oracle(e: f64, e_max: f64) -> u8 {
    let mut pose = 1;
    for band in 1..=4u8 {
        if e >= band as f64 * e_max / 4.0 {
            pose = band + 1;
        }
    }
    pose
}
