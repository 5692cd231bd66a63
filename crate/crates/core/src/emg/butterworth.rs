//! Digital Butterworth low-pass filters built from second-order sections.
//!
//! The analog prototype is discretised with the bilinear transform after
//! prewarping the cutoff, so the digital response is exactly -3 dB at the
//! requested cutoff and has unit gain at DC.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::EmgError;

/// One transposed direct-form II section. First-order sections keep
/// `b2 = a2 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub b: [f64; 3],
    /// Denominator coefficients `a1, a2` (with `a0 = 1`).
    pub a: [f64; 2],
    state: [f64; 2],
}

impl Section {
    fn new(b: [f64; 3], a: [f64; 2]) -> Self {
        Self {
            b,
            a,
            state: [0.0; 2],
        }
    }

    #[inline]
    fn process(&mut self, x: f64) -> f64 {
        let y = self.b[0] * x + self.state[0];
        self.state[0] = self.b[1] * x - self.a[0] * y + self.state[1];
        self.state[1] = self.b[2] * x - self.a[1] * y;
        y
    }

    fn response(&self, z_inv: Complex64) -> Complex64 {
        let num = self.b[0] + z_inv * (self.b[1] + z_inv * self.b[2]);
        let den = 1.0 + z_inv * (self.a[0] + z_inv * self.a[1]);
        num / den
    }
}

/// Cascade of sections realising a Butterworth low-pass, with its own delay
/// registers. Clone it to get an independent filter for another channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ButterworthLowPass {
    order: usize,
    cutoff_hz: f64,
    sample_rate_hz: f64,
    sections: Vec<Section>,
}

impl ButterworthLowPass {
    pub fn design(order: usize, cutoff_hz: f64, sample_rate_hz: f64) -> Result<Self, EmgError> {
        if order == 0 {
            return Err(EmgError::InvalidConfig(
                "filter order must be at least 1".into(),
            ));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(EmgError::InvalidConfig(format!(
                "sample rate {sample_rate_hz} Hz"
            )));
        }
        if !(cutoff_hz > 0.0 && cutoff_hz < sample_rate_hz / 2.0) {
            return Err(EmgError::CutoffAboveNyquist {
                cutoff_hz,
                sample_rate_hz,
            });
        }

        let k = (PI * cutoff_hz / sample_rate_hz).tan();
        let k2 = k * k;
        let mut sections = Vec::with_capacity(order.div_ceil(2));
        for i in 0..order / 2 {
            // conjugate pole pair at angle psi from the negative real axis
            let psi = PI - PI * (2 * i + order + 1) as f64 / (2 * order) as f64;
            let q = 1.0 / (2.0 * psi.cos());
            let norm = 1.0 / (1.0 + k / q + k2);
            let b0 = k2 * norm;
            sections.push(Section::new(
                [b0, 2.0 * b0, b0],
                [2.0 * (k2 - 1.0) * norm, (1.0 - k / q + k2) * norm],
            ));
        }
        if order % 2 == 1 {
            let norm = 1.0 / (1.0 + k);
            sections.push(Section::new(
                [k * norm, k * norm, 0.0],
                [(k - 1.0) * norm, 0.0],
            ));
        }
        Ok(Self {
            order,
            cutoff_hz,
            sample_rate_hz,
            sections,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn cutoff_hz(&self) -> f64 {
        self.cutoff_hz
    }

    pub fn sections(&self) -> &[Section] {
        &self.sections
    }

    pub fn reset(&mut self) {
        for s in &mut self.sections {
            s.state = [0.0; 2];
        }
    }

    #[inline]
    pub fn process(&mut self, x: f64) -> f64 {
        self.sections.iter_mut().fold(x, |acc, s| s.process(acc))
    }

    /// Filter a block of samples, carrying state across calls.
    pub fn filter(&mut self, samples: &[f64]) -> Vec<f64> {
        samples.iter().map(|&x| self.process(x)).collect()
    }

    /// Complex frequency response evaluated from the coefficients.
    pub fn frequency_response(&self, freq_hz: f64) -> Complex64 {
        let w = 2.0 * PI * freq_hz / self.sample_rate_hz;
        let z_inv = Complex64::from_polar(1.0, -w);
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
    }

    pub fn magnitude(&self, freq_hz: f64) -> f64 {
        self.frequency_response(freq_hz).norm()
    }
}
