//! Named random streams derived from one trial seed.
//!
//! Each consumer draws from its own ChaCha stream. Switching the feedback
//! condition leaves the renderer's noise untouched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Baseline = 1,
    Calibration = 2,
    Render = 3,
    Emg = 4,
    EmgCalibration = 5,
    OperatorNoise = 6,
    OperatorPlan = 7,
}

pub fn stream(seed: u64, which: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
