pub mod emg;
pub mod finger;
pub mod haptic;
pub mod harness;
pub mod sim;
pub mod tactile;
pub mod wire;

pub use finger::FingerId;
