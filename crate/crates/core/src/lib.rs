//! Event-driven trajectory interception pipeline.
//!
//! A bouncing ball is simulated in closed form, observed through a simplified
//! event sensor and a center-of-mass tracker, resampled under motion-driven or
//! clock-driven strategies, and fed one sample at a time into a stateful LSTM
//! that predicts where and when the ball leaves the field of view. The
//! decision layer turns the running prediction into a time of action for a
//! simulated vertical manipulator, and the harness measures convergence,
//! timing margins and hit rates per sampling strategy.

pub mod decision;
pub mod error;
pub mod harness;
pub mod jsonl;
pub mod physics;
pub mod predictor;
pub mod robot;
pub mod tracker;

pub use error::{Error, Result};
