//! Event synthesis, ROI center-of-mass tracking and trajectory resampling.

mod events;
mod roi;
mod sampling;

pub use events::{synthesize_events, synthesize_noise, EventModel};
pub use roi::{track, RoiTracker, TrackerConfig};
pub use sampling::{resample, SamplingStrategy};

pub use crate::jsonl::{read_jsonl, write_jsonl};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub x: u16,
    pub y: u16,
    pub t: f64,
    pub polarity: Polarity,
}

/// One asynchronous center-of-mass observation, pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerSample {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl TrackerSample {
    pub fn dist(&self, other: &TrackerSample) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}
