use serde::{Deserialize, Serialize};

use super::TrackerSample;
use crate::error::{Error, Result};

/// How the full-resolution track is turned into predictor inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplingStrategy {
    /// Motion-driven: emit once the center moved `min_displacement` px
    /// (Euclidean, inclusive) from the last emitted sample.
    Spatial { min_displacement: f64 },
    /// Clock-driven: latest sample at each tick `k / rate`.
    Temporal { rate: f64 },
    /// Clock-driven with a motion-blur dropout: a tick is lost when the center
    /// moved more than `blur_limit` px during the `exposure` preceding it.
    TemporalWithBlur {
        rate: f64,
        exposure: f64,
        blur_limit: f64,
    },
}

impl SamplingStrategy {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            SamplingStrategy::Spatial { min_displacement } => min_displacement > 0.0,
            SamplingStrategy::Temporal { rate } => rate > 0.0,
            SamplingStrategy::TemporalWithBlur {
                rate,
                exposure,
                blur_limit,
            } => rate > 0.0 && exposure >= 0.0 && blur_limit > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid sampling strategy {self:?}")))
        }
    }
}

pub fn resample(samples: &[TrackerSample], strategy: &SamplingStrategy) -> Vec<TrackerSample> {
    match *strategy {
        SamplingStrategy::Spatial { min_displacement } => spatial(samples, min_displacement),
        SamplingStrategy::Temporal { rate } => temporal(samples, rate, None),
        SamplingStrategy::TemporalWithBlur {
            rate,
            exposure,
            blur_limit,
        } => temporal(samples, rate, Some((exposure, blur_limit))),
    }
}

fn spatial(samples: &[TrackerSample], min_displacement: f64) -> Vec<TrackerSample> {
    let mut out: Vec<TrackerSample> = Vec::new();
    for s in samples {
        match out.last() {
            Some(last) if s.dist(last) < min_displacement => {}
            _ => out.push(*s),
        }
    }
    out
}

/// Index of the latest sample with `t <= at`.
fn latest_at(samples: &[TrackerSample], at: f64) -> Option<usize> {
    samples.partition_point(|s| s.t <= at).checked_sub(1)
}

fn temporal(samples: &[TrackerSample], rate: f64, blur: Option<(f64, f64)>) -> Vec<TrackerSample> {
    let (Some(first), Some(last)) = (samples.first(), samples.last()) else {
        return Vec::new();
    };
    let k_first = (first.t * rate - 1e-9).ceil() as i64;
    let k_last = (last.t * rate + 1e-9).floor() as i64;

    let mut out = Vec::new();
    let mut last_emitted: Option<usize> = None;
    for k in k_first..=k_last {
        let tick = k as f64 / rate;
        let Some(idx) = latest_at(samples, tick) else {
            continue;
        };
        if last_emitted == Some(idx) {
            continue;
        }
        if let Some((exposure, blur_limit)) = blur {
            let start = latest_at(samples, tick - exposure).unwrap_or(0);
            if samples[idx].dist(&samples[start]) > blur_limit {
                continue;
            }
        }
        last_emitted = Some(idx);
        out.push(TrackerSample {
            x: samples[idx].x,
            y: samples[idx].y,
            t: tick,
        });
    }
    out
}
