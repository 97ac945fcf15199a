//! Stateful LSTM end-point predictor.
//!
//! The network receives one tracker sample at a time as `(x, y, dt)` and
//! emits the predicted exit height and exit time after every update. Its
//! hidden and cell state persist across calls and are cleared only when the
//! input stream goes silent for longer than the reset gap.

mod adam;
mod checkpoint;
pub mod gradcheck;
mod lstm;
mod params;
mod train;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{
    load_checkpoint, save_checkpoint, CheckpointHeader, CheckpointMeta, CHECKPOINT_MAGIC,
    CHECKPOINT_SCHEMA_VERSION,
};
pub use lstm::{accumulate_gradient, loss_and_gradient, sequence_loss, LossWeights, Sequence};
pub use params::{BlockLayout, BlocksMut, ModelParams, BLOCK_NAMES, INPUT_SIZE, OUTPUT_SIZE};
pub use train::{
    batch_gradient, fine_tune, mean_loss, train, train_from, EpochRecord, TrainConfig,
    TrainOutcome,
};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::GroundTruth;
use crate::tracker::TrackerSample;

/// Input and target scaling shared by training and inference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub width_px: f64,
    pub height_px: f64,
    /// Inter-sample intervals are clipped to this value (s) before scaling.
    pub dt_clip: f64,
    /// Time-remaining target scale (s).
    pub time_scale: f64,
}

impl Default for Normalization {
    fn default() -> Self {
        Self {
            width_px: 304.0,
            height_px: 240.0,
            dt_clip: 0.2,
            time_scale: 1.5,
        }
    }
}

impl Normalization {
    pub fn for_camera(camera: &crate::physics::CameraModel) -> Self {
        Self {
            width_px: f64::from(camera.width_px),
            height_px: f64::from(camera.height_px),
            ..Self::default()
        }
    }

    pub fn features(&self, x_px: f64, y_px: f64, dt: f64) -> Result<FeatureVector> {
        if !(x_px.is_finite() && y_px.is_finite() && dt.is_finite()) {
            return Err(Error::invalid("non-finite tracker sample"));
        }
        Ok(FeatureVector {
            x_n: (x_px / self.width_px).clamp(0.0, 1.0),
            y_n: (y_px / self.height_px).clamp(0.0, 1.0),
            dt_n: (dt.min(self.dt_clip) / self.dt_clip).clamp(0.0, 1.0),
        })
    }

    pub fn normalize_height(&self, y_px: f64) -> f64 {
        y_px / self.height_px
    }

    pub fn denormalize_height(&self, y_n: f64) -> f64 {
        y_n * self.height_px
    }

    pub fn normalize_remaining(&self, seconds: f64) -> f64 {
        seconds / self.time_scale
    }

    pub fn denormalize_remaining(&self, r_n: f64) -> f64 {
        r_n * self.time_scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub x_n: f64,
    pub y_n: f64,
    pub dt_n: f64,
}

impl FeatureVector {
    pub fn as_array(&self) -> [f64; INPUT_SIZE] {
        [self.x_n, self.y_n, self.dt_n]
    }

    fn is_finite(&self) -> bool {
        self.x_n.is_finite() && self.y_n.is_finite() && self.dt_n.is_finite()
    }
}

/// End-point estimate emitted after one update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Predicted exit height, pixel row.
    pub y_f_hat: f64,
    /// Predicted absolute exit time (s).
    pub t_f_hat: f64,
    /// Timestamp of the sample that produced this prediction.
    pub emitted_at: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
    pub last_input_time: Option<f64>,
}

impl ModelState {
    pub fn new(hidden: usize) -> Self {
        Self {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
            last_input_time: None,
        }
    }

    pub fn is_reset(&self) -> bool {
        self.last_input_time.is_none()
            && self.h.iter().all(|&v| v == 0.0)
            && self.c.iter().all(|&v| v == 0.0)
    }
}

pub fn reset(state: &ModelState) -> ModelState {
    ModelState::new(state.h.len())
}

/// When carried state is considered stale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResetPolicy {
    /// Silence (s) after which the state belongs to a finished trajectory.
    pub gap: f64,
    /// Reset automatically instead of failing on a stale state.
    pub auto: bool,
}

impl Default for ResetPolicy {
    fn default() -> Self {
        Self { gap: 2.0, auto: true }
    }
}

/// One stateful update: LSTM cell, linear readout, denormalization.
pub fn step(
    params: &ModelParams,
    state: &ModelState,
    f: &FeatureVector,
    t_now: f64,
    norm: &Normalization,
    policy: ResetPolicy,
) -> Result<(ModelState, Prediction)> {
    if !f.is_finite() || !t_now.is_finite() {
        return Err(Error::invalid("non-finite predictor input"));
    }
    let hs = params.hidden();
    if state.h.len() != hs || state.c.len() != hs {
        return Err(Error::invalid("state size does not match the model"));
    }
    let fresh;
    let state = match state.last_input_time {
        Some(last) if t_now - last > policy.gap => {
            if !policy.auto {
                return Err(Error::StaleState { gap: t_now - last });
            }
            fresh = ModelState::new(hs);
            &fresh
        }
        _ => state,
    };

    let mut next = ModelState::new(hs);
    let mut gates = vec![0.0; 4 * hs];
    lstm::cell_forward(
        params,
        &f.as_array(),
        &state.h,
        &state.c,
        &mut gates,
        &mut next.c,
        &mut next.h,
    );
    next.last_input_time = Some(t_now);
    let out = lstm::readout(params, &next.h);
    let pred = Prediction {
        y_f_hat: norm.denormalize_height(out[0]),
        t_f_hat: t_now + norm.denormalize_remaining(out[1]),
        emitted_at: t_now,
    };
    Ok((next, pred))
}

/// Owns a model and its running state; derives `dt` from sample timestamps.
#[derive(Debug, Clone)]
pub struct StatefulPredictor {
    params: Arc<ModelParams>,
    norm: Normalization,
    policy: ResetPolicy,
    state: ModelState,
}

impl StatefulPredictor {
    pub fn new(params: Arc<ModelParams>, norm: Normalization) -> Self {
        let state = ModelState::new(params.hidden());
        Self {
            params,
            norm,
            policy: ResetPolicy::default(),
            state,
        }
    }

    pub fn with_policy(mut self, policy: ResetPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn state(&self) -> &ModelState {
        &self.state
    }

    pub fn reset(&mut self) {
        self.state = reset(&self.state);
    }

    pub fn observe(&mut self, sample: &TrackerSample) -> Result<Prediction> {
        if let Some(last) = self.state.last_input_time {
            if sample.t - last > self.policy.gap {
                if !self.policy.auto {
                    return Err(Error::StaleState { gap: sample.t - last });
                }
                self.reset();
            }
        }
        let dt = self.state.last_input_time.map_or(0.0, |last| sample.t - last);
        let f = self.norm.features(sample.x, sample.y, dt)?;
        let (next, pred) = step(&self.params, &self.state, &f, sample.t, &self.norm, self.policy)?;
        self.state = next;
        Ok(pred)
    }
}

/// Runs a fresh predictor over one resampled track.
pub fn predict_track(
    params: &Arc<ModelParams>,
    norm: &Normalization,
    samples: &[TrackerSample],
) -> Result<Vec<Prediction>> {
    let mut predictor = StatefulPredictor::new(Arc::clone(params), *norm);
    samples.iter().map(|s| predictor.observe(s)).collect()
}

/// Training sequence for one resampled track and its ground truth.
///
/// Targets are the normalized exit row and the normalized time remaining
/// until the exit.
pub fn build_sequence(
    samples: &[TrackerSample],
    gt: &GroundTruth,
    norm: &Normalization,
) -> Result<Sequence> {
    let mut inputs = Vec::with_capacity(samples.len());
    let mut targets = Vec::with_capacity(samples.len());
    let mut prev_t: Option<f64> = None;
    for s in samples {
        let dt = prev_t.map_or(0.0, |p| s.t - p);
        prev_t = Some(s.t);
        inputs.push(norm.features(s.x, s.y, dt)?.as_array());
        targets.push([
            norm.normalize_height(gt.y_f_px),
            norm.normalize_remaining(gt.t_f - s.t),
        ]);
    }
    Ok(Sequence { inputs, targets })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(x: f64, y: f64, t: f64) -> TrackerSample {
        TrackerSample { x, y, t }
    }

    #[test]
    fn zero_model_emits_denormalized_bias() {
        let mut p = ModelParams::zeros(5);
        {
            let b = p.blocks_mut();
            b.b_output[0] = 0.5;
            b.b_output[1] = 0.2;
        }
        let norm = Normalization::default();
        let st = ModelState::new(5);
        let f = norm.features(100.0, 50.0, 0.01).unwrap();
        let (next, pred) = step(&p, &st, &f, 0.3, &norm, ResetPolicy::default()).unwrap();
        assert!(next.h.iter().chain(&next.c).all(|&v| v == 0.0));
        assert_eq!(pred.y_f_hat, 120.0);
        assert!((pred.t_f_hat - (0.3 + 0.3)).abs() < 1e-15);
        assert_eq!(pred.emitted_at, 0.3);
    }

    #[test]
    fn gap_triggers_reset() {
        let p = ModelParams::init(6, 1);
        let norm = Normalization::default();
        let f = norm.features(10.0, 20.0, 0.0).unwrap();
        let (s1, _) = step(&p, &ModelState::new(6), &f, 0.0, &norm, ResetPolicy::default()).unwrap();
        let (after_gap, pred_gap) = step(&p, &s1, &f, 2.5, &norm, ResetPolicy::default()).unwrap();
        let (fresh, pred_fresh) =
            step(&p, &ModelState::new(6), &f, 2.5, &norm, ResetPolicy::default()).unwrap();
        assert_eq!(after_gap, fresh);
        assert_eq!(pred_gap, pred_fresh);

        let strict = ResetPolicy { auto: false, ..Default::default() };
        assert!(matches!(
            step(&p, &s1, &f, 2.5, &norm, strict),
            Err(Error::StaleState { .. })
        ));
    }

    #[test]
    fn reset_is_idempotent_and_matches_fresh() {
        let p = ModelParams::init(4, 3);
        let norm = Normalization::default();
        let f = norm.features(30.0, 40.0, 0.0).unwrap();
        let (s1, _) = step(&p, &ModelState::new(4), &f, 0.1, &norm, ResetPolicy::default()).unwrap();
        let r = reset(&s1);
        assert!(r.is_reset());
        assert_eq!(reset(&r), r);
        let a = step(&p, &r, &f, 0.2, &norm, ResetPolicy::default()).unwrap();
        let b = step(&p, &ModelState::new(4), &f, 0.2, &norm, ResetPolicy::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_finite_input_rejected() {
        let p = ModelParams::init(4, 3);
        let norm = Normalization::default();
        assert!(norm.features(f64::NAN, 1.0, 0.0).is_err());
        let bad = FeatureVector { x_n: f64::INFINITY, y_n: 0.0, dt_n: 0.0 };
        assert!(step(&p, &ModelState::new(4), &bad, 0.0, &norm, ResetPolicy::default()).is_err());
    }

    #[test]
    fn same_input_same_output() {
        let p = ModelParams::init(8, 5);
        let norm = Normalization::default();
        let st = ModelState::new(8);
        let f = norm.features(1.0, 2.0, 0.003).unwrap();
        let a = step(&p, &st, &f, 0.5, &norm, ResetPolicy::default()).unwrap();
        let b = step(&p, &st, &f, 0.5, &norm, ResetPolicy::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sequence_path_matches_stepwise_path() {
        let p = ModelParams::init(7, 2);
        let norm = Normalization::default();
        let track: Vec<_> = (0..25)
            .map(|i| sample(5.0 + 3.0 * i as f64, 100.0 - 2.0 * i as f64, 0.004 * i as f64))
            .collect();
        let gt = GroundTruth {
            x_f_px: 300.0,
            y_f_px: 80.0,
            y_f_m: 0.5,
            t_f: 0.8,
            exit_side: crate::physics::ExitSide::Right,
        };
        let seq = build_sequence(&track, &gt, &norm).unwrap();
        let (_, outs) = sequence_loss(&p, &seq, LossWeights::default()).unwrap();
        let preds = predict_track(&Arc::new(p), &norm, &track).unwrap();
        for ((o, pr), s) in outs.iter().zip(&preds).zip(&track) {
            assert!((norm.denormalize_height(o[0]) - pr.y_f_hat).abs() < 1e-12);
            assert!((s.t + norm.denormalize_remaining(o[1]) - pr.t_f_hat).abs() < 1e-12);
        }
    }

    #[test]
    fn long_gap_between_tracks_equals_independent_runs() {
        let p = Arc::new(ModelParams::init(6, 8));
        let norm = Normalization::default();
        let a: Vec<_> = (0..10).map(|i| sample(10.0 + i as f64, 50.0, 0.01 * i as f64)).collect();
        let b: Vec<_> = (0..10).map(|i| sample(200.0 - i as f64, 90.0, 0.01 * i as f64)).collect();
        let shifted: Vec<_> = b.iter().map(|s| sample(s.x, s.y, s.t + 5.0)).collect();

        let mut joined = a.clone();
        joined.extend_from_slice(&shifted);
        let together = predict_track(&p, &norm, &joined).unwrap();
        let first = predict_track(&p, &norm, &a).unwrap();
        let second = predict_track(&p, &norm, &shifted).unwrap();
        assert_eq!(&together[..10], &first[..]);
        assert_eq!(&together[10..], &second[..]);
    }

    #[test]
    fn denormalization_inverts_normalization() {
        let norm = Normalization::default();
        for i in 0..=240 {
            let y = i as f64 * 0.999;
            let back = norm.denormalize_height(norm.normalize_height(y));
            assert!((back - y).abs() <= 1e-13 * y.max(1.0));
            let r = i as f64 / 160.0;
            let back = norm.denormalize_remaining(norm.normalize_remaining(r));
            assert!((back - r).abs() <= 1e-15 * r.max(1.0));
        }
    }
}
