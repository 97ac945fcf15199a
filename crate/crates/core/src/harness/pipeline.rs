//! Per-trajectory processing shared by all commands.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, GammaCalibration, StrategyConfig};
use crate::decision::{ConvergenceConfig, DecisionTrace, HeightMap};
use crate::error::{Error, Result};
use crate::physics::{
    read_split, CameraModel, GroundTruth, Manifest, SplitKind, TrajectoryRecord,
    DATASET_SCHEMA_VERSION,
};
use crate::predictor::{
    build_sequence, predict_track, ModelParams, Normalization, Prediction, Sequence,
};
use crate::robot::{fit_calibration, synthesize_calibration_pairs, Calibration, CalibrationNoise};
use crate::tracker::{resample, synthesize_events, track, TrackerSample};

const EVENT_SALT: u64 = 0x6576_656e_7473_0001;
const CALIBRATION_SALT: u64 = 0x6361_6c69_6272_0002;

/// Maps `f` over `items` on `threads` workers, keeping input order.
pub(crate) fn par_map<T, U, F>(threads: usize, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    if threads <= 1 {
        return items.iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(_) => items.iter().map(f).collect(),
    }
}

/// Event stream seed for one trajectory; independent of the strategy.
pub fn event_rng(seed: u64, split: SplitKind, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ EVENT_SALT);
    rng.set_stream((split_index(split) << 48) | id);
    rng
}

fn split_index(split: SplitKind) -> u64 {
    match split {
        SplitKind::Train => 1,
        SplitKind::Val => 2,
        SplitKind::Test => 3,
    }
}

pub fn read_manifest(cfg: &ExperimentConfig) -> Result<Manifest> {
    let path = cfg.manifest_path();
    let text = std::fs::read_to_string(&path).map_err(|e| {
        Error::Config(format!("dataset manifest {} not readable: {e}", path.display()))
    })?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    if manifest.schema_version != DATASET_SCHEMA_VERSION {
        return Err(Error::SchemaMismatch {
            found: manifest.schema_version,
            expected: DATASET_SCHEMA_VERSION,
        });
    }
    Ok(manifest)
}

pub fn load_split(cfg: &ExperimentConfig, split: SplitKind) -> Result<Vec<TrajectoryRecord>> {
    read_manifest(cfg)?;
    read_split(&cfg.dataset_dir.join(split.file_name()))
}

/// Full-rate tracker output for one trajectory.
#[derive(Debug, Clone)]
pub struct TrackedTrajectory {
    pub id: u64,
    pub ground_truth: GroundTruth,
    pub track: Vec<TrackerSample>,
}

pub fn track_records(
    cfg: &ExperimentConfig,
    split: SplitKind,
    records: &[TrajectoryRecord],
) -> Vec<TrackedTrajectory> {
    par_map(cfg.threads, records, |r| {
        let mut rng = event_rng(cfg.seed, split, r.id);
        let events = synthesize_events(&r.trajectory, &cfg.scene.camera, &cfg.events, &mut rng);
        TrackedTrajectory {
            id: r.id,
            ground_truth: r.ground_truth.clone(),
            track: track(&events, &cfg.tracker),
        }
    })
}

pub fn load_tracked(cfg: &ExperimentConfig, split: SplitKind) -> Result<Vec<TrackedTrajectory>> {
    let records = load_split(cfg, split)?;
    Ok(track_records(cfg, split, &records))
}

/// Training sequences for one strategy; tracks that yield no samples are
/// left out.
pub fn sequences(
    tracked: &[TrackedTrajectory],
    strategy: &StrategyConfig,
    norm: &Normalization,
) -> Result<Vec<Sequence>> {
    let mut out = Vec::with_capacity(tracked.len());
    for t in tracked {
        let samples = resample(&t.track, &strategy.sampling);
        if !samples.is_empty() {
            out.push(build_sequence(&samples, &t.ground_truth, norm)?);
        }
    }
    Ok(out)
}

/// Predictions of one model over one trajectory.
#[derive(Debug, Clone)]
pub struct PredictedTrajectory {
    pub id: u64,
    pub ground_truth: GroundTruth,
    pub predictions: Vec<Prediction>,
}

pub fn predict_all(
    cfg: &ExperimentConfig,
    tracked: &[TrackedTrajectory],
    strategy: &StrategyConfig,
    params: &Arc<ModelParams>,
    norm: &Normalization,
) -> Result<Vec<PredictedTrajectory>> {
    par_map(cfg.threads, tracked, |t| {
        let samples = resample(&t.track, &strategy.sampling);
        Ok(PredictedTrajectory {
            id: t.id,
            ground_truth: t.ground_truth.clone(),
            predictions: predict_track(params, norm, &samples)?,
        })
    })
    .into_iter()
    .collect()
}

/// Exit-height error (m) of a pixel-row estimate, measured with the true
/// camera geometry.
pub fn height_error(camera: &CameraModel, y_f_hat_px: f64, gt: &GroundTruth) -> f64 {
    (camera.row_to_height(y_f_hat_px) - gt.y_f_m).abs()
}

pub fn decision_traces<H: HeightMap + Sync>(
    cfg: &ExperimentConfig,
    predicted: &[PredictedTrajectory],
    conv: &ConvergenceConfig,
    heights: &H,
) -> Result<Vec<DecisionTrace>> {
    let robot = cfg.robot.envelope();
    par_map(cfg.threads, predicted, |p| {
        DecisionTrace::new(p.predictions.clone(), conv, &robot, heights)
    })
    .into_iter()
    .collect()
}

/// Pixel-to-height map fitted from simulated calibration readings.
pub fn fitted_calibration(cfg: &ExperimentConfig) -> Result<Calibration> {
    let noise = CalibrationNoise {
        seed: cfg.seed ^ CALIBRATION_SALT,
        ..cfg.calibration.clone()
    };
    let pairs = synthesize_calibration_pairs(&cfg.scene.camera, &cfg.robot, &noise);
    fit_calibration(&pairs)
}

/// Result of choosing the convergence threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaChoice {
    pub gamma_star: f64,
    pub converged: usize,
    pub accurate: usize,
    pub trajectories: usize,
    /// False when no threshold reaches the requested share; the strictest
    /// candidate is returned instead.
    pub satisfied: bool,
}

/// Smallest threshold at which the requested share of all trajectories
/// converges and ends with an accurate final prediction.
///
/// A trajectory converges under `gamma_star` iff the minimum of its gamma
/// series lies strictly below it, so those minima (nudged up by one ulp) are
/// the only candidates.
pub fn calibrate_gamma_star(
    predicted: &[PredictedTrajectory],
    n_conv: usize,
    camera: &CameraModel,
    settings: &GammaCalibration,
) -> Result<GammaChoice> {
    // per trajectory: (minimum gamma, final prediction accurate)
    let mut minima: Vec<(f64, bool)> = Vec::with_capacity(predicted.len());
    for p in predicted {
        let gammas = crate::decision::gamma_series(&p.predictions, n_conv)?;
        let Some(min) = gammas.iter().copied().reduce(f64::min) else { continue };
        let last = p.predictions.last().expect("gamma needs predictions");
        let err = height_error(camera, last.y_f_hat, &p.ground_truth);
        minima.push((min, err < settings.error_threshold));
    }
    let mut candidates: Vec<f64> = minima.iter().filter(|m| m.1).map(|m| m.0.next_up()).collect();
    if candidates.is_empty() {
        candidates = minima.iter().map(|m| m.0.next_up()).collect();
    }
    if candidates.is_empty() {
        return Err(Error::Config(format!(
            "no validation trajectory has more than n_conv = {n_conv} samples"
        )));
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let choice = |gs: f64, satisfied: bool| {
        let converged = minima.iter().filter(|m| m.0 < gs).count();
        let accurate = minima.iter().filter(|m| m.0 < gs && m.1).count();
        GammaChoice { gamma_star: gs, converged, accurate, trajectories: predicted.len(), satisfied }
    };
    let required = settings.quantile * predicted.len() as f64;
    for &gs in &candidates {
        let c = choice(gs, true);
        if c.accurate as f64 >= required {
            return Ok(c);
        }
    }
    Ok(choice(*candidates.last().expect("non-empty"), false))
}
