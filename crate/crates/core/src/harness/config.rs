use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::decision::Policy;
use crate::error::{Error, Result};
use crate::physics::{DatasetCounts, Scene, TrajectoryDistribution};
use crate::predictor::TrainConfig;
use crate::robot::{CalibrationNoise, RobotConfig};
use crate::tracker::{EventModel, SamplingStrategy, TrackerConfig};

/// One sampling strategy and the model that consumes it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub name: String,
    pub sampling: SamplingStrategy,
    pub n_conv: usize,
    /// Fixed threshold (px/s); calibrated on the validation split when absent.
    #[serde(default)]
    pub gamma_star: Option<f64>,
    /// Defaults to `<output_dir>/models/<name>.ckpt`.
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
}

impl StrategyConfig {
    pub fn new(name: &str, sampling: SamplingStrategy, n_conv: usize) -> Self {
        Self {
            name: name.to_string(),
            sampling,
            n_conv,
            gamma_star: None,
            checkpoint: None,
        }
    }

    pub fn default_set() -> Vec<StrategyConfig> {
        let frames = |rate: f64| SamplingStrategy::TemporalWithBlur {
            rate,
            exposure: 0.5 / rate,
            blur_limit: 10.0,
        };
        vec![
            Self::new("events", SamplingStrategy::Spatial { min_displacement: 2.0 }, 15),
            Self::new("events33Hz", SamplingStrategy::Temporal { rate: 33.0 }, 3),
            Self::new("events10Hz", SamplingStrategy::Temporal { rate: 10.0 }, 1),
            Self::new("frames60Hz", frames(60.0), 6),
            Self::new("frames30Hz", frames(30.0), 3),
        ]
    }
}

/// How the convergence threshold is chosen on the validation split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GammaCalibration {
    /// Required share of converged trajectories that are accurate at t_conv.
    pub quantile: f64,
    /// Exit-height error (m) counted as accurate.
    pub error_threshold: f64,
}

impl Default for GammaCalibration {
    fn default() -> Self {
        Self {
            quantile: 0.95,
            error_threshold: 0.035,
        }
    }
}

/// A complete experiment: data, models, evaluation and robot trials.
///
/// Every random stream is derived from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub dataset_dir: PathBuf,
    pub output_dir: PathBuf,
    pub scene: Scene,
    pub distribution: TrajectoryDistribution,
    pub counts: DatasetCounts,
    pub events: EventModel,
    pub tracker: TrackerConfig,
    pub strategies: Vec<StrategyConfig>,
    pub train: TrainConfig,
    pub gamma_calibration: GammaCalibration,
    pub robot: RobotConfig,
    pub calibration: CalibrationNoise,
    pub policies: Vec<Policy>,
    pub trials_per_cell: usize,
    /// Trajectory-percentage bin width for the convergence table.
    pub convergence_bin_pct: f64,
    /// Trajectory-duration bin width (s) for the timing summary.
    pub timing_bin: f64,
    /// Time-since-convergence bin width (s) for the error window.
    pub error_window_bin: f64,
    pub error_window_strategy: String,
    /// Worker threads for per-trajectory evaluation.
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            dataset_dir: PathBuf::from("data"),
            output_dir: PathBuf::from("out"),
            scene: Scene::default(),
            distribution: TrajectoryDistribution::default(),
            counts: DatasetCounts {
                train: 5000,
                val: 250,
                test: 150,
            },
            events: EventModel::default(),
            tracker: TrackerConfig::default(),
            strategies: StrategyConfig::default_set(),
            train: TrainConfig::default(),
            gamma_calibration: GammaCalibration::default(),
            robot: RobotConfig::default(),
            calibration: CalibrationNoise::default(),
            policies: Policy::ALL.to_vec(),
            trials_per_cell: 50,
            convergence_bin_pct: 2.0,
            timing_bin: 0.1,
            error_window_bin: 0.02,
            error_window_strategy: "events".to_string(),
            threads: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("invalid config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::Config("no strategies configured".into()));
        }
        let mut names = HashSet::new();
        for s in &self.strategies {
            if !names.insert(s.name.as_str()) {
                return Err(Error::Config(format!("duplicate strategy `{}`", s.name)));
            }
            if s.name.is_empty() || s.name.contains(['/', '\\']) {
                return Err(Error::Config(format!("invalid strategy name `{}`", s.name)));
            }
            s.sampling.validate()?;
            if s.n_conv == 0 {
                return Err(Error::Config(format!("strategy `{}`: n_conv must be >= 1", s.name)));
            }
            if matches!(s.gamma_star, Some(g) if !(g > 0.0)) {
                return Err(Error::Config(format!("strategy `{}`: gamma_star must be > 0", s.name)));
            }
        }
        if self.policies.is_empty() {
            return Err(Error::Config("no policies configured".into()));
        }
        let widths = [self.convergence_bin_pct, self.timing_bin, self.error_window_bin];
        if widths.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::Config("bin widths must be positive".into()));
        }
        let q = self.gamma_calibration.quantile;
        if !(q > 0.0 && q <= 1.0) || !(self.gamma_calibration.error_threshold > 0.0) {
            return Err(Error::Config("invalid gamma calibration settings".into()));
        }
        self.scene.camera.validate()?;
        self.distribution.validate()?;
        self.robot.validate()?;
        Ok(())
    }

    pub fn strategy(&self, name: &str) -> Result<&StrategyConfig> {
        self.strategies
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::Config(format!("unknown strategy `{name}`")))
    }

    pub fn checkpoint_path(&self, s: &StrategyConfig) -> PathBuf {
        s.checkpoint
            .clone()
            .unwrap_or_else(|| self.output_dir.join("models").join(format!("{}.ckpt", s.name)))
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.dataset_dir.join("manifest.json")
    }
}
