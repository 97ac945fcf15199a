//! Experiment runner behind the command-line tool.
//!
//! Every command reads an [`ExperimentConfig`], works on the dataset in
//! `dataset_dir` and writes CSV or JSON into `output_dir`. Rows are produced in
//! strategy order and trajectory-id order, so a fixed seed gives byte-identical
//! files.

mod commands;
mod config;
mod pipeline;

pub use commands::*;
pub use config::{ExperimentConfig, GammaCalibration, StrategyConfig};
pub use pipeline::{
    calibrate_gamma_star, decision_traces, event_rng, fitted_calibration, height_error,
    load_split, load_tracked, predict_all, read_manifest, sequences, track_records, GammaChoice,
    PredictedTrajectory, TrackedTrajectory,
};
