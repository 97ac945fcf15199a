use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use super::config::{ExperimentConfig, StrategyConfig};
use super::pipeline::{
    calibrate_gamma_star, decision_traces, fitted_calibration, height_error, load_split,
    load_tracked, predict_all, sequences, track_records, GammaChoice, TrackedTrajectory,
};
use crate::decision::{ConvergenceConfig, DecisionTrace, Policy};
use crate::error::{Error, Result};
use crate::physics::{generate_dataset, GroundTruth, Manifest, SplitKind};
use crate::predictor::{
    fine_tune, load_checkpoint, save_checkpoint, train_from, CheckpointMeta, EpochRecord,
    ModelParams, Normalization, TrainConfig,
};
use crate::robot::{run_trial, Calibration};

pub const CONVERGENCE_CSV: &str = "convergence.csv";
pub const TIMING_CSV: &str = "timing.csv";
pub const TIMING_SUMMARY_CSV: &str = "timing_summary.csv";
pub const TIMING_BY_DURATION_CSV: &str = "timing_by_duration.csv";
pub const TRIALS_CSV: &str = "trials.csv";
pub const HITS_CSV: &str = "hits.csv";
pub const ERROR_WINDOW_CSV: &str = "error_window.csv";
pub const GAMMA_CSV: &str = "gamma_star.csv";
pub const CALIBRATION_JSON: &str = "calibration.json";

fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (Some(mean), Some(var.sqrt()))
}

pub fn cmd_gen_data(cfg: &ExperimentConfig) -> Result<Manifest> {
    cfg.validate()?;
    generate_dataset(&cfg.distribution, &cfg.scene, cfg.counts, cfg.seed, &cfg.dataset_dir)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrainOptions {
    /// Continue from the existing checkpoint when there is one.
    pub resume: bool,
    /// Continue from the existing checkpoint at a tenth of the learning rate.
    pub fine_tune: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainSummary {
    pub strategy: String,
    pub checkpoint: PathBuf,
    pub train_sequences: usize,
    pub val_sequences: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub gamma: GammaChoice,
}

#[derive(Serialize)]
struct GammaRow<'a> {
    strategy: &'a str,
    n_conv: usize,
    gamma_star: f64,
    converged: usize,
    accurate: usize,
    trajectories: usize,
    satisfied: bool,
}

/// Trains one model per strategy, calibrates its convergence threshold on the
/// validation split and writes the checkpoint plus its learning curve.
pub fn cmd_train(cfg: &ExperimentConfig, opts: TrainOptions) -> Result<Vec<TrainSummary>> {
    cfg.validate()?;
    let train_tracks = load_tracked(cfg, SplitKind::Train)?;
    let val_tracks = load_tracked(cfg, SplitKind::Val)?;
    let norm = Normalization::for_camera(&cfg.scene.camera);

    let mut summaries = Vec::new();
    for (i, strategy) in cfg.strategies.iter().enumerate() {
        let train_set = sequences(&train_tracks, strategy, &norm)?;
        let val_set = sequences(&val_tracks, strategy, &norm)?;
        let tcfg = TrainConfig {
            seed: cfg.seed.wrapping_add(i as u64),
            ..cfg.train.clone()
        };
        let path = cfg.checkpoint_path(strategy);
        let existing = if opts.resume || opts.fine_tune {
            match load_checkpoint(&path, None) {
                Ok((p, _)) => Some(p),
                Err(_) if !opts.fine_tune => None,
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        let outcome = match existing {
            Some(p) if opts.fine_tune => fine_tune(&p, &train_set, &val_set, &tcfg)?,
            Some(p) => train_from(p, &train_set, &val_set, &tcfg)?,
            None => train_from(ModelParams::init(tcfg.hidden, tcfg.seed), &train_set, &val_set, &tcfg)?,
        };

        let params = Arc::new(outcome.params);
        let predicted = predict_all(cfg, &val_tracks, strategy, &params, &norm)?;
        let gamma = match strategy.gamma_star {
            Some(g) => GammaChoice {
                gamma_star: g,
                converged: 0,
                accurate: 0,
                trajectories: predicted.len(),
                satisfied: true,
            },
            None => calibrate_gamma_star(
                &predicted,
                strategy.n_conv,
                &cfg.scene.camera,
                &cfg.gamma_calibration,
            )?,
        };

        let meta = CheckpointMeta {
            strategy: Some(strategy.name.clone()),
            seed: tcfg.seed,
            lr0: tcfg.lr0,
            train: Some(tcfg.clone()),
            best_epoch: Some(outcome.best_epoch),
            best_val_loss: Some(outcome.best_val_loss),
            n_conv: Some(strategy.n_conv),
            gamma_star: Some(gamma.gamma_star),
        };
        save_checkpoint(&path, &params, &norm, &meta)?;
        write_csv(
            &cfg.output_dir.join("curves").join(format!("{}.csv", strategy.name)),
            &outcome.curves,
            &["epoch", "train_loss", "val_loss", "best_val_loss", "lr"],
        )?;
        summaries.push(TrainSummary {
            strategy: strategy.name.clone(),
            checkpoint: path,
            train_sequences: train_set.len(),
            val_sequences: val_set.len(),
            best_epoch: outcome.best_epoch,
            best_val_loss: outcome.best_val_loss,
            gamma,
        });
    }

    let rows: Vec<GammaRow> = summaries
        .iter()
        .zip(&cfg.strategies)
        .map(|(s, st)| GammaRow {
            strategy: &s.strategy,
            n_conv: st.n_conv,
            gamma_star: s.gamma.gamma_star,
            converged: s.gamma.converged,
            accurate: s.gamma.accurate,
            trajectories: s.gamma.trajectories,
            satisfied: s.gamma.satisfied,
        })
        .collect();
    write_csv(
        &cfg.output_dir.join(GAMMA_CSV),
        &rows,
        &["strategy", "n_conv", "gamma_star", "converged", "accurate", "trajectories", "satisfied"],
    )?;
    Ok(summaries)
}

/// A trained model ready for evaluation.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub strategy: StrategyConfig,
    pub params: Arc<ModelParams>,
    pub norm: Normalization,
    pub gamma_star: f64,
}

impl LoadedModel {
    pub fn convergence(&self) -> ConvergenceConfig {
        ConvergenceConfig {
            n_conv: self.strategy.n_conv,
            gamma_star: self.gamma_star,
        }
    }
}

/// Loads every configured checkpoint. The threshold comes from the config,
/// then the checkpoint, and is otherwise calibrated on the validation split.
pub fn load_models(cfg: &ExperimentConfig) -> Result<Vec<LoadedModel>> {
    cfg.validate()?;
    for s in &cfg.strategies {
        let path = cfg.checkpoint_path(s);
        if !path.is_file() {
            return Err(Error::Config(format!(
                "checkpoint for strategy `{}` not found at {}",
                s.name,
                path.display()
            )));
        }
    }
    let mut val_tracks: Option<Vec<TrackedTrajectory>> = None;
    let mut models = Vec::new();
    for s in &cfg.strategies {
        let (params, header) = load_checkpoint(&cfg.checkpoint_path(s), None)?;
        let params = Arc::new(params);
        let norm = header.normalization;
        let gamma_star = match (s.gamma_star, header.meta.gamma_star) {
            (Some(g), _) => g,
            (None, Some(g)) if header.meta.n_conv == Some(s.n_conv) => g,
            _ => {
                if val_tracks.is_none() {
                    val_tracks = Some(load_tracked(cfg, SplitKind::Val)?);
                }
                let val = val_tracks.as_deref().expect("just loaded");
                let predicted = predict_all(cfg, val, s, &params, &norm)?;
                calibrate_gamma_star(&predicted, s.n_conv, &cfg.scene.camera, &cfg.gamma_calibration)?
                    .gamma_star
            }
        };
        models.push(LoadedModel {
            strategy: s.clone(),
            params,
            norm,
            gamma_star,
        });
    }
    Ok(models)
}

/// Decision traces of one model on the test split.
#[derive(Debug, Clone)]
pub struct Evaluated {
    pub id: u64,
    pub ground_truth: GroundTruth,
    pub trace: DecisionTrace,
}

pub fn evaluate_model(
    cfg: &ExperimentConfig,
    tracked: &[TrackedTrajectory],
    model: &LoadedModel,
    calibration: &Calibration,
) -> Result<Vec<Evaluated>> {
    let predicted = predict_all(cfg, tracked, &model.strategy, &model.params, &model.norm)?;
    let traces = decision_traces(cfg, &predicted, &model.convergence(), calibration)?;
    Ok(predicted
        .into_iter()
        .zip(traces)
        .map(|(p, trace)| Evaluated {
            id: p.id,
            ground_truth: p.ground_truth,
            trace,
        })
        .collect())
}

/// Models, test-split traces and calibration shared by the eval commands.
pub struct Evaluation {
    pub models: Vec<LoadedModel>,
    pub calibration: Calibration,
    pub results: Vec<Vec<Evaluated>>,
}

pub fn evaluate_test_split(cfg: &ExperimentConfig) -> Result<Evaluation> {
    let models = load_models(cfg)?;
    let calibration = fitted_calibration(cfg)?;
    let records = load_split(cfg, SplitKind::Test)?;
    let tracked = track_records(cfg, SplitKind::Test, &records);
    let results = models
        .iter()
        .map(|m| evaluate_model(cfg, &tracked, m, &calibration))
        .collect::<Result<Vec<_>>>()?;
    Ok(Evaluation {
        models,
        calibration,
        results,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub strategy: String,
    pub bin_start_pct: f64,
    pub bin_end_pct: f64,
    pub count: usize,
    pub mean_y_err_m: Option<f64>,
    pub std_y_err_m: Option<f64>,
    pub mean_t_err_s: Option<f64>,
    pub std_t_err_s: Option<f64>,
}

pub const CONVERGENCE_HEADER: [&str; 8] = [
    "strategy",
    "bin_start_pct",
    "bin_end_pct",
    "count",
    "mean_y_err_m",
    "std_y_err_m",
    "mean_t_err_s",
    "std_t_err_s",
];

/// Elapsed flight time at `t` in percent of a trajectory launched at 0 and
/// leaving view at `t_f`.
pub fn trajectory_pct(t: f64, t_f: f64) -> f64 {
    if t_f > 0.0 {
        (100.0 * t / t_f).clamp(0.0, 100.0)
    } else {
        100.0
    }
}

pub fn convergence_rows(
    cfg: &ExperimentConfig,
    eval: &Evaluation,
) -> Vec<ConvergenceRow> {
    let w = cfg.convergence_bin_pct;
    let nbins = (100.0 / w).ceil().max(1.0) as usize;
    let mut rows = Vec::new();
    for (model, results) in eval.models.iter().zip(&eval.results) {
        let mut y_err = vec![Vec::new(); nbins];
        let mut t_err = vec![Vec::new(); nbins];
        for r in results {
            let preds = &r.trace.predictions;
            for p in preds {
                let pct = trajectory_pct(p.emitted_at, r.ground_truth.t_f);
                let bin = ((pct / w).floor() as usize).min(nbins - 1);
                y_err[bin].push(height_error(&cfg.scene.camera, p.y_f_hat, &r.ground_truth));
                t_err[bin].push((p.t_f_hat - r.ground_truth.t_f).abs());
            }
        }
        for b in 0..nbins {
            let (my, sy) = mean_std(&y_err[b]);
            let (mt, st) = mean_std(&t_err[b]);
            rows.push(ConvergenceRow {
                strategy: model.strategy.name.clone(),
                bin_start_pct: b as f64 * w,
                bin_end_pct: ((b + 1) as f64 * w).min(100.0),
                count: y_err[b].len(),
                mean_y_err_m: my,
                std_y_err_m: sy,
                mean_t_err_s: mt,
                std_t_err_s: st,
            });
        }
    }
    rows
}

pub fn cmd_eval_convergence(cfg: &ExperimentConfig) -> Result<Vec<ConvergenceRow>> {
    let eval = evaluate_test_split(cfg)?;
    let rows = convergence_rows(cfg, &eval);
    write_csv(&cfg.output_dir.join(CONVERGENCE_CSV), &rows, &CONVERGENCE_HEADER)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub id: u64,
    pub strategy: String,
    pub t_f: f64,
    pub samples: usize,
    /// False when gamma never dropped below the threshold.
    pub converged: bool,
    pub t_conv: Option<f64>,
    pub t_dec: Option<f64>,
    pub margin_s: Option<f64>,
    pub late: bool,
}

pub const TIMING_HEADER: [&str; 9] =
    ["id", "strategy", "t_f", "samples", "converged", "t_conv", "t_dec", "margin_s", "late"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingSummaryRow {
    pub strategy: String,
    pub n_conv: usize,
    pub gamma_star: f64,
    pub trajectories: usize,
    pub never_converged: usize,
    pub late: usize,
    /// Never converged or converged after the decision deadline.
    pub non_converged: usize,
}

pub const TIMING_SUMMARY_HEADER: [&str; 7] =
    ["strategy", "n_conv", "gamma_star", "trajectories", "never_converged", "late", "non_converged"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingBinRow {
    pub strategy: String,
    pub bin_start_s: f64,
    pub bin_end_s: f64,
    pub count: usize,
    pub non_converged: usize,
    pub mean_margin_s: Option<f64>,
    pub std_margin_s: Option<f64>,
}

pub const TIMING_BIN_HEADER: [&str; 7] = [
    "strategy",
    "bin_start_s",
    "bin_end_s",
    "count",
    "non_converged",
    "mean_margin_s",
    "std_margin_s",
];

pub struct TimingTables {
    pub rows: Vec<TimingRow>,
    pub summary: Vec<TimingSummaryRow>,
    pub by_duration: Vec<TimingBinRow>,
}

pub fn timing_tables(cfg: &ExperimentConfig, eval: &Evaluation) -> TimingTables {
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut by_duration = Vec::new();
    for (model, results) in eval.models.iter().zip(&eval.results) {
        let start = rows.len();
        for r in results {
            let t_conv = r.trace.t_conv;
            let t_dec = r.trace.t_dec_at_conv();
            let margin = t_conv.zip(t_dec).map(|(c, d)| d - c);
            rows.push(TimingRow {
                id: r.id,
                strategy: model.strategy.name.clone(),
                t_f: r.ground_truth.t_f,
                samples: r.trace.predictions.len(),
                converged: t_conv.is_some(),
                t_conv,
                t_dec,
                margin_s: margin,
                late: margin.is_some_and(|m| m < 0.0),
            });
        }
        let mine = &rows[start..];
        let never = mine.iter().filter(|r| !r.converged).count();
        let late = mine.iter().filter(|r| r.late).count();
        summary.push(TimingSummaryRow {
            strategy: model.strategy.name.clone(),
            n_conv: model.strategy.n_conv,
            gamma_star: model.gamma_star,
            trajectories: mine.len(),
            never_converged: never,
            late,
            non_converged: never + late,
        });

        let w = cfg.timing_bin;
        let nbins = mine
            .iter()
            .map(|r| (r.t_f / w).floor() as usize + 1)
            .max()
            .unwrap_or(0);
        for b in 0..nbins {
            let in_bin: Vec<&TimingRow> =
                mine.iter().filter(|r| (r.t_f / w).floor() as usize == b).collect();
            let margins: Vec<f64> = in_bin.iter().filter_map(|r| r.margin_s).collect();
            let (m, s) = mean_std(&margins);
            by_duration.push(TimingBinRow {
                strategy: model.strategy.name.clone(),
                bin_start_s: b as f64 * w,
                bin_end_s: (b + 1) as f64 * w,
                count: in_bin.len(),
                non_converged: in_bin.iter().filter(|r| !r.converged || r.late).count(),
                mean_margin_s: m,
                std_margin_s: s,
            });
        }
    }
    TimingTables {
        rows,
        summary,
        by_duration,
    }
}

pub fn cmd_eval_timing(cfg: &ExperimentConfig) -> Result<TimingTables> {
    let eval = evaluate_test_split(cfg)?;
    let t = timing_tables(cfg, &eval);
    write_csv(&cfg.output_dir.join(TIMING_CSV), &t.rows, &TIMING_HEADER)?;
    write_csv(&cfg.output_dir.join(TIMING_SUMMARY_CSV), &t.summary, &TIMING_SUMMARY_HEADER)?;
    write_csv(&cfg.output_dir.join(TIMING_BY_DURATION_CSV), &t.by_duration, &TIMING_BIN_HEADER)?;
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub id: u64,
    pub strategy: String,
    pub policy: Policy,
    pub t_f: f64,
    pub samples: usize,
    pub converged: bool,
    pub t_conv: Option<f64>,
    pub action_time: Option<f64>,
    pub t_dec: Option<f64>,
    pub y_f_m: f64,
    pub target_m: Option<f64>,
    pub y_err_at_action_m: Option<f64>,
    pub gripper_at_tf: f64,
    pub miss_distance: f64,
    pub hit: bool,
}

pub const TRIAL_HEADER: [&str; 15] = [
    "id",
    "strategy",
    "policy",
    "t_f",
    "samples",
    "converged",
    "t_conv",
    "action_time",
    "t_dec",
    "y_f_m",
    "target_m",
    "y_err_at_action_m",
    "gripper_at_tf",
    "miss_distance",
    "hit",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HitRow {
    pub strategy: String,
    pub policy: Policy,
    pub trials: usize,
    pub hits: usize,
}

pub const HIT_HEADER: [&str; 4] = ["strategy", "policy", "trials", "hits"];

/// Runs the first `trials_per_cell` test trajectories (by id) for every
/// strategy and policy.
pub fn trial_tables(cfg: &ExperimentConfig, eval: &Evaluation) -> (Vec<TrialRow>, Vec<HitRow>) {
    let mut rows = Vec::new();
    let mut hits = Vec::new();
    for (model, results) in eval.models.iter().zip(&eval.results) {
        let mut chosen: Vec<&Evaluated> = results.iter().collect();
        chosen.sort_by_key(|r| r.id);
        chosen.truncate(cfg.trials_per_cell);
        for &policy in &cfg.policies {
            let mut count = 0;
            for r in &chosen {
                let action = r.trace.decide(policy);
                let out = run_trial(
                    &r.ground_truth,
                    action.as_ref(),
                    &eval.calibration,
                    &cfg.robot,
                    cfg.events.ball_radius,
                    policy,
                    &model.strategy.name,
                );
                count += usize::from(out.hit);
                rows.push(TrialRow {
                    id: r.id,
                    strategy: model.strategy.name.clone(),
                    policy,
                    t_f: r.ground_truth.t_f,
                    samples: r.trace.predictions.len(),
                    converged: r.trace.t_conv.is_some(),
                    t_conv: r.trace.t_conv,
                    action_time: out.action_time,
                    t_dec: action.map(|a| a.t_dec),
                    y_f_m: r.ground_truth.y_f_m,
                    target_m: out.target_m,
                    y_err_at_action_m: out.target_m.map(|t| (t - r.ground_truth.y_f_m).abs()),
                    gripper_at_tf: out.gripper_at_tf,
                    miss_distance: out.miss_distance,
                    hit: out.hit,
                });
            }
            hits.push(HitRow {
                strategy: model.strategy.name.clone(),
                policy,
                trials: chosen.len(),
                hits: count,
            });
        }
    }
    (rows, hits)
}

pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<(Vec<TrialRow>, Vec<HitRow>)> {
    let eval = evaluate_test_split(cfg)?;
    let (rows, hits) = trial_tables(cfg, &eval);
    write_csv(&cfg.output_dir.join(TRIALS_CSV), &rows, &TRIAL_HEADER)?;
    write_csv(&cfg.output_dir.join(HITS_CSV), &hits, &HIT_HEADER)?;
    Ok((rows, hits))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorWindowRow {
    pub strategy: String,
    pub bin_start_s: f64,
    pub bin_end_s: f64,
    pub count: usize,
    pub mean_y_err_m: Option<f64>,
    pub std_y_err_m: Option<f64>,
}

pub const ERROR_WINDOW_HEADER: [&str; 6] =
    ["strategy", "bin_start_s", "bin_end_s", "count", "mean_y_err_m", "std_y_err_m"];

/// Exit-height error between convergence and the decision deadline, binned by
/// time since convergence. Only trajectories that converge in time count.
pub fn error_window_rows(cfg: &ExperimentConfig, eval: &Evaluation) -> Result<Vec<ErrorWindowRow>> {
    let idx = eval
        .models
        .iter()
        .position(|m| m.strategy.name == cfg.error_window_strategy)
        .ok_or_else(|| {
            Error::Config(format!("unknown strategy `{}`", cfg.error_window_strategy))
        })?;
    let w = cfg.error_window_bin;
    let mut bins: Vec<Vec<f64>> = Vec::new();
    for r in &eval.results[idx] {
        let (Some(k), Some(t_conv), Some(t_end)) =
            (r.trace.conv_index, r.trace.t_conv, r.trace.t_dec_at_conv())
        else {
            continue;
        };
        if t_end < t_conv {
            continue;
        }
        for p in &r.trace.predictions[k..] {
            if p.emitted_at > t_end {
                break;
            }
            let b = ((p.emitted_at - t_conv) / w).floor() as usize;
            if bins.len() <= b {
                bins.resize(b + 1, Vec::new());
            }
            bins[b].push(height_error(&cfg.scene.camera, p.y_f_hat, &r.ground_truth));
        }
    }
    Ok(bins
        .iter()
        .enumerate()
        .map(|(b, v)| {
            let (m, s) = mean_std(v);
            ErrorWindowRow {
                strategy: cfg.error_window_strategy.clone(),
                bin_start_s: b as f64 * w,
                bin_end_s: (b + 1) as f64 * w,
                count: v.len(),
                mean_y_err_m: m,
                std_y_err_m: s,
            }
        })
        .collect())
}

pub fn cmd_error_window(cfg: &ExperimentConfig) -> Result<Vec<ErrorWindowRow>> {
    let eval = evaluate_test_split(cfg)?;
    let rows = error_window_rows(cfg, &eval)?;
    write_csv(&cfg.output_dir.join(ERROR_WINDOW_CSV), &rows, &ERROR_WINDOW_HEADER)?;
    Ok(rows)
}

pub fn cmd_calibrate(cfg: &ExperimentConfig) -> Result<Calibration> {
    cfg.validate()?;
    let calib = fitted_calibration(cfg)?;
    fs::create_dir_all(&cfg.output_dir)?;
    let mut text = serde_json::to_string_pretty(&calib)?;
    text.push('\n');
    fs::write(cfg.output_dir.join(CALIBRATION_JSON), text)?;
    Ok(calib)
}

/// Learning-curve rows as written by `cmd_train`.
pub fn read_curves(path: &Path) -> Result<Vec<EpochRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}
