//! Convergence statistic, decision deadline and open-loop action policies.
//!
//! `gamma(i)` is the mean absolute rate of change of the last `n_conv`
//! exit-height estimates (px/s). The prediction has converged at the first
//! index where it drops below `gamma_star`. The decision deadline `t_dec(i)`
//! is the predicted exit time minus the travel time of the robot to the
//! predicted exit height at its average speed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictor::Prediction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub n_conv: usize,
    /// Threshold on gamma (px/s).
    pub gamma_star: f64,
}

impl ConvergenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_conv == 0 || !(self.gamma_star > 0.0) {
            return Err(Error::invalid("n_conv must be >= 1 and gamma_star > 0"));
        }
        Ok(())
    }
}

/// What the decision layer knows about the robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotEnvelope {
    /// Gripper start height (m).
    pub y_start: f64,
    /// Average vertical speed (m/s).
    pub v_robot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Move as soon as the prediction converges.
    MoveAtConv,
    /// Wait for the last moment that still reaches the predicted end point.
    MoveAtDec,
}

impl Policy {
    pub const ALL: [Policy; 2] = [Policy::MoveAtConv, Policy::MoveAtDec];

    pub fn name(self) -> &'static str {
        match self {
            Policy::MoveAtConv => "move_at_conv",
            Policy::MoveAtDec => "move_at_dec",
        }
    }
}

/// Pixel row to Cartesian height (m).
pub trait HeightMap {
    fn height_m(&self, row_px: f64) -> f64;
}

impl<F: Fn(f64) -> f64> HeightMap for F {
    fn height_m(&self, row_px: f64) -> f64 {
        self(row_px)
    }
}

/// Gamma at prediction index `i` (0-based) over the window `i-n+1..=i`.
pub fn gamma(preds: &[Prediction], i: usize, n_conv: usize) -> Result<f64> {
    if n_conv == 0 || i < n_conv || i >= preds.len() {
        return Err(Error::invalid(format!(
            "gamma needs n_conv <= i < {} (i = {i}, n_conv = {n_conv})",
            preds.len()
        )));
    }
    let mut sum = 0.0;
    for j in i + 1 - n_conv..=i {
        let dt = preds[j].emitted_at - preds[j - 1].emitted_at;
        if !(dt > 0.0) {
            return Err(Error::DegenerateInterval { prev: j - 1, index: j });
        }
        sum += (preds[j].y_f_hat - preds[j - 1].y_f_hat).abs() / dt;
    }
    Ok(sum / n_conv as f64)
}

/// Gamma for every computable index `n_conv..len`; entry `k` belongs to
/// prediction `k + n_conv`.
pub fn gamma_series(preds: &[Prediction], n_conv: usize) -> Result<Vec<f64>> {
    if n_conv == 0 {
        return Err(Error::invalid("n_conv must be >= 1"));
    }
    (n_conv..preds.len()).map(|i| gamma(preds, i, n_conv)).collect()
}

/// Position in `gamma` of the first value strictly below `gamma_star`.
pub fn first_below(gamma: &[f64], gamma_star: f64) -> Option<usize> {
    gamma.iter().position(|&g| g < gamma_star)
}

/// Convergence instant and the prediction index it belongs to.
pub fn find_t_conv(
    preds: &[Prediction],
    gamma: &[f64],
    cfg: &ConvergenceConfig,
) -> Option<(usize, f64)> {
    first_below(gamma, cfg.gamma_star).map(|k| {
        let idx = k + cfg.n_conv;
        (idx, preds[idx].emitted_at)
    })
}

/// Latest start time that still reaches `y_f_hat_m` by `t_f_hat`, using the
/// absolute travel distance. Negative values mean the target is unreachable.
pub fn t_dec(t_f_hat: f64, y_f_hat_m: f64, robot: &RobotEnvelope) -> f64 {
    t_f_hat - (robot.y_start - y_f_hat_m).abs() / robot.v_robot
}

/// Open-loop command issued to the robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub time: f64,
    /// Prediction index the command was taken from.
    pub index: usize,
    pub target_px: f64,
    pub target_m: f64,
    /// Deadline computed from the same prediction.
    pub t_dec: f64,
}

/// Per-trajectory record of everything the decision layer computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTrace {
    pub predictions: Vec<Prediction>,
    pub n_conv: usize,
    pub gamma_star: f64,
    pub gamma: Vec<f64>,
    pub conv_index: Option<usize>,
    pub t_conv: Option<f64>,
    pub t_dec_series: Vec<f64>,
    /// Predicted exit heights converted to meters.
    pub heights_m: Vec<f64>,
    pub policy: Option<Policy>,
    pub action: Option<Action>,
}

impl DecisionTrace {
    pub fn new<H: HeightMap + ?Sized>(
        predictions: Vec<Prediction>,
        cfg: &ConvergenceConfig,
        robot: &RobotEnvelope,
        heights: &H,
    ) -> Result<Self> {
        cfg.validate()?;
        if !(robot.v_robot > 0.0) {
            return Err(Error::invalid("v_robot must be positive"));
        }
        let gamma = gamma_series(&predictions, cfg.n_conv)?;
        let conv = find_t_conv(&predictions, &gamma, cfg);
        let heights_m: Vec<f64> = predictions.iter().map(|p| heights.height_m(p.y_f_hat)).collect();
        let t_dec_series = predictions
            .iter()
            .zip(&heights_m)
            .map(|(p, &y)| t_dec(p.t_f_hat, y, robot))
            .collect();
        Ok(Self {
            predictions,
            n_conv: cfg.n_conv,
            gamma_star: cfg.gamma_star,
            gamma,
            conv_index: conv.map(|c| c.0),
            t_conv: conv.map(|c| c.1),
            t_dec_series,
            heights_m,
            policy: None,
            action: None,
        })
    }

    /// Deadline computed from the prediction current at convergence.
    pub fn t_dec_at_conv(&self) -> Option<f64> {
        self.conv_index.map(|i| self.t_dec_series[i])
    }

    fn action_at(&self, i: usize, time: f64) -> Action {
        Action {
            time,
            index: i,
            target_px: self.predictions[i].y_f_hat,
            target_m: self.heights_m[i],
            t_dec: self.t_dec_series[i],
        }
    }

    /// Chooses the time of action. Predictions after the action are never
    /// consulted, so deleting them leaves the result unchanged.
    pub fn decide(&self, policy: Policy) -> Option<Action> {
        let k = self.conv_index?;
        match policy {
            Policy::MoveAtConv => Some(self.action_at(k, self.predictions[k].emitted_at)),
            Policy::MoveAtDec => {
                let in_time = |i: usize| self.predictions[i].emitted_at <= self.t_dec_series[i];
                let start = (k..self.predictions.len()).find(|&i| in_time(i))?;
                let mut last = start;
                while last + 1 < self.predictions.len() && in_time(last + 1) {
                    last += 1;
                }
                Some(self.action_at(last, self.predictions[last].emitted_at))
            }
        }
    }

    pub fn with_policy(mut self, policy: Policy) -> Self {
        self.action = self.decide(policy);
        self.policy = Some(policy);
        self
    }
}
