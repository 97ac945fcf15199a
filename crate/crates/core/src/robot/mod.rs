//! Vertical interception motion, pixel-to-height calibration and trial scoring.

mod calibration;

pub use calibration::{fit_calibration, synthesize_calibration_pairs, Calibration, CalibrationNoise};

use serde::{Deserialize, Serialize};

use crate::decision::{Action, HeightMap, Policy, RobotEnvelope};
use crate::error::{Error, Result};
use crate::physics::GroundTruth;

/// Peak of s'(tau) for the quintic blend.
pub const QUINTIC_PEAK_VELOCITY: f64 = 1.875;
/// Peak of |s''(tau)|, reached at tau = 1/2 -+ sqrt(3)/6.
pub const QUINTIC_PEAK_ACCELERATION: f64 = 5.773_502_691_896_258;

/// Minimum-jerk blend from 0 to 1 on `tau` in [0, 1].
pub fn quintic(tau: f64) -> f64 {
    let t3 = tau * tau * tau;
    t3 * (10.0 - 15.0 * tau + 6.0 * tau * tau)
}

pub fn quintic_velocity(tau: f64) -> f64 {
    30.0 * tau * tau * (1.0 - tau) * (1.0 - tau)
}

pub fn quintic_acceleration(tau: f64) -> f64 {
    60.0 * tau * (1.0 - tau) * (1.0 - 2.0 * tau)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobotConfig {
    pub y_start: f64,
    pub v_max: f64,
    pub a_max: f64,
    /// Largest vertical move (m).
    pub range: f64,
    /// Duration of a full-range move at the limits (s).
    pub t_ref: f64,
    pub gripper_height: f64,
}

impl Default for RobotConfig {
    fn default() -> Self {
        let range = 0.60;
        let t_ref = 1.1;
        Self {
            y_start: 0.30,
            v_max: QUINTIC_PEAK_VELOCITY * range / t_ref,
            // Four times the reference peak so that short moves stay
            // velocity-limited like the full-range one.
            a_max: 4.0 * QUINTIC_PEAK_ACCELERATION * range / (t_ref * t_ref),
            range,
            t_ref,
            gripper_height: 0.02,
        }
    }
}

impl RobotConfig {
    pub fn validate(&self) -> Result<()> {
        let all_positive = [self.v_max, self.a_max, self.range, self.t_ref, self.gripper_height]
            .iter()
            .all(|&v| v > 0.0 && v.is_finite());
        if !all_positive || !self.y_start.is_finite() {
            return Err(Error::invalid("robot limits must be positive and finite"));
        }
        let tol = 1e-9;
        if QUINTIC_PEAK_VELOCITY * self.range / self.t_ref > self.v_max * (1.0 + tol)
            || QUINTIC_PEAK_ACCELERATION * self.range / (self.t_ref * self.t_ref)
                > self.a_max * (1.0 + tol)
        {
            return Err(Error::invalid("reference motion violates the robot limits"));
        }
        Ok(())
    }

    /// Average speed of the reference full-range motion.
    pub fn average_speed(&self) -> f64 {
        self.range / self.t_ref
    }

    pub fn envelope(&self) -> RobotEnvelope {
        RobotEnvelope {
            y_start: self.y_start,
            v_robot: self.average_speed(),
        }
    }

    /// Ball-gripper center distance still counted as a hit.
    pub fn hit_threshold(&self, ball_radius: f64) -> f64 {
        self.gripper_height / 2.0 + ball_radius
    }

    /// Shortest quintic duration for a move of `delta` meters.
    pub fn min_duration(&self, delta: f64) -> f64 {
        let d = delta.abs();
        (QUINTIC_PEAK_VELOCITY * d / self.v_max).max((QUINTIC_PEAK_ACCELERATION * d / self.a_max).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionPlan {
    pub y0: f64,
    pub yf: f64,
    pub t_start: f64,
    pub duration: f64,
}

impl MotionPlan {
    pub fn end_time(&self) -> f64 {
        self.t_start + self.duration
    }

    pub fn average_speed(&self) -> f64 {
        if self.duration == 0.0 {
            0.0
        } else {
            (self.yf - self.y0).abs() / self.duration
        }
    }
}

pub fn plan_motion(y0: f64, yf: f64, t_start: f64, cfg: &RobotConfig) -> Result<MotionPlan> {
    let delta = (yf - y0).abs();
    if delta > cfg.range * (1.0 + 1e-12) {
        return Err(Error::OutOfEnvelope {
            delta,
            range: cfg.range,
        });
    }
    Ok(MotionPlan {
        y0,
        yf,
        t_start,
        duration: cfg.min_duration(delta),
    })
}

pub fn position_at(plan: &MotionPlan, t: f64) -> f64 {
    if t <= plan.t_start {
        plan.y0
    } else if t >= plan.end_time() {
        plan.yf
    } else {
        let tau = (t - plan.t_start) / plan.duration;
        plan.y0 + (plan.yf - plan.y0) * quintic(tau)
    }
}

pub fn velocity_at(plan: &MotionPlan, t: f64) -> f64 {
    if t <= plan.t_start || t >= plan.end_time() {
        0.0
    } else {
        let tau = (t - plan.t_start) / plan.duration;
        (plan.yf - plan.y0) * quintic_velocity(tau) / plan.duration
    }
}

/// Score of one interception attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub hit: bool,
    pub miss_distance: f64,
    pub action_time: Option<f64>,
    pub gripper_at_tf: f64,
    pub target_m: Option<f64>,
    pub plan: Option<MotionPlan>,
    pub policy: Policy,
    pub strategy: String,
}

/// Executes the open-loop command and checks the gripper against the ball at
/// its last visible instant. Without a command the trial is a miss.
pub fn run_trial<H: HeightMap + ?Sized>(
    gt: &GroundTruth,
    action: Option<&Action>,
    calib: &H,
    cfg: &RobotConfig,
    ball_radius: f64,
    policy: Policy,
    strategy: &str,
) -> TrialOutcome {
    let threshold = cfg.hit_threshold(ball_radius);
    let Some(action) = action else {
        let miss = (cfg.y_start - gt.y_f_m).abs();
        return TrialOutcome {
            hit: false,
            miss_distance: miss,
            action_time: None,
            gripper_at_tf: cfg.y_start,
            target_m: None,
            plan: None,
            policy,
            strategy: strategy.to_string(),
        };
    };
    let target = calib
        .height_m(action.target_px)
        .clamp(cfg.y_start - cfg.range, cfg.y_start + cfg.range);
    let plan = plan_motion(cfg.y_start, target, action.time, cfg)
        .expect("target clamped into the envelope");
    let gripper = position_at(&plan, gt.t_f);
    let miss = (gripper - gt.y_f_m).abs();
    TrialOutcome {
        hit: miss <= threshold,
        miss_distance: miss,
        action_time: Some(action.time),
        gripper_at_tf: gripper,
        target_m: Some(target),
        plan: Some(plan),
        policy,
        strategy: strategy.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::ExitSide;

    #[test]
    fn quintic_boundary_identities() {
        assert_eq!(quintic(0.0), 0.0);
        assert_eq!(quintic(1.0), 1.0);
        assert_eq!(quintic_velocity(0.0), 0.0);
        assert_eq!(quintic_velocity(1.0), 0.0);
        assert_eq!(quintic_acceleration(0.0), 0.0);
        assert_eq!(quintic_acceleration(1.0), 0.0);
        assert_eq!(quintic(0.5), 0.5);
        assert_eq!(quintic_velocity(0.5), QUINTIC_PEAK_VELOCITY);
        let tau = 0.5 - 3f64.sqrt() / 6.0;
        assert!((quintic_acceleration(tau) - QUINTIC_PEAK_ACCELERATION).abs() < 1e-12);
    }

    #[test]
    fn reference_move_takes_t_ref() {
        let cfg = RobotConfig::default();
        cfg.validate().unwrap();
        let plan = plan_motion(0.0, 0.6, 0.0, &cfg).unwrap();
        assert!((plan.duration - 1.1).abs() < 1e-12);
        assert!((plan.average_speed() - 0.6 / 1.1).abs() < 1e-9);
        assert!((cfg.average_speed() - 0.545).abs() < 1e-3);
    }

    #[test]
    fn plan_midpoint_and_endpoints() {
        let cfg = RobotConfig::default();
        let plan = plan_motion(0.1, 0.5, 2.0, &cfg).unwrap();
        assert_eq!(position_at(&plan, 2.0), 0.1);
        assert_eq!(position_at(&plan, plan.end_time()), 0.5);
        let mid = position_at(&plan, 2.0 + plan.duration / 2.0);
        assert!((mid - 0.3).abs() < 1e-12);
    }

    #[test]
    fn out_of_envelope() {
        let cfg = RobotConfig::default();
        assert!(matches!(
            plan_motion(0.0, 0.7, 0.0, &cfg),
            Err(Error::OutOfEnvelope { .. })
        ));
    }

    #[test]
    fn duration_is_minimal() {
        let cfg = RobotConfig { a_max: 2.0, ..Default::default() };
        for delta in [0.01, 0.05, 0.2, 0.45, 0.6] {
            let plan = plan_motion(0.0, delta, 0.0, &cfg).unwrap();
            let t = plan.duration * 0.99;
            let v_peak = QUINTIC_PEAK_VELOCITY * delta / t;
            let a_peak = QUINTIC_PEAK_ACCELERATION * delta / (t * t);
            assert!(v_peak > cfg.v_max || a_peak > cfg.a_max);
            let v_ok = QUINTIC_PEAK_VELOCITY * delta / plan.duration <= cfg.v_max * (1.0 + 1e-12);
            let a_ok = QUINTIC_PEAK_ACCELERATION * delta / plan.duration.powi(2)
                <= cfg.a_max * (1.0 + 1e-12);
            assert!(v_ok && a_ok);
        }
    }

    fn gt(y: f64) -> GroundTruth {
        GroundTruth { x_f_px: 303.0, y_f_px: 0.0, y_f_m: y, t_f: 1.0, exit_side: ExitSide::Right }
    }

    #[test]
    fn near_target_is_a_hit() {
        let cfg = RobotConfig::default();
        let action = Action { time: 0.0, index: 0, target_px: 0.32, target_m: 0.32, t_dec: 0.5 };
        let identity = |r: f64| r;
        let out = run_trial(&gt(0.30), Some(&action), &identity, &cfg, 0.025, Policy::MoveAtConv, "events");
        assert!((out.gripper_at_tf - 0.32).abs() < 1e-12);
        assert!((out.miss_distance - 0.02).abs() < 1e-12);
        assert!(out.hit);
    }

    #[test]
    fn no_action_is_a_miss() {
        let cfg = RobotConfig::default();
        let identity = |r: f64| r;
        let out = run_trial(&gt(0.1), None, &identity, &cfg, 0.025, Policy::MoveAtDec, "events");
        assert!(!out.hit);
        assert!((out.miss_distance - 0.2).abs() < 1e-12);
    }

    #[test]
    fn no_action_misses_even_when_close() {
        let cfg = RobotConfig::default();
        let identity = |r: f64| r;
        let out = run_trial(&gt(0.30), None, &identity, &cfg, 0.025, Policy::MoveAtConv, "events");
        assert!(!out.hit);
        assert_eq!(out.miss_distance, 0.0);
    }

    #[test]
    fn hit_is_symmetric() {
        let cfg = RobotConfig::default();
        let identity = |r: f64| r;
        for off in [0.01, 0.034, 0.036, 0.1] {
            let up = Action { time: 0.0, index: 0, target_px: 0.3 + off, target_m: 0.0, t_dec: 0.0 };
            let down = Action { target_px: 0.3 - off, ..up };
            let a = run_trial(&gt(0.3), Some(&up), &identity, &cfg, 0.025, Policy::MoveAtConv, "s");
            let b = run_trial(&gt(0.3), Some(&down), &identity, &cfg, 0.025, Policy::MoveAtConv, "s");
            assert_eq!(a.hit, b.hit);
            assert!((a.miss_distance - b.miss_distance).abs() < 1e-12);
        }
    }
}
