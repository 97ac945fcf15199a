//! C ABI for the evintercept library.
//!
//! Every fallible function returns an [`EvStatus`]. On failure a message is
//! kept per thread and can be read with [`ev_last_error`]. Handles are opaque
//! and must be released with the matching `_free` function; passing a freed
//! or foreign pointer is undefined behavior.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use evintercept::decision::{self, RobotEnvelope};
use evintercept::physics::{self, BallParams, DenseTrajectory, ExitSide, GroundTruth, Scene, Vec2};
use evintercept::predictor::{load_checkpoint, ModelParams, Normalization, Prediction, StatefulPredictor};
use evintercept::robot::{self, MotionPlan, RobotConfig};
use evintercept::tracker::TrackerSample;
use evintercept::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Io = 3,
    Checkpoint = 4,
    SchemaMismatch = 5,
    StaleState = 6,
    OutOfEnvelope = 7,
    NonTerminating = 8,
    Internal = 9,
}

impl From<&Error> for EvStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidInput(_)
            | Error::EmptyTrajectory
            | Error::DistributionInfeasible { .. }
            | Error::DegenerateInterval { .. }
            | Error::RankDeficient { .. }
            | Error::Config(_) => EvStatus::InvalidInput,
            Error::NonTerminating { .. } => EvStatus::NonTerminating,
            Error::OutOfEnvelope { .. } => EvStatus::OutOfEnvelope,
            Error::StaleState { .. } => EvStatus::StaleState,
            Error::Checkpoint { .. } | Error::Json(_) => EvStatus::Checkpoint,
            Error::SchemaMismatch { .. } => EvStatus::SchemaMismatch,
            Error::Io(_) => EvStatus::Io,
            Error::Divergence { .. } => EvStatus::Internal,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: EvStatus, msg: impl Into<String>) -> EvStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), EvStatus>) -> EvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EvStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(EvStatus::Internal, "internal panic"),
    }
}

fn lib_err(e: Error) -> EvStatus {
    let status = EvStatus::from(&e);
    fail(status, e.to_string())
}

/// Message for the most recent failure on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ev_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn ev_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn ev_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvPrediction {
    /// Predicted exit row (px).
    pub y_f_hat: f64,
    /// Predicted absolute exit time (s).
    pub t_f_hat: f64,
    pub emitted_at: f64,
}

impl From<Prediction> for EvPrediction {
    fn from(p: Prediction) -> Self {
        Self {
            y_f_hat: p.y_f_hat,
            t_f_hat: p.t_f_hat,
            emitted_at: p.emitted_at,
        }
    }
}

/// Stateful end-point predictor.
pub struct EvPredictor {
    inner: StatefulPredictor,
    hidden: usize,
}

unsafe fn out_ref<'a, T>(p: *mut T) -> Result<&'a mut T, EvStatus> {
    p.as_mut()
        .ok_or_else(|| fail(EvStatus::NullPointer, "null output pointer"))
}

unsafe fn in_ref<'a, T>(p: *const T) -> Result<&'a T, EvStatus> {
    p.as_ref()
        .ok_or_else(|| fail(EvStatus::NullPointer, "null input pointer"))
}

fn boxed<T>(v: T, out: &mut *mut T) {
    *out = Box::into_raw(Box::new(v));
}

/// Loads a predictor from a checkpoint file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ev_predictor_load(path: *const c_char, out: *mut *mut EvPredictor) -> EvStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = ptr::null_mut();
        let path = in_ref(path).map(|p| CStr::from_ptr(p))?;
        let path = path
            .to_str()
            .map_err(|_| fail(EvStatus::InvalidInput, "path is not UTF-8"))?;
        let (params, header) = load_checkpoint(Path::new(path), None).map_err(lib_err)?;
        let hidden = params.hidden();
        boxed(
            EvPredictor {
                inner: StatefulPredictor::new(Arc::new(params), header.normalization),
                hidden,
            },
            out,
        );
        Ok(())
    })
}

/// Creates an untrained predictor with randomly initialized weights and the
/// default camera normalization.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ev_predictor_new(hidden: usize, seed: u64, out: *mut *mut EvPredictor) -> EvStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = ptr::null_mut();
        if hidden == 0 {
            return Err(fail(EvStatus::InvalidInput, "hidden size must be at least 1"));
        }
        let params = Arc::new(ModelParams::init(hidden, seed));
        boxed(
            EvPredictor {
                inner: StatefulPredictor::new(params, Normalization::default()),
                hidden,
            },
            out,
        );
        Ok(())
    })
}

/// Feeds one tracker sample (pixel coordinates, seconds) and writes the
/// updated end-point estimate.
///
/// # Safety
/// `predictor` must come from `ev_predictor_load`/`ev_predictor_new`; `out`
/// must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ev_predictor_observe(
    predictor: *mut EvPredictor,
    x: f64,
    y: f64,
    t: f64,
    out: *mut EvPrediction,
) -> EvStatus {
    guard(|| {
        let p = out_ref(predictor)?;
        let out = out_ref(out)?;
        let pred = p.inner.observe(&TrackerSample { x, y, t }).map_err(lib_err)?;
        *out = pred.into();
        Ok(())
    })
}

/// Clears the recurrent state before an unrelated trajectory.
///
/// # Safety
/// `predictor` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ev_predictor_reset(predictor: *mut EvPredictor) -> EvStatus {
    guard(|| {
        out_ref(predictor)?.inner.reset();
        Ok(())
    })
}

/// Hidden size of the model, 0 for NULL.
///
/// # Safety
/// `predictor` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn ev_predictor_hidden(predictor: *const EvPredictor) -> usize {
    predictor.as_ref().map_or(0, |p| p.hidden)
}

/// # Safety
/// `predictor` must be a live handle or NULL; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn ev_predictor_free(predictor: *mut EvPredictor) {
    if !predictor.is_null() {
        drop(Box::from_raw(predictor));
    }
}

/// Convergence statistic at index `i` over `n_conv` intervals of the
/// estimate series `y_f_hat` (px) stamped with `emitted_at` (s).
///
/// # Safety
/// Both arrays must hold `len` values; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ev_gamma(
    y_f_hat: *const f64,
    emitted_at: *const f64,
    len: usize,
    i: usize,
    n_conv: usize,
    out: *mut f64,
) -> EvStatus {
    guard(|| {
        let out = out_ref(out)?;
        if len > 0 && (y_f_hat.is_null() || emitted_at.is_null()) {
            return Err(fail(EvStatus::NullPointer, "null array"));
        }
        let (ys, ts) = if len == 0 {
            (&[][..], &[][..])
        } else {
            (
                std::slice::from_raw_parts(y_f_hat, len),
                std::slice::from_raw_parts(emitted_at, len),
            )
        };
        let preds: Vec<Prediction> = ys
            .iter()
            .zip(ts)
            .map(|(&y, &t)| Prediction {
                y_f_hat: y,
                t_f_hat: f64::NAN,
                emitted_at: t,
            })
            .collect();
        *out = decision::gamma(&preds, i, n_conv).map_err(lib_err)?;
        Ok(())
    })
}

/// Latest start time that reaches height `y_f_hat_m` by `t_f_hat`.
#[no_mangle]
pub extern "C" fn ev_t_dec(t_f_hat: f64, y_f_hat_m: f64, y_start: f64, v_robot: f64) -> f64 {
    decision::t_dec(t_f_hat, y_f_hat_m, &RobotEnvelope { y_start, v_robot })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvRobotConfig {
    pub y_start: f64,
    pub v_max: f64,
    pub a_max: f64,
    pub range: f64,
    pub t_ref: f64,
    pub gripper_height: f64,
}

impl From<&EvRobotConfig> for RobotConfig {
    fn from(c: &EvRobotConfig) -> Self {
        RobotConfig {
            y_start: c.y_start,
            v_max: c.v_max,
            a_max: c.a_max,
            range: c.range,
            t_ref: c.t_ref,
            gripper_height: c.gripper_height,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvMotionPlan {
    pub y0: f64,
    pub yf: f64,
    pub t_start: f64,
    pub duration: f64,
}

impl From<&EvMotionPlan> for MotionPlan {
    fn from(p: &EvMotionPlan) -> Self {
        MotionPlan {
            y0: p.y0,
            yf: p.yf,
            t_start: p.t_start,
            duration: p.duration,
        }
    }
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ev_robot_config_default(out: *mut EvRobotConfig) -> EvStatus {
    guard(|| {
        let d = RobotConfig::default();
        *out_ref(out)? = EvRobotConfig {
            y_start: d.y_start,
            v_max: d.v_max,
            a_max: d.a_max,
            range: d.range,
            t_ref: d.t_ref,
            gripper_height: d.gripper_height,
        };
        Ok(())
    })
}

/// Quintic move from `y0` to `yf` starting at `t_start`, with the shortest
/// duration the limits allow.
///
/// # Safety
/// `cfg` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ev_plan_motion(
    y0: f64,
    yf: f64,
    t_start: f64,
    cfg: *const EvRobotConfig,
    out: *mut EvMotionPlan,
) -> EvStatus {
    guard(|| {
        let cfg = RobotConfig::from(in_ref(cfg)?);
        let out = out_ref(out)?;
        cfg.validate().map_err(lib_err)?;
        let plan = robot::plan_motion(y0, yf, t_start, &cfg).map_err(lib_err)?;
        *out = EvMotionPlan {
            y0: plan.y0,
            yf: plan.yf,
            t_start: plan.t_start,
            duration: plan.duration,
        };
        Ok(())
    })
}

/// Gripper height along `plan` at time `t`; NaN for NULL.
///
/// # Safety
/// `plan` must be a valid pointer or NULL.
#[no_mangle]
pub unsafe extern "C" fn ev_position_at(plan: *const EvMotionPlan, t: f64) -> f64 {
    plan.as_ref()
        .map_or(f64::NAN, |p| robot::position_at(&MotionPlan::from(p), t))
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvBallParams {
    pub x0: f64,
    pub y0: f64,
    pub vx0: f64,
    pub vy0: f64,
    pub radius: f64,
    pub restitution: f64,
    pub gravity: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvExitSide {
    Left = 0,
    Right = 1,
    Top = 2,
    Bottom = 3,
    InView = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvGroundTruth {
    pub x_f_px: f64,
    pub y_f_px: f64,
    pub y_f_m: f64,
    pub t_f: f64,
    pub exit_side: EvExitSide,
}

impl From<&GroundTruth> for EvGroundTruth {
    fn from(g: &GroundTruth) -> Self {
        Self {
            x_f_px: g.x_f_px,
            y_f_px: g.y_f_px,
            y_f_m: g.y_f_m,
            t_f: g.t_f,
            exit_side: match g.exit_side {
                ExitSide::Left => EvExitSide::Left,
                ExitSide::Right => EvExitSide::Right,
                ExitSide::Top => EvExitSide::Top,
                ExitSide::Bottom => EvExitSide::Bottom,
                ExitSide::InView => EvExitSide::InView,
            },
        }
    }
}

/// Simulated in-view trajectory with its ground truth.
pub struct EvTrajectory {
    dense: DenseTrajectory,
    gt: GroundTruth,
}

/// Simulates a launch in the default scene (304x240 camera, 500 Hz).
///
/// # Safety
/// `params` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ev_trajectory_simulate(
    params: *const EvBallParams,
    out: *mut *mut EvTrajectory,
) -> EvStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = ptr::null_mut();
        let p = in_ref(params)?;
        let ball = BallParams {
            launch_pos: Vec2::new(p.x0, p.y0),
            launch_vel: Vec2::new(p.vx0, p.vy0),
            radius: p.radius,
            restitution: p.restitution,
            gravity: p.gravity,
        };
        let (dense, gt) = physics::simulate_trajectory(&ball, &Scene::default()).map_err(lib_err)?;
        boxed(EvTrajectory { dense, gt }, out);
        Ok(())
    })
}

/// Number of dense samples, 0 for NULL.
///
/// # Safety
/// `traj` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn ev_trajectory_len(traj: *const EvTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.dense.samples.len())
}

/// Time (s) and world position (m) of dense sample `i`.
///
/// # Safety
/// `traj` must be a live handle; the output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ev_trajectory_sample(
    traj: *const EvTrajectory,
    i: usize,
    t: *mut f64,
    x: *mut f64,
    y: *mut f64,
) -> EvStatus {
    guard(|| {
        let traj = in_ref(traj)?;
        let (t, x, y) = (out_ref(t)?, out_ref(x)?, out_ref(y)?);
        let s = traj
            .dense
            .samples
            .get(i)
            .ok_or_else(|| fail(EvStatus::InvalidInput, format!("sample index {i} out of range")))?;
        *t = s.t;
        *x = s.pos.x;
        *y = s.pos.y;
        Ok(())
    })
}

/// # Safety
/// `traj` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ev_trajectory_ground_truth(
    traj: *const EvTrajectory,
    out: *mut EvGroundTruth,
) -> EvStatus {
    guard(|| {
        *out_ref(out)? = EvGroundTruth::from(&in_ref(traj)?.gt);
        Ok(())
    })
}

/// # Safety
/// `traj` must be a live handle or NULL; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn ev_trajectory_free(traj: *mut EvTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}
