#ifndef EVINTERCEPT_H
#define EVINTERCEPT_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EvStatus {
  EV_STATUS_OK = 0,
  EV_STATUS_NULL_POINTER = 1,
  EV_STATUS_INVALID_INPUT = 2,
  EV_STATUS_IO = 3,
  EV_STATUS_CHECKPOINT = 4,
  EV_STATUS_SCHEMA_MISMATCH = 5,
  EV_STATUS_STALE_STATE = 6,
  EV_STATUS_OUT_OF_ENVELOPE = 7,
  EV_STATUS_NON_TERMINATING = 8,
  EV_STATUS_INTERNAL = 9,
} EvStatus;

typedef enum EvExitSide {
  EV_EXIT_SIDE_LEFT = 0,
  EV_EXIT_SIDE_RIGHT = 1,
  EV_EXIT_SIDE_TOP = 2,
  EV_EXIT_SIDE_BOTTOM = 3,
  EV_EXIT_SIDE_IN_VIEW = 4,
} EvExitSide;

/**
 * Stateful end-point predictor.
 */
typedef struct EvPredictor EvPredictor;

/**
 * Simulated in-view trajectory with its ground truth.
 */
typedef struct EvTrajectory EvTrajectory;

typedef struct EvPrediction {
  /**
   * Predicted exit row (px).
   */
  double y_f_hat;
  /**
   * Predicted absolute exit time (s).
   */
  double t_f_hat;
  double emitted_at;
} EvPrediction;

typedef struct EvRobotConfig {
  double y_start;
  double v_max;
  double a_max;
  double range;
  double t_ref;
  double gripper_height;
} EvRobotConfig;

typedef struct EvMotionPlan {
  double y0;
  double yf;
  double t_start;
  double duration;
} EvMotionPlan;

typedef struct EvBallParams {
  double x0;
  double y0;
  double vx0;
  double vy0;
  double radius;
  double restitution;
  double gravity;
} EvBallParams;

typedef struct EvGroundTruth {
  double x_f_px;
  double y_f_px;
  double y_f_m;
  double t_f;
  enum EvExitSide exit_side;
} EvGroundTruth;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *ev_last_error(void);

void ev_clear_error(void);

/**
 * Library version, static storage.
 */
const char *ev_version(void);

/**
 * Loads a predictor from a checkpoint file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum EvStatus ev_predictor_load(const char *path, struct EvPredictor **out);

/**
 * Creates an untrained predictor with randomly initialized weights and the
 * default camera normalization.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum EvStatus ev_predictor_new(size_t hidden, uint64_t seed, struct EvPredictor **out);

/**
 * Feeds one tracker sample (pixel coordinates, seconds) and writes the
 * updated end-point estimate.
 *
 * # Safety
 * `predictor` must come from `ev_predictor_load`/`ev_predictor_new`; `out`
 * must be a valid pointer.
 */
enum EvStatus ev_predictor_observe(struct EvPredictor *predictor,
                                   double x,
                                   double y,
                                   double t,
                                   struct EvPrediction *out);

/**
 * Clears the recurrent state before an unrelated trajectory.
 *
 * # Safety
 * `predictor` must be a live handle.
 */
enum EvStatus ev_predictor_reset(struct EvPredictor *predictor);

/**
 * Hidden size of the model, 0 for NULL.
 *
 * # Safety
 * `predictor` must be a live handle or NULL.
 */
size_t ev_predictor_hidden(const struct EvPredictor *predictor);

/**
 * # Safety
 * `predictor` must be a live handle or NULL; it is invalid afterwards.
 */
void ev_predictor_free(struct EvPredictor *predictor);

/**
 * Convergence statistic at index `i` over `n_conv` intervals of the
 * estimate series `y_f_hat` (px) stamped with `emitted_at` (s).
 *
 * # Safety
 * Both arrays must hold `len` values; `out` must be a valid pointer.
 */
enum EvStatus ev_gamma(const double *y_f_hat,
                       const double *emitted_at,
                       size_t len,
                       size_t i,
                       size_t n_conv,
                       double *out);

/**
 * Latest start time that reaches height `y_f_hat_m` by `t_f_hat`.
 */
double ev_t_dec(double t_f_hat, double y_f_hat_m, double y_start, double v_robot);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum EvStatus ev_robot_config_default(struct EvRobotConfig *out);

/**
 * Quintic move from `y0` to `yf` starting at `t_start`, with the shortest
 * duration the limits allow.
 *
 * # Safety
 * `cfg` and `out` must be valid pointers.
 */
enum EvStatus ev_plan_motion(double y0,
                             double yf,
                             double t_start,
                             const struct EvRobotConfig *cfg,
                             struct EvMotionPlan *out);

/**
 * Gripper height along `plan` at time `t`; NaN for NULL.
 *
 * # Safety
 * `plan` must be a valid pointer or NULL.
 */
double ev_position_at(const struct EvMotionPlan *plan, double t);

/**
 * Simulates a launch in the default scene (304x240 camera, 500 Hz).
 *
 * # Safety
 * `params` and `out` must be valid pointers.
 */
enum EvStatus ev_trajectory_simulate(const struct EvBallParams *params, struct EvTrajectory **out);

/**
 * Number of dense samples, 0 for NULL.
 *
 * # Safety
 * `traj` must be a live handle or NULL.
 */
size_t ev_trajectory_len(const struct EvTrajectory *traj);

/**
 * Time (s) and world position (m) of dense sample `i`.
 *
 * # Safety
 * `traj` must be a live handle; the output pointers must be valid.
 */
enum EvStatus ev_trajectory_sample(const struct EvTrajectory *traj,
                                   size_t i,
                                   double *t,
                                   double *x,
                                   double *y);

/**
 * # Safety
 * `traj` must be a live handle; `out` must be a valid pointer.
 */
enum EvStatus ev_trajectory_ground_truth(const struct EvTrajectory *traj,
                                         struct EvGroundTruth *out);

/**
 * # Safety
 * `traj` must be a live handle or NULL; it is invalid afterwards.
 */
void ev_trajectory_free(struct EvTrajectory *traj);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EVINTERCEPT_H */
