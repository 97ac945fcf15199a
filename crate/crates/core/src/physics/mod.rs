//! Planar bouncing-ball trajectories, camera projection and dataset generation.

mod ballistic;
mod dataset;

pub use ballistic::{BallisticPath, Segment};
pub use dataset::{
    generate_dataset, generate_split, read_split, sample_params, write_split, DatasetCounts,
    Manifest, SplitKind, TrajectoryDistribution, TrajectoryRecord, ValueRange,
    DATASET_SCHEMA_VERSION,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 2D vector in world (m) or image (px) coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Vec2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallParams {
    pub launch_pos: Vec2,
    pub launch_vel: Vec2,
    #[serde(default = "default_radius")]
    pub radius: f64,
    pub restitution: f64,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
}

fn default_radius() -> f64 {
    0.025
}

fn default_gravity() -> f64 {
    9.81
}

impl BallParams {
    pub fn new(launch_pos: Vec2, launch_vel: Vec2, restitution: f64) -> Self {
        Self {
            launch_pos,
            launch_vel,
            radius: default_radius(),
            restitution,
            gravity: default_gravity(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.launch_pos.x,
            self.launch_pos.y,
            self.launch_vel.x,
            self.launch_vel.y,
            self.radius,
            self.restitution,
            self.gravity,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("ball parameters must be finite"));
        }
        if self.radius <= 0.0 {
            return Err(Error::invalid("ball radius must be positive"));
        }
        if !(self.restitution > 0.0 && self.restitution <= 1.0) {
            return Err(Error::invalid("restitution must lie in (0, 1]"));
        }
        // Zero gravity is accepted for unforced-motion checks.
        if self.gravity < 0.0 {
            return Err(Error::invalid("gravity must be non-negative"));
        }
        Ok(())
    }
}

/// Affine pinhole-free camera looking perpendicular to the plane of motion.
///
/// Pixel columns grow with world x, pixel rows grow downward (decreasing world
/// height). `origin` is the world position of the center of pixel (0, 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraModel {
    pub width_px: u32,
    pub height_px: u32,
    pub meters_per_pixel: f64,
    pub origin: Vec2,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            width_px: 304,
            height_px: 240,
            meters_per_pixel: 1.5 / 304.0,
            origin: Vec2::new(0.0, 1.1),
        }
    }
}

impl CameraModel {
    pub fn validate(&self) -> Result<()> {
        if self.width_px == 0 || self.height_px == 0 {
            return Err(Error::invalid("camera dimensions must be positive"));
        }
        if !(self.meters_per_pixel > 0.0 && self.meters_per_pixel.is_finite()) {
            return Err(Error::invalid("meters_per_pixel must be positive"));
        }
        Ok(())
    }

    pub fn project(&self, world: Vec2) -> Vec2 {
        Vec2::new(
            (world.x - self.origin.x) / self.meters_per_pixel,
            (self.origin.y - world.y) / self.meters_per_pixel,
        )
    }

    pub fn unproject(&self, px: Vec2) -> Vec2 {
        Vec2::new(
            self.origin.x + px.x * self.meters_per_pixel,
            self.origin.y - px.y * self.meters_per_pixel,
        )
    }

    /// World height (m) of a pixel row.
    pub fn row_to_height(&self, row: f64) -> f64 {
        self.origin.y - row * self.meters_per_pixel
    }

    pub fn height_to_row(&self, height: f64) -> f64 {
        (self.origin.y - height) / self.meters_per_pixel
    }

    pub fn max_col(&self) -> f64 {
        f64::from(self.width_px - 1)
    }

    pub fn max_row(&self) -> f64 {
        f64::from(self.height_px - 1)
    }

    /// A projected point is in view when it lies within the span of pixel centers.
    pub fn contains_px(&self, px: Vec2) -> bool {
        px.x >= 0.0 && px.x <= self.max_col() && px.y >= 0.0 && px.y <= self.max_row()
    }

    pub fn contains(&self, world: Vec2) -> bool {
        self.contains_px(self.project(world))
    }

    fn exit_side_px(&self, px: Vec2) -> ExitSide {
        if px.x < 0.0 {
            ExitSide::Left
        } else if px.x > self.max_col() {
            ExitSide::Right
        } else if px.y < 0.0 {
            ExitSide::Top
        } else if px.y > self.max_row() {
            ExitSide::Bottom
        } else {
            ExitSide::InView
        }
    }
}

/// Everything about the simulated world that is shared by all trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scene {
    pub camera: CameraModel,
    pub table_height: f64,
    pub sample_rate: f64,
    pub max_duration: f64,
}

impl Default for Scene {
    fn default() -> Self {
        Self {
            camera: CameraModel::default(),
            table_height: 0.0,
            sample_rate: 500.0,
            max_duration: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitSide {
    Left,
    Right,
    Top,
    Bottom,
    /// The buffer ended with the ball still in view.
    InView,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct DenseSample {
    pub t: f64,
    pub pos: Vec2,
}

impl From<[f64; 3]> for DenseSample {
    fn from(v: [f64; 3]) -> Self {
        Self {
            t: v[0],
            pos: Vec2::new(v[1], v[2]),
        }
    }
}

impl From<DenseSample> for [f64; 3] {
    fn from(s: DenseSample) -> Self {
        [s.t, s.pos.x, s.pos.y]
    }
}

/// Ground-truth ball path sampled at a fixed rate, world coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseTrajectory {
    pub sample_rate: f64,
    pub samples: Vec<DenseSample>,
}

impl DenseTrajectory {
    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }
}

/// Last visible instance of the ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub x_f_px: f64,
    pub y_f_px: f64,
    pub y_f_m: f64,
    pub t_f: f64,
    pub exit_side: ExitSide,
}

/// Samples the closed-form path at `sample_rate` from t = 0 to `duration`
/// inclusive, with no field-of-view handling.
pub fn sample_path(path: &BallisticPath, sample_rate: f64, duration: f64) -> DenseTrajectory {
    let steps = (duration * sample_rate + 1e-9).floor() as u64;
    let samples = (0..=steps)
        .map(|i| {
            let t = i as f64 / sample_rate;
            DenseSample {
                t,
                pos: path.position(t),
            }
        })
        .collect();
    DenseTrajectory {
        sample_rate,
        samples,
    }
}

/// Simulates a launch until the ball center leaves the field of view.
///
/// The returned trajectory holds only in-view samples; the ground truth is its
/// last sample.
pub fn simulate_trajectory(
    params: &BallParams,
    scene: &Scene,
) -> Result<(DenseTrajectory, GroundTruth)> {
    params.validate()?;
    scene.camera.validate()?;
    if !(scene.sample_rate > 0.0 && scene.max_duration > 0.0) {
        return Err(Error::invalid("sample_rate and max_duration must be positive"));
    }
    if !scene.camera.contains(params.launch_pos) {
        return Err(Error::invalid("launch position is outside the field of view"));
    }
    if params.launch_pos.y < scene.table_height {
        return Err(Error::invalid("launch position is below the table"));
    }

    let path = BallisticPath::new(params, scene.table_height, scene.max_duration)?;
    let camera = &scene.camera;
    let mut samples = Vec::new();
    let mut i: u64 = 0;
    let exit_side = loop {
        let t = i as f64 / scene.sample_rate;
        if t > scene.max_duration {
            return Err(Error::NonTerminating {
                max_duration: scene.max_duration,
            });
        }
        let pos = path.position(t);
        let px = camera.project(pos);
        if !camera.contains_px(px) {
            break camera.exit_side_px(px);
        }
        samples.push(DenseSample { t, pos });
        i += 1;
    };

    let last = *samples.last().expect("launch sample is in view");
    let px = camera.project(last.pos);
    let gt = GroundTruth {
        x_f_px: px.x,
        y_f_px: px.y,
        y_f_m: last.pos.y,
        t_f: last.t,
        exit_side,
    };
    Ok((
        DenseTrajectory {
            sample_rate: scene.sample_rate,
            samples,
        },
        gt,
    ))
}

/// Ground truth of an arbitrary dense trajectory: the last sample whose
/// projection lies inside the pixel bounds.
pub fn exit_point(traj: &DenseTrajectory, camera: &CameraModel) -> Result<GroundTruth> {
    let idx = traj
        .samples
        .iter()
        .rposition(|s| camera.contains(s.pos))
        .ok_or(Error::EmptyTrajectory)?;
    let last = traj.samples[idx];
    let exit_side = traj
        .samples
        .get(idx + 1)
        .map_or(ExitSide::InView, |next| {
            camera.exit_side_px(camera.project(next.pos))
        });
    let px = camera.project(last.pos);
    Ok(GroundTruth {
        x_f_px: px.x,
        y_f_px: px.y,
        y_f_m: last.pos.y,
        t_f: last.t,
        exit_side,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scene() -> Scene {
        Scene::default()
    }

    #[test]
    fn projection_round_trip() {
        let cam = CameraModel::default();
        let p = Vec2::new(0.37, 0.52);
        let back = cam.unproject(cam.project(p));
        assert!((back.x - p.x).abs() < 1e-12 && (back.y - p.y).abs() < 1e-12);
        assert!((cam.row_to_height(cam.height_to_row(0.3)) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn zero_gravity_is_a_straight_line() {
        let mut params = BallParams::new(Vec2::new(0.1, 0.5), Vec2::new(1.0, 0.0), 0.8);
        params.gravity = 0.0;
        let (traj, gt) = simulate_trajectory(&params, &scene()).unwrap();
        assert!(traj.samples.iter().all(|s| s.pos.y == 0.5));
        assert_eq!(gt.exit_side, ExitSide::Right);
        assert_eq!(gt.y_f_m, 0.5);
    }

    #[test]
    fn ground_truth_is_last_in_view_sample() {
        let params = BallParams::new(Vec2::new(0.1, 0.6), Vec2::new(2.0, 0.5), 0.8);
        let (traj, gt) = simulate_trajectory(&params, &scene()).unwrap();
        let last = traj.samples.last().unwrap();
        assert_eq!(gt.t_f, last.t);
        assert_eq!(gt.y_f_m, last.pos.y);
        // the next dense sample is out of view
        let path = BallisticPath::new(&params, 0.0, 5.0).unwrap();
        let next = path.position(last.t + 1.0 / 500.0);
        assert!(!scene().camera.contains(next));
        assert_eq!(exit_point(&traj, &scene().camera).unwrap().t_f, gt.t_f);
    }

    #[test]
    fn exit_point_between_samples() {
        let cam = CameraModel::default();
        let inside = cam.unproject(Vec2::new(302.5, 100.0));
        let outside = cam.unproject(Vec2::new(303.5, 100.0));
        let traj = DenseTrajectory {
            sample_rate: 500.0,
            samples: vec![
                DenseSample { t: 0.0, pos: inside },
                DenseSample { t: 0.002, pos: outside },
            ],
        };
        let gt = exit_point(&traj, &cam).unwrap();
        assert_eq!(gt.t_f, 0.0);
        assert_eq!(gt.exit_side, ExitSide::Right);
    }

    #[test]
    fn exit_point_single_and_empty() {
        let cam = CameraModel::default();
        let p = cam.unproject(Vec2::new(10.0, 10.0));
        let single = DenseTrajectory {
            sample_rate: 500.0,
            samples: vec![DenseSample { t: 0.25, pos: p }],
        };
        let gt = exit_point(&single, &cam).unwrap();
        assert_eq!((gt.t_f, gt.exit_side), (0.25, ExitSide::InView));

        let out = DenseTrajectory {
            sample_rate: 500.0,
            samples: vec![DenseSample {
                t: 0.0,
                pos: Vec2::new(-5.0, 0.0),
            }],
        };
        assert!(matches!(exit_point(&out, &cam), Err(Error::EmptyTrajectory)));
    }

    #[test]
    fn launch_outside_view_is_rejected() {
        let params = BallParams::new(Vec2::new(-0.5, 0.5), Vec2::new(1.0, 0.0), 0.8);
        assert!(matches!(
            simulate_trajectory(&params, &scene()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn ball_that_never_leaves_is_non_terminating() {
        let params = BallParams::new(Vec2::new(0.7, 0.5), Vec2::new(0.0, 0.0), 0.8);
        let mut sc = scene();
        sc.max_duration = 2.0;
        assert!(matches!(
            simulate_trajectory(&params, &sc),
            Err(Error::NonTerminating { .. })
        ));
    }
}
