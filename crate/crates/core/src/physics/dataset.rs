use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{simulate_trajectory, BallParams, DenseTrajectory, ExitSide, GroundTruth, Scene, Vec2};
use crate::error::{Error, Result};

pub const DATASET_SCHEMA_VERSION: u32 = 1;

/// Closed interval used for every sampled launch quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueRange {
    pub min: f64,
    pub max: f64,
}

impl ValueRange {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }

    fn is_valid(&self) -> bool {
        self.min.is_finite() && self.max.is_finite() && self.min <= self.max
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.min == self.max {
            self.min
        } else {
            rng.gen_range(self.min..=self.max)
        }
    }
}

/// Launch-parameter ranges and acceptance rules for rejection sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrajectoryDistribution {
    pub launch_x: ValueRange,
    pub launch_y: ValueRange,
    /// Launch speed (m/s).
    pub speed: ValueRange,
    /// Launch angle above the horizontal (degrees), positive rightward.
    pub angle_deg: ValueRange,
    pub restitution: ValueRange,
    pub radius: f64,
    pub gravity: f64,
    /// Accepted in-view durations (s).
    pub duration: ValueRange,
    /// Accepted exit heights (m), keeps the end point inside the robot's reach.
    pub exit_height: ValueRange,
    pub exit_sides: Vec<ExitSide>,
    /// Below this acceptance rate the distribution is reported infeasible.
    pub min_acceptance_rate: f64,
    /// Attempts made before the acceptance rate is checked.
    pub min_attempts: usize,
}

impl Default for TrajectoryDistribution {
    fn default() -> Self {
        Self {
            launch_x: ValueRange::new(0.02, 0.10),
            launch_y: ValueRange::new(0.25, 0.85),
            speed: ValueRange::new(1.3, 3.6),
            angle_deg: ValueRange::new(-35.0, 35.0),
            restitution: ValueRange::new(0.7, 0.9),
            radius: 0.025,
            gravity: 9.81,
            duration: ValueRange::new(0.5, 1.1),
            exit_height: ValueRange::new(0.02, 0.58),
            exit_sides: vec![ExitSide::Right],
            min_acceptance_rate: 0.01,
            min_attempts: 500,
        }
    }
}

impl TrajectoryDistribution {
    pub fn validate(&self) -> Result<()> {
        let ranges = [
            ("launch_x", self.launch_x),
            ("launch_y", self.launch_y),
            ("speed", self.speed),
            ("angle_deg", self.angle_deg),
            ("restitution", self.restitution),
            ("duration", self.duration),
            ("exit_height", self.exit_height),
        ];
        for (name, r) in ranges {
            if !r.is_valid() {
                return Err(Error::invalid(format!("range `{name}` is empty or non-finite")));
            }
        }
        if self.exit_sides.is_empty() {
            return Err(Error::invalid("exit_sides must not be empty"));
        }
        if self.restitution.min <= 0.0 || self.restitution.max > 1.0 {
            return Err(Error::invalid("restitution range must lie in (0, 1]"));
        }
        Ok(())
    }

    fn accepts(&self, gt: &GroundTruth) -> bool {
        self.duration.contains(gt.t_f)
            && self.exit_height.contains(gt.y_f_m)
            && self.exit_sides.contains(&gt.exit_side)
    }
}

pub fn sample_params<R: Rng>(dist: &TrajectoryDistribution, rng: &mut R) -> BallParams {
    let x = dist.launch_x.sample(rng);
    let y = dist.launch_y.sample(rng);
    let speed = dist.speed.sample(rng);
    let angle = dist.angle_deg.sample(rng).to_radians();
    BallParams {
        launch_pos: Vec2::new(x, y),
        launch_vel: Vec2::new(speed * angle.cos(), speed * angle.sin()),
        radius: dist.radius,
        restitution: dist.restitution.sample(rng),
        gravity: dist.gravity,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    Train,
    Val,
    Test,
}

impl SplitKind {
    pub const ALL: [SplitKind; 3] = [SplitKind::Train, SplitKind::Val, SplitKind::Test];

    pub fn name(self) -> &'static str {
        match self {
            SplitKind::Train => "train",
            SplitKind::Val => "val",
            SplitKind::Test => "test",
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.jsonl", self.name())
    }

    fn stream(self) -> u64 {
        match self {
            SplitKind::Train => 1,
            SplitKind::Val => 2,
            SplitKind::Test => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl DatasetCounts {
    pub fn get(&self, split: SplitKind) -> usize {
        match split {
            SplitKind::Train => self.train,
            SplitKind::Val => self.val,
            SplitKind::Test => self.test,
        }
    }

    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }
}

/// One accepted trajectory as stored in a split file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub id: u64,
    pub params: BallParams,
    pub trajectory: DenseTrajectory,
    pub ground_truth: GroundTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub seed: u64,
    pub counts: DatasetCounts,
    pub distribution: TrajectoryDistribution,
    pub scene: Scene,
    pub files: Vec<String>,
}

/// Rejection-samples `count` trajectories for one split.
///
/// Each split draws from its own ChaCha stream of `seed`, so changing the size
/// of one split leaves the others untouched.
pub fn generate_split(
    dist: &TrajectoryDistribution,
    scene: &Scene,
    split: SplitKind,
    count: usize,
    seed: u64,
) -> Result<Vec<TrajectoryRecord>> {
    dist.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(split.stream());

    let mut records = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while records.len() < count {
        attempts += 1;
        let params = sample_params(dist, &mut rng);
        match simulate_trajectory(&params, scene) {
            Ok((trajectory, ground_truth)) if dist.accepts(&ground_truth) => {
                records.push(TrajectoryRecord {
                    id: records.len() as u64,
                    params,
                    trajectory,
                    ground_truth,
                });
            }
            Ok(_) | Err(Error::NonTerminating { .. }) | Err(Error::InvalidInput(_)) => {}
            Err(e) => return Err(e),
        }
        if attempts >= dist.min_attempts
            && (records.len() as f64) < dist.min_acceptance_rate * attempts as f64
        {
            return Err(Error::DistributionInfeasible {
                split: split.name().to_string(),
                accepted: records.len(),
                attempts,
            });
        }
    }
    Ok(records)
}

pub fn write_split(path: &Path, records: &[TrajectoryRecord]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_split(path: &Path) -> Result<Vec<TrajectoryRecord>> {
    let file = File::open(path).map_err(|e| {
        Error::Config(format!("cannot open dataset split {}: {e}", path.display()))
    })?;
    let mut records = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line)?);
    }
    Ok(records)
}

/// Generates all three splits into `out_dir` and writes `manifest.json`.
pub fn generate_dataset(
    dist: &TrajectoryDistribution,
    scene: &Scene,
    counts: DatasetCounts,
    seed: u64,
    out_dir: &Path,
) -> Result<Manifest> {
    if counts.total() == 0 {
        return Err(Error::invalid("dataset counts must not all be zero"));
    }
    fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    for split in SplitKind::ALL {
        let records = generate_split(dist, scene, split, counts.get(split), seed)?;
        let name = split.file_name();
        write_split(&out_dir.join(&name), &records)?;
        files.push(name);
    }
    let manifest = Manifest {
        schema_version: DATASET_SCHEMA_VERSION,
        seed,
        counts,
        distribution: dist.clone(),
        scene: scene.clone(),
        files,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(out_dir.join("manifest.json"), text)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepted_durations_lie_in_window() {
        let dist = TrajectoryDistribution::default();
        let scene = Scene::default();
        let recs = generate_split(&dist, &scene, SplitKind::Test, 40, 3).unwrap();
        assert_eq!(recs.len(), 40);
        for r in &recs {
            let gt = super::super::exit_point(&r.trajectory, &scene.camera).unwrap();
            assert_eq!(gt.t_f, r.ground_truth.t_f);
            assert!(dist.duration.contains(gt.t_f));
            assert_eq!(r.ground_truth.exit_side, ExitSide::Right);
        }
    }

    #[test]
    fn infeasible_distribution_is_reported() {
        let dist = TrajectoryDistribution {
            duration: ValueRange::new(4.0, 4.5),
            min_attempts: 50,
            ..Default::default()
        };
        let err = generate_split(&dist, &Scene::default(), SplitKind::Train, 1, 0).unwrap_err();
        assert!(matches!(err, Error::DistributionInfeasible { .. }));
    }

    #[test]
    fn empty_range_is_invalid() {
        let dist = TrajectoryDistribution {
            speed: ValueRange::new(2.0, 1.0),
            ..Default::default()
        };
        assert!(dist.validate().is_err());
    }

    #[test]
    fn splits_are_independent_streams() {
        let dist = TrajectoryDistribution::default();
        let scene = Scene::default();
        let a = generate_split(&dist, &scene, SplitKind::Val, 3, 11).unwrap();
        let b = generate_split(&dist, &scene, SplitKind::Val, 5, 11).unwrap();
        assert_eq!(a[..], b[..3]);
        let c = generate_split(&dist, &scene, SplitKind::Test, 3, 11).unwrap();
        assert_ne!(a[0].params, c[0].params);
    }
}
