use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::{Event, Polarity};
use crate::physics::{CameraModel, DenseTrajectory, Vec2};

/// Parameters of the disk-edge event model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EventModel {
    /// Ball radius (m) used for rendering the projected disk.
    pub ball_radius: f64,
    /// Uniform background activity over the whole sensor (events/s).
    pub noise_rate: f64,
}

impl Default for EventModel {
    fn default() -> Self {
        Self {
            ball_radius: 0.025,
            noise_rate: 200.0,
        }
    }
}

/// Renders the ball as a binary disk and emits an event for every pixel whose
/// membership changes between consecutive dense samples.
///
/// Entering pixels emit `On`, leaving pixels emit `Off`. The timestamp is the
/// instant the disk edge crosses the pixel center while the center moves on a
/// straight line between the two samples. Background noise is a Poisson
/// process with uniform pixel location.
pub fn synthesize_events<R: Rng>(
    traj: &DenseTrajectory,
    camera: &CameraModel,
    model: &EventModel,
    rng: &mut R,
) -> Vec<Event> {
    let r = model.ball_radius / camera.meters_per_pixel;
    let r2 = r * r;
    let max_x = i64::from(camera.width_px) - 1;
    let max_y = i64::from(camera.height_px) - 1;

    let mut events = Vec::new();
    let mut step = Vec::new();
    for pair in traj.samples.windows(2) {
        let (t0, t1) = (pair[0].t, pair[1].t);
        let p0 = camera.project(pair[0].pos);
        let p1 = camera.project(pair[1].pos);
        let d = Vec2::new(p1.x - p0.x, p1.y - p0.y);
        let dd = d.x * d.x + d.y * d.y;
        if dd == 0.0 {
            continue;
        }

        let x_lo = ((p0.x.min(p1.x) - r).floor() as i64).max(0);
        let x_hi = ((p0.x.max(p1.x) + r).ceil() as i64).min(max_x);
        let y_lo = ((p0.y.min(p1.y) - r).floor() as i64).max(0);
        let y_hi = ((p0.y.max(p1.y) + r).ceil() as i64).min(max_y);

        step.clear();
        for y in y_lo..=y_hi {
            for x in x_lo..=x_hi {
                let w = Vec2::new(x as f64 - p0.x, y as f64 - p0.y);
                let c0 = w.x * w.x + w.y * w.y - r2;
                let in0 = c0 <= 0.0;
                let in1 = (x as f64 - p1.x).powi(2) + (y as f64 - p1.y).powi(2) <= r2;
                if in0 == in1 {
                    continue;
                }
                // |w - s d|^2 = r^2  ->  dd s^2 - 2 (w.d) s + c0 = 0
                let wd = w.x * d.x + w.y * d.y;
                let disc = (wd * wd - dd * c0).max(0.0).sqrt();
                let s = if in1 { (wd - disc) / dd } else { (wd + disc) / dd };
                let s = s.clamp(0.0, 1.0);
                step.push(Event {
                    x: x as u16,
                    y: y as u16,
                    t: t0 + s * (t1 - t0),
                    polarity: if in1 { Polarity::On } else { Polarity::Off },
                });
            }
        }
        sort_events(&mut step);
        events.extend_from_slice(&step);
    }

    if model.noise_rate > 0.0 {
        if let (Some(first), Some(last)) = (traj.samples.first(), traj.samples.last()) {
            let noise = synthesize_noise(camera, first.t, last.t, model.noise_rate, rng);
            if !noise.is_empty() {
                events.extend(noise);
                sort_events(&mut events);
            }
        }
    }
    events
}

/// Uniform background activity on `[t_start, t_end]`.
pub fn synthesize_noise<R: Rng>(
    camera: &CameraModel,
    t_start: f64,
    t_end: f64,
    rate: f64,
    rng: &mut R,
) -> Vec<Event> {
    let mut out = Vec::new();
    if rate <= 0.0 || t_end <= t_start {
        return out;
    }
    let gap = Exp::new(rate).expect("positive rate");
    let mut t = t_start;
    loop {
        t += gap.sample(rng);
        if t > t_end {
            break;
        }
        out.push(Event {
            x: rng.gen_range(0..camera.width_px) as u16,
            y: rng.gen_range(0..camera.height_px) as u16,
            t,
            polarity: if rng.gen_bool(0.5) { Polarity::On } else { Polarity::Off },
        });
    }
    out
}

/// Time order, ties broken by raster order.
fn sort_events(events: &mut [Event]) {
    events.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.y.cmp(&b.y)).then(a.x.cmp(&b.x)));
}
