use super::{BallParams, Vec2};
use crate::error::Result;

/// Vertical rebound speed (m/s) below which the ball is considered at rest on
/// the table. Avoids the infinite bounce sequence of an inelastic drop.
const REST_SPEED: f64 = 1e-6;

/// One closed-form flight phase between two table contacts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub t_start: f64,
    pub pos: Vec2,
    pub vel: Vec2,
    /// Rolling along the table: vertical motion has stopped.
    pub resting: bool,
}

impl Segment {
    fn position(&self, t: f64, gravity: f64) -> Vec2 {
        let tau = t - self.t_start;
        let x = self.pos.x + self.vel.x * tau;
        if self.resting {
            Vec2::new(x, self.pos.y)
        } else {
            Vec2::new(x, self.pos.y + self.vel.y * tau - 0.5 * gravity * tau * tau)
        }
    }

    fn velocity(&self, t: f64, gravity: f64) -> Vec2 {
        if self.resting {
            Vec2::new(self.vel.x, 0.0)
        } else {
            Vec2::new(self.vel.x, self.vel.y - gravity * (t - self.t_start))
        }
    }
}

/// Piecewise-ballistic path of a point ball over a horizontal table.
///
/// Bounce instants are solved analytically; at each contact the vertical
/// velocity is multiplied by `-restitution`.
#[derive(Debug, Clone)]
pub struct BallisticPath {
    segments: Vec<Segment>,
    gravity: f64,
}

impl BallisticPath {
    /// Builds every segment that starts before `horizon` seconds.
    pub fn new(params: &BallParams, table_height: f64, horizon: f64) -> Result<Self> {
        params.validate()?;
        let g = params.gravity;
        let mut segments = vec![Segment {
            t_start: 0.0,
            pos: params.launch_pos,
            vel: params.launch_vel,
            resting: g == 0.0
                || (params.launch_pos.y <= table_height && params.launch_vel.y.abs() < REST_SPEED),
        }];

        loop {
            let seg = *segments.last().expect("non-empty");
            if seg.resting {
                break;
            }
            let height = (seg.pos.y - table_height).max(0.0);
            let disc = seg.vel.y * seg.vel.y + 2.0 * g * height;
            let tau = (seg.vel.y + disc.sqrt()) / g;
            let t_hit = seg.t_start + tau;
            if t_hit > horizon || !t_hit.is_finite() {
                break;
            }
            let impact_vy = seg.vel.y - g * tau;
            let rebound_vy = -params.restitution * impact_vy;
            segments.push(Segment {
                t_start: t_hit,
                pos: Vec2::new(seg.pos.x + seg.vel.x * tau, table_height),
                vel: Vec2::new(seg.vel.x, rebound_vy),
                resting: rebound_vy < REST_SPEED,
            });
        }

        Ok(Self {
            segments,
            gravity: g,
        })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Table contact instants, in order.
    pub fn bounce_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments.iter().skip(1).map(|s| s.t_start)
    }

    fn segment_at(&self, t: f64) -> &Segment {
        let idx = self.segments.partition_point(|s| s.t_start <= t);
        &self.segments[idx.saturating_sub(1)]
    }

    pub fn position(&self, t: f64) -> Vec2 {
        self.segment_at(t).position(t, self.gravity)
    }

    pub fn velocity(&self, t: f64) -> Vec2 {
        self.segment_at(t).velocity(t, self.gravity)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn drop(h: f64, e: f64) -> BallParams {
        BallParams::new(Vec2::new(0.5, h), Vec2::new(0.0, 0.0), e)
    }

    #[test]
    fn first_impact_of_a_drop() {
        let path = BallisticPath::new(&drop(1.0, 0.8), 0.0, 3.0).unwrap();
        let t1 = path.bounce_times().next().unwrap();
        assert!((t1 - (2.0f64 / 9.81).sqrt()).abs() < 1e-12);
        assert!((t1 - 0.4515).abs() < 1e-4);
        // rebound apex 0.64 m
        let s1 = path.segments()[1];
        let apex = s1.vel.y * s1.vel.y / (2.0 * 9.81);
        assert!((apex - 0.64).abs() < 1e-9);
    }

    #[test]
    fn elastic_drop_keeps_apex() {
        let path = BallisticPath::new(&drop(1.0, 1.0), 0.0, 10.0).unwrap();
        for s in &path.segments()[1..] {
            let apex = s.vel.y * s.vel.y / (2.0 * 9.81);
            assert!((apex - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn inelastic_drop_comes_to_rest() {
        let path = BallisticPath::new(&drop(1.0, 0.5), 0.0, 100.0).unwrap();
        let last = path.segments().last().unwrap();
        assert!(last.resting);
        assert_eq!(path.position(50.0).y, 0.0);
    }

    #[test]
    fn never_below_table() {
        let p = BallParams::new(Vec2::new(0.0, 0.3), Vec2::new(1.0, 2.0), 0.9);
        let path = BallisticPath::new(&p, 0.0, 5.0).unwrap();
        for i in 0..2500 {
            assert!(path.position(i as f64 * 0.002).y >= -1e-12);
        }
    }
}
