use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{Event, TrackerSample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    /// Events averaged into the center of mass once tracking.
    pub n_roi: usize,
    /// Half side of the square ROI around the current center (px).
    pub roi_halfwidth: f64,
    /// Length of the detection window (s).
    pub init_window: f64,
    /// Minimum events in the detection window.
    pub init_min_events: usize,
    /// Maximum spatial spread, sqrt(var_x + var_y), of the detection window (px).
    pub init_max_spread: f64,
}

impl TrackerConfig {
    /// Defaults scaled to a projected ball radius in pixels.
    pub fn for_radius_px(radius_px: f64) -> Self {
        Self {
            n_roi: 40,
            roi_halfwidth: 1.5 * radius_px,
            init_window: 0.005,
            init_min_events: 30,
            init_max_spread: 1.5 * radius_px,
        }
    }
}

impl Default for TrackerConfig {
    fn default() -> Self {
        // 2.5 cm ball on the default 304 px / 1.5 m camera
        Self::for_radius_px(0.025 / (1.5 / 304.0))
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Moments {
    n: usize,
    sx: f64,
    sy: f64,
    sxx: f64,
    syy: f64,
}

impl Moments {
    fn add(&mut self, x: f64, y: f64) {
        self.n += 1;
        self.sx += x;
        self.sy += y;
        self.sxx += x * x;
        self.syy += y * y;
    }

    fn remove(&mut self, x: f64, y: f64) {
        self.n -= 1;
        self.sx -= x;
        self.sy -= y;
        self.sxx -= x * x;
        self.syy -= y * y;
    }

    fn spread(&self) -> f64 {
        let n = self.n as f64;
        let mx = self.sx / n;
        let my = self.sy / n;
        (self.sxx / n - mx * mx + self.syy / n - my * my).max(0.0).sqrt()
    }
}

/// Streaming ROI center-of-mass tracker.
#[derive(Debug, Clone)]
pub struct RoiTracker {
    cfg: TrackerConfig,
    window: VecDeque<(f64, f64, f64)>,
    window_moments: Moments,
    buffer: VecDeque<(f64, f64)>,
    sum: (f64, f64),
    com: Option<(f64, f64)>,
}

impl RoiTracker {
    pub fn new(cfg: TrackerConfig) -> Self {
        Self {
            cfg,
            window: VecDeque::new(),
            window_moments: Moments::default(),
            buffer: VecDeque::new(),
            sum: (0.0, 0.0),
            com: None,
        }
    }

    pub fn is_initialized(&self) -> bool {
        self.com.is_some()
    }

    pub fn center(&self) -> Option<(f64, f64)> {
        self.com
    }

    /// Feeds one event; returns the new center of mass when it moved.
    pub fn push(&mut self, ev: &Event) -> Option<(f64, f64)> {
        let (x, y) = (f64::from(ev.x), f64::from(ev.y));
        match self.com {
            None => self.detect(x, y, ev.t),
            Some((cx, cy)) => {
                let hw = self.cfg.roi_halfwidth;
                if (x - cx).abs() > hw || (y - cy).abs() > hw {
                    return None;
                }
                self.buffer.push_back((x, y));
                self.sum.0 += x;
                self.sum.1 += y;
                if self.buffer.len() > self.cfg.n_roi {
                    let (ox, oy) = self.buffer.pop_front().expect("non-empty");
                    self.sum.0 -= ox;
                    self.sum.1 -= oy;
                }
                let n = self.buffer.len() as f64;
                let com = (self.sum.0 / n, self.sum.1 / n);
                self.com = Some(com);
                (com != (cx, cy)).then_some(com)
            }
        }
    }

    fn detect(&mut self, x: f64, y: f64, t: f64) -> Option<(f64, f64)> {
        self.window.push_back((x, y, t));
        self.window_moments.add(x, y);
        while let Some(&(ox, oy, ot)) = self.window.front() {
            if ot >= t - self.cfg.init_window {
                break;
            }
            self.window.pop_front();
            self.window_moments.remove(ox, oy);
        }
        if self.window.len() < self.cfg.init_min_events
            || self.window_moments.spread() >= self.cfg.init_max_spread
        {
            return None;
        }

        let keep = self.window.len().min(self.cfg.n_roi.max(1));
        self.buffer = self
            .window
            .iter()
            .skip(self.window.len() - keep)
            .map(|&(x, y, _)| (x, y))
            .collect();
        self.sum = self
            .buffer
            .iter()
            .fold((0.0, 0.0), |acc, &(x, y)| (acc.0 + x, acc.1 + y));
        let n = self.buffer.len() as f64;
        let com = (self.sum.0 / n, self.sum.1 / n);
        self.com = Some(com);
        self.window.clear();
        self.window_moments = Moments::default();
        Some(com)
    }
}

/// Runs the tracker over a time-ordered stream.
///
/// Events sharing a timestamp update the estimate together, so output
/// timestamps are strictly increasing. A stream that never passes the
/// detection check yields no samples.
pub fn track(events: &[Event], cfg: &TrackerConfig) -> Vec<TrackerSample> {
    let mut tracker = RoiTracker::new(cfg.clone());
    let mut out: Vec<TrackerSample> = Vec::new();
    for ev in events {
        if let Some((x, y)) = tracker.push(ev) {
            match out.last_mut() {
                Some(last) if last.t >= ev.t => {
                    last.x = x;
                    last.y = y;
                }
                _ => out.push(TrackerSample { x, y, t: ev.t }),
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracker::Polarity;

    fn ev(x: u16, y: u16, t: f64) -> Event {
        Event { x, y, t, polarity: Polarity::On }
    }

    #[test]
    fn identical_events_give_that_pixel() {
        let cfg = TrackerConfig::default();
        let events: Vec<_> = (0..cfg.n_roi).map(|i| ev(50, 60, i as f64 * 1e-5)).collect();
        let out = track(&events, &cfg);
        assert_eq!(out.len(), 1);
        assert_eq!((out[0].x, out[0].y), (50.0, 60.0));
    }

    #[test]
    fn sparse_noise_never_initializes() {
        let cfg = TrackerConfig::default();
        // 10 events per 5 ms window, spread all over the sensor
        let events: Vec<_> = (0..2000)
            .map(|i| ev(((i * 37) % 304) as u16, ((i * 53) % 240) as u16, i as f64 * 5e-4))
            .collect();
        assert!(track(&events, &cfg).is_empty());
    }

    #[test]
    fn dense_but_scattered_burst_is_rejected() {
        let cfg = TrackerConfig::default();
        let events: Vec<_> = (0..200)
            .map(|i| ev(((i * 37) % 304) as u16, ((i * 53) % 240) as u16, i as f64 * 1e-5))
            .collect();
        assert!(track(&events, &cfg).is_empty());
    }

    #[test]
    fn events_outside_roi_are_ignored() {
        let cfg = TrackerConfig::default();
        let mut events: Vec<_> = (0..40).map(|i| ev(50, 60, i as f64 * 1e-5)).collect();
        events.push(ev(200, 20, 0.01));
        let out = track(&events, &cfg);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].x, 50.0);
    }

    #[test]
    fn timestamps_strictly_increase() {
        let cfg = TrackerConfig::default();
        let mut events: Vec<_> = (0..40).map(|i| ev(50, 60, i as f64 * 1e-5)).collect();
        for i in 0..20 {
            events.push(ev(51 + (i % 3), 60, 0.001));
            events.push(ev(52, 61 + (i % 2), 0.002 + i as f64 * 1e-4));
        }
        let out = track(&events, &cfg);
        assert!(out.windows(2).all(|w| w[0].t < w[1].t));
    }
}
