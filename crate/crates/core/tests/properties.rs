use proptest::prelude::*;

use evintercept::decision::{
    find_t_conv, gamma, gamma_series, t_dec, ConvergenceConfig, DecisionTrace, Policy,
    RobotEnvelope,
};
use evintercept::physics::{BallParams, BallisticPath, Vec2};
use evintercept::predictor::Prediction;
use evintercept::robot::{plan_motion, position_at, RobotConfig};
use evintercept::tracker::{resample, SamplingStrategy, TrackerSample};

fn predictions() -> impl Strategy<Value = Vec<Prediction>> {
    prop::collection::vec((0.0f64..240.0, 0.001f64..0.05, 0.0f64..2.0), 2..40).prop_map(|v| {
        let mut t = 0.0;
        v.into_iter()
            .map(|(y, dt, tf)| {
                t += dt;
                Prediction { y_f_hat: y, t_f_hat: t + tf, emitted_at: t }
            })
            .collect()
    })
}

fn track() -> impl Strategy<Value = Vec<TrackerSample>> {
    prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0, 0.0005f64..0.02), 1..300).prop_map(|v| {
        let (mut x, mut y, mut t) = (150.0, 120.0, 0.0);
        v.into_iter()
            .map(|(dx, dy, dt)| {
                x += dx;
                y += dy;
                t += dt;
                TrackerSample { x, y, t }
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn gamma_is_nonnegative_and_scales(preds in predictions(), n in 1usize..5, k in 0.0f64..10.0) {
        prop_assume!(preds.len() > n);
        let scaled: Vec<Prediction> = preds
            .iter()
            .map(|p| Prediction { y_f_hat: k * p.y_f_hat, ..*p })
            .collect();
        for i in n..preds.len() {
            let g = gamma(&preds, i, n).unwrap();
            prop_assert!(g >= 0.0);
            let gs = gamma(&scaled, i, n).unwrap();
            prop_assert!((gs - k * g).abs() <= 1e-9 * (1.0 + k * g));
        }
    }

    #[test]
    fn larger_threshold_never_converges_later(
        preds in predictions(),
        n in 1usize..5,
        a in 0.0f64..2000.0,
        b in 0.0f64..2000.0,
    ) {
        let g = gamma_series(&preds, n).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let t_lo = find_t_conv(&preds, &g, &ConvergenceConfig { n_conv: n, gamma_star: lo });
        let t_hi = find_t_conv(&preds, &g, &ConvergenceConfig { n_conv: n, gamma_star: hi });
        if let Some((_, tl)) = t_lo {
            let (_, th) = t_hi.expect("converges under the looser threshold");
            prop_assert!(th <= tl);
        }
    }

    #[test]
    fn t_dec_grows_with_robot_speed(
        t_f in 0.0f64..3.0,
        y in 0.0f64..0.6,
        y0 in 0.0f64..0.6,
        v1 in 0.01f64..5.0,
        dv in 0.0f64..5.0,
    ) {
        let slow = t_dec(t_f, y, &RobotEnvelope { y_start: y0, v_robot: v1 });
        let fast = t_dec(t_f, y, &RobotEnvelope { y_start: y0, v_robot: v1 + dv });
        prop_assert!(fast >= slow);
    }

    #[test]
    fn decisions_ignore_later_predictions(
        preds in predictions(),
        n in 1usize..4,
        gs in 1.0f64..500.0,
        policy in prop::sample::select(Policy::ALL.to_vec()),
    ) {
        let cfg = ConvergenceConfig { n_conv: n, gamma_star: gs };
        let robot = RobotEnvelope { y_start: 0.3, v_robot: 0.545 };
        let heights = |r: f64| 1.1 - r * 1.5 / 304.0;
        let full = DecisionTrace::new(preds.clone(), &cfg, &robot, &heights).unwrap();
        if let Some(a) = full.decide(policy) {
            let keep = a.index + 1;
            let cut = DecisionTrace::new(preds[..keep].to_vec(), &cfg, &robot, &heights).unwrap();
            prop_assert_eq!(cut.decide(policy), Some(a));
        }
    }

    #[test]
    fn spatial_outputs_are_spread(track in track(), d in 0.5f64..5.0) {
        let out = resample(&track, &SamplingStrategy::Spatial { min_displacement: d });
        prop_assert_eq!(out.first(), track.first());
        for w in out.windows(2) {
            prop_assert!(w[0].dist(&w[1]) >= d);
            prop_assert!(w[1].t > w[0].t);
        }
    }

    #[test]
    fn temporal_outputs_sit_on_ticks(track in track(), rate in 5.0f64..200.0) {
        let out = resample(&track, &SamplingStrategy::Temporal { rate });
        for s in &out {
            let k = (s.t * rate).round();
            prop_assert!((s.t - k / rate).abs() < 1e-9);
        }
        for w in out.windows(2) {
            prop_assert!(w[1].t > w[0].t);
        }
    }

    #[test]
    fn ball_stays_above_table(
        y0 in 0.0f64..1.0,
        vx in -3.0f64..3.0,
        vy in -4.0f64..4.0,
        e in 0.1f64..1.0,
    ) {
        let params = BallParams::new(Vec2::new(0.0, y0), Vec2::new(vx, vy), e);
        let path = BallisticPath::new(&params, 0.0, 3.0).unwrap();
        for i in 0..=300 {
            let p = path.position(i as f64 * 0.01);
            prop_assert!(p.y >= -1e-9, "y = {}", p.y);
        }
    }

    #[test]
    fn motion_is_continuous_and_bounded(y0 in 0.0f64..0.6, yf in 0.0f64..0.6, t0 in 0.0f64..1.0) {
        let cfg = RobotConfig::default();
        let plan = plan_motion(y0, yf, t0, &cfg).unwrap();
        let mut prev = position_at(&plan, t0);
        prop_assert_eq!(prev, y0);
        for i in 1..=200 {
            let y = position_at(&plan, t0 + plan.duration * i as f64 / 200.0);
            prop_assert!(y >= y0.min(yf) - 1e-12 && y <= y0.max(yf) + 1e-12);
            prop_assert!((y - prev).abs() <= (yf - y0).abs() * 0.02);
            prev = y;
        }
        prop_assert!((prev - yf).abs() < 1e-12);
    }
}
