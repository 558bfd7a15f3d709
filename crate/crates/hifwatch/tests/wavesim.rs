use std::f64::consts::{PI, SQRT_2};

use hifwatch::wavesim::{self, Event, EventSchedule, HifParams, RlKind, RlParams, SimConfig, SimError};

fn quiet_config() -> SimConfig {
    SimConfig { noise_sigma: 0.0, baseline_harmonics: Vec::new(), ..SimConfig::default() }
}

#[test]
fn zero_current_decays_exponentially() {
    let p = HifParams { initial_conductance: 2e-3, ..HifParams::default() };
    let dt = 1e-5;
    let g = wavesim::integrate_arc_conductance(&vec![0.0; 400], &p, dt).unwrap();
    for (n, &v) in g.iter().enumerate() {
        let want = 2e-3 * (-(n as f64) * dt / p.time_constant).exp();
        assert!(((v - want) / want).abs() < 1e-7, "sample {n}: {v} vs {want}");
    }
}

#[test]
fn constant_current_settles_on_fixed_point() {
    let p = HifParams::default();
    let dt = p.time_constant / 200.0;
    let current = 25.0;
    let samples = 7 * 200 + 1;
    let g = wavesim::integrate_arc_conductance(&vec![current; samples], &p, dt).unwrap();
    let target = current / (p.arc_voltage + p.arc_resistance * current);
    assert!(g.windows(2).all(|w| w[1] >= w[0]), "approach must be monotone");
    let last = *g.last().unwrap();
    assert!(((last - target) / target).abs() < 0.01);
    assert!(g.iter().all(|&v| v > 0.0));
}

#[test]
fn arc_conductance_rejects_non_finite_input() {
    let p = HifParams::default();
    let err = wavesim::integrate_arc_conductance(&[1.0, 2.0, f64::NAN, 3.0], &p, 1e-5).unwrap_err();
    assert_eq!(err, SimError::NonFiniteSample { index: 2 });
    assert!(matches!(wavesim::integrate_arc_conductance(&[1.0], &p, 0.0), Err(SimError::BadTimeStep(_))));
}

#[test]
fn branch_voltage_examples() {
    assert_eq!(wavesim::hif_branch_voltage(0.0, 0.3, 7.0).unwrap(), 0.0);
    assert_eq!(wavesim::hif_branch_voltage(10.0, 0.1, 2.0).unwrap(), 120.0);
    assert_eq!(wavesim::hif_branch_voltage(-5.0, 0.05, 1.0).unwrap(), -105.0);
    assert_eq!(wavesim::hif_branch_voltage(1.0, 0.0, 1.0), Err(SimError::SingularArc(0.0)));
}

#[test]
fn resistive_branch_is_algebraic() {
    let p = RlParams { resistance: 4.0, inductance: 0.0, kind: RlKind::LoadSwitch };
    let v = [8.0, -2.0, 0.5, 100.0];
    assert_eq!(wavesim::simulate_rl_current(&v, &p, 1e-4).unwrap(), vec![2.0, -0.5, 0.125, 25.0]);
}

#[test]
fn rl_dc_step_matches_closed_form() {
    let (v, r, l) = (48.0, 3.0, 0.04);
    let dt = 1.0 / (60.0 * 2048.0);
    let p = RlParams { resistance: r, inductance: l, kind: RlKind::MotorStart };
    let i = wavesim::simulate_rl_current(&vec![v; 20_000], &p, dt).unwrap();
    for (k, &got) in i.iter().enumerate().skip(1) {
        let want = v / r * (1.0 - (-(k as f64) * dt * r / l).exp());
        assert!(((got - want) / want).abs() < 1e-6, "step {k}");
    }
}

#[test]
fn rl_ac_steady_state_amplitude() {
    let (r, l, amp): (f64, f64, f64) = (1.0, 10e-3, 170.0);
    let w = 2.0 * PI * 60.0;
    let fs = 60.0 * 2048.0;
    let dt = 1.0 / fs;
    let tau = l / r;
    let n = ((10.0 * tau + 1.0 / 60.0) * fs).ceil() as usize;
    let v: Vec<f64> = (0..n).map(|k| amp * (w * k as f64 * dt).sin()).collect();
    let p = RlParams { resistance: r, inductance: l, kind: RlKind::LoadSwitch };
    let i = wavesim::simulate_rl_current(&v, &p, dt).unwrap();
    let last_cycle = &i[n - 2048..];
    let peak = last_cycle.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let want = amp / (r * r + (w * l).powi(2)).sqrt();
    assert!(((peak - want) / want).abs() < 1e-4, "{peak} vs {want}");
}

#[test]
fn empty_schedule_is_a_pure_sinusoid() {
    let cfg = quiet_config();
    let w = wavesim::synthesize(&cfg, &EventSchedule::default()).unwrap();
    let omega = cfg.omega();
    let r = cfg.baseline_load.resistance + cfg.source_impedance.resistance;
    let x = omega * (cfg.baseline_load.inductance + cfg.source_impedance.inductance);
    let peak = SQRT_2 * cfg.source_voltage_rms / r.hypot(x) / cfg.transformer_ratio;
    let lag = x.atan2(r);
    for (k, &v) in w.primary().iter().enumerate() {
        let want = peak * (omega * w.time(k) - lag).sin();
        assert!((v - want).abs() <= 1e-9 * peak);
    }
    assert!(w.labels.as_ref().unwrap().iter().all(|&l| l == 0));
    assert_eq!(w.sample_rate.hz(), 122_880.0);
    assert_eq!(w.len(), 245_760);
}

#[test]
fn superposition_of_independent_branches() {
    let cfg = quiet_config();
    let a = vec![Event::rl(0.3, RlKind::MotorStart, 3.0, 0.04), Event::hif(0.5, 0.05, HifParams::default())];
    let b = vec![Event::rl(0.7, RlKind::LoadSwitch, 25.0, 0.05), Event::hif(0.9, 0.05, HifParams::default())];
    let only_a = wavesim::synthesize(&cfg, &EventSchedule::new(a.clone())).unwrap();
    let both = wavesim::synthesize(&cfg, &EventSchedule::new(a.into_iter().chain(b.iter().copied()).collect())).unwrap();
    let mut expected = vec![0.0; cfg.sample_count()];
    for e in &b {
        for (x, v) in expected.iter_mut().zip(wavesim::event_branch_current(&cfg, e)) {
            *x += v / cfg.transformer_ratio;
        }
    }
    let scale = both.primary().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for k in 0..expected.len() {
        let diff = both.primary()[k] - only_a.primary()[k];
        assert!((diff - expected[k]).abs() <= 1e-9 * scale, "sample {k}");
    }
}

#[test]
fn labels_cover_exactly_the_fault_samples() {
    let cfg = SimConfig { duration: 0.5, ..quiet_config() };
    let events = vec![Event::hif(0.1, 0.02, HifParams::default()), Event::rl(0.2, RlKind::MotorStart, 3.0, 0.04), Event::hif(0.3, 0.05, HifParams::default())];
    let w = wavesim::synthesize(&cfg, &EventSchedule::new(events)).unwrap();
    let fs = cfg.sample_rate().hz();
    let labels = w.labels.unwrap();
    for (k, &l) in labels.iter().enumerate() {
        let inside = [(0.1, 0.12), (0.3, 0.35)]
            .iter()
            .any(|&(a, b): &(f64, f64)| k >= (a * fs).round() as usize && k < (b * fs).round() as usize);
        assert_eq!(l == 1, inside, "sample {k}");
    }
}

#[test]
fn fault_current_stays_below_motor_start_peak() {
    let cfg = quiet_config();
    let hif = wavesim::event_branch_current(&cfg, &Event::hif(0.1, 0.05, HifParams::default()));
    let motor = wavesim::event_branch_current(&cfg, &Event::rl(0.1, RlKind::MotorStart, 3.0, 0.04));
    let peak = |x: &[f64]| x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(peak(&hif) > 0.0);
    assert!(peak(&hif) < peak(&motor));
}

#[test]
fn synthesis_is_deterministic_per_seed() {
    let cfg = SimConfig { duration: 0.2, rng_seed: 9, ..SimConfig::default() };
    let s = EventSchedule::new(vec![Event::hif(0.1, 0.05, HifParams::default())]);
    let one = wavesim::synthesize(&cfg, &s).unwrap();
    let two = wavesim::synthesize(&cfg, &s).unwrap();
    assert_eq!(one, two);
    let other = wavesim::synthesize(&SimConfig { rng_seed: 10, ..cfg }, &s).unwrap();
    assert_ne!(one.primary(), other.primary());
}

#[test]
fn schedule_outside_record_is_rejected() {
    let cfg = SimConfig { duration: 0.5, ..quiet_config() };
    let late = EventSchedule::new(vec![Event::rl(0.6, RlKind::LoadSwitch, 25.0, 0.05)]);
    assert!(matches!(wavesim::synthesize(&cfg, &late), Err(SimError::ScheduleOutOfRange { index: 0, .. })));
    let overrun = EventSchedule::new(vec![Event::hif(0.48, 0.05, HifParams::default())]);
    assert!(wavesim::synthesize(&cfg, &overrun).is_err());
    let bad_r = EventSchedule::new(vec![Event::rl(0.1, RlKind::LoadSwitch, 0.0, 0.05)]);
    assert!(matches!(wavesim::synthesize(&cfg, &bad_r), Err(SimError::InvalidEvent { .. })));
}

#[test]
fn overlapping_events_superpose() {
    let cfg = SimConfig { duration: 0.3, ..quiet_config() };
    let s = EventSchedule::new(vec![Event::hif(0.1, 0.1, HifParams::default()), Event::rl(0.12, RlKind::MotorStart, 3.0, 0.04)]);
    assert!(wavesim::synthesize(&cfg, &s).is_ok());
}

#[test]
fn schedule_sorts_by_onset() {
    let s = EventSchedule::new(vec![Event::rl(1.7, RlKind::MotorStart, 3.0, 0.04), Event::hif(1.2, 0.05, HifParams::default())]);
    let onsets: Vec<f64> = s.events().iter().map(|e| e.onset).collect();
    assert_eq!(onsets, vec![1.2, 1.7]);
    assert_eq!(s.hif_intervals(), vec![(1.2, 1.25)]);
    assert_eq!(s.benign_onsets(), vec![1.7]);
}

#[test]
fn inrush_adds_a_decaying_transient() {
    let base = SimConfig { duration: 0.2, ..quiet_config() };
    let with = SimConfig {
        inrush: Some(wavesim::InrushParams { peak_multiple: 2.0, decay_time_constant: 0.02, second_harmonic_fraction: 0.3, onset: 0.05 }),
        ..base.clone()
    };
    let a = wavesim::synthesize(&base, &EventSchedule::default()).unwrap();
    let b = wavesim::synthesize(&with, &EventSchedule::default()).unwrap();
    let onset = (0.05 * base.sample_rate().hz()) as usize;
    assert_eq!(a.primary()[..onset], b.primary()[..onset]);
    let diff: Vec<f64> = a.primary().iter().zip(b.primary()).map(|(x, y)| (y - x).abs()).collect();
    let early = diff[onset..onset + 2048].iter().fold(0.0f64, |m, v| m.max(*v));
    let late = diff[diff.len() - 2048..].iter().fold(0.0f64, |m, v| m.max(*v));
    assert!(early > 10.0 * late);
}
