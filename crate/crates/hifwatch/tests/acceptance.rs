//! One PASS/FAIL line per acceptance criterion; exits nonzero if any fail.

use std::time::Instant;

use hifwatch::config::{self, Settings};
use hifwatch::detector::{self, DetectionReport, Evaluation, GroundTruth};
use hifwatch::havok::{self, NoiseLevel, SvdFactors};
use hifwatch::io;
use hifwatch::s2g;
use hifwatch::wavesim::{self, Event, EventModel, EventSchedule, HifParams, RlKind, RlParams, Waveform};
use nalgebra::{DMatrix, Matrix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const LATENCY_LIMIT: f64 = 2.1e-3;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn preset(name: &str) -> Settings {
    let text = config::preset(name).expect("bundled preset");
    config::parse_config(text, Vec::<(String, String)>::new()).expect("preset parses")
}

fn truth(s: &EventSchedule) -> GroundTruth {
    GroundTruth { faults: s.hif_intervals(), benign_onsets: s.benign_onsets() }
}

fn run(settings: &Settings, schedule: &EventSchedule) -> (Waveform, DetectionReport) {
    let w = wavesim::synthesize(&settings.sim, schedule).expect("synthesis");
    let r = detector::run_pipeline(&w, &settings.detector, Some(&truth(schedule))).expect("pipeline");
    (w, r)
}

fn latencies(e: &Evaluation) -> Vec<Option<f64>> {
    e.faults.iter().map(|f| f.latency).collect()
}

fn fmt_latencies(e: &Evaluation) -> String {
    e.faults
        .iter()
        .map(|f| match f.latency {
            Some(l) => format!("{:.3} ms", l * 1e3),
            None => "missed".into(),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn criterion_1() -> Verdict {
    let s = preset("case_a");
    let start = Instant::now();
    let (_, r) = run(&s, &s.schedule);
    let elapsed = start.elapsed().as_secs_f64();
    let e = r.evaluation.expect("evaluated");
    let onsets_ok = e.faults.iter().map(|f| f.onset).eq([1.2, 1.4, 1.6]);
    let lat_ok = latencies(&e).iter().all(|l| l.is_some_and(|l| (0.0..=LATENCY_LIMIT).contains(&l)));
    let pass = onsets_ok && e.detected == 3 && lat_ok && e.false_positives.is_empty() && elapsed < 60.0;
    verdict(
        pass,
        format!(
            "detected {}/3, latencies [{}], false positives {}, runtime {:.2} s",
            e.detected,
            fmt_latencies(&e),
            e.false_positives.len(),
            elapsed
        ),
    )
}

fn criterion_2() -> Verdict {
    let s = preset("case_b");
    let (_, r) = run(&s, &s.schedule);
    let e = r.evaluation.expect("evaluated");
    let lat_ok = latencies(&e).iter().all(|l| l.is_some_and(|l| (0.0..=LATENCY_LIMIT).contains(&l)));
    let pass = e.faults.len() == 1 && e.detected == 1 && lat_ok && e.false_positives.is_empty();
    verdict(
        pass,
        format!("detected {}/1, latency [{}], false positives {}", e.detected, fmt_latencies(&e), e.false_positives.len()),
    )
}

fn perturbed(schedule: &EventSchedule, rng: &mut ChaCha8Rng) -> EventSchedule {
    let mut f = || rng.gen_range(0.75..=1.25);
    let events = schedule
        .events()
        .iter()
        .map(|e| match e.model {
            EventModel::Hif(p) => Event {
                model: EventModel::Hif(HifParams {
                    series_resistance: p.series_resistance * f(),
                    time_constant: p.time_constant * f(),
                    arc_voltage: p.arc_voltage * f(),
                    arc_resistance: p.arc_resistance * f(),
                    initial_conductance: p.initial_conductance,
                }),
                ..*e
            },
            _ => *e,
        })
        .collect();
    EventSchedule::new(events)
}

fn criterion_3() -> Verdict {
    let base = preset("case_a");
    let (mut faults, mut detected, mut benign_hits, mut other_fp) = (0, 0, 0, 0);
    let mut worst = 0.0f64;
    for seed in 1..=20u64 {
        let mut s = base.clone();
        s.sim.rng_seed = seed;
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(7919));
        let schedule = perturbed(&base.schedule, &mut rng);
        let (_, r) = run(&s, &schedule);
        let e = r.evaluation.expect("evaluated");
        faults += e.faults.len();
        detected += e.detected;
        benign_hits += e.benign_window_detections;
        other_fp += e.false_positives.len() - e.benign_window_detections;
        worst = e.faults.iter().filter_map(|f| f.latency).fold(worst, f64::max);
    }
    let rate = detected as f64 / faults as f64;
    let pass = rate >= 0.95 && benign_hits + other_fp <= 1;
    verdict(
        pass,
        format!(
            "detection rate {detected}/{faults} = {rate:.3}, benign-window detections {benign_hits}, other false positives {other_fp}, worst latency {:.3} ms",
            worst * 1e3
        ),
    )
}

/// Direct evaluation of the normality formula from the raw node sequence.
fn brute_force_scores(seq: &[usize], lq: usize) -> Vec<f64> {
    let count = |a: usize, b: usize| seq.windows(2).filter(|w| w[0] == a && w[1] == b).count() as f64;
    let degree = |n: usize| {
        let mut nbrs: Vec<usize> = Vec::new();
        for w in seq.windows(2) {
            if w[0] == n && !nbrs.contains(&w[1]) {
                nbrs.push(w[1]);
            }
            if w[1] == n && !nbrs.contains(&w[0]) {
                nbrs.push(w[0]);
            }
        }
        nbrs.len() + usize::from(nbrs.contains(&n))
    };
    (0..seq.len() - lq)
        .map(|start| {
            let mut total = 0.0;
            for j in start..start + lq {
                let d = degree(seq[j]);
                let divisor = if d > 1 { d - 1 } else { 1 };
                total += count(seq[j], seq[j + 1]) / divisor as f64;
            }
            total / lq as f64
        })
        .collect()
}

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = 0;
    for _ in 0..100 {
        let n = rng.gen_range(3..=64);
        let symbols = rng.gen_range(1..=6);
        let seq: Vec<usize> = (0..n).map(|_| rng.gen_range(0..symbols)).collect();
        let g = s2g::build_graph(&seq).expect("graph");
        let lq = rng.gen_range(1..n);
        let got = s2g::score_all(&g, lq, havok::Timing::default()).expect("scores");
        let want = brute_force_scores(&seq, lq);
        if got.norm_scores != want {
            mismatches += 1;
        }
    }
    verdict(mismatches == 0, format!("{mismatches}/100 series differ from brute force"))
}

fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

fn orthonormality_error(m: &DMatrix<f64>) -> f64 {
    let g = m.transpose() * m;
    (g - DMatrix::identity(m.ncols(), m.ncols())).norm()
}

fn criterion_5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noise = Normal::new(0.0, 1.0).expect("normal");
    let mut antidiag_ok = true;
    let mut worst_recon = 0.0f64;
    let mut worst_orth = 0.0f64;
    for _ in 0..20 {
        let n = rng.gen_range(16..200);
        let x: Vec<f64> = (0..n).map(|_| noise.sample(&mut rng)).collect();
        let k = rng.gen_range(2..=n / 2);
        let h = havok::build_hankel(&x, k).expect("hankel");
        let m = h.to_matrix();
        for i in 0..m.nrows() {
            for j in 0..k {
                antidiag_ok &= m[(i, j)] == x[i + j];
            }
        }
        let f = havok::svd(&h).expect("svd");
        worst_recon = worst_recon.max(rel_frobenius(&f.reconstruct(), &m));
        worst_orth = worst_orth.max(orthonormality_error(&f.left)).max(orthonormality_error(&f.right));
    }
    let mut rank_hits = 0;
    for _ in 0..100 {
        let (rows, cols, planted) = (100, 100, 5);
        let a = DMatrix::from_fn(rows, planted, |_, _| noise.sample(&mut rng));
        let b = DMatrix::from_fn(planted, cols, |_, _| noise.sample(&mut rng));
        let e = DMatrix::from_fn(rows, cols, |_, _| 1e-3 * noise.sample(&mut rng));
        let m = a * b + e;
        let f = SvdFactors::of_matrix(&m).expect("svd");
        let values: Vec<f64> = f.singular_values.iter().copied().collect();
        let r = havok::optimal_rank(&values, 1.0, NoiseLevel::Unknown).expect("rank");
        if r.abs_diff(planted) <= 1 {
            rank_hits += 1;
        }
    }
    let pass = antidiag_ok && worst_recon <= 1e-8 && worst_orth <= 1e-8 && rank_hits == 100;
    verdict(
        pass,
        format!(
            "anti-diagonals exact: {antidiag_ok}, reconstruction {worst_recon:.2e}, orthonormality {worst_orth:.2e}, planted rank recovered {rank_hits}/100"
        ),
    )
}

fn criterion_6() -> Verdict {
    let a = Matrix2::new(0.9, 0.2, -0.3, 0.7);
    let steps = 40;
    let mut z = vec![nalgebra::Vector2::new(1.0, 0.5)];
    for _ in 0..steps {
        let next = a * z.last().unwrap();
        z.push(next);
    }
    let x = DMatrix::from_fn(2, steps, |r, c| z[c][r]);
    let y = DMatrix::from_fn(2, steps, |r, c| z[c + 1][r]);
    let k = havok::dmd_koopman(&x, &y).expect("dmd");
    let mut want = a.complex_eigenvalues().iter().copied().collect::<Vec<_>>();
    want.sort_by(|p, q| p.im.total_cmp(&q.im).then(p.re.total_cmp(&q.re)));
    let linear_err = k.eigenvalues.iter().zip(&want).map(|(g, w)| (g - w).norm()).fold(0.0, f64::max);

    let fs = 60.0 * 2048.0;
    let dt = 1.0 / fs;
    let w = 2.0 * std::f64::consts::PI * 60.0;
    let signal: Vec<f64> = (0..4096).map(|n| (w * n as f64 * dt + 0.3).sin()).collect();
    let h = havok::build_hankel(&signal, 64).expect("hankel");
    let m = h.to_matrix().transpose();
    let cols = m.ncols();
    let sx = m.columns(0, cols - 1).clone_owned();
    let sy = m.columns(1, cols - 1).clone_owned();
    let ks = havok::dmd_koopman(&sx, &sy).expect("dmd");
    let angle = w * dt;
    let sin_err = if ks.rank() == 2 {
        let targets = [nalgebra::Complex::from_polar(1.0, -angle), nalgebra::Complex::from_polar(1.0, angle)];
        ks.eigenvalues.iter().zip(&targets).map(|(g, t)| (g - t).norm()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let pass = k.rank() == 2 && linear_err <= 1e-8 && sin_err <= 1e-6;
    verdict(pass, format!("linear generator error {linear_err:.2e}, sinusoid eigenvalue error {sin_err:.2e} (rank {})", ks.rank()))
}

fn arc_reference(p: &HifParams, amplitude: f64, w: f64, dt: f64, samples: usize) -> Vec<f64> {
    let fine = 100;
    let h = dt / fine as f64;
    let rate = |t: f64, g: f64| {
        let i = (amplitude * (w * t).sin()).abs();
        (i / (p.arc_voltage + p.arc_resistance * i) - g) / p.time_constant
    };
    let mut g = p.initial_conductance;
    let mut out = vec![g];
    let mut t = 0.0;
    for _ in 1..samples {
        for _ in 0..fine {
            let k1 = rate(t, g);
            let k2 = rate(t + h / 2.0, g + h / 2.0 * k1);
            let k3 = rate(t + h / 2.0, g + h / 2.0 * k2);
            let k4 = rate(t + h, g + h * k3);
            g += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += h;
        }
        out.push(g);
    }
    out
}

fn criterion_7() -> Verdict {
    let fs = 60.0 * 2048.0;
    let dt = 1.0 / fs;
    let w = 2.0 * std::f64::consts::PI * 60.0;
    let p = HifParams { time_constant: 0.5e-3, arc_voltage: 300.0, arc_resistance: 0.5, ..HifParams::default() };
    let amplitude = 40.0;
    let samples = 2 * 2048 * 3;
    let current: Vec<f64> = (0..samples).map(|n| amplitude * (w * n as f64 * dt).sin()).collect();
    let g = wavesim::integrate_arc_conductance(&current, &p, dt).expect("integrate");
    let reference = arc_reference(&p, amplitude, w, dt, samples);
    let arc_err = g.iter().zip(&reference).map(|(a, b)| ((a - b) / b).abs()).fold(0.0, f64::max);

    let (v, r, l) = (100.0, 2.0, 5e-3);
    let rl = RlParams { resistance: r, inductance: l, kind: RlKind::LoadSwitch };
    let n = 4096;
    let voltage = vec![v; n];
    let i = wavesim::simulate_rl_current(&voltage, &rl, dt).expect("rl");
    let rl_err = i
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &got)| {
            let want = v / r * (1.0 - (-(k as f64) * dt * r / l).exp());
            ((got - want) / want).abs()
        })
        .fold(0.0, f64::max);
    let pass = arc_err <= 1e-4 && rl_err <= 1e-6;
    verdict(pass, format!("arc conductance rel. error {arc_err:.2e}, RL step rel. error {rl_err:.2e}"))
}

fn criterion_8() -> Verdict {
    let base = preset("case_a");
    let empty = EventSchedule::default();
    let (mut flagged, mut positions, mut intervals) = (0usize, 0usize, 0usize);
    let mut worst = 0.0f64;
    for seed in 1..=20u64 {
        let mut s = base.clone();
        s.sim.rng_seed = seed;
        let (_, r) = run(&s, &empty);
        flagged += r.flagged_positions;
        positions += r.score_positions;
        intervals += r.intervals.len();
        worst = worst.max(r.flagged_positions as f64 / r.score_positions as f64);
    }
    let rate = flagged as f64 / positions as f64;
    let pass = rate <= 0.003;
    verdict(
        pass,
        format!("flag rate {:.4}% over 20 seeds (worst seed {:.4}%), intervals {intervals}", rate * 100.0, worst * 100.0),
    )
}

fn waveform_bytes(w: &Waveform, dir: &std::path::Path, name: &str) -> Vec<u8> {
    let path = dir.join(name);
    io::write_waveform(w, &path).expect("write csv");
    std::fs::read(&path).expect("read csv")
}

fn criterion_9() -> Verdict {
    let dir = tempfile::tempdir().expect("tempdir");
    let mut same = true;
    for name in ["case_a", "case_b"] {
        let s = preset(name);
        let (w1, r1) = run(&s, &s.schedule);
        let (w2, r2) = run(&s, &s.schedule);
        same &= waveform_bytes(&w1, dir.path(), "a.csv") == waveform_bytes(&w2, dir.path(), "b.csv");
        same &= r1.to_json() == r2.to_json() && r1.report_digest == r2.report_digest;
    }
    verdict(same, format!("waveform CSVs and reports byte-identical across reruns: {same}"))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("case A reproduction", criterion_1),
        ("case B reproduction", criterion_2),
        ("discrimination sweep", criterion_3),
        ("score brute-force oracle", criterion_4),
        ("SVD/Hankel properties", criterion_5),
        ("DMD oracle", criterion_6),
        ("simulation oracles", criterion_7),
        ("statistical sanity", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        failed += usize::from(!v.pass);
        println!("criterion {} {name}: {} ({})", i + 1, if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
