//! Fit the projection basis on a clean stretch and watch the forcing react
//! to a short burst.

use std::f64::consts::PI;

use hifwatch::detector;
use hifwatch::havok::{ForcingModel, Timing};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fs = 4000.0;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noise = Normal::new(0.0, 1e-4)?;
    let tone = |n: usize, h: f64| (2.0 * PI * 60.0 * h * n as f64 / fs).sin();
    let mut x: Vec<f64> = (0..8000)
        .map(|n| tone(n, 1.0) + 0.02 * tone(n, 3.0) + 0.012 * tone(n, 5.0) + noise.sample(&mut rng))
        .collect();
    for (j, v) in x[6000..6040].iter_mut().enumerate() {
        *v += 0.3 * (j as f64 / 2.0).sin();
    }
    let model = ForcingModel::fit(&x[..4000], 64, None)?;
    let d = model.apply(&x, Timing { t0: 0.0, sample_rate: fs })?;
    println!("rank {} from the baseline spectrum", d.rank_r);
    let magnitude: Vec<f64> = d.forcing.iter().map(|v| v.abs()).collect();
    let smooth = detector::moving_average_trailing(&magnitude, 32);
    let peak = |lo: f64, hi: f64| {
        d.timestamps.iter().zip(&smooth).filter(|(t, _)| (lo..hi).contains(*t)).fold(0.0f64, |m, (_, v)| m.max(*v))
    };
    println!("smoothed |forcing| before the burst {:.3e}", peak(0.1, 1.45));
    println!("smoothed |forcing| around the burst {:.3e}", peak(1.5, 1.53));
    Ok(())
}
