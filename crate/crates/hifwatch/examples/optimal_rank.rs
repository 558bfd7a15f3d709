//! Pick a truncation rank for a noisy low-rank matrix.

use hifwatch::havok::{self, NoiseLevel, SvdFactors};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (m, n, rank, sigma) = (300, 60, 5, 0.05);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let d = Normal::new(0.0, 1.0)?;
    let a = DMatrix::from_fn(m, rank, |_, _| d.sample(&mut rng));
    let b = DMatrix::from_fn(rank, n, |_, _| d.sample(&mut rng));
    let noisy = a * b + DMatrix::from_fn(m, n, |_, _| sigma * d.sample(&mut rng));
    let f = SvdFactors::of_matrix(&noisy)?;
    let beta = n as f64 / m as f64;
    let values = f.singular_values.as_slice();
    println!("unknown noise: r = {}", havok::optimal_rank(values, beta, NoiseLevel::Unknown)?);
    println!("known noise:   r = {}", havok::optimal_rank(values, beta, NoiseLevel::Known { sigma, rows: m })?);
    println!("planted rank:  {rank}");
    Ok(())
}
