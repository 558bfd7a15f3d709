//! Recover a rotation's eigenvalues from snapshot pairs.

use hifwatch::havok;
use nalgebra::{DMatrix, Matrix2, Vector2};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let theta: f64 = 0.3;
    let a = Matrix2::new(theta.cos(), -theta.sin(), theta.sin(), theta.cos()) * 0.98;
    let mut z = Vector2::new(1.0, 0.0);
    let mut snaps = Vec::new();
    for _ in 0..30 {
        snaps.push(z);
        z = a * z;
    }
    let x = DMatrix::from_fn(2, 29, |i, j| snaps[j][i]);
    let y = DMatrix::from_fn(2, 29, |i, j| snaps[j + 1][i]);
    let k = havok::dmd_koopman(&x, &y)?;
    for ev in &k.eigenvalues {
        println!("lambda = {:.6} {:+.6}i  |lambda| = {:.4}", ev.re, ev.im, ev.norm());
    }
    println!("expected |lambda| = 0.98, arg = +/-{theta}");
    Ok(())
}
