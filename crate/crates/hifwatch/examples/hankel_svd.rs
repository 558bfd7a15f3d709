//! Delay-embed two tones and look at the singular spectrum.

use std::f64::consts::PI;

use hifwatch::havok;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let x: Vec<f64> = (0..400).map(|n| {
        let t = n as f64 / 100.0;
        (2.0 * PI * 3.0 * t).sin() + 0.3 * (2.0 * PI * 11.0 * t).cos()
    }).collect();
    let h = havok::build_hankel(&x, 32)?;
    let f = havok::svd(&h)?;
    println!("hankel {}x{}", h.rows(), h.window_k());
    // Two real tones span four dimensions.
    for (i, s) in f.singular_values.iter().take(6).enumerate() {
        println!("sigma[{i}] = {s:.3e}");
    }
    let err = (f.reconstruct() - h.to_matrix()).norm();
    println!("reconstruction error {err:.2e}");
    Ok(())
}
