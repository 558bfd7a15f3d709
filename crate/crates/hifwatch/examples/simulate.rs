//! Synthesize Case A and print per-event peak currents.

use hifwatch::config;
use hifwatch::wavesim;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = config::parse_config(config::preset("case_a").unwrap(), Vec::<(String, String)>::new())?;
    let w = wavesim::synthesize(&s.sim, &s.schedule)?;
    println!("{} samples at {} Hz", w.len(), w.sample_rate.hz());
    let fs = w.sample_rate.hz();
    let cycle = (fs / s.sim.system_frequency) as usize;
    for e in s.schedule.events() {
        let start = (e.onset * fs) as usize;
        let peak = w.primary()[start..start + cycle].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        println!("{:>11} at {:.2} s  grid current peak {peak:.2} A over the next cycle", e.kind_name(), e.onset);
    }
    Ok(())
}
