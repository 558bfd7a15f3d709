//! Environment overrides on top of a preset.

use hifwatch::config;

fn main() {
    let env = [("HIFWATCH_HAVOK__WINDOW_K", "96"), ("HIFWATCH_DETECTOR__SIGMA_MULTIPLIER", "4.0")];
    let s = config::parse_config(config::preset("case_b").unwrap(), env).unwrap();
    println!("window_k = {}", s.detector.havok.window_k);
    println!("sigma_multiplier = {}", s.detector.detector.sigma_multiplier);

    let err = config::parse_config("[s2g]\nbins = 3\n", Vec::<(String, String)>::new()).unwrap_err();
    println!("rejected: {err}");
}
