//! Full pipeline on Case A.

use hifwatch::config;
use hifwatch::detector::{self, GroundTruth};
use hifwatch::wavesim;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = config::parse_config(config::preset("case_a").unwrap(), Vec::<(String, String)>::new())?;
    let w = wavesim::synthesize(&s.sim, &s.schedule)?;
    let truth = GroundTruth { faults: s.schedule.hif_intervals(), benign_onsets: s.schedule.benign_onsets() };
    let r = detector::run_pipeline(&w, &s.detector, Some(&truth))?;
    println!("rank {}, {} graph nodes, theta {:.3}", r.havok.rank_r, r.graph.nodes, r.threshold_theta);
    for iv in &r.intervals {
        println!("interval {:.5} s for {:.2} ms, peak anomaly {:.2}", iv.onset, iv.duration * 1e3, iv.peak_anomaly_score);
    }
    let e = r.evaluation.as_ref().unwrap();
    for f in &e.faults {
        match f.latency {
            Some(l) => println!("fault at {} s detected after {:.3} ms", f.onset, l * 1e3),
            None => println!("fault at {} s missed", f.onset),
        }
    }
    println!("false positives: {}", e.false_positives.len());
    Ok(())
}
