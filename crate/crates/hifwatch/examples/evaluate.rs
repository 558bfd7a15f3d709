//! Score hand-made detections against a schedule.

use hifwatch::detector::{self, DetectedInterval, GroundTruth};

fn main() {
    let truth = GroundTruth { faults: vec![(1.2, 1.25), (1.4, 1.45)], benign_onsets: vec![1.1] };
    let hit = |onset| DetectedInterval { onset, duration: 0.003, peak_anomaly_score: 5.0 };
    let found = [hit(1.1004), hit(1.2016), hit(1.23)];
    let e = detector::evaluate(&found, &truth, 1.0 / 60.0, 60.0);
    println!("{}", serde_json::to_string_pretty(&e).unwrap());
}
