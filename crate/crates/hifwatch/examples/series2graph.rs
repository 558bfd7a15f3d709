//! Build a subsequence graph over a periodic signal with one glitch and
//! report the least normal query.

use std::f64::consts::PI;

use hifwatch::havok::Timing;
use hifwatch::s2g::{self, S2gConfig, SubsequenceGraph};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut x: Vec<f64> = (0..6000).map(|i| (2.0 * PI * i as f64 / 50.0).sin()).collect();
    for (j, v) in x[4000..4030].iter_mut().enumerate() {
        *v = 0.8 * (j as f64 / 3.0).cos();
    }
    let cfg = S2gConfig { subseq_len: 25, query_len: 25, embed_dim: 2, bins_per_axis: 8 };
    let subs = s2g::extract_subsequences(&x, cfg.subseq_len)?;
    let q = s2g::quantize_to_nodes(&subs, &cfg, Some(3000))?;
    let g = SubsequenceGraph::from_quantized(q, cfg.subseq_len)?;
    println!("{} nodes, {} edges", g.nodes.len(), g.edges.len());
    let scores = s2g::score_all(&g, cfg.query_len, Timing::default())?;
    let (worst, v) = scores
        .norm_scores
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    println!("lowest normality {v:.3} for the query covering samples {:?}", scores.coverage[worst]);
    Ok(())
}
