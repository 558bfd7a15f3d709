//! Subsequence transition graph and path normality scores.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::havok::Timing;

#[derive(Debug, Error, PartialEq)]
pub enum S2gError {
    #[error("subsequence length {l} exceeds series length {n}")]
    SubsequenceTooLong { l: usize, n: usize },
    #[error("invalid s2g config: {0}")]
    InvalidConfig(String),
    #[error("no subsequences to quantize")]
    Empty,
    #[error("node sequence needs at least 2 entries, got {0}")]
    TooShort(usize),
    #[error("query path {start}..{end} exits a node sequence of length {len}")]
    PathOutOfRange { start: usize, end: usize, len: usize },
    #[error("query length {lq} too long for {len} nodes")]
    QueryTooLong { lq: usize, len: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct S2gConfig {
    #[serde(rename = "subseq_len_l")]
    pub subseq_len: usize,
    #[serde(rename = "query_len_lq")]
    pub query_len: usize,
    pub embed_dim: usize,
    pub bins_per_axis: usize,
}

impl Default for S2gConfig {
    fn default() -> Self {
        Self { subseq_len: 64, query_len: 64, embed_dim: 2, bins_per_axis: 3 }
    }
}

impl S2gConfig {
    pub fn validate(&self) -> Result<(), S2gError> {
        let bad = |m: &str| Err(S2gError::InvalidConfig(m.into()));
        if self.subseq_len < 2 {
            return bad("subseq_len_l must be at least 2");
        }
        if self.query_len < self.subseq_len {
            return bad("query_len_lq must be at least subseq_len_l");
        }
        if self.embed_dim < 1 {
            return bad("embed_dim must be at least 1");
        }
        if self.embed_dim > self.subseq_len {
            return bad("embed_dim cannot exceed subseq_len_l");
        }
        if self.bins_per_axis < 2 {
            return bad("bins_per_axis must be at least 2");
        }
        Ok(())
    }
}

pub fn extract_subsequences(x: &[f64], l: usize) -> Result<Vec<&[f64]>, S2gError> {
    if l == 0 || l > x.len() {
        return Err(S2gError::SubsequenceTooLong { l, n: x.len() });
    }
    Ok(x.windows(l).collect())
}

fn demeaned(s: &[f64]) -> Vec<f64> {
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    s.iter().map(|v| v - mean).collect()
}

/// Principal-axis projection plus a regular grid over the fit embedding's box.
///
/// Points outside the box continue the same lattice, so they land in cells
/// of their own rather than being clamped onto the border.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantizer {
    /// l×d projection columns.
    axes: DMatrix<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    width: Vec<f64>,
    bins: usize,
}

impl Quantizer {
    pub fn fit(subseqs: &[&[f64]], cfg: &S2gConfig) -> Result<Self, S2gError> {
        let first = subseqs.first().ok_or(S2gError::Empty)?;
        let l = first.len();
        let d = cfg.embed_dim.min(l);
        let mut cov = DMatrix::<f64>::zeros(l, l);
        for s in subseqs {
            let c = demeaned(s);
            for i in 0..l {
                let ci = c[i];
                if ci == 0.0 {
                    continue;
                }
                for j in i..l {
                    cov[(i, j)] += ci * c[j];
                }
            }
        }
        for i in 0..l {
            for j in 0..i {
                cov[(i, j)] = cov[(j, i)];
            }
        }
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..l).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let mut axes = DMatrix::zeros(l, d);
        for (dst, &src) in order.iter().take(d).enumerate() {
            let mut col = eig.eigenvectors.column(src).clone_owned();
            let peak = col.iter().copied().fold(0.0f64, |p, x| if x.abs() > p.abs() { x } else { p });
            if peak < 0.0 {
                col.neg_mut();
            }
            axes.set_column(dst, &col);
        }
        let mut q = Self { axes, lower: vec![f64::INFINITY; d], upper: vec![f64::NEG_INFINITY; d], width: vec![1.0; d], bins: cfg.bins_per_axis };
        for s in subseqs {
            let y = q.embed(s);
            for a in 0..d {
                q.lower[a] = q.lower[a].min(y[a]);
                q.upper[a] = q.upper[a].max(y[a]);
            }
        }
        for a in 0..d {
            let span = q.upper[a] - q.lower[a];
            q.width[a] = if span > 0.0 { span / q.bins as f64 } else { 1.0 };
        }
        Ok(q)
    }

    pub fn dim(&self) -> usize {
        self.axes.ncols()
    }

    /// Coordinates of a mean-removed subsequence on the principal axes.
    pub fn embed(&self, s: &[f64]) -> Vec<f64> {
        let c = demeaned(s);
        (0..self.dim())
            .map(|a| self.axes.column(a).iter().zip(&c).map(|(x, y)| x * y).sum())
            .collect()
    }

    pub fn cell_of_point(&self, y: &[f64]) -> Vec<i64> {
        y.iter()
            .enumerate()
            .map(|(a, &v)| {
                let idx = ((v - self.lower[a]) / self.width[a]).floor() as i64;
                if idx == self.bins as i64 && v <= self.upper[a] {
                    idx - 1
                } else {
                    idx
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphNode {
    pub id: usize,
    pub cell: Vec<i64>,
    pub centroid: Vec<f64>,
    pub member_count: usize,
}

/// Node assignment of every subsequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantized {
    pub node_seq: Vec<usize>,
    pub nodes: Vec<GraphNode>,
    pub quantizer: Quantizer,
}

/// Quantizes subsequences to grid-cell nodes.
///
/// Axes and grid box are fit on the first `fit_count` subsequences (all of
/// them when `None`); node ids follow the lexicographic order of cells.
pub fn quantize_to_nodes(subseqs: &[&[f64]], cfg: &S2gConfig, fit_count: Option<usize>) -> Result<Quantized, S2gError> {
    cfg.validate()?;
    if subseqs.is_empty() {
        return Err(S2gError::Empty);
    }
    let fit = fit_count.unwrap_or(subseqs.len()).clamp(1, subseqs.len());
    let quantizer = Quantizer::fit(&subseqs[..fit], cfg)?;
    let embedded: Vec<Vec<f64>> = subseqs.iter().map(|s| quantizer.embed(s)).collect();
    let cells: Vec<Vec<i64>> = embedded.iter().map(|y| quantizer.cell_of_point(y)).collect();
    let ids: BTreeMap<&Vec<i64>, usize> = cells
        .iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(id, c)| (c, id))
        .collect();
    let d = quantizer.dim();
    let mut nodes: Vec<GraphNode> = ids
        .iter()
        .map(|(cell, &id)| GraphNode { id, cell: (*cell).clone(), centroid: vec![0.0; d], member_count: 0 })
        .collect();
    let node_seq: Vec<usize> = cells.iter().map(|c| ids[c]).collect();
    for (&id, y) in node_seq.iter().zip(&embedded) {
        let node = &mut nodes[id];
        node.member_count += 1;
        node.centroid.iter_mut().zip(y).for_each(|(c, v)| *c += v);
    }
    for node in &mut nodes {
        let n = node.member_count as f64;
        node.centroid.iter_mut().for_each(|c| *c /= n);
    }
    Ok(Quantized { node_seq, nodes, quantizer })
}

/// Directed transition graph over a node sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsequenceGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: BTreeMap<(usize, usize), u64>,
    pub node_seq: Vec<usize>,
    degree: Vec<usize>,
    /// Samples spanned by one subsequence, used for coverage bookkeeping.
    pub subseq_len: usize,
}

/// Builds the graph with placeholder nodes (no centroids) from a bare sequence.
pub fn build_graph(node_seq: &[usize]) -> Result<SubsequenceGraph, S2gError> {
    let n = node_seq.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; n];
    node_seq.iter().for_each(|&i| counts[i] += 1);
    let nodes = counts
        .into_iter()
        .enumerate()
        .map(|(id, member_count)| GraphNode { id, cell: Vec::new(), centroid: Vec::new(), member_count })
        .collect();
    SubsequenceGraph::new(nodes, node_seq.to_vec(), 1)
}

impl SubsequenceGraph {
    pub fn new(nodes: Vec<GraphNode>, node_seq: Vec<usize>, subseq_len: usize) -> Result<Self, S2gError> {
        if node_seq.len() < 2 {
            return Err(S2gError::TooShort(node_seq.len()));
        }
        let mut edges = BTreeMap::new();
        for w in node_seq.windows(2) {
            *edges.entry((w[0], w[1])).or_insert(0u64) += 1;
        }
        let mut neighbours = vec![BTreeSet::new(); nodes.len()];
        for &(a, b) in edges.keys() {
            neighbours[a].insert(b);
            neighbours[b].insert(a);
        }
        let degree = neighbours
            .iter()
            .enumerate()
            .map(|(id, set)| set.len() + usize::from(set.contains(&id)))
            .collect();
        Ok(Self { nodes, edges, node_seq, degree, subseq_len })
    }

    pub fn from_quantized(q: Quantized, subseq_len: usize) -> Result<Self, S2gError> {
        Self::new(q.nodes, q.node_seq, subseq_len)
    }

    /// Distinct incident neighbours; a self-loop counts twice.
    pub fn degree(&self, node: usize) -> usize {
        self.degree[node]
    }

    pub fn weight(&self, from: usize, to: usize) -> u64 {
        self.edges.get(&(from, to)).copied().unwrap_or(0)
    }

    fn transition_term(&self, step: usize) -> f64 {
        let (a, b) = (self.node_seq[step], self.node_seq[step + 1]);
        let divisor = self.degree[a].saturating_sub(1).max(1);
        self.weight(a, b) as f64 / divisor as f64
    }

    /// Mean of `w / (deg - 1)` over the `lq` transitions leaving `start`.
    pub fn normality_score(&self, start: usize, lq: usize) -> Result<f64, S2gError> {
        let end = start + lq;
        if lq == 0 || end >= self.node_seq.len() {
            return Err(S2gError::PathOutOfRange { start, end, len: self.node_seq.len() });
        }
        let total: f64 = (start..end).map(|s| self.transition_term(s)).sum();
        Ok(total / lq as f64)
    }

    /// Number of valid query starts for paths of `lq` transitions.
    pub fn query_count(&self, lq: usize) -> usize {
        self.node_seq.len().saturating_sub(lq)
    }
}

/// Scores with their source coverage in input samples and end timestamps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreSeries {
    pub timestamps: Vec<f64>,
    pub norm_scores: Vec<f64>,
    /// Inclusive `(first, last)` input-sample span each score depends on.
    pub coverage: Vec<(usize, usize)>,
}

impl ScoreSeries {
    pub fn len(&self) -> usize {
        self.norm_scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norm_scores.is_empty()
    }
}

/// Scores every query start; each score is stamped at its newest input sample.
pub fn score_all(g: &SubsequenceGraph, lq: usize, timing: Timing) -> Result<ScoreSeries, S2gError> {
    if lq == 0 || lq >= g.node_seq.len() {
        return Err(S2gError::QueryTooLong { lq, len: g.node_seq.len() });
    }
    let terms: Vec<f64> = (0..g.node_seq.len() - 1).map(|s| g.transition_term(s)).collect();
    let count = g.query_count(lq);
    let mut out = ScoreSeries {
        timestamps: Vec::with_capacity(count),
        norm_scores: Vec::with_capacity(count),
        coverage: Vec::with_capacity(count),
    };
    for start in 0..count {
        let total: f64 = terms[start..start + lq].iter().sum();
        let last = start + lq + g.subseq_len - 1;
        out.norm_scores.push(total / lq as f64);
        out.coverage.push((start, last));
        out.timestamps.push(timing.time(last));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnomalySubgraph {
    pub nodes: BTreeSet<usize>,
    pub edges: BTreeSet<(usize, usize)>,
    /// Merged inclusive input-sample spans of anomalous paths.
    pub flagged_spans: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub anomalous: Vec<bool>,
    pub subgraph: AnomalySubgraph,
}

/// Labels a score anomalous when it is strictly below `theta`.
pub fn classify(g: &SubsequenceGraph, s: &ScoreSeries, lq: usize, theta: f64) -> Classification {
    let anomalous: Vec<bool> = s.norm_scores.iter().map(|&v| v < theta).collect();
    let mut sub = AnomalySubgraph::default();
    for (start, _) in anomalous.iter().enumerate().filter(|(_, &a)| a) {
        let path = &g.node_seq[start..=(start + lq).min(g.node_seq.len() - 1)];
        sub.nodes.extend(path.iter().copied());
        sub.edges.extend(path.windows(2).map(|w| (w[0], w[1])));
        let span = s.coverage[start];
        match sub.flagged_spans.last_mut() {
            Some(last) if span.0 <= last.1 + 1 => last.1 = last.1.max(span.1),
            _ => sub.flagged_spans.push(span),
        }
    }
    Classification { anomalous, subgraph: sub }
}
