//! Time-delay embedding, rank truncation, forcing extraction and DMD.
//!
//! The Hankel matrix of a series `x` with window `k` has rows
//! `[x[i], x[i+1], …, x[i+k-1]]`, so the row index runs over time. The
//! temporal singular factor is therefore the left one.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

type C64 = Complex<f64>;

/// Relative cutoff below which a singular value counts as zero.
pub const ZERO_SINGULAR_CUTOFF: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum HavokError {
    #[error("window length {k} invalid for series of length {n} (need 2 <= k <= n/2)")]
    BadWindow { k: usize, n: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("SVD did not converge on a {rows}x{cols} matrix (frobenius norm {frobenius:e})")]
    NoConvergence { rows: usize, cols: usize, frobenius: f64 },
    #[error("singular values must be non-negative and non-increasing")]
    UnsortedSpectrum,
    #[error("aspect ratio must lie in (0, 1], got {0}")]
    BadAspect(f64),
    #[error("all singular values are zero")]
    DegenerateSpectrum,
    #[error("rank {rank} exceeds available width {width}")]
    RankTooLarge { rank: usize, width: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("eigenvalue rank mismatch: {left} vs {right}")]
    RankMismatch { left: usize, right: usize },
}

/// Start time and rate used to stamp derived series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub t0: f64,
    pub sample_rate: f64,
}

impl Default for Timing {
    fn default() -> Self {
        Self { t0: 0.0, sample_rate: 1.0 }
    }
}

impl Timing {
    pub fn time(&self, index: usize) -> f64 {
        self.t0 + index as f64 / self.sample_rate
    }

    /// Timing of a series whose element 0 sits `offset` samples later.
    pub fn shifted(&self, offset: usize) -> Self {
        Self { t0: self.time(offset), sample_rate: self.sample_rate }
    }
}

/// Hankel embedding kept as the series plus window length.
///
/// `entry(i, j) = x[i + j]`; nothing is materialized until asked for.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelEmbedding {
    series: Vec<f64>,
    window_k: usize,
    timing: Timing,
}

pub fn build_hankel(x: &[f64], k: usize) -> Result<HankelEmbedding, HavokError> {
    HankelEmbedding::new(x, k, Timing::default())
}

impl HankelEmbedding {
    pub fn new(x: &[f64], k: usize, timing: Timing) -> Result<Self, HavokError> {
        if k < 2 || 2 * k > x.len() {
            return Err(HavokError::BadWindow { k, n: x.len() });
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(HavokError::NonFinite(i));
        }
        Ok(Self { series: x.to_vec(), window_k: k, timing })
    }

    pub fn rows(&self) -> usize {
        self.series.len() - self.window_k + 1
    }

    pub fn window_k(&self) -> usize {
        self.window_k
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.series[i + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.series[i..i + self.window_k]
    }

    /// Time of the newest sample in row `i`.
    pub fn row_time(&self, i: usize) -> f64 {
        self.timing.time(i + self.window_k - 1)
    }

    pub fn source_timestamps(&self) -> Vec<f64> {
        (0..self.rows()).map(|i| self.row_time(i)).collect()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows(), self.window_k, |i, j| self.entry(i, j))
    }

    /// `Hᵀ H`, using the shift structure: `G[i+1][j+1] = G[i][j] + x[i+m]x[j+m] - x[i]x[j]`.
    pub fn gram(&self) -> DMatrix<f64> {
        gram_of(&self.series, self.window_k)
    }

    /// `H v` for a length-k vector.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows()).map(|i| dot(self.row(i), v)).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn gram_of(x: &[f64], k: usize) -> DMatrix<f64> {
    let m = x.len() - k + 1;
    let mut g = DMatrix::zeros(k, k);
    for j in 0..k {
        g[(0, j)] = dot(&x[..m], &x[j..j + m]);
    }
    for i in 0..k - 1 {
        for j in i..k - 1 {
            g[(i + 1, j + 1)] = g[(i, j)] + x[i + m] * x[j + m] - x[i] * x[j];
        }
    }
    for i in 0..k {
        for j in 0..i {
            g[(i, j)] = g[(j, i)];
        }
    }
    g
}

/// Thin singular factors: `left` is m×n, `right` is n×n with n = min(m, k).
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    pub left: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub right: DMatrix<f64>,
}

impl SvdFactors {
    pub fn of_matrix(a: &DMatrix<f64>) -> Result<Self, HavokError> {
        let (rows, cols) = a.shape();
        if let Some(i) = a.iter().position(|v| !v.is_finite()) {
            return Err(HavokError::NonFinite(i));
        }
        let svd = nalgebra::linalg::SVD::try_new(a.clone(), true, true, f64::EPSILON, 10_000).ok_or(
            HavokError::NoConvergence { rows, cols, frobenius: a.norm() },
        )?;
        let u = svd.u.expect("left vectors requested");
        let v_t = svd.v_t.expect("right vectors requested");
        let sv = svd.singular_values;
        let mut order: Vec<usize> = (0..sv.len()).collect();
        order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
        let n = order.len();
        let mut left = DMatrix::zeros(rows, n);
        let mut right = DMatrix::zeros(cols, n);
        let mut values = DVector::zeros(n);
        for (dst, &src) in order.iter().enumerate() {
            let mut ucol = u.column(src).clone_owned();
            let mut vcol = v_t.row(src).transpose();
            if leading_sign(ucol.as_slice()) < 0.0 {
                ucol.neg_mut();
                vcol.neg_mut();
            }
            left.set_column(dst, &ucol);
            right.set_column(dst, &vcol);
            values[dst] = sv[src];
        }
        Ok(Self { left, singular_values: values, right })
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.left * DMatrix::from_diagonal(&self.singular_values) * self.right.transpose()
    }
}

/// Sign of the largest-magnitude entry (first one on ties).
fn leading_sign(v: &[f64]) -> f64 {
    let mut best = 0.0f64;
    for &x in v {
        if x.abs() > best.abs() {
            best = x;
        }
    }
    if best < 0.0 { -1.0 } else { 1.0 }
}

pub fn svd(h: &HankelEmbedding) -> Result<SvdFactors, HavokError> {
    SvdFactors::of_matrix(&h.to_matrix())
}

/// Noise knowledge for the hard threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseLevel {
    Unknown,
    /// Per-entry noise standard deviation and the longer matrix dimension.
    Known { sigma: f64, rows: usize },
}

/// Coefficient of the median-based hard threshold for unknown noise.
pub fn svht_coefficient(beta: f64) -> f64 {
    0.56 * beta.powi(3) - 0.95 * beta.powi(2) + 1.82 * beta + 1.43
}

fn known_noise_lambda(beta: f64) -> f64 {
    (2.0 * (beta + 1.0) + 8.0 * beta / ((beta + 1.0) + (beta * beta + 14.0 * beta + 1.0).sqrt())).sqrt()
}

fn median(sorted_desc: &[f64]) -> f64 {
    let n = sorted_desc.len();
    if n % 2 == 1 {
        sorted_desc[n / 2]
    } else {
        0.5 * (sorted_desc[n / 2 - 1] + sorted_desc[n / 2])
    }
}

/// Count of singular values above the optimal hard threshold, at least 2.
pub fn optimal_rank(values: &[f64], beta: f64, noise: NoiseLevel) -> Result<usize, HavokError> {
    if values.is_empty() || values.iter().any(|v| !(v >= &0.0)) || values.windows(2).any(|w| w[1] > w[0]) {
        return Err(HavokError::UnsortedSpectrum);
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(HavokError::BadAspect(beta));
    }
    if values[0] == 0.0 {
        return Err(HavokError::DegenerateSpectrum);
    }
    let threshold = match noise {
        NoiseLevel::Unknown => svht_coefficient(beta) * median(values),
        NoiseLevel::Known { sigma, rows } => known_noise_lambda(beta) * (rows as f64).sqrt() * sigma,
    };
    let count = values.iter().filter(|&&s| s > threshold).count();
    Ok(count.max(2).min(values.len().max(2)))
}

/// Delay coordinates and forcing of a rank-r decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct HavokDecomposition {
    pub rank_r: usize,
    pub delay_coordinates: Vec<Vec<f64>>,
    pub forcing: Vec<f64>,
    pub timestamps: Vec<f64>,
}

fn temporal_column(f: &SvdFactors, col: usize) -> Vec<f64> {
    let s1 = f.singular_values[0];
    if f.singular_values[col] <= ZERO_SINGULAR_CUTOFF * s1 {
        return vec![0.0; f.left.nrows()];
    }
    f.left.column(col).iter().copied().collect()
}

/// Columns 1..r-1 of the temporal factor as coordinates, column r as forcing.
///
/// A column whose singular value is numerically zero carries no dynamics and
/// is returned as zeros.
pub fn forcing_series(f: &SvdFactors, r: usize, timestamps: &[f64]) -> Result<HavokDecomposition, HavokError> {
    let width = f.left.ncols();
    if r < 2 || r > width {
        return Err(HavokError::RankTooLarge { rank: r, width });
    }
    if timestamps.len() != f.left.nrows() {
        return Err(HavokError::Shape(format!(
            "{} timestamps for {} temporal rows",
            timestamps.len(),
            f.left.nrows()
        )));
    }
    Ok(HavokDecomposition {
        rank_r: r,
        delay_coordinates: (0..r - 1).map(|c| temporal_column(f, c)).collect(),
        forcing: temporal_column(f, r - 1),
        timestamps: timestamps.to_vec(),
    })
}

/// Eigen-decomposed Gram matrix of a Hankel embedding: singular values and
/// right vectors without forming the temporal factor.
#[derive(Debug, Clone, PartialEq)]
pub struct GramSpectrum {
    pub singular_values: Vec<f64>,
    /// k×k, columns sorted by descending singular value.
    pub right: DMatrix<f64>,
    pub rows: usize,
}

impl GramSpectrum {
    pub fn of(h: &HankelEmbedding) -> Self {
        Self::from_gram(h.gram(), h.rows())
    }

    fn from_gram(g: DMatrix<f64>, rows: usize) -> Self {
        let k = g.nrows();
        let eig = SymmetricEigen::new(g);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut right = DMatrix::zeros(k, k);
        let mut singular_values = Vec::with_capacity(k);
        for (dst, &src) in order.iter().enumerate() {
            right.set_column(dst, &eig.eigenvectors.column(src));
            singular_values.push(eig.eigenvalues[src].max(0.0).sqrt());
        }
        Self { singular_values, right, rows }
    }

    pub fn aspect(&self) -> f64 {
        self.singular_values.len() as f64 / self.rows as f64
    }
}

/// How the forcing is extracted from a long record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcingMode {
    /// Decompose the baseline span once and project every later row onto it.
    BaselineProjection,
    /// Decompose overlapping analysis windows and overlap-average the forcing.
    Rolling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HavokConfig {
    pub window_k: usize,
    pub forcing_mode: ForcingMode,
    /// Rolling mode only.
    pub analysis_window_cycles: f64,
    /// Rolling mode only.
    pub hop_cycles: f64,
    /// Fixed truncation rank instead of the hard threshold.
    pub rank: Option<usize>,
}

impl Default for HavokConfig {
    fn default() -> Self {
        Self {
            window_k: 128,
            forcing_mode: ForcingMode::BaselineProjection,
            analysis_window_cycles: 4.0,
            hop_cycles: 0.25,
            rank: None,
        }
    }
}

/// Baseline-trained projection basis for the forcing and delay coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingModel {
    pub window_k: usize,
    pub rank_r: usize,
    pub singular_values: Vec<f64>,
    /// k×r projection columns, scaled by 1/σ and sign-fixed on the baseline.
    basis: DMatrix<f64>,
}

impl ForcingModel {
    pub fn fit(baseline: &[f64], k: usize, rank: Option<usize>) -> Result<Self, HavokError> {
        let h = HankelEmbedding::new(baseline, k, Timing::default())?;
        let spec = GramSpectrum::of(&h);
        let r = match rank {
            Some(r) => r,
            None => optimal_rank(&spec.singular_values, spec.aspect(), NoiseLevel::Unknown)?,
        };
        if r < 2 || r > k {
            return Err(HavokError::RankTooLarge { rank: r, width: k });
        }
        let s1 = spec.singular_values[0];
        let mut basis = DMatrix::zeros(k, r);
        for c in 0..r {
            let s = spec.singular_values[c];
            if s <= ZERO_SINGULAR_CUTOFF * s1 {
                continue;
            }
            let v: Vec<f64> = spec.right.column(c).iter().map(|x| x / s).collect();
            let sign = leading_sign(&h.project(&v));
            basis.set_column(c, &DVector::from_iterator(k, v.iter().map(|x| x * sign)));
        }
        Ok(Self { window_k: k, rank_r: r, singular_values: spec.singular_values, basis })
    }

    /// Projects every Hankel row of `x`; rows are stamped at their newest sample.
    pub fn apply(&self, x: &[f64], timing: Timing) -> Result<HavokDecomposition, HavokError> {
        let h = HankelEmbedding::new(x, self.window_k, timing)?;
        let cols: Vec<Vec<f64>> = (0..self.rank_r)
            .map(|c| h.project(self.basis.column(c).as_slice()))
            .collect();
        let mut cols = cols.into_iter();
        let delay_coordinates: Vec<Vec<f64>> = cols.by_ref().take(self.rank_r - 1).collect();
        let forcing = cols.next().unwrap_or_default();
        Ok(HavokDecomposition { rank_r: self.rank_r, delay_coordinates, forcing, timestamps: h.source_timestamps() })
    }
}

/// Rolling-window forcing at a fixed rank, overlap-averaged per Hankel row.
pub fn rolling_forcing(x: &[f64], k: usize, rank: usize, window: usize, hop: usize, timing: Timing) -> Result<Vec<f64>, HavokError> {
    let full = HankelEmbedding::new(x, k, timing)?;
    if window < 2 * k || window > x.len() || hop == 0 {
        return Err(HavokError::BadWindow { k, n: window });
    }
    let rows = full.rows();
    let mut sum = vec![0.0; rows];
    let mut count = vec![0u32; rows];
    let mut starts: Vec<usize> = (0..=x.len() - window).step_by(hop).collect();
    if *starts.last().unwrap_or(&0) != x.len() - window {
        starts.push(x.len() - window);
    }
    for start in starts {
        let segment = &x[start..start + window];
        let h = HankelEmbedding::new(segment, k, timing)?;
        let spec = GramSpectrum::of(&h);
        if rank > k {
            return Err(HavokError::RankTooLarge { rank, width: k });
        }
        let s = spec.singular_values[rank - 1];
        let values = if s <= ZERO_SINGULAR_CUTOFF * spec.singular_values[0] {
            vec![0.0; h.rows()]
        } else {
            let v: Vec<f64> = spec.right.column(rank - 1).iter().map(|x| x / s).collect();
            let mut u = h.project(&v);
            let sign = leading_sign(&u);
            u.iter_mut().for_each(|x| *x *= sign);
            u
        };
        for (i, val) in values.into_iter().enumerate() {
            sum[start + i] += val;
            count[start + i] += 1;
        }
    }
    Ok(sum.into_iter().zip(count).map(|(s, c)| s / c.max(1) as f64).collect())
}

/// Best-fit linear operator between snapshot matrices and its spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct KoopmanApprox {
    pub operator: DMatrix<f64>,
    pub eigenvalues: Vec<C64>,
    /// Unit-norm eigenvectors as columns.
    pub modes: DMatrix<C64>,
    /// Set when some of X's singular values fell under the pseudo-inverse cutoff.
    pub rank_deficient: bool,
}

impl KoopmanApprox {
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// DMD with automatic rank (singular values above 1e-10 σ₁).
pub fn dmd_koopman(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<KoopmanApprox, HavokError> {
    dmd_with_rank(x, y, None)
}

/// DMD truncated to at most `rank` modes.
pub fn dmd_with_rank(x: &DMatrix<f64>, y: &DMatrix<f64>, rank: Option<usize>) -> Result<KoopmanApprox, HavokError> {
    if x.shape() != y.shape() || x.is_empty() {
        return Err(HavokError::Shape(format!("X is {:?}, Y is {:?}", x.shape(), y.shape())));
    }
    let f = SvdFactors::of_matrix(x)?;
    let s1 = f.singular_values[0];
    if s1 == 0.0 {
        return Err(HavokError::DegenerateSpectrum);
    }
    let numeric = f.singular_values.iter().filter(|&&s| s > ZERO_SINGULAR_CUTOFF * s1).count();
    let keep = match rank {
        Some(r) if r > numeric => return Err(HavokError::RankTooLarge { rank: r, width: numeric }),
        Some(r) => r,
        None => numeric,
    };
    let u = f.left.columns(0, keep);
    let v = f.right.columns(0, keep);
    let inv_s = DMatrix::from_diagonal(&f.singular_values.rows(0, keep).map(|s| 1.0 / s));
    let operator = u.transpose() * y * v * inv_s;
    let (eigenvalues, modes) = eigen_decompose(&operator);
    Ok(KoopmanApprox { operator, eigenvalues, modes, rank_deficient: numeric < f.singular_values.len() })
}

fn eigen_decompose(k: &DMatrix<f64>) -> (Vec<C64>, DMatrix<C64>) {
    let n = k.nrows();
    let mut values: Vec<C64> = k.complex_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    let kc = k.map(|v| C64::new(v, 0.0));
    let scale = k.norm().max(1.0);
    let mut modes = DMatrix::zeros(n, n);
    let mut i = 0;
    while i < n {
        let lambda = values[i];
        let mut g = 1;
        while i + g < n && (values[i + g] - lambda).norm() <= 1e-9 * scale {
            g += 1;
        }
        let shifted = &kc - DMatrix::from_diagonal_element(n, n, lambda);
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.expect("right vectors requested");
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
        for (j, &src) in order.iter().take(g).enumerate() {
            let col: Vec<C64> = v_t.row(src).iter().map(|c| c.conj()).collect();
            modes.set_column(i + j, &DVector::from_vec(normalize_mode(col)));
        }
        i += g;
    }
    (values, modes)
}

/// Unit norm with the largest component rotated onto the positive real axis.
fn normalize_mode(mut v: Vec<C64>) -> Vec<C64> {
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let mut peak = C64::new(0.0, 0.0);
    for c in &v {
        if c.norm() > peak.norm() + 1e-12 {
            peak = *c;
        }
    }
    let phase = if peak.norm() > 0.0 { peak.conj() / peak.norm() } else { C64::new(1.0, 0.0) };
    if norm > 0.0 {
        v.iter_mut().for_each(|c| *c = *c * phase / norm);
    }
    v
}

/// Iterates `z(t+1) = A z(t)`; the returned trajectory starts with `z0`.
pub fn propagate_reduced(k: &KoopmanApprox, z0: &DVector<f64>, steps: usize) -> Result<Vec<DVector<f64>>, HavokError> {
    if z0.len() != k.operator.nrows() {
        return Err(HavokError::Shape(format!("state has {} entries, operator is {}", z0.len(), k.operator.nrows())));
    }
    let mut out = Vec::with_capacity(steps + 1);
    out.push(z0.clone());
    for _ in 0..steps {
        let next = &k.operator * out.last().expect("non-empty");
        out.push(next);
    }
    Ok(out)
}

/// Mean eigenvalue distance under the cheapest one-to-one matching.
pub fn spectrum_deviation(baseline: &KoopmanApprox, observed: &KoopmanApprox) -> Result<f64, HavokError> {
    let (a, b) = (&baseline.eigenvalues, &observed.eigenvalues);
    if a.len() != b.len() {
        return Err(HavokError::RankMismatch { left: a.len(), right: b.len() });
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let cost: Vec<Vec<f64>> = a.iter().map(|x| b.iter().map(|y| (x - y).norm()).collect()).collect();
    let assignment = min_cost_assignment(&cost);
    let total: f64 = assignment.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    Ok(total / a.len() as f64)
}

/// Hungarian algorithm on a square cost matrix; returns the column for each row.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            out[p[j] - 1] = j - 1;
        }
    }
    out
}

/// DMD on the leading `rank` delay coordinates of a series.
pub fn fit_koopman(x: &[f64], k: usize, rank: usize) -> Result<KoopmanApprox, HavokError> {
    let model = ForcingModel::fit(x, k, Some(rank + 1))?;
    let dec = model.apply(x, Timing::default())?;
    let m = dec.forcing.len();
    let coords = &dec.delay_coordinates;
    let snap_x = DMatrix::from_fn(rank, m - 1, |r, c| coords[r][c]);
    let snap_y = DMatrix::from_fn(rank, m - 1, |r, c| coords[r][c + 1]);
    dmd_with_rank(&snap_x, &snap_y, Some(rank))
}
