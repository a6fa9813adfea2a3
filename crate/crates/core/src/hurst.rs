//! Per-vertex residual Hurst estimation and grouping of regions into a small
//! number of temporal-dependence classes.
//!
//! Pipeline: ordinary least squares at each vertex → wavelet transform of the
//! residuals → slope-based preliminary `Ĥ_v` → region medians → 1-D k-means
//! over the medians. The cluster memberships (not the preliminary estimates)
//! are what the model keeps; cluster centers only seed the hyperparameter
//! search.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::wavelet::{dwt, estimate_hurst_slope, pad_to_pow2, Filter};

/// Default: only wavelet levels with at least this many detail coefficients
/// enter the preliminary slope fit.
pub const MIN_DETAIL_COEFFS: usize = 16;

/// Map from vertex to region of interest; regions are 0-based and every
/// vertex belongs to exactly one.
#[derive(Debug, Clone)]
pub struct Parcellation {
    region_of: Vec<usize>,
    n_regions: usize,
}

impl Parcellation {
    pub fn new(region_of: Vec<usize>) -> Result<Self> {
        if region_of.is_empty() {
            return Err(Error::invalid("parcellation must cover at least one vertex"));
        }
        let n_regions = region_of.iter().max().unwrap() + 1;
        let mut seen = vec![false; n_regions];
        for &r in &region_of {
            seen[r] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::invalid("parcellation has empty region indices"));
        }
        Ok(Parcellation { region_of, n_regions })
    }

    pub fn n_vertices(&self) -> usize {
        self.region_of.len()
    }

    pub fn n_regions(&self) -> usize {
        self.n_regions
    }

    pub fn region_of(&self, v: usize) -> usize {
        self.region_of[v]
    }

    pub fn vertices_of_region(&self, r: usize) -> Vec<usize> {
        (0..self.region_of.len()).filter(|&v| self.region_of[v] == r).collect()
    }

    /// Plain-text rows `vertex_index region_index`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (v, &r) in self.region_of.iter().enumerate() {
            out.push_str(&format!("{v} {r}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 2 {
                return Err(Error::Parse(format!(
                    "parcellation line {}: expected 'vertex region'",
                    lineno + 1
                )));
            }
            let v: usize = f[0].parse().map_err(|_| Error::Parse("bad vertex index".into()))?;
            let r: usize = f[1].parse().map_err(|_| Error::Parse("bad region index".into()))?;
            pairs.push((v, r));
        }
        pairs.sort_unstable();
        let n = pairs.len();
        let mut region_of = vec![usize::MAX; n];
        for (v, r) in pairs {
            if v >= n || region_of[v] != usize::MAX {
                return Err(Error::Parse(format!(
                    "parcellation must assign each vertex 0..{n} exactly once (vertex {v})"
                )));
            }
            region_of[v] = r;
        }
        Parcellation::new(region_of)
    }
}

/// Result of the region-clustering stage.
#[derive(Debug, Clone)]
pub struct HurstClustering {
    pub n_clusters: usize,
    pub cluster_of_region: Vec<usize>,
    pub cluster_of_vertex: Vec<usize>,
    /// Preliminary per-vertex estimates `Ĥ_v`.
    pub preliminary: Vec<f64>,
    /// Region medians `M_r` of the preliminary estimates.
    pub region_medians: Vec<f64>,
    /// Ascending cluster centers; starting values for the hyperparameter
    /// search, not final estimates.
    pub initial_hurst: Vec<f64>,
}

/// Ordinary least-squares fit of one series on the design. Returns the
/// coefficients (in design column order) and the residual series.
pub fn ols_residuals(y: &[f64], design: &DesignMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let t = design.t_len;
    let k = design.n_columns();
    if y.len() != t {
        return Err(Error::dims(format!("series length {} != design T {t}", y.len())));
    }
    if t <= k + 1 {
        return Err(Error::invalid(format!("need T > K+1 (T={t}, K+1={})", k + 1)));
    }
    let projector = OlsProjector::new(design)?;
    Ok(projector.fit(y))
}

/// Shared projection for fitting many vertices against one design: caches
/// the pseudo-inverse so a V×T matrix of series is one matrix product.
pub struct OlsProjector {
    x: DMatrix<f64>,
    pinv: DMatrix<f64>,
}

impl OlsProjector {
    pub fn new(design: &DesignMatrix) -> Result<Self> {
        let x = design.to_matrix();
        let k = design.n_columns();
        let xtx = x.transpose() * &x;
        let chol = nalgebra::Cholesky::new(xtx)
            .ok_or_else(|| Error::Numerical("rank-deficient design".into()))?;
        let pinv = chol.inverse() * x.transpose();
        debug_assert_eq!(pinv.nrows(), k);
        Ok(OlsProjector { x, pinv })
    }

    /// `(β̂, residuals)` for one series.
    pub fn fit(&self, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let yv = DVector::from_column_slice(y);
        let beta = &self.pinv * &yv;
        let resid = &yv - &self.x * &beta;
        (beta.iter().copied().collect(), resid.iter().copied().collect())
    }
}

/// Preliminary `Ĥ_v` for every row of `series` (one vertex per row):
/// OLS residuals → padding → wavelet transform → slope estimate.
pub fn preliminary_hurst_map(
    series: &[Vec<f64>],
    design: &DesignMatrix,
    levels: usize,
    filter: Filter,
) -> Result<Vec<f64>> {
    let projector = OlsProjector::new(design)?;
    series
        .par_iter()
        .map(|y| {
            let (_, resid) = projector.fit(y);
            let (padded, _) = pad_to_pow2(&resid)?;
            let dec = dwt(&padded, levels, filter)?;
            let (h, _) = estimate_hurst_slope(&dec, MIN_DETAIL_COEFFS)?;
            Ok(h)
        })
        .collect()
}

/// Locally optimal 1-D k-means: best of `restarts` seeded initializations,
/// ties in assignment broken toward the lower-indexed center, centers
/// returned ascending. Deterministic given the seed.
pub fn kmeans_1d(values: &[f64], k: usize, seed: u64) -> Result<(Vec<usize>, Vec<f64>)> {
    const RESTARTS: usize = 25;
    const MAX_ITERS: usize = 100;

    let n = values.len();
    let mut distinct: Vec<f64> = values.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if k == 0 || k > distinct.len() {
        return Err(Error::invalid(format!(
            "k must lie in 1..={} (distinct values), got {k}",
            distinct.len()
        )));
    }

    let assign = |centers: &[f64], memb: &mut [usize]| {
        for (i, &v) in values.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (c, &ctr) in centers.iter().enumerate() {
                let d = (v - ctr).abs();
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            memb[i] = best;
        }
    };
    let objective = |centers: &[f64], memb: &[usize]| -> f64 {
        values.iter().zip(memb).map(|(&v, &c)| (v - centers[c]).powi(2)).sum()
    };

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    for _ in 0..RESTARTS {
        // Initialize on distinct values so no two centers coincide.
        let mut centers: Vec<f64> = {
            let mut idx: Vec<usize> = (0..distinct.len()).collect();
            for i in (1..idx.len()).rev() {
                let j = rng.gen_range(0..=i);
                idx.swap(i, j);
            }
            idx.truncate(k);
            idx.into_iter().map(|i| distinct[i]).collect()
        };
        centers.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut memb = vec![0usize; n];
        assign(&centers, &mut memb);
        for _ in 0..MAX_ITERS {
            let mut sums = vec![0.0; k];
            let mut counts = vec![0usize; k];
            for (&v, &c) in values.iter().zip(&memb) {
                sums[c] += v;
                counts[c] += 1;
            }
            for c in 0..k {
                if counts[c] > 0 {
                    centers[c] = sums[c] / counts[c] as f64;
                }
            }
            let mut next = vec![0usize; n];
            assign(&centers, &mut next);
            if next == memb {
                break;
            }
            memb = next;
        }
        let obj = objective(&centers, &memb);
        if best.as_ref().map_or(true, |(b, _, _)| obj < *b - 1e-15) {
            best = Some((obj, memb, centers));
        }
    }
    let (_, memb, centers) = best.unwrap();

    // Relabel so centers are ascending.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| centers[a].partial_cmp(&centers[b]).unwrap());
    let mut rank = vec![0usize; k];
    for (new, &old) in order.iter().enumerate() {
        rank[old] = new;
    }
    let centers_sorted: Vec<f64> = order.iter().map(|&o| centers[o]).collect();
    let memb_sorted: Vec<usize> = memb.iter().map(|&c| rank[c]).collect();
    Ok((memb_sorted, centers_sorted))
}

fn median(values: &mut Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Full clustering stage: preliminary map → region medians → k-means →
/// memberships propagated from regions to vertices.
pub fn build_clustering(
    series: &[Vec<f64>],
    design: &DesignMatrix,
    parcellation: &Parcellation,
    n_clusters: usize,
    levels: usize,
    filter: Filter,
    seed: u64,
) -> Result<HurstClustering> {
    if parcellation.n_vertices() != series.len() {
        return Err(Error::dims(format!(
            "parcellation covers {} vertices, data has {}",
            parcellation.n_vertices(),
            series.len()
        )));
    }
    let preliminary = preliminary_hurst_map(series, design, levels, filter)?;
    let mut region_values: Vec<Vec<f64>> = vec![Vec::new(); parcellation.n_regions()];
    for (v, &h) in preliminary.iter().enumerate() {
        region_values[parcellation.region_of(v)].push(h);
    }
    let region_medians: Vec<f64> = region_values.into_iter().map(|mut v| median(&mut v)).collect();
    let (cluster_of_region, initial_hurst) = kmeans_1d(&region_medians, n_clusters, seed)?;
    let cluster_of_vertex: Vec<usize> = (0..series.len())
        .map(|v| cluster_of_region[parcellation.region_of(v)])
        .collect();
    Ok(HurstClustering {
        n_clusters,
        cluster_of_region,
        cluster_of_vertex,
        preliminary,
        region_medians,
        initial_hurst,
    })
}
