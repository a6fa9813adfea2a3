//! Orthonormal discrete wavelet transform and slope-based Hurst estimation.
//!
//! The pyramid algorithm with periodic boundary wrapping keeps the transform
//! exactly orthonormal on power-of-two lengths, so energy is preserved and
//! the inverse is exact up to floating point. The Hurst parameter of a
//! long-memory series is read off the slope of `log2(level variance)` against
//! level: `log2(S_dj) = γ j + O(1)` with `γ = 2H − 1`.

use crate::error::{Error, Result};

/// Orthonormal filter family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Filter {
    /// 2-tap Haar filter.
    Haar,
    /// Daubechies extremal-phase filter with 4 vanishing moments (8 taps).
    /// The conventional choice for decorrelating fractional Gaussian noise.
    Db4,
}

impl Filter {
    /// Low-pass (scaling) coefficients; sum √2, unit norm.
    pub fn lowpass(&self) -> &'static [f64] {
        match self {
            Filter::Haar => &HAAR,
            Filter::Db4 => &DB4,
        }
    }

    /// Quadrature-mirror high-pass coefficients `g_m = (−1)^m h_{L−1−m}`.
    pub fn highpass(&self) -> Vec<f64> {
        let h = self.lowpass();
        let l = h.len();
        (0..l)
            .map(|m| if m % 2 == 0 { h[l - 1 - m] } else { -h[l - 1 - m] })
            .collect()
    }
}

const HAAR: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];

const DB4: [f64; 8] = [
    0.230_377_813_308_896_5,
    0.714_846_570_552_915_6,
    0.630_880_767_929_858_9,
    -0.027_983_769_416_859_854,
    -0.187_034_811_719_093_08,
    0.030_841_381_835_560_764,
    0.032_883_011_666_885_2,
    -0.010_597_401_785_069_032,
];

/// Output of [`dwt`]: detail coefficients per level (finest first) plus the
/// coarsest-level approximation coefficients.
#[derive(Debug, Clone)]
pub struct WaveletDecomposition {
    /// `detail[j-1]` holds level-`j` coefficients, length `n / 2^j`.
    pub detail: Vec<Vec<f64>>,
    /// Approximation coefficients at the coarsest level, length `n / 2^J`.
    pub approx: Vec<f64>,
    pub filter: Filter,
    /// Transformed length `n` (a power of two).
    pub original_length: usize,
}

impl WaveletDecomposition {
    pub fn levels(&self) -> usize {
        self.detail.len()
    }

    /// Total coefficient count must equal the input length.
    pub fn coefficient_count(&self) -> usize {
        self.detail.iter().map(Vec::len).sum::<usize>() + self.approx.len()
    }

    /// Unbiased sample variance of each detail level, finest first.
    pub fn detail_variances(&self) -> Vec<f64> {
        self.detail.iter().map(|d| sample_variance(d)).collect()
    }

    fn check_shape(&self) -> Result<()> {
        let n = self.original_length;
        if !n.is_power_of_two() {
            return Err(Error::dims(format!("decomposition length {n} not a power of two")));
        }
        for (i, d) in self.detail.iter().enumerate() {
            let expect = n >> (i + 1);
            if d.len() != expect {
                return Err(Error::dims(format!(
                    "level {} has {} coefficients, expected {expect}",
                    i + 1,
                    d.len()
                )));
            }
        }
        if self.approx.len() != n >> self.detail.len() {
            return Err(Error::dims(format!(
                "approximation has {} coefficients, expected {}",
                self.approx.len(),
                n >> self.detail.len()
            )));
        }
        Ok(())
    }
}

fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
}

/// Pyramid decomposition of a power-of-two-length series into `levels`
/// detail bands and one approximation band.
pub fn dwt(series: &[f64], levels: usize, filter: Filter) -> Result<WaveletDecomposition> {
    let n = series.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::dims(format!(
            "series length {n} is not a power of two; pad first"
        )));
    }
    let max_levels = n.trailing_zeros() as usize;
    if levels < 1 || levels > max_levels {
        return Err(Error::invalid(format!(
            "levels must lie in 1..={max_levels} for length {n}, got {levels}"
        )));
    }

    let h = filter.lowpass();
    let g = filter.highpass();
    let taps = h.len();

    let mut approx = series.to_vec();
    let mut detail = Vec::with_capacity(levels);
    for _ in 0..levels {
        let len = approx.len();
        let half = len / 2;
        let mut next = vec![0.0; half];
        let mut d = vec![0.0; half];
        for k in 0..half {
            let mut a_acc = 0.0;
            let mut d_acc = 0.0;
            for m in 0..taps {
                let x = approx[(2 * k + m) % len];
                a_acc += h[m] * x;
                d_acc += g[m] * x;
            }
            next[k] = a_acc;
            d[k] = d_acc;
        }
        detail.push(d);
        approx = next;
    }

    Ok(WaveletDecomposition {
        detail,
        approx,
        filter,
        original_length: n,
    })
}

/// Exact inverse of [`dwt`].
pub fn idwt(decomp: &WaveletDecomposition) -> Result<Vec<f64>> {
    decomp.check_shape()?;
    let h = decomp.filter.lowpass();
    let g = decomp.filter.highpass();
    let taps = h.len();

    let mut approx = decomp.approx.clone();
    for d in decomp.detail.iter().rev() {
        let half = approx.len();
        if d.len() != half {
            return Err(Error::dims("detail/approximation length mismatch"));
        }
        let len = 2 * half;
        let mut prev = vec![0.0; len];
        for k in 0..half {
            for m in 0..taps {
                prev[(2 * k + m) % len] += h[m] * approx[k] + g[m] * d[k];
            }
        }
        approx = prev;
    }
    Ok(approx)
}

/// Reflect the series at its end boundary up to the next power of two.
/// Returns the padded series and the original length.
pub fn pad_to_pow2(series: &[f64]) -> Result<(Vec<f64>, usize)> {
    let n = series.len();
    if n == 0 {
        return Err(Error::invalid("cannot pad an empty series"));
    }
    let target = n.next_power_of_two();
    let mut out = series.to_vec();
    for i in n..target {
        // Mirror including the endpoint: x_{n-1}, x_{n-2}, ...
        out.push(series[2 * n - 1 - i]);
    }
    Ok((out, n))
}

/// Slope-based Hurst estimate from per-level detail variances.
///
/// Ordinary least squares of `log2(variance of detail_j)` on `j`, restricted
/// to levels with at least `min_coeffs` coefficients (coarse levels have too
/// few for a stable variance). Returns `(Ĥ, γ̂)` with `Ĥ = (γ̂ + 1)/2`
/// clamped to (0.01, 0.99).
pub fn estimate_hurst_slope(
    decomp: &WaveletDecomposition,
    min_coeffs: usize,
) -> Result<(f64, f64)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, d) in decomp.detail.iter().enumerate() {
        if d.len() >= min_coeffs {
            let v = sample_variance(d);
            if v > 0.0 {
                xs.push((i + 1) as f64);
                ys.push(v.log2());
            }
        }
    }
    if xs.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least two levels with {min_coeffs}+ detail coefficients, found {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let gamma_hat = sxy / sxx;
    let hurst_hat = ((gamma_hat + 1.0) / 2.0).clamp(0.01, 0.99);
    Ok((hurst_hat, gamma_hat))
}
