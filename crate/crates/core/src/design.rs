//! Stimulus time courses, the canonical hemodynamic response, and the GLM
//! design matrix.
//!
//! Task regressors are the convolution of an on/off stimulus indicator with
//! the canonical hemodynamic response function,
//! `x_k(t) = ∫ h(u) s_k(t − u) du`, evaluated on the TR sampling grid.

use std::sync::LazyLock;

use crate::error::{Error, Result};

/// HRF support truncation in seconds. The response has essentially returned
/// to baseline after 15–20 s; 32 s leaves a wide margin.
pub const HRF_SUPPORT_SECS: f64 = 32.0;

/// Oversampling factor for the convolution grid before decimating to TR.
const OVERSAMPLE: usize = 16;

// Double-gamma shape: response gamma peaking at 5 s, undershoot gamma
// peaking at 12 s with weight 1/6, unit dispersions.
const RESPONSE_SHAPE: f64 = 6.0;
const UNDERSHOOT_SHAPE: f64 = 13.0;
const UNDERSHOOT_RATIO: f64 = 1.0 / 6.0;

fn gamma_pdf_unit_scale(t: f64, shape: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    (((shape - 1.0) * t.ln()) - t - statrs::function::gamma::ln_gamma(shape)).exp()
}

fn hrf_unnormalized(t: f64) -> f64 {
    gamma_pdf_unit_scale(t, RESPONSE_SHAPE)
        - UNDERSHOOT_RATIO * gamma_pdf_unit_scale(t, UNDERSHOOT_SHAPE)
}

static HRF_PEAK: LazyLock<f64> = LazyLock::new(|| {
    let mut peak = 0.0f64;
    let mut t = 0.0;
    while t <= HRF_SUPPORT_SECS {
        peak = peak.max(hrf_unnormalized(t));
        t += 1.0 / 256.0;
    }
    peak
});

/// Canonical double-gamma hemodynamic response, normalized to peak value 1.
/// Zero at onset, peak near 5 s, undershoot afterwards, back to baseline
/// within ~25 s.
pub fn canonical_hrf(t: f64) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    hrf_unnormalized(t) / *HRF_PEAK
}

/// On/off stimulus schedule for one task, before HRF convolution.
#[derive(Debug, Clone)]
pub struct StimulusCourse {
    /// Active intervals as (onset, duration) in seconds.
    pub intervals: Vec<(f64, f64)>,
    /// Sampling interval (TR) in seconds.
    pub tr: f64,
    /// Number of samples T.
    pub len: usize,
}

impl StimulusCourse {
    pub fn new(intervals: Vec<(f64, f64)>, tr: f64, len: usize) -> Result<Self> {
        if !(tr > 0.0) {
            return Err(Error::invalid("TR must be positive"));
        }
        if len == 0 {
            return Err(Error::invalid("stimulus length must be positive"));
        }
        for &(onset, dur) in &intervals {
            if onset < 0.0 || dur < 0.0 {
                return Err(Error::invalid("stimulus intervals must be nonnegative"));
            }
        }
        Ok(StimulusCourse { intervals, tr, len })
    }

    /// Indicator value at an arbitrary time (1 inside an active interval).
    pub fn indicator(&self, t: f64) -> f64 {
        for &(onset, dur) in &self.intervals {
            if t >= onset && t < onset + dur {
                return 1.0;
            }
        }
        0.0
    }

    /// Indicator sampled on the TR grid.
    pub fn sampled(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.indicator(i as f64 * self.tr)).collect()
    }
}

/// Discrete Riemann approximation of the stimulus–HRF convolution on the TR
/// grid: the stimulus and HRF are evaluated on a 16× oversampled grid,
/// convolved (HRF truncated at [`HRF_SUPPORT_SECS`]), then decimated.
pub fn convolve_design(stim: &StimulusCourse, hrf: impl Fn(f64) -> f64) -> Vec<f64> {
    let dt = stim.tr / OVERSAMPLE as f64;
    let fine_len = stim.len * OVERSAMPLE;
    let kernel_len = (HRF_SUPPORT_SECS / dt).ceil() as usize;
    let kernel: Vec<f64> = (0..kernel_len).map(|m| hrf(m as f64 * dt) * dt).collect();
    let fine_stim: Vec<f64> = (0..fine_len).map(|j| stim.indicator(j as f64 * dt)).collect();

    let mut out = Vec::with_capacity(stim.len);
    for i in 0..stim.len {
        let j = i * OVERSAMPLE;
        let mut acc = 0.0;
        for (m, k) in kernel.iter().enumerate() {
            if m > j {
                break;
            }
            acc += k * fine_stim[j - m];
        }
        out.push(acc);
    }
    out
}

/// Role of a design-matrix column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ColumnRole {
    /// Constant baseline (the k = 0 term).
    Intercept,
    /// Task regressor, 0-based task index.
    Task(usize),
    /// Other nuisance regressor (drift, motion).
    Nuisance,
}

/// Centering/scaling applied to one column by [`standardize_columns`].
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct ColumnScaling {
    pub mean: f64,
    pub sd: f64,
}

/// GLM design: per-column regressors plus their roles.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub t_len: usize,
    pub columns: Vec<Vec<f64>>,
    pub roles: Vec<ColumnRole>,
    /// Populated by [`standardize_columns`]; identity scaling for the
    /// intercept.
    pub scaling: Option<Vec<ColumnScaling>>,
}

impl DesignMatrix {
    pub fn new(columns: Vec<Vec<f64>>, roles: Vec<ColumnRole>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::invalid("design needs at least one column"));
        }
        if columns.len() != roles.len() {
            return Err(Error::dims("one role per design column required"));
        }
        let t_len = columns[0].len();
        if columns.iter().any(|c| c.len() != t_len) {
            return Err(Error::dims("design columns must share a common length"));
        }
        if columns.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("design contains non-finite values"));
        }
        Ok(DesignMatrix { t_len, columns, roles, scaling: None })
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    /// Number of task columns.
    pub fn n_tasks(&self) -> usize {
        self.roles
            .iter()
            .filter(|r| matches!(r, ColumnRole::Task(_)))
            .count()
    }

    /// Column index of task `k`.
    pub fn task_column(&self, k: usize) -> Option<usize> {
        self.roles.iter().position(|r| matches!(r, ColumnRole::Task(i) if *i == k))
    }

    pub fn to_matrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.t_len, self.columns.len(), |i, j| self.columns[j][i])
    }
}

/// Center and scale every non-intercept column to mean 0 and unit sample
/// standard deviation; the applied scalings are recorded so fitted
/// coefficients can be mapped back to the original units.
pub fn standardize_columns(design: &DesignMatrix) -> Result<DesignMatrix> {
    if design.t_len < 2 {
        return Err(Error::invalid("standardization needs T >= 2"));
    }
    let mut columns = Vec::with_capacity(design.columns.len());
    let mut scalings = Vec::with_capacity(design.columns.len());
    for (col, role) in design.columns.iter().zip(&design.roles) {
        if matches!(role, ColumnRole::Intercept) {
            columns.push(col.clone());
            scalings.push(ColumnScaling { mean: 0.0, sd: 1.0 });
            continue;
        }
        let n = col.len() as f64;
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        if var <= 0.0 {
            return Err(Error::invalid(
                "constant task column cannot be standardized".to_string(),
            ));
        }
        let sd = var.sqrt();
        columns.push(col.iter().map(|v| (v - mean) / sd).collect());
        scalings.push(ColumnScaling { mean, sd });
    }
    Ok(DesignMatrix {
        t_len: design.t_len,
        columns,
        roles: design.roles.clone(),
        scaling: Some(scalings),
    })
}

/// Parse a stimulus file: one `onset_s duration_s task_id` row per block,
/// `#` comments and blank lines ignored. Returns (onset, duration, task).
pub fn parse_stimulus_file(text: &str) -> Result<Vec<(f64, f64, usize)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!(
                "stimulus line {}: expected 'onset duration task_id', got {line:?}",
                lineno + 1
            )));
        }
        let onset: f64 = fields[0]
            .parse()
            .map_err(|_| Error::Parse(format!("stimulus line {}: bad onset", lineno + 1)))?;
        let duration: f64 = fields[1]
            .parse()
            .map_err(|_| Error::Parse(format!("stimulus line {}: bad duration", lineno + 1)))?;
        let task: usize = fields[2]
            .parse()
            .map_err(|_| Error::Parse(format!("stimulus line {}: bad task id", lineno + 1)))?;
        out.push((onset, duration, task));
    }
    Ok(out)
}

/// Assemble an intercept-plus-tasks design from per-task stimulus blocks.
pub fn build_design(
    blocks: &[(f64, f64, usize)],
    n_tasks: usize,
    tr: f64,
    t_len: usize,
) -> Result<DesignMatrix> {
    let mut columns = vec![vec![1.0; t_len]];
    let mut roles = vec![ColumnRole::Intercept];
    for k in 0..n_tasks {
        let intervals: Vec<(f64, f64)> = blocks
            .iter()
            .filter(|(_, _, task)| *task == k)
            .map(|&(onset, dur, _)| (onset, dur))
            .collect();
        if intervals.is_empty() {
            return Err(Error::invalid(format!("task {k} has no stimulus blocks")));
        }
        let stim = StimulusCourse::new(intervals, tr, t_len)?;
        columns.push(convolve_design(&stim, canonical_hrf));
        roles.push(ColumnRole::Task(k));
    }
    DesignMatrix::new(columns, roles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hrf_is_zero_at_onset_and_normalized() {
        assert_eq!(canonical_hrf(0.0), 0.0);
        let peak = (0..3000)
            .map(|i| canonical_hrf(i as f64 * 0.01))
            .fold(f64::NEG_INFINITY, f64::max);
        assert_abs_diff_eq!(peak, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn hrf_peaks_between_4_and_6_seconds() {
        let (mut best_t, mut best) = (0.0, f64::NEG_INFINITY);
        let mut t = 0.0;
        while t <= 30.0 {
            let v = canonical_hrf(t);
            if v > best {
                best = v;
                best_t = t;
            }
            t += 0.01;
        }
        assert!((4.0..=6.0).contains(&best_t), "peak at {best_t}");
    }

    #[test]
    fn hrf_has_returned_to_baseline_late() {
        let peak = 1.0;
        assert!(canonical_hrf(30.0).abs() / peak < 0.01);
        let mut t = 25.0;
        while t < 40.0 {
            assert!(canonical_hrf(t).abs() < 0.01, "h({t}) too large");
            t += 0.25;
        }
    }

    #[test]
    fn zero_stimulus_gives_zero_regressor() {
        let stim = StimulusCourse::new(vec![], 1.0, 64).unwrap();
        let x = convolve_design(&stim, canonical_hrf);
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_stimulus_converges_to_hrf_integral() {
        let t_len = 128;
        let stim = StimulusCourse::new(vec![(0.0, 1e9)], 1.0, t_len).unwrap();
        let x = convolve_design(&stim, canonical_hrf);
        // Steady state = Riemann sum of the (truncated) HRF.
        let dt = 1.0 / 16.0;
        let steady: f64 = (0..(32.0 / dt) as usize)
            .map(|m| canonical_hrf(m as f64 * dt) * dt)
            .sum();
        for &v in &x[40..] {
            assert_abs_diff_eq!(v, steady, epsilon = 1e-8);
        }
    }

    #[test]
    fn block_regressor_shape_and_lag() {
        let t_len = 128;
        let stim = StimulusCourse::new(vec![(10.0, 20.0)], 1.0, t_len).unwrap();
        let x = convolve_design(&stim, canonical_hrf);
        // Rises after onset, decays after offset.
        assert!(x[..=10].iter().all(|&v| v.abs() < 1e-12));
        assert!(x[16] > x[12]);
        let peak_idx = x
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert!(x[45] < x[peak_idx]);
        // Lag maximizing cross-correlation with the indicator sits at the
        // hemodynamic delay.
        let s = stim.sampled();
        let mut best = (0usize, f64::NEG_INFINITY);
        for lag in 0..=12usize {
            let c: f64 = (lag..t_len).map(|t| x[t] * s[t - lag]).sum();
            if c > best.1 {
                best = (lag, c);
            }
        }
        assert!(
            (4..=8).contains(&best.0),
            "cross-correlation peak lag {} outside [4, 8] s",
            best.0
        );
    }

    #[test]
    fn convolution_is_linear_and_causal() {
        let t_len = 96;
        let s1 = StimulusCourse::new(vec![(5.0, 10.0)], 1.0, t_len).unwrap();
        let s2 = StimulusCourse::new(vec![(40.0, 8.0)], 1.0, t_len).unwrap();
        let both = StimulusCourse::new(vec![(5.0, 10.0), (40.0, 8.0)], 1.0, t_len).unwrap();
        let x1 = convolve_design(&s1, canonical_hrf);
        let x2 = convolve_design(&s2, canonical_hrf);
        let xb = convolve_design(&both, canonical_hrf);
        for t in 0..t_len {
            assert_abs_diff_eq!(xb[t], x1[t] + x2[t], epsilon = 1e-12);
        }
        // Causality: a late-onset block leaves earlier samples untouched.
        for t in 0..40 {
            assert_abs_diff_eq!(x2[t], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn standardize_basic_cases() {
        let d = DesignMatrix::new(
            vec![vec![1.0; 3], vec![1.0, 2.0, 3.0]],
            vec![ColumnRole::Intercept, ColumnRole::Task(0)],
        )
        .unwrap();
        let s = standardize_columns(&d).unwrap();
        assert_eq!(s.columns[0], vec![1.0; 3]);
        assert_eq!(s.columns[1], vec![-1.0, 0.0, 1.0]);
        let sc = &s.scaling.as_ref().unwrap()[1];
        assert_abs_diff_eq!(sc.mean, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sc.sd, 1.0, epsilon = 1e-15);

        // Idempotent on an already standardized column.
        let again = standardize_columns(&s).unwrap();
        for (a, b) in again.columns[1].iter().zip(&s.columns[1]) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }

        // Arbitrary column ends up mean 0, sd 1.
        let d2 = DesignMatrix::new(
            vec![vec![0.3, -1.2, 4.5, 2.2, 0.0]],
            vec![ColumnRole::Task(0)],
        )
        .unwrap();
        let s2 = standardize_columns(&d2).unwrap();
        let col = &s2.columns[0];
        let mean = col.iter().sum::<f64>() / 5.0;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0).sqrt();
        assert!(mean.abs() < 1e-12);
        assert!((sd - 1.0).abs() < 1e-12);
    }

    #[test]
    fn standardize_rejects_constant_task_column() {
        let d = DesignMatrix::new(vec![vec![2.0; 8]], vec![ColumnRole::Task(0)]).unwrap();
        assert!(standardize_columns(&d).is_err());
    }

    #[test]
    fn stimulus_file_roundtrip() {
        let text = "# onset duration task\n0 20 0\n40.5 20 1\n\n80 20 0\n";
        let rows = parse_stimulus_file(text).unwrap();
        assert_eq!(rows, vec![(0.0, 20.0, 0), (40.5, 20.0, 1), (80.0, 20.0, 0)]);
        assert!(parse_stimulus_file("1 2\n").is_err());
        assert!(parse_stimulus_file("a b c\n").is_err());
    }

    #[test]
    fn build_design_produces_indicator_tasks() {
        let blocks = vec![(0.0, 20.0, 0), (40.0, 20.0, 1)];
        let d = build_design(&blocks, 2, 1.0, 100).unwrap();
        assert_eq!(d.n_columns(), 3);
        assert_eq!(d.n_tasks(), 2);
        assert_eq!(d.task_column(1), Some(2));
        // Stimulus indicator is 0/1 valued on the grid.
        let stim = StimulusCourse::new(vec![(40.0, 20.0)], 1.0, 100).unwrap();
        for v in stim.sampled() {
            assert!(v == 0.0 || v == 1.0);
        }
    }
}
