//! Box-counting dimension and multifractal spectra of time series.
//!
//! A series is turned into a measure on `[0, 1]` by binning its absolute
//! increments into `2^m` dyadic boxes and normalizing. The partition
//! function `Z(q, L) = sum_i p_i(L)^q` over boxes of size `L` (empty boxes
//! excluded) scales as `L^tau(q)`. The singularity spectrum is read off
//! directly from the `q`-weighted measures `mu_i = p_i^q / Z(q, L)`:
//! `alpha(q)` is the slope of `sum mu_i ln p_i` against `ln L` and `f(q)` the
//! slope of `sum mu_i ln mu_i`, so no Legendre transform is taken.
//!
//! Every fit is a least-squares line through dyadic scales. Multiplying a
//! series by a positive constant leaves the measure, and so every exponent,
//! unchanged.
//!
//! ```
//! use marketlab::fractal::{chhabra_jensen, default_q_grid};
//!
//! let uniform = vec![1.0 / 256.0; 256];
//! let s = chhabra_jensen(&uniform, &default_q_grid()).unwrap();
//! for i in 0..s.q.len() {
//!     assert!((s.alpha[i] - 1.0).abs() < 1e-12 && (s.f[i] - 1.0).abs() < 1e-12);
//! }
//! ```

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Most recent samples kept for multifractal analysis.
pub const ANALYSIS_WINDOW: usize = 6546;

/// `q = -5, -4.5, ..., 5`.
pub fn default_q_grid() -> Vec<f64> {
    (-10..=10).map(|i| i as f64 / 2.0).collect()
}

/// Least-squares line through `(x, y)` with the scales it came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    /// Box sizes `L`, strictly decreasing.
    pub scales: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub residuals: Vec<f64>,
}

impl ScalingFit {
    fn new(scales: Vec<f64>, x: &[f64], y: &[f64]) -> Self {
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let residuals: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - (intercept + slope * a)).collect();
        let sse: f64 = residuals.iter().map(|r| r * r).sum();
        // a perfectly flat response is a perfect fit
        let r2 = if syy <= 1e-20 { 1.0 } else { 1.0 - sse / syy };
        Self {
            scales,
            slope,
            intercept,
            r2,
            residuals,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDimension {
    pub dimension: f64,
    /// Fit of `ln N(L)` against `ln(1/L)`.
    pub fit: ScalingFit,
    /// Constant series; the dimension is 1 by convention.
    pub degenerate: bool,
}

fn check_finite(series: &[f64]) -> Result<()> {
    match series.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::InvalidInput(format!("non-finite value at index {i}"))),
        None => Ok(()),
    }
}

/// Box-counting dimension of the graph of `series`.
///
/// The graph is scaled into the unit square and joined point to point. On a
/// grid of side `L = 2^-k`, `k = 1..=floor(log2 n) - 2`, the graph inside one
/// column is covered by `max(1, range / L)` boxes, its vertical extent over
/// the box side.
pub fn box_count_dimension(series: &[f64]) -> Result<BoxDimension> {
    let n = series.len();
    if n < 64 {
        return Err(Error::InvalidInput(format!("need at least 64 points, got {n}")));
    }
    check_finite(series)?;
    let k_max = n.ilog2() as usize - 2;
    let lo = series.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let degenerate = hi == lo;
    let y: Vec<f64> = if degenerate {
        vec![0.0; n]
    } else {
        series.iter().map(|v| (v - lo) / (hi - lo)).collect()
    };
    let seg = 1.0 / (n - 1) as f64;

    let (mut scales, mut xs, mut ys) = (Vec::new(), Vec::new(), Vec::new());
    for k in 1..=k_max {
        let cols = 1usize << k;
        let side = 1.0 / cols as f64;
        let mut count = 0.0;
        for c in 0..cols {
            let (a, b) = (c as f64 * side, (c + 1) as f64 * side);
            let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
            let mut take = |v: f64| {
                ymin = ymin.min(v);
                ymax = ymax.max(v);
            };
            take(interp(&y, a / seg));
            take(interp(&y, b / seg));
            let first = (a / seg).ceil() as usize;
            let last = ((b / seg).floor() as usize).min(n - 1);
            for &v in &y[first.min(n - 1)..=last.max(first.min(n - 1))] {
                take(v);
            }
            count += ((ymax - ymin) / side).max(1.0);
        }
        scales.push(side);
        xs.push((cols as f64).ln());
        ys.push(count.ln());
    }
    let fit = ScalingFit::new(scales, &xs, &ys);
    Ok(BoxDimension {
        dimension: if degenerate { 1.0 } else { fit.slope },
        fit,
        degenerate,
    })
}

/// Linear interpolation of `y` at fractional index `t`.
fn interp(y: &[f64], t: f64) -> f64 {
    let t = t.clamp(0.0, (y.len() - 1) as f64);
    let i = (t.floor() as usize).min(y.len() - 2);
    let w = t - i as f64;
    y[i] * (1.0 - w) + y[i + 1] * w
}

/// Normalized absolute-increment mass in each of `n_bins` equal boxes.
/// Increment `i` (between samples `i` and `i + 1`) falls in box
/// `floor(i * n_bins / (n - 1))`.
pub fn series_to_measure(series: &[f64], n_bins: usize) -> Result<Vec<f64>> {
    if !n_bins.is_power_of_two() {
        return Err(Error::InvalidInput(format!("n_bins {n_bins} is not a power of two")));
    }
    if series.len() <= n_bins {
        return Err(Error::InvalidInput(format!(
            "series of length {} too short for {n_bins} bins",
            series.len()
        )));
    }
    check_finite(series)?;
    let m = series.len() - 1;
    let mut p = vec![0.0; n_bins];
    for (i, w) in series.windows(2).enumerate() {
        p[i * n_bins / m] += (w[1] - w[0]).abs();
    }
    let total: f64 = p.iter().sum();
    if total <= 0.0 {
        return Err(Error::Degenerate("all increments are zero".into()));
    }
    p.iter_mut().for_each(|v| *v /= total);
    Ok(p)
}

/// Box masses at `L = 2^-j` for `j = K, K-1, ..., 1` where the measure has
/// `2^K` boxes; finest first.
fn coarsenings(measure: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = measure.len();
    if !n.is_power_of_two() || n < 16 {
        return Err(Error::InvalidInput(format!(
            "measure length {n} must be a power of two >= 16"
        )));
    }
    check_finite(measure)?;
    if measure.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidInput("negative mass".into()));
    }
    let total: f64 = measure.iter().sum();
    if total <= 0.0 {
        return Err(Error::Degenerate("measure has no mass".into()));
    }
    let mut levels = vec![measure.iter().map(|v| v / total).collect::<Vec<_>>()];
    while levels.last().unwrap().len() > 2 {
        let prev = levels.last().unwrap();
        levels.push(prev.chunks(2).map(|c| c[0] + c[1]).collect());
    }
    Ok(levels)
}

/// Per-`q` fits of `ln Z(q, L)` against `ln L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauSpectrum {
    pub q: Vec<f64>,
    pub tau: Vec<f64>,
    pub fits: Vec<ScalingFit>,
}

pub fn tau_spectrum(measure: &[f64], q_grid: &[f64]) -> Result<TauSpectrum> {
    let levels = coarsenings(measure)?;
    let scales: Vec<f64> = levels.iter().map(|l| 1.0 / l.len() as f64).collect();
    let ln_l: Vec<f64> = scales.iter().map(|s| s.ln()).collect();
    let fits: Vec<ScalingFit> = q_grid
        .iter()
        .map(|&q| {
            let ln_z: Vec<f64> = levels.iter().map(|l| partition(l, q).ln()).collect();
            ScalingFit::new(scales.clone(), &ln_l, &ln_z)
        })
        .collect();
    Ok(TauSpectrum {
        q: q_grid.to_vec(),
        tau: fits.iter().map(|f| f.slope).collect(),
        fits,
    })
}

fn partition(p: &[f64], q: f64) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|v| v.powf(q)).sum()
}

/// Direct `(alpha(q), f(alpha(q)))` spectrum with `tau(q)` alongside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultifractalSpectrum {
    pub q: Vec<f64>,
    pub tau: Vec<f64>,
    pub alpha: Vec<f64>,
    pub f: Vec<f64>,
    /// Smallest R² of the three fits at each `q`.
    pub r2: Vec<f64>,
}

impl MultifractalSpectrum {
    /// Points whose fits all reach `min_r2`.
    pub fn reliable(&self, min_r2: f64) -> Vec<bool> {
        self.r2.iter().map(|&r| r >= min_r2).collect()
    }

    /// `q,tau,alpha,f_alpha,r2`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["q", "tau", "alpha", "f_alpha", "r2"])?;
        for i in 0..self.q.len() {
            w.write_record([
                self.q[i].to_string(),
                self.tau[i].to_string(),
                self.alpha[i].to_string(),
                self.f[i].to_string(),
                self.r2[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn chhabra_jensen(measure: &[f64], q_grid: &[f64]) -> Result<MultifractalSpectrum> {
    let tau = tau_spectrum(measure, q_grid)?;
    let levels = coarsenings(measure)?;
    let scales: Vec<f64> = levels.iter().map(|l| 1.0 / l.len() as f64).collect();
    let ln_l: Vec<f64> = scales.iter().map(|s| s.ln()).collect();
    let (mut alpha, mut f, mut r2) = (Vec::new(), Vec::new(), Vec::new());
    for (qi, &q) in q_grid.iter().enumerate() {
        let (mut a_y, mut f_y) = (Vec::new(), Vec::new());
        for l in &levels {
            let z = partition(l, q);
            let (mut sa, mut sf) = (0.0, 0.0);
            for &p in l.iter().filter(|&&v| v > 0.0) {
                let mu = p.powf(q) / z;
                if mu > 0.0 {
                    sa += mu * p.ln();
                    sf += mu * mu.ln();
                }
            }
            a_y.push(sa);
            f_y.push(sf);
        }
        let fa = ScalingFit::new(scales.clone(), &ln_l, &a_y);
        let ff = ScalingFit::new(scales.clone(), &ln_l, &f_y);
        alpha.push(fa.slope);
        f.push(ff.slope);
        r2.push(tau.fits[qi].r2.min(fa.r2).min(ff.r2));
    }
    Ok(MultifractalSpectrum {
        q: tau.q,
        tau: tau.tau,
        alpha,
        f,
        r2,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Monofractal,
    Multifractal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultifractalityTest {
    pub verdict: Verdict,
    /// Largest absolute residual of the best line through `(q, tau(q))`.
    pub statistic: f64,
    pub threshold: f64,
}

pub const DEFAULT_NONLINEARITY_THRESHOLD: f64 = 0.05;

pub fn multifractality_test(q: &[f64], tau: &[f64], threshold: f64) -> Result<MultifractalityTest> {
    if q.len() != tau.len() || q.len() < 9 {
        return Err(Error::InvalidInput(format!(
            "need at least 9 matching (q, tau) points, got {} and {}",
            q.len(),
            tau.len()
        )));
    }
    let fit = ScalingFit::new(Vec::new(), q, tau);
    let statistic = fit.residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(MultifractalityTest {
        verdict: if statistic > threshold {
            Verdict::Multifractal
        } else {
            Verdict::Monofractal
        },
        statistic,
        threshold,
    })
}

/// Root-mean-square Euclidean distance between matched `(alpha, f)` points,
/// over the `q` values reliable in both spectra.
pub fn spectrum_distance(a: &MultifractalSpectrum, b: &MultifractalSpectrum, min_r2: f64) -> Result<f64> {
    if a.q != b.q {
        return Err(Error::InvalidInput("spectra are on different q grids".into()));
    }
    let (ra, rb) = (a.reliable(min_r2), b.reliable(min_r2));
    let d: Vec<f64> = (0..a.q.len())
        .filter(|&i| ra[i] && rb[i])
        .map(|i| (a.alpha[i] - b.alpha[i]).powi(2) + (a.f[i] - b.f[i]).powi(2))
        .collect();
    if d.is_empty() {
        return Err(Error::Degenerate("no q value is reliable in both spectra".into()));
    }
    Ok((d.iter().sum::<f64>() / d.len() as f64).sqrt())
}

/// The most recent `2^m + 1` samples, `2^m + 1 <= min(len, max_len)`, so the
/// increments split evenly into dyadic boxes.
pub fn dyadic_window(series: &[f64], max_len: usize) -> Result<&[f64]> {
    let avail = series.len().min(max_len);
    if avail < 65 {
        return Err(Error::InvalidInput(format!(
            "need at least 65 samples, got {}",
            series.len()
        )));
    }
    let len = (1usize << (avail - 1).ilog2()) + 1;
    Ok(&series[series.len() - len..])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractalConfig {
    pub q_grid: Vec<f64>,
    pub window: usize,
    /// Increments per box at the finest scale of the measure.
    pub samples_per_box: usize,
    pub min_r2: f64,
    pub threshold: f64,
}

impl Default for FractalConfig {
    fn default() -> Self {
        Self {
            q_grid: default_q_grid(),
            window: ANALYSIS_WINDOW,
            samples_per_box: 32,
            min_r2: 0.9,
            threshold: DEFAULT_NONLINEARITY_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractalReport {
    /// Samples analysed, after windowing.
    pub samples: usize,
    pub box_dimension: BoxDimension,
    pub spectrum: MultifractalSpectrum,
    pub test: MultifractalityTest,
}

/// Box dimension, spectrum and verdict for the dyadic window of `series`.
pub fn analyze_series(series: &[f64], cfg: &FractalConfig) -> Result<FractalReport> {
    if !cfg.samples_per_box.is_power_of_two() || cfg.samples_per_box < 4 {
        return Err(Error::config("samples_per_box", "must be a power of two >= 4"));
    }
    let w = dyadic_window(series, cfg.window)?;
    let boxes = (w.len() - 1) / cfg.samples_per_box;
    if boxes < 16 {
        return Err(Error::InvalidInput(format!(
            "{} samples give only {boxes} boxes of {}",
            w.len(),
            cfg.samples_per_box
        )));
    }
    let measure = series_to_measure(w, boxes)?;
    let spectrum = chhabra_jensen(&measure, &cfg.q_grid)?;
    let test = multifractality_test(&spectrum.q, &spectrum.tau, cfg.threshold)?;
    Ok(FractalReport {
        samples: w.len(),
        box_dimension: box_count_dimension(w)?,
        spectrum,
        test,
    })
}
