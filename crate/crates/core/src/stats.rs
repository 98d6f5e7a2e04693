//! Stylized-fact statistics of return series and the compliance scores and
//! fitness aggregates built on them.
//!
//! Three facts are scored, each on `[0, 1]`:
//!
//! * **tails**: excess kurtosis relative to a reference value,
//!   `clamp(kappa / kappa_ref, 0, 1)`;
//! * **no autocorrelation**: the fraction of return-ACF lags `1..=K` inside
//!   the `±2/√T` noise band;
//! * **clustering**: the mean |return| ACF over lags `1..=K` relative to a
//!   reference, `clamp(mean / rho_ref, 0, 1)`, halved unless the ACF decays
//!   (`rho(1) > rho(K)`).
//!
//! Fitness is reported both as a weighted sum and as the plain product of
//! the three scores. The product is annihilated by any single failing fact;
//! the sum is not.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Log-returns with the number of leading samples that were dropped as burn-in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    pub values: Vec<f64>,
    pub burn_in: usize,
}

impl ReturnSeries {
    /// Series with the first `burn_in` values dropped.
    pub fn trimmed(&self) -> &[f64] {
        &self.values[self.burn_in.min(self.values.len())..]
    }
}

/// `r_t = ln(p_t / p_{t-1})`.
pub fn log_returns(prices: &[f64]) -> Result<ReturnSeries> {
    if prices.len() < 2 {
        return Err(Error::InvalidInput("need at least two prices".into()));
    }
    if let Some((i, p)) = prices.iter().enumerate().find(|(_, p)| !(**p > 0.0 && p.is_finite())) {
        return Err(Error::InvalidInput(format!("price {p} at index {i} is not positive")));
    }
    Ok(ReturnSeries {
        values: prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect(),
        burn_in: 0,
    })
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn central_moments(x: &[f64]) -> (f64, f64) {
    let m = mean(x);
    let n = x.len() as f64;
    let (m2, m4) = x.iter().fold((0.0, 0.0), |(s2, s4), v| {
        let d2 = (v - m) * (v - m);
        (s2 + d2, s4 + d2 * d2)
    });
    (m2 / n, m4 / n)
}

/// Biased-moment excess kurtosis `m4 / m2^2 - 3`.
pub fn excess_kurtosis(x: &[f64]) -> Result<f64> {
    if x.len() < 4 {
        return Err(Error::InvalidInput("kurtosis needs at least 4 values".into()));
    }
    let (m2, m4) = central_moments(x);
    if m2 <= 0.0 || !m2.is_finite() {
        return Err(Error::Degenerate("zero variance".into()));
    }
    Ok(m4 / (m2 * m2) - 3.0)
}

/// Sample autocorrelation `rho(tau)` for `tau = 1..=max_lag`.
pub fn acf(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if x.len() <= max_lag {
        return Err(Error::InvalidInput(format!(
            "series of length {} too short for lag {max_lag}",
            x.len()
        )));
    }
    let m = mean(x);
    let d: Vec<f64> = x.iter().map(|v| v - m).collect();
    let denom: f64 = d.iter().map(|v| v * v).sum();
    if denom <= 0.0 || !denom.is_finite() {
        return Err(Error::Degenerate("zero variance".into()));
    }
    Ok((1..=max_lag)
        .map(|lag| d.iter().zip(&d[lag..]).map(|(a, b)| a * b).sum::<f64>() / denom)
        .collect())
}

/// Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput("series lengths differ".into()));
    }
    if x.len() < 2 {
        return Err(Error::InvalidInput("need at least two points".into()));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::Degenerate("constant input".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Correlation of traded volume with absolute return.
pub fn volume_volatility_corr(volume: &[f64], returns: &[f64]) -> Result<f64> {
    let abs: Vec<f64> = returns.iter().map(|r| r.abs()).collect();
    pearson(volume, &abs)
}

/// Statistics behind the three scored facts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StylizedFactReport {
    pub excess_kurtosis: f64,
    pub return_acf: Vec<f64>,
    pub abs_return_acf: Vec<f64>,
    pub volume_volatility_corr: Option<f64>,
    pub sample_size: usize,
    /// Half-width of the ±2/√T noise band.
    pub noise_band: f64,
}

impl StylizedFactReport {
    /// Computes the report for `returns`. Volume is optional; a degenerate
    /// volume stream only drops the correlation, it does not fail the report.
    pub fn compute(returns: &[f64], volume: Option<&[f64]>, max_lag: usize) -> Result<Self> {
        if let Some(bad) = returns.iter().find(|r| !r.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite return {bad}")));
        }
        let abs: Vec<f64> = returns.iter().map(|r| r.abs()).collect();
        let n = returns.len();
        Ok(Self {
            excess_kurtosis: excess_kurtosis(returns)?,
            return_acf: acf(returns, max_lag)?,
            abs_return_acf: acf(&abs, max_lag)?,
            volume_volatility_corr: volume.and_then(|v| volume_volatility_corr(v, returns).ok()),
            sample_size: n,
            noise_band: 2.0 / (n as f64).sqrt(),
        })
    }

    /// Fraction of return-ACF lags with `|rho| <= k/√T`.
    pub fn return_acf_inside(&self, sigmas: f64) -> f64 {
        let band = sigmas / (self.sample_size as f64).sqrt();
        let inside = self.return_acf.iter().filter(|r| r.abs() <= band).count();
        inside as f64 / self.return_acf.len() as f64
    }
}

/// Scoring conventions. The defaults are this crate's choices, not
/// published constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScoringConfig {
    pub kappa_ref: f64,
    pub rho_ref: f64,
    pub max_lag: usize,
    /// Noise band multiplier for the no-autocorrelation score.
    pub band_sigmas: f64,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self {
            kappa_ref: 3.0,
            rho_ref: 0.1,
            max_lag: 20,
            band_sigmas: 2.0,
        }
    }
}

impl ScoringConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa_ref > 0.0) {
            return Err(Error::config("kappa_ref", "must be > 0"));
        }
        if !(self.rho_ref > 0.0) {
            return Err(Error::config("rho_ref", "must be > 0"));
        }
        if self.max_lag < 2 {
            return Err(Error::config("max_lag", "must be >= 2"));
        }
        if !(self.band_sigmas > 0.0) {
            return Err(Error::config("band_sigmas", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplianceScores {
    pub tails: f64,
    pub no_autocorr: f64,
    pub clustering: f64,
    pub degenerate: bool,
}

impl ComplianceScores {
    pub fn degenerate() -> Self {
        Self {
            tails: 0.0,
            no_autocorr: 0.0,
            clustering: 0.0,
            degenerate: true,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.tails, self.no_autocorr, self.clustering]
    }

    pub fn min(&self) -> f64 {
        self.as_array().into_iter().fold(f64::INFINITY, f64::min)
    }
}

/// Scores a report. A missing report (the series was degenerate) scores zero
/// on every fact and carries the degeneracy flag.
pub fn compliance_scores(report: Option<&StylizedFactReport>, cfg: &ScoringConfig) -> ComplianceScores {
    let Some(report) = report else {
        return ComplianceScores::degenerate();
    };
    let k = cfg.max_lag.min(report.return_acf.len()).min(report.abs_return_acf.len());
    if k == 0 {
        return ComplianceScores::degenerate();
    }
    let tails = (report.excess_kurtosis / cfg.kappa_ref).clamp(0.0, 1.0);
    let band = cfg.band_sigmas / (report.sample_size as f64).sqrt();
    let inside = report.return_acf[..k].iter().filter(|r| r.abs() <= band).count();
    let no_autocorr = inside as f64 / k as f64;
    let abs_acf = &report.abs_return_acf[..k];
    let level = (mean(abs_acf) / cfg.rho_ref).clamp(0.0, 1.0);
    let decay = if abs_acf[0] > abs_acf[k - 1] { 1.0 } else { 0.5 };
    ComplianceScores {
        tails: if tails.is_nan() { 0.0 } else { tails },
        no_autocorr,
        clustering: if level.is_nan() { 0.0 } else { level * decay },
        degenerate: false,
    }
}

/// Non-negative weights summing to one, in (tails, no-autocorr, clustering)
/// order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weights(pub [f64; 3]);

impl Default for Weights {
    fn default() -> Self {
        Weights([1.0 / 3.0; 3])
    }
}

impl Weights {
    pub fn new(w: [f64; 3]) -> Result<Self> {
        if w.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::config("weights", "must be finite and >= 0"));
        }
        if (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::config("weights", "must sum to 1"));
        }
        Ok(Weights(w))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitnessScore {
    pub scores: ComplianceScores,
    pub weights: Weights,
    pub fitness_sum: f64,
    pub fitness_product: f64,
}

pub fn fitness(scores: ComplianceScores, weights: Weights) -> FitnessScore {
    let s = scores.as_array();
    FitnessScore {
        scores,
        weights,
        fitness_sum: s.iter().zip(weights.0).map(|(s, w)| s * w).sum(),
        fitness_product: s.iter().product(),
    }
}

/// Report (when the series is usable), scores and fitness of one return series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub report: Option<StylizedFactReport>,
    pub fitness: FitnessScore,
    /// Why the report could not be computed, if it could not.
    pub degeneracy: Option<String>,
}

/// Report, scores and fitness in one call. Never fails: degenerate series
/// produce flagged zero scores.
pub fn evaluate(returns: &[f64], volume: Option<&[f64]>, cfg: &ScoringConfig, weights: Weights) -> Evaluation {
    match StylizedFactReport::compute(returns, volume, cfg.max_lag) {
        Ok(report) => {
            let scores = compliance_scores(Some(&report), cfg);
            Evaluation {
                report: Some(report),
                fitness: fitness(scores, weights),
                degeneracy: None,
            }
        }
        Err(e) => Evaluation {
            report: None,
            fitness: fitness(ComplianceScores::degenerate(), weights),
            degeneracy: Some(e.to_string()),
        },
    }
}

/// Equal-width histogram over `[min, max]`. Returns `bins + 1` edges and
/// `bins` counts.
pub fn histogram(x: &[f64], bins: usize) -> (Vec<f64>, Vec<u64>) {
    let bins = bins.max(1);
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if x.is_empty() {
        return (vec![0.0; bins + 1], vec![0; bins]);
    }
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0; bins];
    for v in x {
        let i = (((v - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    (edges, counts)
}

/// Data behind a four-panel stylized-facts figure: price path, return
/// histogram, return ACF and |return| ACF.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactPanels {
    pub prices: Vec<f64>,
    pub hist_edges: Vec<f64>,
    pub hist_counts: Vec<u64>,
    pub return_acf: Vec<f64>,
    pub abs_return_acf: Vec<f64>,
}

impl FactPanels {
    pub fn new(prices: &[f64], returns: &[f64], report: &StylizedFactReport, bins: usize) -> Self {
        let (hist_edges, hist_counts) = histogram(returns, bins);
        Self {
            prices: prices.to_vec(),
            hist_edges,
            hist_counts,
            return_acf: report.return_acf.clone(),
            abs_return_acf: report.abs_return_acf.clone(),
        }
    }

    /// Writes `panel_prices.csv`, `panel_histogram.csv`, `panel_acf.csv` and
    /// `panel_abs_acf.csv` into `dir`. Returns the paths written.
    pub fn write_csvs(&self, dir: &std::path::Path) -> Result<Vec<std::path::PathBuf>> {
        let mut written = Vec::new();
        let mut emit = |name: &str, header: &[&str], rows: Vec<Vec<String>>| -> Result<()> {
            let path = dir.join(name);
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(header)?;
            for row in rows {
                w.write_record(&row)?;
            }
            w.flush()?;
            written.push(path);
            Ok(())
        };
        emit(
            "panel_prices.csv",
            &["t", "price"],
            self.prices.iter().enumerate().map(|(t, p)| vec![t.to_string(), p.to_string()]).collect(),
        )?;
        emit(
            "panel_histogram.csv",
            &["bin_low", "bin_high", "count"],
            self.hist_counts
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    vec![
                        self.hist_edges[i].to_string(),
                        self.hist_edges[i + 1].to_string(),
                        c.to_string(),
                    ]
                })
                .collect(),
        )?;
        for (name, series) in [("panel_acf.csv", &self.return_acf), ("panel_abs_acf.csv", &self.abs_return_acf)] {
            emit(
                name,
                &["lag", "acf"],
                series
                    .iter()
                    .enumerate()
                    .map(|(i, r)| vec![(i + 1).to_string(), r.to_string()])
                    .collect(),
            )?;
        }
        Ok(written)
    }
}

/// Serializes any report-like value as pretty JSON.
pub fn write_json<W: Write, T: Serialize>(out: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(out, value)?;
    Ok(())
}
