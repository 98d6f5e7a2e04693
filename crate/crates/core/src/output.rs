//! Per-step simulation output shared by all four models, and its CSV/JSON
//! serialization.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::order_book::{DepthProfile, OrderBook, Tick};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Zim,
    Cont,
    Hybrid,
    Leverage,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Zim => "zim",
            ModelKind::Cont => "cont",
            ModelKind::Hybrid => "hybrid",
            ModelKind::Leverage => "leverage",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "zim" => Ok(ModelKind::Zim),
            "cont" => Ok(ModelKind::Cont),
            "hybrid" => Ok(ModelKind::Hybrid),
            "leverage" => Ok(ModelKind::Leverage),
            other => Err(format!("unknown model '{other}'")),
        }
    }
}

/// Mid-price move caused by one market order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeImpact {
    pub step: u64,
    /// Price of the order's final fill.
    pub price: Tick,
    /// `mid_after - mid_before`, in ticks.
    pub impact: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthSnapshot {
    pub step: u64,
    pub profile: DepthProfile,
}

/// Per-group one-period mark-to-market returns of the threshold model.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupReturns {
    pub population: Vec<f64>,
    pub informed: Vec<f64>,
    pub uninformed: Vec<f64>,
}

impl GroupReturns {
    pub fn cumulative(series: &[f64]) -> f64 {
        series.iter().sum()
    }
}

/// Aligned per-step series. Every per-step vector has one entry per step.
///
/// `price` is the model's headline price: last trade for book models, the
/// impact-rule price for the threshold model. `returns` holds the log-return
/// each model treats as canonical (mid-based for book models).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimOutput {
    pub model: Option<ModelKind>,
    pub seed: u64,
    pub burn_in: usize,
    pub price: Vec<f64>,
    pub best_bid: Vec<Option<Tick>>,
    pub best_ask: Vec<Option<Tick>>,
    pub spread: Vec<Option<Tick>>,
    pub mid: Vec<Option<f64>>,
    pub returns: Vec<f64>,
    pub volume: Vec<u64>,
    /// Steps whose book lacked a quote on one side after the step.
    pub one_sided: Vec<bool>,
    pub impacts: Vec<TradeImpact>,
    pub depth: Vec<DepthSnapshot>,
    pub groups: Option<GroupReturns>,
}

impl SimOutput {
    pub fn new(model: ModelKind, seed: u64, burn_in: usize) -> Self {
        Self {
            model: Some(model),
            seed,
            burn_in,
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    /// Returns after the burn-in window.
    pub fn trimmed_returns(&self) -> &[f64] {
        &self.returns[self.burn_in.min(self.returns.len())..]
    }

    pub fn trimmed_volume(&self) -> &[u64] {
        &self.volume[self.burn_in.min(self.volume.len())..]
    }

    /// Prices after the burn-in window.
    pub fn trimmed_price(&self) -> &[f64] {
        &self.price[self.burn_in.min(self.price.len())..]
    }

    /// Fraction of post-burn-in steps with a one-sided book.
    pub fn one_sided_fraction(&self) -> f64 {
        let tail = &self.one_sided[self.burn_in.min(self.one_sided.len())..];
        if tail.is_empty() {
            return 0.0;
        }
        tail.iter().filter(|&&b| b).count() as f64 / tail.len() as f64
    }

    /// Same series as `other`, ignoring which model produced them.
    pub fn same_series(&self, other: &SimOutput) -> bool {
        let mut a = self.clone();
        a.model = other.model;
        a == *other
    }

    /// Appends one step of book-model output.
    pub(crate) fn record_book_step(&mut self, book: &OrderBook, ret: f64, volume: u64) {
        self.price.push(book.last_trade() as f64);
        self.best_bid.push(book.best_bid());
        self.best_ask.push(book.best_ask());
        self.spread.push(book.spread());
        self.mid.push(book.mid().map(|m| m.as_f64()));
        self.returns.push(ret);
        self.volume.push(volume);
        self.one_sided.push(book.mid().is_none());
    }

    /// Time-averaged depth profile over snapshots taken after the burn-in.
    pub fn mean_depth_profile(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let snaps: Vec<_> = self
            .depth
            .iter()
            .filter(|s| s.step as usize >= self.burn_in)
            .collect();
        let first = snaps.first()?;
        let width = first.profile.bid.len();
        let mut bid = vec![0.0; width];
        let mut ask = vec![0.0; width];
        for s in &snaps {
            for i in 0..width {
                bid[i] += s.profile.bid[i] as f64;
                ask[i] += s.profile.ask[i] as f64;
            }
        }
        let n = snaps.len() as f64;
        bid.iter_mut().chain(ask.iter_mut()).for_each(|v| *v /= n);
        Some((bid, ask))
    }

    /// Mean spread over post-burn-in steps where both sides were quoted.
    pub fn mean_spread(&self) -> Option<f64> {
        let vals: Vec<f64> = self.spread[self.burn_in.min(self.spread.len())..]
            .iter()
            .flatten()
            .map(|&s| s as f64)
            .collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    }

    /// One row per step: `step,price,best_bid,best_ask,spread,mid,return,volume,one_sided`
    /// plus `population_return,informed_return,uninformed_return` when group
    /// series are present. Absent values are empty fields.
    pub fn write_steps_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![
            "step", "price", "best_bid", "best_ask", "spread", "mid", "return", "volume", "one_sided",
        ];
        if self.groups.is_some() {
            header.extend(["population_return", "informed_return", "uninformed_return"]);
        }
        w.write_record(&header)?;
        let opt = |v: Option<Tick>| v.map(|x| x.to_string()).unwrap_or_default();
        for t in 0..self.len() {
            let mut row = vec![
                t.to_string(),
                self.price[t].to_string(),
                opt(self.best_bid[t]),
                opt(self.best_ask[t]),
                opt(self.spread[t]),
                self.mid[t].map(|m| m.to_string()).unwrap_or_default(),
                self.returns[t].to_string(),
                self.volume[t].to_string(),
                (self.one_sided[t] as u8).to_string(),
            ];
            if let Some(g) = &self.groups {
                row.push(g.population[t].to_string());
                row.push(g.informed[t].to_string());
                row.push(g.uninformed[t].to_string());
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Depth snapshots as `step,side,offset,qty`.
    pub fn write_depth_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "side", "offset", "qty"])?;
        for snap in &self.depth {
            for (side, values) in [("BID", &snap.profile.bid), ("ASK", &snap.profile.ask)] {
                for (i, qty) in values.iter().enumerate() {
                    w.write_record([
                        snap.step.to_string(),
                        side.to_string(),
                        (i + 1).to_string(),
                        qty.to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Per-trade impact records as `step,price,impact`.
    pub fn write_impacts_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "price", "impact"])?;
        for i in &self.impacts {
            w.write_record([i.step.to_string(), i.price.to_string(), i.impact.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> SimSummary {
        SimSummary {
            model: self.model,
            seed: self.seed,
            steps: self.len(),
            burn_in: self.burn_in,
            total_volume: self.volume.iter().sum(),
            trade_impacts: self.impacts.len(),
            mean_spread: self.mean_spread(),
            one_sided_fraction: self.one_sided_fraction(),
            final_price: self.price.last().copied(),
            informed_cumulative_return: self.groups.as_ref().map(|g| GroupReturns::cumulative(&g.informed)),
            uninformed_cumulative_return: self
                .groups
                .as_ref()
                .map(|g| GroupReturns::cumulative(&g.uninformed)),
        }
    }
}

/// JSON summary written next to the per-step CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub model: Option<ModelKind>,
    pub seed: u64,
    pub steps: usize,
    pub burn_in: usize,
    pub total_volume: u64,
    pub trade_impacts: usize,
    pub mean_spread: Option<f64>,
    pub one_sided_fraction: f64,
    pub final_price: Option<f64>,
    pub informed_cumulative_return: Option<f64>,
    pub uninformed_cumulative_return: Option<f64>,
}

/// Reads the `price`, `return` and `volume` columns back from a per-step CSV.
pub fn read_steps_csv<R: std::io::Read>(input: R) -> Result<(Vec<f64>, Vec<f64>, Vec<u64>)> {
    use crate::error::Error;
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidInput(format!("missing column '{name}'")))
    };
    let (pi, ri, vi) = (col("price")?, col("return")?, col("volume")?);
    let (mut price, mut returns, mut volume) = (Vec::new(), Vec::new(), Vec::new());
    for (n, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = n + 2;
        let parse_f = |i: usize| -> Result<f64> {
            rec[i].parse().map_err(|e| Error::Parse {
                line,
                message: format!("{e}"),
            })
        };
        price.push(parse_f(pi)?);
        returns.push(parse_f(ri)?);
        volume.push(rec[vi].parse().map_err(|e| Error::Parse {
            line,
            message: format!("{e}"),
        })?);
    }
    Ok((price, returns, volume))
}
