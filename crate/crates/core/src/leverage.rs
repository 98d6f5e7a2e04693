//! Leveraged value funds trading against zero-intelligence noise flow.
//!
//! Each fund believes the share is worth `value` and buys when the price is
//! below it, borrowing up to `lambda_max` times its wealth. Demand is
//! `floor(min(beta * (value - p), lambda_max) * W / p)` shares. Funds move a
//! fixed fraction of the way to their target each step. A fund whose leverage
//! exceeds its cap after trading sells at market until it is back under the
//! cap; a fund whose wealth falls to the floor is liquidated and re-enters
//! with fresh capital after a delay.
//!
//! Cash is held in integer ticks and shares are integers, so `W = C + S * p`
//! is exact at every step.
//!
//! With no funds the model is the noise model, bit for bit:
//!
//! ```
//! use marketlab::leverage::{run_leverage, LeverageConfig};
//! use marketlab::zim::{run_zim, ZimConfig};
//!
//! let noise = ZimConfig { steps: 300, ..ZimConfig::default() };
//! let cfg = LeverageConfig { noise: noise.clone(), funds: vec![], ..LeverageConfig::default() };
//! let (out, _) = run_leverage(&cfg).unwrap();
//! assert!(out.same_series(&run_zim(&noise).unwrap()));
//! ```

use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::order_book::{OrderBook, Side, Tick};
use crate::output::{ModelKind, SimOutput};
use crate::rng::{self, SimRng};
use crate::zim::{market_order_with_impact, zim_step, BookRecorder, NoiseFlow, StepEvents, ZimConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FundSpec {
    /// Initial wealth in ticks.
    pub wealth: i64,
    /// Aggression `beta`.
    pub beta: f64,
    pub lambda_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LeverageConfig {
    /// Noise flow, grid, steps, seed and recording options.
    pub noise: ZimConfig,
    pub funds: Vec<FundSpec>,
    /// Perceived value `V` in ticks. Defaults to 500 ticks above the opening price.
    pub value: f64,
    /// A fund whose wealth is at or below this floor defaults.
    pub wealth_floor: i64,
    pub reentry_delay: usize,
    /// Fraction of the gap to target traded per step.
    pub rebalance_fraction: f64,
}

impl Default for LeverageConfig {
    fn default() -> Self {
        let noise = ZimConfig::default();
        let value = noise.grid_low as f64 + (noise.grid_high - noise.grid_low) as f64 / 2.0 + 500.0;
        Self {
            noise,
            funds: vec![
                FundSpec {
                    wealth: 1_000_000,
                    beta: 0.2,
                    lambda_max: 5.0,
                };
                10
            ],
            value,
            wealth_floor: 0,
            reentry_delay: 100,
            rebalance_fraction: 0.1,
        }
    }
}

impl LeverageConfig {
    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        if !(self.value > 0.0 && self.value.is_finite()) {
            return Err(Error::config("value", "must be finite and > 0"));
        }
        if self.wealth_floor < 0 {
            return Err(Error::config("wealth_floor", "must be >= 0"));
        }
        if !(self.rebalance_fraction > 0.0 && self.rebalance_fraction <= 1.0) {
            return Err(Error::config("rebalance_fraction", "must lie in (0, 1]"));
        }
        for (i, f) in self.funds.iter().enumerate() {
            let field = |name: &str| format!("funds[{i}].{name}");
            if f.wealth <= self.wealth_floor {
                return Err(Error::config(&field("wealth"), "must exceed wealth_floor"));
            }
            if !(f.beta > 0.0 && f.beta.is_finite()) {
                return Err(Error::config(&field("beta"), "must be finite and > 0"));
            }
            if !(f.lambda_max >= 1.0 && f.lambda_max.is_finite()) {
                return Err(Error::config(&field("lambda_max"), "must be finite and >= 1"));
            }
        }
        Ok(())
    }

    /// Same config with every fund's leverage cap set to `lambda_max`.
    pub fn with_lambda_max(&self, lambda_max: f64) -> Self {
        let mut c = self.clone();
        c.funds.iter_mut().for_each(|f| f.lambda_max = lambda_max);
        c
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FundStatus {
    Active,
    /// Steps left before re-entry.
    Defaulted(usize),
}

impl FundStatus {
    pub fn label(self) -> &'static str {
        match self {
            FundStatus::Active => "ACTIVE",
            FundStatus::Defaulted(_) => "DEFAULTED",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FundState {
    pub spec: FundSpec,
    /// Cash in ticks; negative when borrowing.
    pub cash: i64,
    pub shares: u64,
    pub status: FundStatus,
}

impl FundState {
    pub fn new(spec: FundSpec) -> Self {
        Self {
            spec,
            cash: spec.wealth,
            shares: 0,
            status: FundStatus::Active,
        }
    }

    /// `W = C + S * p`, exact.
    pub fn wealth(&self, price: Tick) -> i64 {
        self.cash + self.shares as i64 * price
    }

    /// `S * p / W`; infinite when wealth is not positive and shares are held.
    pub fn leverage(&self, price: Tick) -> f64 {
        let w = self.wealth(price);
        let exposure = self.shares as i64 * price;
        if exposure == 0 {
            0.0
        } else if w <= 0 {
            f64::INFINITY
        } else {
            exposure as f64 / w as f64
        }
    }

    fn apply(&mut self, side: Side, price: Tick, qty: u64) {
        match side {
            Side::Bid => {
                self.cash -= price * qty as i64;
                self.shares += qty;
            }
            Side::Ask => {
                self.cash += price * qty as i64;
                self.shares -= qty;
            }
        }
    }
}

/// Target holding `floor(min(beta * m, lambda_max) * W / p)` for mispricing
/// `m = value - p`; zero when `m <= 0` or wealth is not positive.
pub fn fund_target_shares(price: Tick, value: f64, fund: &FundState) -> u64 {
    let m = value - price as f64;
    let w = fund.wealth(price);
    if m <= 0.0 || w <= 0 || price <= 0 {
        return 0;
    }
    let lev = (fund.spec.beta * m).min(fund.spec.lambda_max);
    (lev * w as f64 / price as f64).floor() as u64
}

/// One fill of a fund's market order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FundFill {
    pub fund: usize,
    pub side: Side,
    pub price: Tick,
    pub qty: u64,
}

/// What margin enforcement did to one fund.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MarginOutcome {
    pub fills: Vec<FundFill>,
    /// Leverage still above the cap because bids ran out.
    pub violation: bool,
    pub defaulted: bool,
}

#[allow(clippy::too_many_arguments)]
fn fund_market_order(
    book: &mut OrderBook,
    fund: &mut FundState,
    id: usize,
    side: Side,
    qty: u64,
    step: u64,
    events: &mut StepEvents,
    fills: &mut Vec<FundFill>,
) -> u64 {
    let start = events.trades.len();
    market_order_with_impact(book, side, qty, step, events);
    let mut filled = 0;
    for t in &events.trades[start..] {
        fund.apply(side, t.price, t.qty);
        fills.push(FundFill {
            fund: id,
            side,
            price: t.price,
            qty: t.qty,
        });
        filled += t.qty;
    }
    filled
}

/// Sells until leverage is back under the cap at post-trade prices, or the
/// position is gone, or bids run out. Each round sells the smallest quantity
/// that would restore the cap at the current mark. Wealth at or below
/// `wealth_floor` liquidates the whole position and defaults the fund.
pub fn enforce_margin(
    book: &mut OrderBook,
    fund: &mut FundState,
    id: usize,
    wealth_floor: i64,
    reentry_delay: usize,
    step: u64,
    events: &mut StepEvents,
) -> MarginOutcome {
    let mut out = MarginOutcome::default();
    if fund.status != FundStatus::Active {
        return out;
    }
    loop {
        let p = book.last_trade();
        if fund.wealth(p) <= wealth_floor {
            fund.status = FundStatus::Defaulted(reentry_delay);
            out.defaulted = true;
            liquidate(book, fund, id, step, events, &mut out.fills);
            return out;
        }
        if fund.leverage(p) <= fund.spec.lambda_max || fund.shares == 0 {
            return out;
        }
        let keep = (fund.spec.lambda_max * fund.wealth(p) as f64 / p as f64).floor() as u64;
        let k = fund.shares - keep.min(fund.shares);
        let k = k.max(1);
        if fund_market_order(book, fund, id, Side::Ask, k, step, events, &mut out.fills) == 0 {
            out.violation = true;
            return out;
        }
    }
}

fn liquidate(
    book: &mut OrderBook,
    fund: &mut FundState,
    id: usize,
    step: u64,
    events: &mut StepEvents,
    fills: &mut Vec<FundFill>,
) {
    if fund.shares > 0 {
        let qty = fund.shares;
        fund_market_order(book, fund, id, Side::Ask, qty, step, events, fills);
    }
}

/// One row of fund telemetry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FundRecord {
    pub step: u64,
    pub fund_id: usize,
    pub cash: i64,
    pub wealth: i64,
    pub shares: u64,
    pub leverage: f64,
    pub status: FundStatus,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FundTelemetry {
    pub records: Vec<FundRecord>,
    pub defaults: usize,
    /// Steps on which some fund stayed over its cap for lack of bids.
    pub violations: usize,
}

impl FundTelemetry {
    /// `step,fund_id,wealth,shares,leverage,status`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "fund_id", "wealth", "shares", "leverage", "status"])?;
        for r in &self.records {
            w.write_record([
                r.step.to_string(),
                r.fund_id.to_string(),
                r.wealth.to_string(),
                r.shares.to_string(),
                r.leverage.to_string(),
                r.status.label().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A leverage run in progress.
pub struct LeverageSim {
    pub book: OrderBook,
    pub funds: Vec<FundState>,
    config: LeverageConfig,
    flow: NoiseFlow,
    noise: SimRng,
    agents: SimRng,
    rec: BookRecorder,
    telemetry: FundTelemetry,
    order: Vec<usize>,
    step: u64,
}

impl LeverageSim {
    pub fn new(config: &LeverageConfig) -> Result<Self> {
        config.validate()?;
        let book = config.noise.initial_book()?;
        let rec = BookRecorder::new(
            ModelKind::Leverage,
            config.noise.seed,
            config.noise.burn_in(),
            &book,
            config.noise.depth_every,
            config.noise.depth_max_offset,
        );
        Ok(Self {
            book,
            funds: config.funds.iter().map(|&f| FundState::new(f)).collect(),
            flow: config.noise.noise_flow(),
            noise: rng::stream(config.noise.seed, rng::NOISE_STREAM),
            agents: rng::stream(config.noise.seed, rng::AGENT_STREAM),
            config: config.clone(),
            rec,
            telemetry: FundTelemetry::default(),
            order: (0..config.funds.len()).collect(),
            step: 0,
        })
    }

    /// Noise flow, then rebalancing, then margin enforcement. Returns the
    /// funds' fills in execution order.
    pub fn step(&mut self) -> Vec<FundFill> {
        let step = self.step;
        let mut events = zim_step(&mut self.book, &self.flow, &mut self.noise, step);
        let mut fills = Vec::new();
        if !self.funds.is_empty() {
            self.order.shuffle(&mut self.agents);
            let order = std::mem::take(&mut self.order);
            for &i in &order {
                self.rebalance(i, step, &mut events, &mut fills);
            }
            let mut violated = false;
            for &i in &order {
                let out = enforce_margin(
                    &mut self.book,
                    &mut self.funds[i],
                    i,
                    self.config.wealth_floor,
                    self.config.reentry_delay,
                    step,
                    &mut events,
                );
                violated |= out.violation;
                self.telemetry.defaults += out.defaulted as usize;
                fills.extend(out.fills);
            }
            self.telemetry.violations += violated as usize;
            self.order = order;
        }
        self.rec.record(&self.book, step, &events);
        let p = self.book.last_trade();
        for (i, f) in self.funds.iter().enumerate() {
            self.telemetry.records.push(FundRecord {
                step,
                fund_id: i,
                cash: f.cash,
                wealth: f.wealth(p),
                shares: f.shares,
                leverage: f.leverage(p),
                status: f.status,
            });
        }
        self.step += 1;
        fills
    }

    fn rebalance(&mut self, i: usize, step: u64, events: &mut StepEvents, fills: &mut Vec<FundFill>) {
        let fund = &mut self.funds[i];
        match fund.status {
            FundStatus::Defaulted(0) => {
                if fund.shares > 0 {
                    liquidate(&mut self.book, fund, i, step, events, fills);
                }
                if fund.shares == 0 {
                    *fund = FundState::new(fund.spec);
                }
                return;
            }
            FundStatus::Defaulted(n) => {
                if fund.shares > 0 {
                    liquidate(&mut self.book, fund, i, step, events, fills);
                }
                fund.status = FundStatus::Defaulted(n - 1);
                return;
            }
            FundStatus::Active => {}
        }
        let p = self.book.last_trade();
        let target = fund_target_shares(p, self.config.value, fund);
        let gap = target as i64 - fund.shares as i64;
        if gap == 0 {
            return;
        }
        let qty = ((gap.unsigned_abs() as f64 * self.config.rebalance_fraction).ceil() as u64).max(1);
        let side = if gap > 0 { Side::Bid } else { Side::Ask };
        fund_market_order(&mut self.book, fund, i, side, qty, step, events, fills);
    }

    pub fn finish(self) -> (SimOutput, FundTelemetry) {
        (self.rec.out, self.telemetry)
    }
}

pub fn run_leverage(config: &LeverageConfig) -> Result<(SimOutput, FundTelemetry)> {
    let mut sim = LeverageSim::new(config)?;
    for _ in 0..config.noise.steps {
        sim.step();
    }
    Ok(sim.finish())
}
