//! Zero-intelligence order flow.
//!
//! Each step draws Poisson counts of market and limit orders per side, cancels
//! each resting order with a fixed probability, and executes the arrivals in
//! a random interleaving. Limit prices are uniform on integer ticks inside a
//! band set by the opposite quote: bids on `[L, best_ask - 1]`, asks on
//! `[best_bid + 1, H]`. When the opposite quote is missing the band is split
//! at the last trade price instead. An optional `price_band` narrows each band
//! to a fixed width next to the opposite quote. Every order is for one share.
//!
//! `ZimConfig::default()` is the reference regime used throughout the guide.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Geometric, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::order_book::{BookError, OrderBook, Owner, PriceGrid, Side, Tick, Trade};
use crate::output::{DepthSnapshot, ModelKind, SimOutput};
use crate::rng::{self, SimRng};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceMode {
    /// Every arriving limit order draws its own price.
    #[default]
    PerOrder,
    /// One price per side per step, shared by all of that side's arrivals.
    Shared,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZimConfig {
    /// Poisson mean of market orders per step, per side.
    pub market_rate: f64,
    /// Poisson mean of limit orders per step, per side.
    pub limit_rate: f64,
    /// Per-step cancellation probability of each resting order.
    pub cancel_prob: f64,
    pub grid_low: Tick,
    pub grid_high: Tick,
    pub price_mode: PriceMode,
    /// Optional width of the price band in ticks, measured from the opposite
    /// quote: bids on `[best_ask - width, best_ask - 1]`, asks on
    /// `[best_bid + 1, best_bid + width]`, both clipped to the grid. Absent
    /// means the band runs to the grid edge.
    pub price_band: Option<Tick>,
    pub steps: usize,
    pub seed: u64,
    pub burn_in_fraction: f64,
    /// Seed the book with this many one-tick-apart levels per side around
    /// the grid midpoint.
    pub initial_levels: usize,
    pub initial_qty: u64,
    /// Take a depth snapshot every this many steps; 0 disables snapshots.
    pub depth_every: usize,
    pub depth_max_offset: usize,
}

impl Default for ZimConfig {
    fn default() -> Self {
        Self {
            market_rate: 1.0,
            limit_rate: 10.0,
            cancel_prob: 0.1,
            grid_low: 1,
            grid_high: 100_000,
            price_mode: PriceMode::Shared,
            price_band: Some(40),
            steps: 11_112,
            seed: 1,
            burn_in_fraction: 0.1,
            initial_levels: 0,
            initial_qty: 1,
            depth_every: 1,
            depth_max_offset: 20,
        }
    }
}

impl ZimConfig {
    pub fn validate(&self) -> Result<()> {
        self.noise_flow().validate()?;
        validate_grid(self.grid_low, self.grid_high)?;
        validate_burn_in(self.burn_in_fraction)?;
        if self.initial_levels > 0 && self.initial_qty == 0 {
            return Err(Error::config("initial_qty", "must be >= 1 when initial_levels > 0"));
        }
        Ok(())
    }

    pub fn noise_flow(&self) -> NoiseFlow {
        NoiseFlow {
            market_rate: self.market_rate,
            limit_rate: self.limit_rate,
            cancel_prob: self.cancel_prob,
            price_mode: self.price_mode,
            price_band: self.price_band,
        }
    }

    pub fn grid(&self) -> Result<PriceGrid> {
        validate_grid(self.grid_low, self.grid_high)
    }

    pub fn burn_in(&self) -> usize {
        (self.burn_in_fraction * self.steps as f64).floor() as usize
    }

    /// Fresh book with the configured seeding pattern.
    pub fn initial_book(&self) -> Result<OrderBook> {
        seeded_book(self.grid()?, self.initial_levels, self.initial_qty)
    }
}

pub(crate) fn validate_grid(low: Tick, high: Tick) -> Result<PriceGrid> {
    PriceGrid::new(low, high).map_err(|e| Error::config("grid_low/grid_high", e.to_string()))
}

pub(crate) fn validate_burn_in(fraction: f64) -> Result<()> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::config("burn_in_fraction", "must lie in [0, 1)"));
    }
    Ok(())
}

pub(crate) fn seeded_book(grid: PriceGrid, levels: usize, qty: u64) -> Result<OrderBook> {
    let mut book = OrderBook::new(grid);
    let mid = grid.midpoint();
    for k in 1..=levels as Tick {
        book.submit_limit(Side::Bid, mid - k, qty, Owner::Noise, 0)?;
        book.submit_limit(Side::Ask, mid + k, qty, Owner::Noise, 0)?;
    }
    Ok(book)
}

/// The random order-flow parameters of one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseFlow {
    pub market_rate: f64,
    pub limit_rate: f64,
    pub cancel_prob: f64,
    pub price_mode: PriceMode,
    pub price_band: Option<Tick>,
}

impl NoiseFlow {
    pub fn validate(&self) -> Result<()> {
        if !(self.market_rate >= 0.0 && self.market_rate.is_finite()) {
            return Err(Error::config("market_rate", "must be finite and >= 0"));
        }
        if !(self.limit_rate >= 0.0 && self.limit_rate.is_finite()) {
            return Err(Error::config("limit_rate", "must be finite and >= 0"));
        }
        if !(0.0..=1.0).contains(&self.cancel_prob) {
            return Err(Error::config("cancel_prob", "must lie in [0, 1]"));
        }
        if matches!(self.price_band, Some(w) if w < 1) {
            return Err(Error::config("price_band", "must be >= 1"));
        }
        Ok(())
    }
}

/// What happened during one noise-flow step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepEvents {
    pub trades: Vec<Trade>,
    /// `(final fill price, mid_after - mid_before)` for each market order that
    /// traded while both quotes existed before and after.
    pub impacts: Vec<(Tick, f64)>,
    pub volume: u64,
    pub market_orders: u64,
    pub limit_orders: u64,
    pub cancelled: u64,
    /// Market-order shares dropped for lack of liquidity.
    pub dropped: u64,
}

#[derive(Clone, Copy, Debug)]
enum Arrival {
    Market(Side),
    Limit(Side),
}

fn poisson(rate: f64, rng: &mut SimRng) -> u64 {
    if rate <= 0.0 {
        return 0;
    }
    Poisson::new(rate).expect("rate is positive and finite").sample(rng) as u64
}

/// Uniform limit price inside the zero-intelligence band for `side`.
pub fn draw_limit_price(book: &OrderBook, side: Side, band: Option<Tick>, rng: &mut SimRng) -> Tick {
    let grid = book.grid();
    let anchor = book.last_trade();
    let (lo, hi) = match side {
        Side::Bid => {
            let hi = book.best_ask().unwrap_or(anchor) - 1;
            (band.map_or(grid.low, |w| hi + 1 - w), hi)
        }
        Side::Ask => {
            let lo = book.best_bid().unwrap_or(anchor) + 1;
            (lo, band.map_or(grid.high, |w| lo - 1 + w))
        }
    };
    let lo = lo.clamp(grid.low, grid.high);
    let hi = hi.clamp(lo, grid.high);
    rng.random_range(lo..=hi)
}

/// Executes a market order, swallowing the empty-book remainder.
/// Returns the fills and the dropped share count.
pub(crate) fn market_order(book: &mut OrderBook, side: Side, qty: u64, step: u64) -> (Vec<Trade>, u64) {
    match book.submit_market(side, qty, step) {
        Ok(trades) => (trades, 0),
        Err(BookError::LiquidityExhausted { unfilled, trades }) => (trades, unfilled),
        Err(e) => unreachable!("market order rejected: {e}"),
    }
}

/// Market order plus its mid impact when both quotes exist around it.
pub(crate) fn market_order_with_impact(
    book: &mut OrderBook,
    side: Side,
    qty: u64,
    step: u64,
    events: &mut StepEvents,
) {
    let before = book.mid();
    let (trades, dropped) = market_order(book, side, qty, step);
    events.market_orders += 1;
    events.dropped += dropped;
    if let (Some(b), Some(a), Some(last)) = (before, book.mid(), trades.last()) {
        events.impacts.push((last.price, a.as_f64() - b.as_f64()));
    }
    events.volume += trades.iter().map(|t| t.qty).sum::<u64>();
    events.trades.extend(trades);
}

/// Cancels each resting order independently with probability `cancel_prob`.
///
/// Instead of one Bernoulli draw per order, the gap between cancellations is
/// drawn from the geometric distribution, which gives the same joint law with
/// one draw per cancelled order.
pub(crate) fn cancel_step(book: &mut OrderBook, cancel_prob: f64, rng: &mut SimRng, step: u64) -> u64 {
    if cancel_prob <= 0.0 {
        return 0;
    }
    let gap = Geometric::new(cancel_prob).expect("probability in (0, 1]");
    let mut survivors = gap.sample(rng);
    book.cancel_where(step, |_| {
        if survivors == 0 {
            survivors = gap.sample(rng);
            true
        } else {
            survivors -= 1;
            false
        }
    }) as u64
}

/// One step of zero-intelligence order flow on `book`.
///
/// Orders resting at the start of the step are cancelled first; the step's
/// arrivals then execute in a uniformly shuffled order. In shared-price mode
/// each side's price is drawn at that side's first limit arrival of the step
/// and reused for the rest of the step.
pub fn zim_step(book: &mut OrderBook, flow: &NoiseFlow, rng: &mut SimRng, step: u64) -> StepEvents {
    let mut events = StepEvents {
        cancelled: cancel_step(book, flow.cancel_prob, rng, step),
        ..StepEvents::default()
    };

    let mut arrivals = Vec::new();
    for side in [Side::Bid, Side::Ask] {
        let n = poisson(flow.market_rate, rng);
        arrivals.extend((0..n).map(|_| Arrival::Market(side)));
    }
    for side in [Side::Bid, Side::Ask] {
        let n = poisson(flow.limit_rate, rng);
        arrivals.extend((0..n).map(|_| Arrival::Limit(side)));
    }
    arrivals.shuffle(rng);

    let mut shared: [Option<Tick>; 2] = [None, None];

    for arrival in arrivals {
        match arrival {
            Arrival::Market(side) => market_order_with_impact(book, side, 1, step, &mut events),
            Arrival::Limit(side) => {
                let price = match flow.price_mode {
                    PriceMode::PerOrder => draw_limit_price(book, side, flow.price_band, rng),
                    PriceMode::Shared => *shared[side as usize]
                        .get_or_insert_with(|| draw_limit_price(book, side, flow.price_band, rng)),
                };
                let out = book
                    .submit_limit(side, price, 1, Owner::Noise, step)
                    .expect("band prices lie on the grid");
                events.limit_orders += 1;
                events.volume += out.trades.iter().map(|t| t.qty).sum::<u64>();
                events.trades.extend(out.trades);
            }
        }
    }
    events
}

/// Log-return between two reference prices held in half ticks.
pub(crate) fn log_return(prev: f64, now: f64) -> f64 {
    (now / prev).ln()
}

/// Per-step recorder shared by the book-based models.
pub(crate) struct BookRecorder {
    pub out: SimOutput,
    prev_ref: f64,
    depth_every: usize,
    depth_max_offset: usize,
}

impl BookRecorder {
    pub fn new(
        model: ModelKind,
        seed: u64,
        burn_in: usize,
        book: &OrderBook,
        depth_every: usize,
        depth_max_offset: usize,
    ) -> Self {
        Self {
            out: SimOutput::new(model, seed, burn_in),
            prev_ref: book.reference_price().as_f64(),
            depth_every,
            depth_max_offset,
        }
    }

    /// Records the book after step `step`; returns that step's log-return.
    pub fn record(&mut self, book: &OrderBook, step: u64, events: &StepEvents) -> f64 {
        let now = book.reference_price().as_f64();
        let r = log_return(self.prev_ref, now);
        self.prev_ref = now;
        self.out.record_book_step(book, r, events.volume);
        self.out.impacts.extend(events.impacts.iter().map(|&(price, impact)| {
            crate::output::TradeImpact { step, price, impact }
        }));
        if self.depth_every > 0 && step as usize % self.depth_every == 0 {
            self.out.depth.push(DepthSnapshot {
                step,
                profile: book.depth_profile(self.depth_max_offset),
            });
        }
        r
    }
}

/// Runs the zero-intelligence model for `config.steps` steps.
pub fn run_zim(config: &ZimConfig) -> Result<SimOutput> {
    config.validate()?;
    let mut book = config.initial_book()?;
    let mut rng = rng::stream(config.seed, rng::NOISE_STREAM);
    let flow = config.noise_flow();
    let mut rec = BookRecorder::new(
        ModelKind::Zim,
        config.seed,
        config.burn_in(),
        &book,
        config.depth_every,
        config.depth_max_offset,
    );
    for step in 0..config.steps as u64 {
        let events = zim_step(&mut book, &flow, &mut rng, step);
        rec.record(&book, step, &events);
    }
    Ok(rec.out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> ZimConfig {
        ZimConfig {
            steps: 500,
            seed,
            ..ZimConfig::default()
        }
    }

    #[test]
    fn idle_flow_leaves_book_alone() {
        let cfg = ZimConfig {
            initial_levels: 3,
            ..ZimConfig::default()
        };
        let mut book = cfg.initial_book().unwrap();
        let before = book.levels(Side::Bid);
        let flow = NoiseFlow {
            market_rate: 0.0,
            limit_rate: 0.0,
            cancel_prob: 0.0,
            price_mode: PriceMode::PerOrder,
            price_band: None,
        };
        let mut rng = rng::stream(3, 0);
        for step in 0..100 {
            let ev = zim_step(&mut book, &flow, &mut rng, step);
            assert!(ev.trades.is_empty());
        }
        assert_eq!(book.levels(Side::Bid), before);
    }

    #[test]
    fn bid_only_flow_never_trades() {
        let mut book = OrderBook::new(PriceGrid::new(900, 1100).unwrap());
        let mut rng = rng::stream(5, 0);
        let mut depth = 0;
        for step in 0..200 {
            // Only bids arrive: an ask band never gets used.
            let n = poisson(2.0, &mut rng);
            for _ in 0..n {
                let p = draw_limit_price(&book, Side::Bid, None, &mut rng);
                let out = book.submit_limit(Side::Bid, p, 1, Owner::Noise, step).unwrap();
                assert!(out.trades.is_empty());
            }
            assert!(book.depth(Side::Bid) >= depth);
            depth = book.depth(Side::Bid);
        }
        assert!(depth > 0);
    }

    #[test]
    fn zero_market_rate_means_zero_trades() {
        let cfg = ZimConfig {
            market_rate: 0.0,
            ..small(9)
        };
        let out = run_zim(&cfg).unwrap();
        assert_eq!(out.volume.iter().sum::<u64>(), 0);
        assert!(out.impacts.is_empty());
    }

    #[test]
    fn poisson_sample_mean_matches_rate() {
        let mut rng = rng::stream(11, 0);
        let n = 100_000;
        let rate = 1.7;
        let total: u64 = (0..n).map(|_| poisson(rate, &mut rng)).sum();
        let mean = total as f64 / n as f64;
        assert!((mean - rate).abs() / rate < 0.01, "mean {mean}");
    }

    #[test]
    fn deterministic_per_seed() {
        let a = run_zim(&small(4)).unwrap();
        let b = run_zim(&small(4)).unwrap();
        assert_eq!(a, b);
        let c = run_zim(&small(5)).unwrap();
        assert_ne!(a.returns, c.returns);
    }

    #[test]
    fn shared_mode_runs_and_records_every_step() {
        let cfg = ZimConfig {
            price_mode: PriceMode::Shared,
            ..small(2)
        };
        let out = run_zim(&cfg).unwrap();
        assert_eq!(out.len(), 500);
        assert_eq!(out.price.len(), 500);
        assert_eq!(out.burn_in, 50);
    }

    #[test]
    fn band_prices_stay_on_grid_and_uncrossed() {
        let cfg = ZimConfig {
            grid_low: 1,
            grid_high: 6,
            ..small(8)
        };
        let mut book = cfg.initial_book().unwrap();
        let mut rng = rng::stream(8, 0);
        let flow = cfg.noise_flow();
        for step in 0..2_000 {
            zim_step(&mut book, &flow, &mut rng, step);
            if let (Some(b), Some(a)) = (book.best_bid(), book.best_ask()) {
                assert!(b < a);
            }
        }
        let l = book.ledger();
        assert_eq!(l.rejected, 0);
        assert_eq!(
            l.submitted,
            l.executed + book.resting_qty() + l.cancelled + l.unfilled + l.rejected
        );
    }

    #[test]
    fn invalid_configs_name_the_field() {
        let bad = ZimConfig {
            cancel_prob: 1.5,
            ..ZimConfig::default()
        };
        match bad.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "cancel_prob"),
            other => panic!("{other:?}"),
        }
        let bad = ZimConfig {
            grid_low: 10,
            grid_high: 5,
            ..ZimConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = ZimConfig {
            market_rate: -1.0,
            ..ZimConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
