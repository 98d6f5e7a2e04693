//! Threshold traders sending market orders into a zero-intelligence book.
//!
//! Each step the noise flow contributes only limit orders and cancellations.
//! Then the agents read the news, and every triggered agent sends a one-share
//! market order, in a uniformly shuffled agent order. The step's return is
//! the realized log change of the mid (last trade when a side is empty), and
//! that realized return is what the agents feed back into their thresholds.
//!
//! News is measured in log-return units, so it has to be set against the
//! tick size at the price level: the default price sits near 50,000 ticks
//! and the default news scale of `1e-4` is about five ticks.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::cont::{AgentParams, Population, ThresholdInit};
use crate::error::{Error, Result};
use crate::order_book::{OrderBook, Side, Tick};
use crate::output::{GroupReturns, ModelKind, SimOutput};
use crate::rng::{self, SimRng};
use crate::zim::{
    market_order_with_impact, seeded_book, validate_burn_in, validate_grid, zim_step, BookRecorder, NoiseFlow,
    PriceMode, StepEvents,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HybridConfig {
    pub n_agents: usize,
    pub news_std: f64,
    pub update_prob: f64,
    pub initial_threshold: Option<ThresholdInit>,
    pub informed_fraction: f64,
    pub limit_rate: f64,
    pub cancel_prob: f64,
    pub grid_low: Tick,
    pub grid_high: Tick,
    pub price_mode: PriceMode,
    pub price_band: Option<Tick>,
    pub steps: usize,
    pub seed: u64,
    pub burn_in_fraction: f64,
    pub initial_levels: usize,
    pub initial_qty: u64,
    pub depth_every: usize,
    pub depth_max_offset: usize,
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self {
            n_agents: 100,
            news_std: 1e-4,
            update_prob: 0.05,
            initial_threshold: None,
            informed_fraction: 0.0,
            limit_rate: 40.0,
            cancel_prob: 0.5,
            grid_low: 1,
            grid_high: 100_000,
            price_mode: PriceMode::PerOrder,
            price_band: Some(2000),
            steps: 11_112,
            seed: 1,
            burn_in_fraction: 0.1,
            initial_levels: 0,
            initial_qty: 1,
            depth_every: 0,
            depth_max_offset: 20,
        }
    }
}

impl HybridConfig {
    /// The reference run with its limit flow cut to a trickle: the book is
    /// one-sided almost every step and returns lose their fat tails.
    pub fn starved() -> Self {
        Self {
            news_std: 1e-3,
            limit_rate: 3.0,
            price_band: Some(40),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.agent_params().validate()?;
        self.noise_flow().validate()?;
        validate_grid(self.grid_low, self.grid_high)?;
        validate_burn_in(self.burn_in_fraction)?;
        if self.initial_levels > 0 && self.initial_qty == 0 {
            return Err(Error::config("initial_qty", "must be >= 1 when initial_levels > 0"));
        }
        Ok(())
    }

    pub fn burn_in(&self) -> usize {
        (self.burn_in_fraction * self.steps as f64).floor() as usize
    }

    pub fn agent_params(&self) -> AgentParams {
        AgentParams {
            n_agents: self.n_agents,
            news_std: self.news_std,
            update_prob: self.update_prob,
            initial_threshold: self.initial_threshold,
            informed_fraction: self.informed_fraction,
        }
    }

    /// The limit-only noise flow.
    pub fn noise_flow(&self) -> NoiseFlow {
        NoiseFlow {
            market_rate: 0.0,
            limit_rate: self.limit_rate,
            cancel_prob: self.cancel_prob,
            price_mode: self.price_mode,
            price_band: self.price_band,
        }
    }
}

/// Sends one unit market order per triggered agent, in shuffled order.
/// `scratch` is reused across steps to hold the triggered agent ids.
pub fn agent_orders(
    book: &mut OrderBook,
    orders: &[i8],
    scratch: &mut Vec<usize>,
    rng: &mut SimRng,
    step: u64,
    events: &mut StepEvents,
) {
    scratch.clear();
    scratch.extend(orders.iter().enumerate().filter(|(_, &o)| o != 0).map(|(i, _)| i));
    scratch.shuffle(rng);
    for &i in scratch.iter() {
        let side = if orders[i] > 0 { Side::Bid } else { Side::Ask };
        market_order_with_impact(book, side, 1, step, events);
    }
}

/// A hybrid run in progress.
pub struct HybridSim {
    pub book: OrderBook,
    pub population: Population,
    flow: NoiseFlow,
    noise: SimRng,
    agents: SimRng,
    rec: BookRecorder,
    groups: GroupReturns,
    triggered: Vec<usize>,
    step: u64,
}

impl HybridSim {
    /// Noise limit flow uses the noise stream; news, thresholds and the agent
    /// shuffle use the agent stream.
    pub fn new(config: &HybridConfig) -> Result<Self> {
        config.validate()?;
        let grid = validate_grid(config.grid_low, config.grid_high)?;
        let book = seeded_book(grid, config.initial_levels, config.initial_qty)?;
        let mut agents = rng::stream(config.seed, rng::AGENT_STREAM);
        let population = Population::new(&config.agent_params(), &mut agents)?;
        let rec = BookRecorder::new(
            ModelKind::Hybrid,
            config.seed,
            config.burn_in(),
            &book,
            config.depth_every,
            config.depth_max_offset,
        );
        Ok(Self {
            book,
            population,
            flow: config.noise_flow(),
            noise: rng::stream(config.seed, rng::NOISE_STREAM),
            agents,
            rec,
            groups: GroupReturns::default(),
            triggered: Vec::new(),
            step: 0,
        })
    }

    /// Advances one step and returns its events and realized return.
    pub fn step(&mut self) -> (StepEvents, f64) {
        let step = self.step;
        let mut events = zim_step(&mut self.book, &self.flow, &mut self.noise, step);
        let news = self.population.draw_news(&mut self.agents);
        self.population.decide_all(news);
        agent_orders(
            &mut self.book,
            &self.population.orders,
            &mut self.triggered,
            &mut self.agents,
            step,
            &mut events,
        );
        let r = self.rec.record(&self.book, step, &events);
        let pay = self.population.settle(r);
        self.groups.population.push(pay.population);
        self.groups.informed.push(pay.informed);
        self.groups.uninformed.push(pay.uninformed);
        self.population.update_thresholds(r, &mut self.agents);
        self.step += 1;
        (events, r)
    }

    pub fn finish(self) -> SimOutput {
        let mut out = self.rec.out;
        out.groups = Some(self.groups);
        out
    }
}

pub fn run_hybrid(config: &HybridConfig) -> Result<SimOutput> {
    let mut sim = HybridSim::new(config)?;
    for _ in 0..config.steps {
        sim.step();
    }
    Ok(sim.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order_book::Owner;

    fn small(seed: u64) -> HybridConfig {
        HybridConfig {
            n_agents: 100,
            steps: 400,
            seed,
            ..HybridConfig::default()
        }
    }

    #[test]
    fn single_buy_lifts_the_resting_ask() {
        let mut book = OrderBook::new(crate::order_book::PriceGrid::new(90, 110).unwrap());
        book.submit_limit(Side::Ask, 101, 1, Owner::Noise, 0).unwrap();
        book.submit_limit(Side::Bid, 99, 1, Owner::Noise, 0).unwrap();
        let mut events = StepEvents::default();
        agent_orders(&mut book, &[0, 1, 0], &mut Vec::new(), &mut rng::stream(0, 1), 1, &mut events);
        assert_eq!(events.trades.len(), 1);
        assert_eq!(events.trades[0].price, 101);
        assert_eq!(events.trades[0].aggressor, Side::Bid);
        assert!(book.best_ask().is_none());
    }

    #[test]
    fn quiet_step_leaves_mid_alone() {
        let cfg = HybridConfig {
            limit_rate: 0.0,
            cancel_prob: 0.0,
            initial_levels: 3,
            initial_threshold: Some(ThresholdInit::Constant { value: 1.0 }),
            update_prob: 0.0,
            steps: 20,
            n_agents: 10,
            ..HybridConfig::default()
        };
        let out = run_hybrid(&cfg).unwrap();
        assert!(out.returns.iter().all(|&r| r == 0.0));
        assert_eq!(out.volume.iter().sum::<u64>(), 0);
    }

    #[test]
    fn market_orders_match_triggered_agents() {
        let mut sim = HybridSim::new(&small(3)).unwrap();
        for _ in 0..200 {
            let (events, _) = sim.step();
            let triggered = sim.population.held.iter().filter(|&&o| o != 0).count() as u64;
            assert_eq!(events.market_orders, triggered);
        }
    }

    #[test]
    fn thresholds_track_the_realized_return() {
        let cfg = HybridConfig {
            update_prob: 1.0,
            ..small(4)
        };
        let mut sim = HybridSim::new(&cfg).unwrap();
        for _ in 0..50 {
            let (_, r) = sim.step();
            assert!(sim.population.agents.iter().all(|a| a.threshold == r.abs()));
        }
    }

    #[test]
    fn deterministic_and_conserving() {
        let cfg = small(9);
        let a = run_hybrid(&cfg).unwrap();
        assert_eq!(a, run_hybrid(&cfg).unwrap());
        assert!(a.returns.iter().all(|r| r.is_finite()));
    }

    #[test]
    fn validation_rejects_bad_fields() {
        for cfg in [
            HybridConfig { n_agents: 0, ..HybridConfig::default() },
            HybridConfig { limit_rate: -1.0, ..HybridConfig::default() },
            HybridConfig { grid_low: 5, grid_high: 5, ..HybridConfig::default() },
            HybridConfig { burn_in_fraction: 1.0, ..HybridConfig::default() },
        ] {
            assert!(run_hybrid(&cfg).unwrap_err().is_validation());
        }
    }
}
