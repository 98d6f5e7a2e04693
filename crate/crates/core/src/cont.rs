//! Heterogeneous threshold traders with a linear price impact.
//!
//! Every step all agents see a common Gaussian news value. An agent buys one
//! unit when its signal exceeds its threshold, sells when the signal is below
//! minus the threshold, and stays out otherwise. The excess demand `Z` moves
//! the log price by `Z / (lambda * N)`. Afterwards each agent independently,
//! with probability `q`, resets its threshold to the absolute size of that
//! return, which is the feedback that produces volatility clustering.
//!
//! Informed agents skip the news and trade on the previous step's return.
//!
//! ```
//! use marketlab::cont::{run_cont, ContConfig};
//!
//! let out = run_cont(&ContConfig { steps: 500, ..ContConfig::default() }).unwrap();
//! assert_eq!(out.returns.len(), 500);
//! assert!(out.price.iter().all(|&p| p > 0.0));
//! ```

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::output::{GroupReturns, ModelKind, SimOutput};
use crate::rng::{self, SimRng};
use crate::zim::validate_burn_in;

/// Distribution of the initial thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThresholdInit {
    Uniform { low: f64, high: f64 },
    Constant { value: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContConfig {
    pub n_agents: usize,
    /// Standard deviation `D` of the news.
    pub news_std: f64,
    /// Market depth `lambda` of the impact rule.
    pub market_depth: f64,
    /// Per-agent per-step threshold update probability `q`.
    pub update_prob: f64,
    pub steps: usize,
    pub seed: u64,
    /// Defaults to `Uniform(0, 2D)` when absent.
    pub initial_threshold: Option<ThresholdInit>,
    /// Fraction of agents trading on the lagged return instead of the news.
    pub informed_fraction: f64,
    pub initial_price: f64,
    pub burn_in_fraction: f64,
}

impl Default for ContConfig {
    fn default() -> Self {
        Self {
            n_agents: 1000,
            news_std: 0.01,
            market_depth: 10.0,
            update_prob: 0.05,
            steps: 11_112,
            seed: 1,
            initial_threshold: None,
            informed_fraction: 0.0,
            initial_price: 100.0,
            burn_in_fraction: 0.1,
        }
    }
}

impl ContConfig {
    pub fn validate(&self) -> Result<()> {
        self.agent_params().validate()?;
        if !(self.market_depth > 0.0 && self.market_depth.is_finite()) {
            return Err(Error::config("market_depth", "must be finite and > 0"));
        }
        if !(self.initial_price > 0.0 && self.initial_price.is_finite()) {
            return Err(Error::config("initial_price", "must be finite and > 0"));
        }
        validate_burn_in(self.burn_in_fraction)
    }

    pub fn burn_in(&self) -> usize {
        (self.steps as f64 * self.burn_in_fraction).floor() as usize
    }

    /// The agent-side parameters, shared with the hybrid model.
    pub fn agent_params(&self) -> AgentParams {
        AgentParams {
            n_agents: self.n_agents,
            news_std: self.news_std,
            update_prob: self.update_prob,
            initial_threshold: self.initial_threshold,
            informed_fraction: self.informed_fraction,
        }
    }
}

/// Agent population parameters common to the threshold and hybrid models.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgentParams {
    pub n_agents: usize,
    pub news_std: f64,
    pub update_prob: f64,
    pub initial_threshold: Option<ThresholdInit>,
    pub informed_fraction: f64,
}

impl AgentParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 {
            return Err(Error::config("n_agents", "must be >= 1"));
        }
        if !(self.news_std > 0.0 && self.news_std.is_finite()) {
            return Err(Error::config("news_std", "must be finite and > 0"));
        }
        if !(0.0..=1.0).contains(&self.update_prob) {
            return Err(Error::config("update_prob", "must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&self.informed_fraction) {
            return Err(Error::config("informed_fraction", "must lie in [0, 1)"));
        }
        match self.threshold_init() {
            ThresholdInit::Uniform { low, high } if !(0.0 <= low && low <= high && high.is_finite()) => {
                Err(Error::config("initial_threshold", "need 0 <= low <= high < inf"))
            }
            ThresholdInit::Constant { value } if !(value >= 0.0 && value.is_finite()) => {
                Err(Error::config("initial_threshold", "value must be finite and >= 0"))
            }
            _ => Ok(()),
        }
    }

    pub fn threshold_init(&self) -> ThresholdInit {
        self.initial_threshold.unwrap_or(ThresholdInit::Uniform {
            low: 0.0,
            high: 2.0 * self.news_std,
        })
    }

    pub fn informed_count(&self) -> usize {
        (self.informed_fraction * self.n_agents as f64).round() as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Uninformed,
    Informed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub threshold: f64,
    pub group: Group,
}

/// +1 buy, -1 sell, 0 inactive.
pub fn decide(signal: f64, threshold: f64) -> i8 {
    if signal > threshold {
        1
    } else if signal < -threshold {
        -1
    } else {
        0
    }
}

/// The agent population plus what it remembers between steps.
#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    pub agents: Vec<AgentState>,
    /// Previous step's return, read by informed agents.
    pub r_prev: f64,
    /// This step's orders.
    pub orders: Vec<i8>,
    /// Previous step's orders, held one period for group accounting.
    pub held: Vec<i8>,
    news: Normal<f64>,
    update_prob: f64,
}

impl Population {
    /// The first `informed_count()` agents are informed.
    pub fn new(params: &AgentParams, rng: &mut SimRng) -> Result<Self> {
        params.validate()?;
        let informed = params.informed_count();
        let init = params.threshold_init();
        let agents = (0..params.n_agents)
            .map(|i| AgentState {
                threshold: match init {
                    ThresholdInit::Uniform { low, high } if high > low => rng.random_range(low..high),
                    ThresholdInit::Uniform { low, .. } => low,
                    ThresholdInit::Constant { value } => value,
                },
                group: if i < informed {
                    Group::Informed
                } else {
                    Group::Uninformed
                },
            })
            .collect();
        Ok(Self {
            agents,
            r_prev: 0.0,
            orders: vec![0; params.n_agents],
            held: vec![0; params.n_agents],
            news: Normal::new(0.0, params.news_std).expect("validated std"),
            update_prob: params.update_prob,
        })
    }

    pub fn draw_news(&self, rng: &mut SimRng) -> f64 {
        self.news.sample(rng)
    }

    /// Fills `self.orders` from the news and the stored lagged return.
    /// Returns the excess demand.
    pub fn decide_all(&mut self, news: f64) -> i64 {
        let r_prev = self.r_prev;
        let mut z = 0i64;
        for (agent, order) in self.agents.iter().zip(self.orders.iter_mut()) {
            let signal = match agent.group {
                Group::Uninformed => news,
                Group::Informed => r_prev,
            };
            *order = decide(signal, agent.threshold);
            z += *order as i64;
        }
        z
    }

    /// Mean one-period payoff `o_i * r` of the held orders, per group.
    pub fn group_payoff(&self, r: f64) -> GroupPayoff {
        let (mut all, mut inf, mut uninf) = (0.0, 0.0, 0.0);
        let (mut n_inf, mut n_uninf) = (0usize, 0usize);
        for (agent, &o) in self.agents.iter().zip(&self.held) {
            let pay = o as f64 * r;
            all += pay;
            match agent.group {
                Group::Informed => {
                    inf += pay;
                    n_inf += 1;
                }
                Group::Uninformed => {
                    uninf += pay;
                    n_uninf += 1;
                }
            }
        }
        let population = all / self.agents.len() as f64;
        let mean = |s: f64, n: usize| if n == 0 { population } else { s / n as f64 };
        GroupPayoff {
            population,
            informed: mean(inf, n_inf),
            uninformed: mean(uninf, n_uninf),
        }
    }

    /// Settles the held orders at the realized return `r`, then holds this
    /// step's orders for the next period.
    pub fn settle(&mut self, r: f64) -> GroupPayoff {
        let payoff = self.group_payoff(r);
        std::mem::swap(&mut self.held, &mut self.orders);
        payoff
    }

    /// Each agent independently, with the update probability, sets its
    /// threshold to `|r|`. Also stores `r` as the next lagged return.
    pub fn update_thresholds(&mut self, r: f64, rng: &mut SimRng) {
        if self.update_prob > 0.0 {
            for agent in &mut self.agents {
                if rng.random_bool(self.update_prob) {
                    agent.threshold = r.abs();
                }
            }
        }
        self.r_prev = r;
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GroupPayoff {
    pub population: f64,
    pub informed: f64,
    pub uninformed: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContStepRecord {
    pub news: f64,
    pub excess_demand: i64,
    pub ret: f64,
    pub price: f64,
    /// Payoff this step of the orders placed on the previous step.
    pub payoff: GroupPayoff,
}

/// Linear impact rule `r = Z / (lambda * N)`.
pub fn impact_return(excess_demand: i64, market_depth: f64, n_agents: usize) -> f64 {
    excess_demand as f64 / (market_depth * n_agents as f64)
}

/// One step of the threshold model with a given news value.
pub fn cont_step_with_news(
    pop: &mut Population,
    price: &mut f64,
    market_depth: f64,
    news: f64,
    rng: &mut SimRng,
) -> ContStepRecord {
    let z = pop.decide_all(news);
    let ret = impact_return(z, market_depth, pop.agents.len());
    *price *= ret.exp();
    let payoff = pop.settle(ret);
    pop.update_thresholds(ret, rng);
    ContStepRecord {
        news,
        excess_demand: z,
        ret,
        price: *price,
        payoff,
    }
}

/// One step of the threshold model, drawing the news from `rng`.
pub fn cont_step(pop: &mut Population, price: &mut f64, market_depth: f64, rng: &mut SimRng) -> ContStepRecord {
    let news = pop.draw_news(rng);
    cont_step_with_news(pop, price, market_depth, news, rng)
}

/// Runs the threshold model. News, initial thresholds and threshold updates
/// all draw from the agent stream.
pub fn run_cont(config: &ContConfig) -> Result<SimOutput> {
    config.validate()?;
    let mut rng = rng::stream(config.seed, rng::AGENT_STREAM);
    let mut pop = Population::new(&config.agent_params(), &mut rng)?;
    let mut price = config.initial_price;
    let mut out = SimOutput::new(ModelKind::Cont, config.seed, config.burn_in());
    let mut groups = GroupReturns::default();
    for _ in 0..config.steps {
        let rec = cont_step(&mut pop, &mut price, config.market_depth, &mut rng);
        out.price.push(rec.price);
        out.returns.push(rec.ret);
        out.volume.push(pop.held.iter().map(|o| o.unsigned_abs() as u64).sum());
        groups.population.push(rec.payoff.population);
        groups.informed.push(rec.payoff.informed);
        groups.uninformed.push(rec.payoff.uninformed);
    }
    let n = out.returns.len();
    out.best_bid = vec![None; n];
    out.best_ask = vec![None; n];
    out.spread = vec![None; n];
    out.mid = vec![None; n];
    out.one_sided = vec![false; n];
    out.groups = Some(groups);
    Ok(out)
}
