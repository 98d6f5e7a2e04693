//! Price-time-priority limit order book for a single asset on an integer tick grid.
//!
//! The book keeps two ladders (bids and asks), each mapping a tick to a FIFO
//! queue of resting orders. Incoming orders are matched best price first and,
//! within a price level, in arrival order. Limit orders that cross the spread
//! execute immediately against the opposite ladder; whatever is left rests.
//! The book is never left crossed.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Price expressed as an integer index on the tick grid.
pub type Tick = i64;

/// Identifier assigned by the book's monotone counter.
pub type OrderId = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Bid,
    Ask,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Bid => Side::Ask,
            Side::Ask => Side::Bid,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Bid => "BID",
            Side::Ask => "ASK",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderKind {
    Market,
    Limit,
}

/// Who submitted an order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Owner {
    Noise,
    Agent(u32),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Order {
    pub id: OrderId,
    pub side: Side,
    pub kind: OrderKind,
    /// Present for limit orders only.
    pub price: Option<Tick>,
    pub qty: u64,
    pub step: u64,
    pub owner: Owner,
}

/// An executed match. `price` is always the resting order's price.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trade {
    pub buy_order_id: OrderId,
    pub sell_order_id: OrderId,
    pub price: Tick,
    pub qty: u64,
    pub step: u64,
    /// Side of the incoming (liquidity-taking) order.
    pub aggressor: Side,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BookError {
    #[error("price {price} outside market space [{low}, {high}]")]
    OffGrid { price: Tick, low: Tick, high: Tick },
    #[error("order quantity must be at least 1")]
    ZeroQuantity,
    /// The opposite ladder ran dry. `trades` holds any partial fills that did
    /// happen before liquidity ran out; `unfilled` is dropped, never queued.
    #[error("liquidity exhausted with {unfilled} shares unfilled")]
    LiquidityExhausted { unfilled: u64, trades: Vec<Trade> },
    #[error("invalid price grid [{low}, {high}]: need 1 <= low < high")]
    InvalidGrid { low: Tick, high: Tick },
}

/// Inclusive price bounds `[low, high]` of the market space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriceGrid {
    pub low: Tick,
    pub high: Tick,
}

impl PriceGrid {
    pub fn new(low: Tick, high: Tick) -> Result<Self, BookError> {
        if low < 1 || low >= high {
            return Err(BookError::InvalidGrid { low, high });
        }
        Ok(Self { low, high })
    }

    pub fn contains(&self, price: Tick) -> bool {
        (self.low..=self.high).contains(&price)
    }

    /// Grid midpoint, rounded down.
    pub fn midpoint(&self) -> Tick {
        self.low + (self.high - self.low) / 2
    }
}

/// A price held exactly in half ticks, so the mid of two integer quotes has
/// no rounding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HalfTicks(pub i64);

impl HalfTicks {
    pub fn from_tick(tick: Tick) -> Self {
        HalfTicks(2 * tick)
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

/// Per-book share accounting.
///
/// `executed` counts both legs of every trade, so the conservation identity is
/// `submitted == executed + resting + cancelled + unfilled + rejected`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShareLedger {
    pub submitted: u64,
    pub executed: u64,
    pub cancelled: u64,
    pub unfilled: u64,
    pub rejected: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EventType {
    Limit,
    Market,
    Trade,
    Cancel,
    Reject,
    Unfilled,
}

impl EventType {
    fn as_str(self) -> &'static str {
        match self {
            EventType::Limit => "LIMIT",
            EventType::Market => "MARKET",
            EventType::Trade => "TRADE",
            EventType::Cancel => "CANCEL",
            EventType::Reject => "REJECT",
            EventType::Unfilled => "UNFILLED",
        }
    }
}

/// One row of the optional audit log.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BookEvent {
    pub step: u64,
    pub event_type: EventType,
    pub side: Side,
    pub price: Option<Tick>,
    pub qty: u64,
    pub order_id: OrderId,
}

/// Outcome of a limit submission: the id the book assigned and any fills.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LimitOutcome {
    pub id: OrderId,
    pub trades: Vec<Trade>,
}

/// Resting quantity per tick offset from the mid. Index 0 is offset 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthProfile {
    pub bid: Vec<u64>,
    pub ask: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct OrderBook {
    grid: PriceGrid,
    bids: BTreeMap<Tick, VecDeque<Order>>,
    asks: BTreeMap<Tick, VecDeque<Order>>,
    index: HashMap<OrderId, (Side, Tick)>,
    next_id: OrderId,
    last_trade: Tick,
    ledger: ShareLedger,
    events: Option<Vec<BookEvent>>,
}

impl OrderBook {
    /// Empty book. The last-trade anchor starts at the grid midpoint.
    pub fn new(grid: PriceGrid) -> Self {
        Self {
            grid,
            bids: BTreeMap::new(),
            asks: BTreeMap::new(),
            index: HashMap::new(),
            next_id: 1,
            last_trade: grid.midpoint(),
            ledger: ShareLedger::default(),
            events: None,
        }
    }

    /// Turns on the audit log.
    pub fn with_event_log(mut self) -> Self {
        self.events = Some(Vec::new());
        self
    }

    pub fn grid(&self) -> PriceGrid {
        self.grid
    }

    pub fn ledger(&self) -> ShareLedger {
        self.ledger
    }

    pub fn events(&self) -> Option<&[BookEvent]> {
        self.events.as_deref()
    }

    pub fn last_trade(&self) -> Tick {
        self.last_trade
    }

    pub fn best_bid(&self) -> Option<Tick> {
        self.bids.keys().next_back().copied()
    }

    pub fn best_ask(&self) -> Option<Tick> {
        self.asks.keys().next().copied()
    }

    pub fn best(&self, side: Side) -> Option<Tick> {
        match side {
            Side::Bid => self.best_bid(),
            Side::Ask => self.best_ask(),
        }
    }

    pub fn spread(&self) -> Option<Tick> {
        Some(self.best_ask()? - self.best_bid()?)
    }

    pub fn mid(&self) -> Option<HalfTicks> {
        Some(HalfTicks(self.best_ask()? + self.best_bid()?))
    }

    /// Mid when both sides are quoted, otherwise the last trade price.
    pub fn reference_price(&self) -> HalfTicks {
        self.mid().unwrap_or(HalfTicks::from_tick(self.last_trade))
    }

    pub fn is_empty(&self, side: Side) -> bool {
        self.ladder(side).is_empty()
    }

    /// Total resting shares on one side.
    pub fn depth(&self, side: Side) -> u64 {
        self.ladder(side).values().flatten().map(|o| o.qty).sum()
    }

    pub fn resting_qty(&self) -> u64 {
        self.depth(Side::Bid) + self.depth(Side::Ask)
    }

    pub fn resting_count(&self) -> usize {
        self.index.len()
    }

    /// Resting quantity at one price level.
    pub fn level_qty(&self, side: Side, price: Tick) -> u64 {
        self.ladder(side)
            .get(&price)
            .map_or(0, |q| q.iter().map(|o| o.qty).sum())
    }

    /// Resting orders at one level in queue order.
    pub fn level_orders(&self, side: Side, price: Tick) -> Vec<&Order> {
        self.ladder(side)
            .get(&price)
            .map_or_else(Vec::new, |q| q.iter().collect())
    }

    /// Price levels with their total quantity, best price first.
    pub fn levels(&self, side: Side) -> Vec<(Tick, u64)> {
        let sum = |(p, q): (&Tick, &VecDeque<Order>)| (*p, q.iter().map(|o| o.qty).sum());
        match side {
            Side::Bid => self.bids.iter().rev().map(sum).collect(),
            Side::Ask => self.asks.iter().map(sum).collect(),
        }
    }

    pub fn contains(&self, id: OrderId) -> bool {
        self.index.contains_key(&id)
    }

    /// Places a limit order. Any marketable part trades immediately; the rest
    /// rests at `price`.
    pub fn submit_limit(
        &mut self,
        side: Side,
        price: Tick,
        qty: u64,
        owner: Owner,
        step: u64,
    ) -> Result<LimitOutcome, BookError> {
        if qty == 0 {
            return Err(BookError::ZeroQuantity);
        }
        let id = self.take_id();
        self.ledger.submitted += qty;
        if !self.grid.contains(price) {
            self.ledger.rejected += qty;
            self.log(step, EventType::Reject, side, Some(price), qty, id);
            return Err(BookError::OffGrid {
                price,
                low: self.grid.low,
                high: self.grid.high,
            });
        }
        self.log(step, EventType::Limit, side, Some(price), qty, id);
        let (trades, remaining) = self.match_incoming(side, Some(price), qty, id, step);
        if remaining > 0 {
            let order = Order {
                id,
                side,
                kind: OrderKind::Limit,
                price: Some(price),
                qty: remaining,
                step,
                owner,
            };
            self.ladder_mut(side).entry(price).or_default().push_back(order);
            self.index.insert(id, (side, price));
        }
        Ok(LimitOutcome { id, trades })
    }

    /// Executes a market order against the opposite ladder. An unfilled
    /// remainder is dropped and reported through
    /// [`BookError::LiquidityExhausted`], which also carries any partial fills.
    pub fn submit_market(
        &mut self,
        side: Side,
        qty: u64,
        step: u64,
    ) -> Result<Vec<Trade>, BookError> {
        if qty == 0 {
            return Err(BookError::ZeroQuantity);
        }
        let id = self.take_id();
        self.ledger.submitted += qty;
        self.log(step, EventType::Market, side, None, qty, id);
        let (trades, remaining) = self.match_incoming(side, None, qty, id, step);
        if remaining > 0 {
            self.ledger.unfilled += remaining;
            self.log(step, EventType::Unfilled, side, None, remaining, id);
            return Err(BookError::LiquidityExhausted {
                unfilled: remaining,
                trades,
            });
        }
        Ok(trades)
    }

    /// Removes a resting order. Returns false for unknown or already-gone ids.
    pub fn cancel(&mut self, id: OrderId, step: u64) -> bool {
        let Some((side, price)) = self.index.remove(&id) else {
            return false;
        };
        let ladder = self.ladder_mut(side);
        let queue = ladder.get_mut(&price).expect("indexed level exists");
        let pos = queue
            .iter()
            .position(|o| o.id == id)
            .expect("indexed order exists");
        let order = queue.remove(pos).expect("position is valid");
        if queue.is_empty() {
            ladder.remove(&price);
        }
        self.ledger.cancelled += order.qty;
        self.log(step, EventType::Cancel, side, Some(price), order.qty, id);
        true
    }

    /// Visits every resting order (bids then asks, ascending price, FIFO within
    /// a level) and cancels those for which `cancel_if` returns true. The visit
    /// order is fixed so that random cancellation is reproducible.
    pub fn cancel_where<F: FnMut(&Order) -> bool>(&mut self, step: u64, mut cancel_if: F) -> usize {
        let mut doomed = Vec::new();
        for ladder in [&self.bids, &self.asks] {
            for queue in ladder.values() {
                doomed.extend(queue.iter().filter(|o| cancel_if(o)).map(|o| o.id));
            }
        }
        for id in &doomed {
            self.cancel(*id, step);
        }
        doomed.len()
    }

    /// Resting quantity per tick offset from the mid, offsets `1..=max_offset`.
    ///
    /// Offsets are measured in whole ticks, rounding half-tick distances up,
    /// so the best quotes of a one-tick spread sit at offset 1. When one side
    /// is empty the other side is profiled relative to its own best quote
    /// (its best level is offset 1).
    pub fn depth_profile(&self, max_offset: usize) -> DepthProfile {
        let mut profile = DepthProfile {
            bid: vec![0; max_offset],
            ask: vec![0; max_offset],
        };
        let (bid_ref, ask_ref) = match (self.best_bid(), self.best_ask()) {
            (Some(b), Some(a)) => (a + b, a + b),
            (Some(b), None) => (2 * b + 1, 0),
            (None, Some(a)) => (0, 2 * a - 1),
            (None, None) => return profile,
        };
        let bin = |out: &mut Vec<u64>, twice_distance: i64, qty: u64| {
            let offset = (twice_distance + 1) / 2;
            if offset >= 1 && offset as usize <= max_offset {
                out[offset as usize - 1] += qty;
            }
        };
        for (price, qty) in self.levels(Side::Bid) {
            bin(&mut profile.bid, bid_ref - 2 * price, qty);
        }
        for (price, qty) in self.levels(Side::Ask) {
            bin(&mut profile.ask, 2 * price - ask_ref, qty);
        }
        profile
    }

    /// Writes the audit log as CSV `(step, event_type, side, price, qty, order_id)`.
    pub fn write_event_log<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "event_type", "side", "price", "qty", "order_id"])?;
        for e in self.events.iter().flatten() {
            w.write_record([
                e.step.to_string(),
                e.event_type.as_str().to_string(),
                e.side.as_str().to_string(),
                e.price.map(|p| p.to_string()).unwrap_or_default(),
                e.qty.to_string(),
                e.order_id.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    fn take_id(&mut self) -> OrderId {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn ladder(&self, side: Side) -> &BTreeMap<Tick, VecDeque<Order>> {
        match side {
            Side::Bid => &self.bids,
            Side::Ask => &self.asks,
        }
    }

    fn ladder_mut(&mut self, side: Side) -> &mut BTreeMap<Tick, VecDeque<Order>> {
        match side {
            Side::Bid => &mut self.bids,
            Side::Ask => &mut self.asks,
        }
    }

    fn log(&mut self, step: u64, event_type: EventType, side: Side, price: Option<Tick>, qty: u64, order_id: OrderId) {
        if let Some(events) = self.events.as_mut() {
            events.push(BookEvent {
                step,
                event_type,
                side,
                price,
                qty,
                order_id,
            });
        }
    }

    /// Walks the opposite ladder while the incoming order is marketable.
    /// Returns the fills and the unmatched remainder.
    fn match_incoming(
        &mut self,
        side: Side,
        limit: Option<Tick>,
        mut qty: u64,
        taker: OrderId,
        step: u64,
    ) -> (Vec<Trade>, u64) {
        let mut trades = Vec::new();
        while qty > 0 {
            let Some(level) = self.best(side.opposite()) else {
                break;
            };
            let marketable = match (side, limit) {
                (_, None) => true,
                (Side::Bid, Some(p)) => p >= level,
                (Side::Ask, Some(p)) => p <= level,
            };
            if !marketable {
                break;
            }
            let ladder = self.ladder_mut(side.opposite());
            let queue = ladder.get_mut(&level).expect("best level exists");
            let maker = queue.front_mut().expect("levels are never empty");
            let fill = qty.min(maker.qty);
            maker.qty -= fill;
            let maker_id = maker.id;
            if maker.qty == 0 {
                queue.pop_front();
                if queue.is_empty() {
                    ladder.remove(&level);
                }
                self.index.remove(&maker_id);
            }
            qty -= fill;
            let (buy_order_id, sell_order_id) = match side {
                Side::Bid => (taker, maker_id),
                Side::Ask => (maker_id, taker),
            };
            trades.push(Trade {
                buy_order_id,
                sell_order_id,
                price: level,
                qty: fill,
                step,
                aggressor: side,
            });
            self.ledger.executed += 2 * fill;
            self.last_trade = level;
            self.log(step, EventType::Trade, side, Some(level), fill, maker_id);
        }
        (trades, qty)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn book() -> OrderBook {
        OrderBook::new(PriceGrid::new(90, 110).unwrap())
    }

    fn limit(b: &mut OrderBook, side: Side, price: Tick, qty: u64, step: u64) -> LimitOutcome {
        b.submit_limit(side, price, qty, Owner::Noise, step).unwrap()
    }

    #[test]
    fn resting_bid_on_empty_book() {
        let mut b = book();
        let out = limit(&mut b, Side::Bid, 100, 1, 0);
        assert!(out.trades.is_empty());
        assert_eq!(b.best_bid(), Some(100));
    }

    #[test]
    fn crossing_limit_matches_at_resting_price() {
        let mut b = book();
        limit(&mut b, Side::Ask, 102, 1, 0);
        let out = limit(&mut b, Side::Bid, 102, 1, 1);
        assert_eq!(out.trades.len(), 1);
        assert_eq!((out.trades[0].price, out.trades[0].qty), (102, 1));
        assert!(b.is_empty(Side::Bid) && b.is_empty(Side::Ask));
    }

    #[test]
    fn fifo_within_level() {
        let mut b = book();
        let first = limit(&mut b, Side::Ask, 102, 1, 1).id;
        limit(&mut b, Side::Ask, 102, 1, 2);
        let out = limit(&mut b, Side::Bid, 103, 1, 3);
        assert_eq!(out.trades[0].sell_order_id, first);
        assert_eq!(out.trades[0].price, 102);
        assert_eq!(b.best_ask(), Some(102));
        assert_eq!(b.best_bid(), None);
    }

    #[test]
    fn market_order_walks_ladder() {
        let mut b = book();
        limit(&mut b, Side::Ask, 102, 1, 0);
        limit(&mut b, Side::Ask, 105, 1, 0);
        let trades = b.submit_market(Side::Bid, 2, 1).unwrap();
        let fills: Vec<_> = trades.iter().map(|t| (t.price, t.qty)).collect();
        assert_eq!(fills, vec![(102, 1), (105, 1)]);
        assert_eq!(b.last_trade(), 105);
    }

    #[test]
    fn market_order_on_empty_side() {
        let mut b = book();
        let err = b.submit_market(Side::Bid, 1, 0).unwrap_err();
        assert_eq!(err, BookError::LiquidityExhausted { unfilled: 1, trades: vec![] });

        limit(&mut b, Side::Ask, 102, 1, 0);
        let err = b.submit_market(Side::Ask, 1, 0).unwrap_err();
        assert!(matches!(err, BookError::LiquidityExhausted { unfilled: 1, .. }));
        assert_eq!(b.level_qty(Side::Ask, 102), 1);
    }

    #[test]
    fn partial_fill_reports_trades_and_remainder() {
        let mut b = book();
        limit(&mut b, Side::Bid, 99, 2, 0);
        match b.submit_market(Side::Ask, 5, 1) {
            Err(BookError::LiquidityExhausted { unfilled, trades }) => {
                assert_eq!(unfilled, 3);
                assert_eq!(trades.len(), 1);
                assert_eq!(trades[0].qty, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(b.ledger().unfilled, 3);
    }

    #[test]
    fn cancel_is_idempotent() {
        let mut b = book();
        let id = limit(&mut b, Side::Bid, 100, 1, 0).id;
        assert!(b.cancel(id, 1));
        assert!(!b.cancel(id, 1));
        assert!(!b.cancel(9_999, 1));
    }

    #[test]
    fn cancel_middle_keeps_fifo() {
        let mut b = book();
        let a = limit(&mut b, Side::Bid, 100, 2, 0).id;
        let m = limit(&mut b, Side::Bid, 100, 3, 1).id;
        let c = limit(&mut b, Side::Bid, 100, 4, 2).id;
        assert_eq!(b.level_qty(Side::Bid, 100), 9);
        assert!(b.cancel(m, 3));
        assert_eq!(b.level_qty(Side::Bid, 100), 6);
        let ids: Vec<_> = b.level_orders(Side::Bid, 100).iter().map(|o| o.id).collect();
        assert_eq!(ids, vec![a, c]);
    }

    #[test]
    fn quotes_spread_and_mid() {
        let mut b = book();
        limit(&mut b, Side::Bid, 100, 1, 0);
        assert_eq!(b.spread(), None);
        assert_eq!(b.mid(), None);
        limit(&mut b, Side::Ask, 102, 1, 0);
        assert_eq!(b.spread(), Some(2));
        assert_eq!(b.mid(), Some(HalfTicks(202)));

        let mut b = book();
        for p in [99, 100] {
            limit(&mut b, Side::Bid, p, 1, 0);
        }
        for p in [103, 102] {
            limit(&mut b, Side::Ask, p, 1, 0);
        }
        assert_eq!(b.spread(), Some(2));
        assert_eq!(b.mid().unwrap().as_f64(), 101.0);
    }

    #[test]
    fn half_tick_mid_is_exact() {
        let mut b = book();
        limit(&mut b, Side::Bid, 100, 1, 0);
        limit(&mut b, Side::Ask, 101, 1, 0);
        assert_eq!(b.mid().unwrap().as_f64(), 100.5);
    }

    #[test]
    fn depth_profile_bins() {
        let mut b = book();
        assert_eq!(b.depth_profile(3), DepthProfile { bid: vec![0; 3], ask: vec![0; 3] });
        limit(&mut b, Side::Bid, 100, 5, 0);
        limit(&mut b, Side::Ask, 102, 1, 0);
        let p = b.depth_profile(4);
        assert_eq!(p.bid, vec![5, 0, 0, 0]);
        assert_eq!(p.ask, vec![1, 0, 0, 0]);

        limit(&mut b, Side::Bid, 98, 2, 1);
        limit(&mut b, Side::Bid, 98, 3, 2);
        assert_eq!(b.depth_profile(4).bid, vec![5, 0, 5, 0]);
    }

    #[test]
    fn depth_profile_one_sided() {
        let mut b = book();
        limit(&mut b, Side::Bid, 100, 1, 0);
        limit(&mut b, Side::Bid, 97, 2, 0);
        let p = b.depth_profile(5);
        assert_eq!(p.bid, vec![1, 0, 0, 2, 0]);
        assert_eq!(p.ask, vec![0; 5]);
    }

    #[test]
    fn off_grid_rejected() {
        let mut b = book();
        let err = b.submit_limit(Side::Bid, 200, 1, Owner::Noise, 0).unwrap_err();
        assert!(matches!(err, BookError::OffGrid { price: 200, .. }));
        assert_eq!(b.ledger().rejected, 1);
        assert!(matches!(
            b.submit_limit(Side::Bid, 100, 0, Owner::Noise, 0),
            Err(BookError::ZeroQuantity)
        ));
    }

    #[test]
    fn bad_grid() {
        assert!(PriceGrid::new(0, 10).is_err());
        assert!(PriceGrid::new(10, 10).is_err());
    }

    #[test]
    fn event_log_csv() {
        let mut b = book().with_event_log();
        limit(&mut b, Side::Ask, 101, 1, 0);
        b.submit_market(Side::Bid, 1, 1).unwrap();
        let mut buf = Vec::new();
        b.write_event_log(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "step,event_type,side,price,qty,order_id");
        assert_eq!(lines[1], "0,LIMIT,ASK,101,1,1");
        assert_eq!(lines[2], "1,MARKET,BID,,1,2");
        assert_eq!(lines[3], "1,TRADE,BID,101,1,1");
    }
}
