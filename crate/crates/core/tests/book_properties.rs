use std::collections::HashMap;

use marketlab::order_book::{BookError, OrderBook, OrderId, Owner, PriceGrid, Side, Tick, Trade};
use proptest::prelude::*;

#[derive(Clone, Debug)]
enum Op {
    Limit(Side, Tick, u64),
    Market(Side, u64),
    Cancel(OrderId),
}

fn side() -> impl Strategy<Value = Side> {
    prop_oneof![Just(Side::Bid), Just(Side::Ask)]
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        3 => (side(), 0..=11i64, 1..=5u64).prop_map(|(s, p, q)| Op::Limit(s, p, q)),
        1 => (side(), 1..=8u64).prop_map(|(s, q)| Op::Market(s, q)),
        1 => (1..=50u64).prop_map(Op::Cancel),
    ]
}

fn ops() -> impl Strategy<Value = Vec<Op>> {
    prop::collection::vec(op(), 1..=50)
}

/// Applies one op and returns its trades.
fn apply(book: &mut OrderBook, op: &Op, step: u64) -> Vec<Trade> {
    match *op {
        Op::Limit(s, p, q) => book
            .submit_limit(s, p, q, Owner::Noise, step)
            .map(|o| o.trades)
            .unwrap_or_default(),
        Op::Market(s, q) => match book.submit_market(s, q, step) {
            Ok(t) => t,
            Err(BookError::LiquidityExhausted { trades, .. }) => trades,
            Err(e) => panic!("{e}"),
        },
        Op::Cancel(id) => {
            book.cancel(id, step);
            Vec::new()
        }
    }
}

fn resting_prices(book: &OrderBook) -> HashMap<OrderId, Tick> {
    let mut m = HashMap::new();
    for side in [Side::Bid, Side::Ask] {
        for (price, _) in book.levels(side) {
            for o in book.level_orders(side, price) {
                m.insert(o.id, price);
            }
        }
    }
    m
}

fn grid() -> PriceGrid {
    PriceGrid::new(1, 10).unwrap()
}

/// Flat list of resting orders in arrival order, rescanned for every fill.
struct Rescan {
    resting: Vec<(OrderId, Side, Tick, u64)>,
    next: OrderId,
}

impl Rescan {
    fn apply(&mut self, op: &Op) -> Vec<(OrderId, OrderId, Tick, u64)> {
        let (side, limit, mut qty) = match *op {
            Op::Limit(s, p, q) => (s, Some(p), q),
            Op::Market(s, q) => (s, None, q),
            Op::Cancel(id) => {
                self.resting.retain(|o| o.0 != id);
                return Vec::new();
            }
        };
        let id = self.next;
        self.next += 1;
        if limit.is_some_and(|p| !(1..=10).contains(&p)) {
            return Vec::new();
        }
        let mut fills = Vec::new();
        while qty > 0 {
            let candidates = self.resting.iter().enumerate().filter(|(_, o)| {
                o.1 != side
                    && match (side, limit) {
                        (_, None) => true,
                        (Side::Bid, Some(l)) => o.2 <= l,
                        (Side::Ask, Some(l)) => o.2 >= l,
                    }
            });
            // min_by_key keeps the first minimum, so arrival order breaks ties
            let best = match side {
                Side::Bid => candidates.min_by_key(|(_, o)| o.2),
                Side::Ask => candidates.min_by_key(|(_, o)| -o.2),
            };
            let Some((i, &(rid, _, price, rq))) = best else { break };
            let q = qty.min(rq);
            fills.push(if side == Side::Bid { (id, rid, price, q) } else { (rid, id, price, q) });
            qty -= q;
            if q == rq {
                self.resting.remove(i);
            } else {
                self.resting[i].3 -= q;
            }
        }
        if let (Some(p), true) = (limit, qty > 0) {
            self.resting.push((id, side, p, qty));
        }
        fills
    }
}

proptest! {
    #[test]
    fn never_crossed_and_conserving(ops in ops()) {
        let mut book = OrderBook::new(grid());
        for (step, op) in ops.iter().enumerate() {
            apply(&mut book, op, step as u64);
            if let (Some(b), Some(a)) = (book.best_bid(), book.best_ask()) {
                prop_assert!(b < a);
            }
            let l = book.ledger();
            prop_assert_eq!(l.submitted, l.executed + book.resting_qty() + l.cancelled + l.unfilled + l.rejected);
        }
    }

    #[test]
    fn trades_print_at_the_consumed_order_price(ops in ops()) {
        let mut book = OrderBook::new(grid());
        for (step, op) in ops.iter().enumerate() {
            let before = resting_prices(&book);
            for t in apply(&mut book, op, step as u64) {
                let maker = if t.aggressor == Side::Bid { t.sell_order_id } else { t.buy_order_id };
                prop_assert_eq!(before.get(&maker), Some(&t.price));
            }
        }
    }

    #[test]
    fn replay_is_identical(ops in ops()) {
        let run = || {
            let mut book = OrderBook::new(grid());
            let trades: Vec<Trade> = ops.iter().enumerate().flat_map(|(i, op)| apply(&mut book, op, i as u64)).collect();
            (trades, book.levels(Side::Bid), book.levels(Side::Ask), book.ledger())
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn matches_rescanning_oracle(ops in ops()) {
        let mut book = OrderBook::new(grid());
        let mut oracle = Rescan { resting: Vec::new(), next: 1 };
        for (step, op) in ops.iter().enumerate() {
            let got: Vec<_> = apply(&mut book, op, step as u64)
                .iter()
                .map(|t| (t.buy_order_id, t.sell_order_id, t.price, t.qty))
                .collect();
            prop_assert_eq!(got, oracle.apply(op));
        }
    }
}
