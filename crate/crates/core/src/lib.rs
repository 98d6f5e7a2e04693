//! A single-asset market simulation laboratory.
//!
//! * [`order_book`]: price-time-priority continuous double auction.
//! * [`zim`]: zero-intelligence Poisson order flow driving the book.
//! * [`cont`]: heterogeneous threshold traders with linear price impact, plus
//!   an informed subgroup that trades on the lagged return.
//! * [`hybrid`]: threshold traders sending market orders into the
//!   zero-intelligence book.
//! * [`leverage`]: leveraged value funds with margin calls on the book.
//! * [`stats`]: stylized-fact statistics, compliance scores and fitness.
//! * [`fractal`]: box-counting dimension and multifractal spectra.
//! * [`sweep`]: full-factorial parameter sweeps with stable seeding.
//! * [`io`]: price CSV ingestion, config files and run manifests.

pub mod cont;
pub mod error;
pub mod fractal;
pub mod hybrid;
pub mod io;
pub mod leverage;
pub mod model;
pub mod order_book;
pub mod output;
pub mod rng;
pub mod stats;
pub mod sweep;
pub mod zim;

pub use error::{Error, Result};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/order-book.md")]
    mod order_book {}
    #[doc = include_str!("../../../book/src/noise-traders.md")]
    mod noise_traders {}
    #[doc = include_str!("../../../book/src/threshold-traders.md")]
    mod threshold_traders {}
    #[doc = include_str!("../../../book/src/hybrid.md")]
    mod hybrid {}
    #[doc = include_str!("../../../book/src/leverage.md")]
    mod leverage {}
    #[doc = include_str!("../../../book/src/stylized-facts.md")]
    mod stylized_facts {}
    #[doc = include_str!("../../../book/src/multifractal.md")]
    mod multifractal {}
    #[doc = include_str!("../../../book/src/sweeps.md")]
    mod sweeps {}
    #[doc = include_str!("../../../book/src/command-line.md")]
    mod command_line {}
}
