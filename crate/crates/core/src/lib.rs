//! Kinetic wealth exchange with quenched saving propensities and
//! preferential pair selection, together with the weighted trade network
//! the trades induce and the statistics used to characterize both.

pub mod analysis;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod exchange;
pub mod experiments;
pub mod network;
pub mod output;
pub mod params;
pub mod rng;
pub mod sampler;
pub mod selection;

pub use error::{Error, Result};
pub use exchange::{Market, QssConfig, QssReport, SavingProfile, TradeEvent, WealthState};
pub use params::{Exponent, InitialWealth, ModelParams};
