//! Sensor placement games on monitored networks.

pub mod analytic;
pub mod approx;
pub mod colgen;
pub mod cover;
pub mod error;
pub mod game;
pub mod lp;
pub mod netio;
pub mod oracle;

pub use error::{Error, Result};
pub use game::{Instance, MixedAttack, MixedDefense, PureDefense};
