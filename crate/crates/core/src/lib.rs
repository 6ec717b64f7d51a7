//! Cent-level money tracking: tracking-number registry, banks, the primary
//! and secondary ledgers, disclosure, verification, analytics, and a
//! scenario simulator.

pub mod analytics;
pub mod bank;
pub mod ledger;
pub mod model;
pub mod privacy;
pub mod registry;
pub mod sim;
pub mod verify;

pub use model::*;
