//! The two public ledgers.

pub mod chain;
pub mod primary;
pub mod secondary;

pub use chain::{Chain, ChainReport};
pub use primary::{BlockDraft, BlockFilter, LedgerError, PrimaryConfig, PrimaryLedger, TraceDirection};
pub use secondary::{SecondaryError, SecondaryLedger};
