//! Shared domain types and the canonical encoding used for digests and dumps.

pub mod block;
pub mod code;
pub mod concepts;
pub mod dump;
pub mod encoding;
pub mod money;
pub mod party;
pub mod time;
pub mod tracking;

pub use block::{AccountId, DetailLevel, Direction, PrimaryBlock, Reference, SecondaryBlock, StatementEntry};
pub use code::{CodeError, ConceptCode, RegionCode};
pub use encoding::{CanonicalEncode, DecodeError, Digest};
pub use money::Money;
pub use party::{PartyCode, PartyKind, GOVERNMENT_PREFIX};
pub use time::{Granularity, Timestamp};
pub use tracking::{NumberClass, TrackingNumber};
