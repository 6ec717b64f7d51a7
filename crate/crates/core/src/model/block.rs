use std::fmt;

use serde::{Deserialize, Serialize};

use super::code::{ConceptCode, RegionCode};
use super::encoding::Digest;
use super::money::Money;
use super::party::PartyCode;
use super::time::Timestamp;
use super::tracking::TrackingNumber;

/// Opaque block reference: 8 hex digits on the primary ledger, a truncated
/// digest (or a copied primary reference) on the secondary ledger.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Reference(String);

impl Reference {
    pub fn new(s: impl Into<String>) -> Self {
        Self(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Reference {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

/// Whether a primary block carries the transaction's detailed concept or only
/// its generalised concept (the random-detail privacy split).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DetailLevel {
    Full,
    Generic,
}

impl DetailLevel {
    pub fn tag(self) -> u8 {
        match self {
            DetailLevel::Full => 0,
            DetailLevel::Generic => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(DetailLevel::Full),
            1 => Some(DetailLevel::Generic),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimaryBlock {
    pub reference: Reference,
    pub prev_digest: Digest,
    pub timestamp: Timestamp,
    pub amount: Money,
    pub payer: PartyCode,
    pub payee: PartyCode,
    pub detailed_concept: ConceptCode,
    pub concept_type: ConceptCode,
    pub region: RegionCode,
    pub detail: DetailLevel,
    pub cents: Vec<TrackingNumber>,
}

impl PrimaryBlock {
    pub fn is_government_to_government(&self) -> bool {
        self.payer.is_government() && self.payee.is_government()
    }

    pub fn involves_government(&self) -> bool {
        self.payer.is_government() || self.payee.is_government()
    }

    pub fn involves(&self, code: &str) -> bool {
        self.payer.code == code || self.payee.code == code
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecondaryBlock {
    pub reference: Reference,
    pub prev_digest: Digest,
    pub date: Timestamp,
    pub amount: Money,
    pub payer: PartyCode,
    pub payee: PartyCode,
    pub concept: ConceptCode,
    pub region: RegionCode,
    /// Primary blocks covered by this block. Kept in memory for oracle checks
    /// only; never part of the canonical encoding, so it is empty after load.
    pub primary_refs: Vec<Reference>,
}

/// Index of an account in an economy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AccountId(pub u32);

impl fmt::Display for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A{:05}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Debit,
    Credit,
}

/// One line of a bank statement. `reference` points at the secondary block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StatementEntry {
    pub account: AccountId,
    pub date: Timestamp,
    pub amount: Money,
    pub reference: Reference,
    pub counterpart: String,
    pub direction: Direction,
}

impl StatementEntry {
    /// Delimited form: `account|date|amount|reference|counterpart|D/C`.
    pub fn to_line(&self) -> String {
        let dir = match self.direction {
            Direction::Debit => "D",
            Direction::Credit => "C",
        };
        format!(
            "{}|{}|{}|{}|{}|{}",
            self.account,
            self.date.date().format("%Y-%m-%d"),
            self.amount,
            self.reference,
            self.counterpart,
            dir
        )
    }

    pub fn from_line(line: &str) -> Option<StatementEntry> {
        let parts: Vec<&str> = line.split('|').collect();
        if parts.len() != 6 {
            return None;
        }
        let account = AccountId(parts[0].trim_start_matches('A').parse().ok()?);
        let date: Timestamp = parts[1].parse().ok()?;
        let direction = match parts[5] {
            "D" => Direction::Debit,
            "C" => Direction::Credit,
            _ => return None,
        };
        Some(StatementEntry {
            account,
            date,
            amount: parts[2].parse().ok()?,
            reference: Reference::new(parts[3]),
            counterpart: parts[4].to_string(),
            direction,
        })
    }
}
