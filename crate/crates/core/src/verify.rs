//! Checks the public can run: finding a statement's block on the secondary
//! ledger, and matching daily totals between the two ledgers.

use std::collections::BTreeMap;

use crate::ledger::{PrimaryLedger, SecondaryLedger};
use crate::model::{ConceptCode, Money, RegionCode, StatementEntry, Timestamp};
use crate::privacy::disclosed_key;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StatementCheck {
    Found { amount: Money, date: Timestamp, amount_matches: bool, date_matches: bool },
    NotFound,
}

impl StatementCheck {
    pub fn is_consistent(&self) -> bool {
        matches!(self, StatementCheck::Found { amount_matches: true, date_matches: true, .. })
    }
}

pub fn verify_statement(secondary: &SecondaryLedger, entry: &StatementEntry) -> StatementCheck {
    match secondary.lookup(entry.reference.as_str()) {
        None => StatementCheck::NotFound,
        Some(b) => StatementCheck::Found {
            amount: b.amount,
            date: b.date,
            amount_matches: b.amount == entry.amount,
            date_matches: b.date.day_number() == entry.date.day_number(),
        },
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reconciliation {
    pub primary_total: Money,
    pub secondary_total: Money,
}

impl Reconciliation {
    pub fn matches(&self) -> bool {
        self.primary_total == self.secondary_total
    }
}

/// Totals for one day, compared at the secondary ledger's disclosure levels.
/// Primary blocks are mapped up to the disclosed region and concept before
/// the prefixes are applied, so both sides are filtered on the same keys.
pub fn reconcile(
    primary: &PrimaryLedger,
    secondary: &SecondaryLedger,
    day: i64,
    region_prefix: &str,
    concept_prefix: &str,
) -> Reconciliation {
    let policy = secondary.policy();
    let primary_total = primary
        .blocks()
        .iter()
        .filter(|b| b.timestamp.day_number() == day)
        .filter_map(|b| {
            let (_, region, concept) = disclosed_key(b, policy);
            (region.starts_with(region_prefix) && concept.starts_with(concept_prefix)).then_some(b.amount.cents())
        })
        .sum();
    let secondary_total = secondary
        .blocks()
        .iter()
        .filter(|b| {
            b.date.day_number() == day && b.region.starts_with(region_prefix) && b.concept.starts_with(concept_prefix)
        })
        .map(|b| b.amount.cents())
        .sum();
    Reconciliation { primary_total: Money::from_cents(primary_total), secondary_total: Money::from_cents(secondary_total) }
}

pub type BucketKey = (i64, RegionCode, ConceptCode);

/// Totals for every disclosed (day, region, concept) bucket on either side.
pub fn reconcile_all(primary: &PrimaryLedger, secondary: &SecondaryLedger) -> BTreeMap<BucketKey, Reconciliation> {
    let policy = secondary.policy();
    let mut out: BTreeMap<BucketKey, (u64, u64)> = BTreeMap::new();
    for b in primary.blocks() {
        let (date, region, concept) = disclosed_key(b, policy);
        out.entry((date.day_number(), region, concept)).or_default().0 += b.amount.cents();
    }
    for b in secondary.blocks() {
        out.entry((b.date.day_number(), b.region.clone(), b.concept.clone())).or_default().1 += b.amount.cents();
    }
    out.into_iter()
        .map(|(k, (p, s))| (k, Reconciliation { primary_total: Money::from_cents(p), secondary_total: Money::from_cents(s) }))
        .collect()
}

/// Buckets whose totals differ.
pub fn reconcile_mismatches(primary: &PrimaryLedger, secondary: &SecondaryLedger) -> Vec<(BucketKey, Reconciliation)> {
    reconcile_all(primary, secondary).into_iter().filter(|(_, r)| !r.matches()).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LedgerCheck {
    pub primary_chain_ok: bool,
    pub secondary_chain_ok: bool,
    pub mismatched_buckets: usize,
}

impl LedgerCheck {
    pub fn is_ok(&self) -> bool {
        self.primary_chain_ok && self.secondary_chain_ok && self.mismatched_buckets == 0
    }
}

/// Chain integrity of both ledgers plus reconciliation of every bucket.
pub fn check_ledgers(primary: &PrimaryLedger, secondary: &SecondaryLedger) -> LedgerCheck {
    LedgerCheck {
        primary_chain_ok: primary.verify_chain().ok,
        secondary_chain_ok: secondary.verify_chain().ok,
        mismatched_buckets: reconcile_mismatches(primary, secondary).len(),
    }
}
