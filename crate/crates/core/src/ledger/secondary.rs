//! The secondary ledger: one reduced block per settled group of primary
//! blocks, found by the reference printed on bank statements.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use super::chain::{Chain, ChainReport};
use crate::model::dump::{DumpError, DumpReader, SectionHeader, SectionWriter};
use crate::model::encoding::{decode_secondary, ENCODING_VERSION};
use crate::model::{Digest, Money, PrimaryBlock, Reference, SecondaryBlock};
use crate::privacy::{disclose_party, disclosed_key, DisclosurePolicy, LedgerSide, MaskRule, Role};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SecondaryError {
    #[error("blocks cannot share one secondary block: {0}")]
    MixedGroup(String),
    #[error("no primary blocks given")]
    Empty,
    #[error("reference {0} already on the secondary chain")]
    DuplicateReference(Reference),
}

/// Opaque statement reference: a truncated digest over the primary
/// references and a random salt. The salt is not kept, so the reference
/// cannot be recomputed from public data.
pub fn hashed_reference(primary_refs: &[&Reference], salt: u64, hex_len: usize) -> Reference {
    let mut h = Sha256::new();
    h.update([ENCODING_VERSION]);
    for r in primary_refs {
        h.update((r.as_str().len() as u32).to_be_bytes());
        h.update(r.as_str().as_bytes());
    }
    h.update(salt.to_be_bytes());
    let hex = hex::encode_upper(h.finalize());
    Reference::new(&hex[..hex_len.clamp(1, hex.len())])
}

/// Builds the secondary block for `primaries` without appending it.
///
/// `taken` reports references already in use so a colliding draw is redone.
pub fn derive_secondary<R: Rng>(
    primaries: &[&PrimaryBlock],
    policy: &DisclosurePolicy,
    rng: &mut R,
    pinned: Option<Reference>,
    taken: impl Fn(&str) -> bool,
) -> Result<SecondaryBlock, SecondaryError> {
    let first = *primaries.first().ok_or(SecondaryError::Empty)?;
    let key = disclosed_key(first, policy);
    for b in &primaries[1..] {
        if b.payer != first.payer || b.payee != first.payee {
            return Err(SecondaryError::MixedGroup("different parties".into()));
        }
        if b.concept_type != first.concept_type || b.region != first.region {
            return Err(SecondaryError::MixedGroup("different concept type or region".into()));
        }
        if disclosed_key(b, policy) != key {
            return Err(SecondaryError::MixedGroup("different day or disclosed concept".into()));
        }
    }
    let gov_to_gov = first.is_government_to_government();
    if gov_to_gov && primaries.len() > 1 {
        return Err(SecondaryError::MixedGroup("government-to-government blocks are disclosed one by one".into()));
    }
    let reference = match pinned {
        Some(r) => r,
        None if gov_to_gov => first.reference.clone(),
        None => {
            let refs: Vec<&Reference> = primaries.iter().map(|b| &b.reference).collect();
            let mask = if policy.salt_bits >= 64 { u64::MAX } else { (1u64 << policy.salt_bits) - 1 };
            loop {
                let r = hashed_reference(&refs, rng.random::<u64>() & mask, policy.reference_hex_len);
                if !taken(r.as_str()) {
                    break r;
                }
            }
        }
    };
    let rule = if gov_to_gov { MaskRule::Never } else { policy.mask_rule };
    let (date, region, concept) = key;
    Ok(SecondaryBlock {
        reference,
        prev_digest: Digest::ZERO,
        date,
        amount: primaries.iter().map(|b| b.amount).sum::<Money>(),
        payer: disclose_party(&first.payer, Role::Payer, first.payee.kind, LedgerSide::Secondary, rule),
        payee: disclose_party(&first.payee, Role::Payee, first.payer.kind, LedgerSide::Secondary, rule),
        concept,
        region,
        primary_refs: primaries.iter().map(|b| b.reference.clone()).collect(),
    })
}

#[derive(Clone, Debug)]
pub struct SecondaryLedger {
    chain_id: String,
    policy: DisclosurePolicy,
    chain: Chain<SecondaryBlock>,
    by_reference: HashMap<String, u32>,
    rng: ChaCha8Rng,
}

impl SecondaryLedger {
    pub fn new(chain_id: &str, policy: DisclosurePolicy, seed: u64) -> Self {
        Self {
            chain_id: chain_id.to_string(),
            policy,
            chain: Chain::default(),
            by_reference: HashMap::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn from_blocks(chain_id: &str, policy: DisclosurePolicy, blocks: Vec<SecondaryBlock>, head: Digest) -> Self {
        let mut ledger = Self::new(chain_id, policy, 0);
        ledger.chain = Chain::from_parts(blocks, head);
        ledger.by_reference = ledger
            .chain
            .blocks()
            .iter()
            .enumerate()
            .map(|(i, b)| (b.reference.as_str().to_string(), i as u32))
            .collect();
        ledger
    }

    pub fn policy(&self) -> &DisclosurePolicy {
        &self.policy
    }

    pub fn blocks(&self) -> &[SecondaryBlock] {
        self.chain.blocks()
    }

    pub fn len(&self) -> usize {
        self.chain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chain.is_empty()
    }

    pub fn head(&self) -> Digest {
        self.chain.head()
    }

    pub fn into_blocks(self) -> (Vec<SecondaryBlock>, Digest) {
        self.chain.into_parts()
    }

    /// Derives and appends the block for one settled group.
    pub fn record(&mut self, primaries: &[&PrimaryBlock], pinned: Option<Reference>) -> Result<Reference, SecondaryError> {
        if let Some(r) = &pinned {
            if self.by_reference.contains_key(r.as_str()) {
                return Err(SecondaryError::DuplicateReference(r.clone()));
            }
        }
        let by_reference = &self.by_reference;
        let block = derive_secondary(primaries, &self.policy, &mut self.rng, pinned, |r| by_reference.contains_key(r))?;
        if self.by_reference.contains_key(block.reference.as_str()) {
            return Err(SecondaryError::DuplicateReference(block.reference));
        }
        let reference = block.reference.clone();
        let i = self.chain.push(block) as u32;
        self.by_reference.insert(reference.as_str().to_string(), i);
        Ok(reference)
    }

    pub fn lookup(&self, reference: &str) -> Option<&SecondaryBlock> {
        self.by_reference.get(reference).map(|&i| &self.chain.blocks()[i as usize])
    }

    pub fn verify_chain(&self) -> ChainReport {
        self.chain.verify()
    }

    pub fn write_dump<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let p = &self.policy;
        let header = SectionHeader::new("secondary", &self.chain_id)
            .with("salt_bits", p.salt_bits)
            .with("reference_hex_len", p.reference_hex_len)
            .with("mask_rule", mask_rule_tag(p.mask_rule))
            .with("concept_levels_up", p.concept_levels_up)
            .with("region_levels_up", p.region_levels_up)
            .with("date_granularity", p.date_granularity.tag());
        let mut w = SectionWriter::begin(out, &header)?;
        for b in self.chain.blocks() {
            w.encoded(b)?;
        }
        w.finish(Some(self.chain.head()))
    }

    pub fn read_dump<R: BufRead>(input: R) -> Result<Self, DumpError> {
        let bad = |message: String| DumpError::Format { line: 0, message };
        let section = DumpReader::new(input).section()?.ok_or_else(|| bad("empty secondary dump".into()))?;
        let h = &section.header;
        if h.kind != "secondary" {
            return Err(bad(format!("expected a secondary section, found `{}`", h.kind)));
        }
        if section.declared_count != section.records.len() as u64 {
            return Err(bad(format!(
                "end line declares {} blocks, found {}",
                section.declared_count,
                section.records.len()
            )));
        }
        let num = |k: &str, d: usize| h.param(k).and_then(|v| v.parse().ok()).unwrap_or(d);
        let defaults = DisclosurePolicy::default();
        let policy = DisclosurePolicy {
            salt_bits: num("salt_bits", defaults.salt_bits as usize) as u32,
            reference_hex_len: num("reference_hex_len", defaults.reference_hex_len),
            mask_rule: h.param("mask_rule").and_then(parse_mask_rule).unwrap_or(defaults.mask_rule),
            concept_levels_up: num("concept_levels_up", defaults.concept_levels_up),
            region_levels_up: num("region_levels_up", defaults.region_levels_up),
            date_granularity: crate::model::Granularity::from_tag(num("date_granularity", 1) as u8)
                .unwrap_or(defaults.date_granularity),
        };
        let blocks = section
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| decode_secondary(r).map_err(|e| bad(format!("block {i}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let chain_id = h.chain_id.clone();
        Ok(Self::from_blocks(&chain_id, policy, blocks, section.head.unwrap_or(Digest::ZERO)))
    }
}

fn mask_rule_tag(r: MaskRule) -> &'static str {
    match r {
        MaskRule::PayeeOfGovernment => "payee-of-government",
        MaskRule::AnyPrivateWithGovernment => "any-private-with-government",
        MaskRule::Never => "never",
    }
}

fn parse_mask_rule(s: &str) -> Option<MaskRule> {
    [MaskRule::PayeeOfGovernment, MaskRule::AnyPrivateWithGovernment, MaskRule::Never]
        .into_iter()
        .find(|r| mask_rule_tag(*r) == s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DetailLevel, PartyCode, Timestamp, TrackingNumber};

    fn wage(reference: &str, minute: u32, cents: u64) -> PrimaryBlock {
        PrimaryBlock {
            reference: Reference::new(reference),
            prev_digest: Digest::ZERO,
            timestamp: Timestamp::ymd_hm(2024, 3, 29, 14, minute),
            amount: Money::from_cents(cents),
            payer: PartyCode::government("GOV- B4E5", None),
            payee: PartyCode::shared("2C3B4"),
            detailed_concept: "s236".parse().unwrap(),
            concept_type: "w24".parse().unwrap(),
            region: "rA12".parse().unwrap(),
            detail: DetailLevel::Full,
            cents: Vec::new(),
        }
    }

    #[test]
    fn wage_pair_becomes_one_block() {
        let (a, b) = (wage("535D3D0C", 47, 181_224), wage("22C5B3A7", 48, 40_012));
        let mut l = SecondaryLedger::new("s", DisclosurePolicy::default(), 1);
        let r = l.record(&[&a, &b], None).unwrap();
        assert_eq!(r.as_str().len(), 17);
        let s = l.lookup(r.as_str()).unwrap();
        assert_eq!(s.amount.to_string(), "2212.36");
        assert_eq!(s.payee.code, "2C***");
        assert_eq!(s.payer.code, "GOV- B4E5");
        assert_eq!(s.concept.as_str(), "s23");
        assert_eq!(s.date.to_string(), "2024/03/29");
        assert_eq!(s.region.as_str(), "rA1");
        assert!(l.lookup("0123456789ABCDEF0").is_none());
        let bytes = crate::model::CanonicalEncode::canonical_bytes(s);
        let needle = 0x2A1F3B4E5CAB6D7Fu64.to_be_bytes();
        assert!(!bytes.windows(8).any(|w| w == needle));
    }

    #[test]
    fn government_pair_keeps_reference_and_concept() {
        let mut t = wage("7E35D4FA", 43, 37_063_211);
        t.payer = PartyCode::government("GOV-AR3", None);
        t.payee = PartyCode::government("GOV- B4E5", None);
        t.detailed_concept = "s22".parse().unwrap();
        let mut l = SecondaryLedger::new("s", DisclosurePolicy::default(), 1);
        let r = l.record(&[&t], None).unwrap();
        assert_eq!(r.as_str(), "7E35D4FA");
        assert_eq!(l.lookup("7E35D4FA").unwrap().concept.as_str(), "s22");
        assert!(matches!(l.record(&[&t, &t], None), Err(SecondaryError::MixedGroup(_))));
    }

    #[test]
    fn mixed_groups_rejected() {
        let a = wage("A", 47, 1);
        let mut b = wage("B", 48, 1);
        b.payee = PartyCode::shared("9F9F9");
        let mut l = SecondaryLedger::new("s", DisclosurePolicy::default(), 1);
        assert!(matches!(l.record(&[&a, &b], None), Err(SecondaryError::MixedGroup(_))));
        let mut c = wage("C", 48, 1);
        c.timestamp = Timestamp::ymd_hm(2024, 3, 30, 9, 0);
        assert!(matches!(l.record(&[&a, &c], None), Err(SecondaryError::MixedGroup(_))));
        assert_eq!(l.record(&[], None), Err(SecondaryError::Empty));
    }

    #[test]
    fn salt_separates_identical_transactions() {
        let a = wage("A", 47, 5);
        let mut l = SecondaryLedger::new("s", DisclosurePolicy::default(), 9);
        let r1 = l.record(&[&a], None).unwrap();
        let r2 = l.record(&[&a], None).unwrap();
        assert_ne!(r1, r2);
        assert!(l.verify_chain().ok);
    }

    #[test]
    fn dump_round_trip() {
        let mut l = SecondaryLedger::new("s", DisclosurePolicy::default(), 3);
        let mut a = wage("A", 47, 5);
        a.cents = vec![TrackingNumber::new(1)];
        l.record(&[&a], Some(Reference::new("A46FE3923CB4561B0"))).unwrap();
        let mut out = Vec::new();
        l.write_dump(&mut out).unwrap();
        let back = SecondaryLedger::read_dump(&out[..]).unwrap();
        assert_eq!(back.policy(), l.policy());
        assert_eq!(back.head(), l.head());
        assert!(back.verify_chain().ok);
        let b = back.lookup("A46FE3923CB4561B0").unwrap();
        assert_eq!(b.amount, Money::from_cents(5));
        assert!(b.primary_refs.is_empty());
    }
}
