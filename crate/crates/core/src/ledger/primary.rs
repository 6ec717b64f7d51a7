//! The primary ledger: every cent of every transaction, with anonymized
//! parties and full time and place detail.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{self, BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::chain::{Chain, ChainReport};
use crate::model::concepts::{parse_banknote_concept, MONEY_REPRINT};
use crate::model::dump::{DumpError, DumpReader, SectionHeader, SectionWriter};
use crate::model::encoding::decode_primary;
use crate::model::{
    ConceptCode, DetailLevel, Digest, Money, PartyCode, PrimaryBlock, Reference, RegionCode, Timestamp,
    TrackingNumber,
};

pub const DEFAULT_MAX_BLOCK_CENTS: u64 = 1_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LedgerError {
    #[error("cent {0} appears more than once in the transaction")]
    DuplicateCent(TrackingNumber),
    #[error("reference {0} already on the chain")]
    DuplicateReference(Reference),
    #[error("unknown block reference {0}")]
    UnknownReference(Reference),
    #[error("empty block")]
    EmptyBlock,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimaryConfig {
    pub chain_id: String,
    /// Blocks with more cents are split; `None` disables splitting.
    pub max_block_cents: Option<u64>,
    pub reference_hex_len: usize,
    pub seed: u64,
}

impl Default for PrimaryConfig {
    fn default() -> Self {
        Self {
            chain_id: "primary".into(),
            max_block_cents: Some(DEFAULT_MAX_BLOCK_CENTS),
            reference_hex_len: 8,
            seed: 0,
        }
    }
}

/// A block before it is placed on the chain.
#[derive(Clone, Debug)]
pub struct BlockDraft {
    /// Fixed reference; drawn at random when absent.
    pub reference: Option<Reference>,
    pub timestamp: Timestamp,
    pub payer: PartyCode,
    pub payee: PartyCode,
    pub detailed_concept: ConceptCode,
    pub concept_type: ConceptCode,
    pub region: RegionCode,
    pub detail: DetailLevel,
    pub cents: Vec<TrackingNumber>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceDirection {
    /// Forward in time from the starting block.
    Down,
    /// Backward in time from the starting block.
    Up,
}

#[derive(Clone, Debug, Default)]
pub struct BlockFilter {
    pub from: Option<Timestamp>,
    pub to: Option<Timestamp>,
    pub region_prefix: Option<String>,
    /// Matches the detailed concept or the concept type.
    pub concept_prefix: Option<String>,
    pub party: Option<String>,
    pub min_amount: Option<Money>,
    pub max_amount: Option<Money>,
}

impl BlockFilter {
    pub fn matches(&self, b: &PrimaryBlock) -> bool {
        let day = b.timestamp.day_number();
        self.from.is_none_or(|t| day >= t.day_number())
            && self.to.is_none_or(|t| day <= t.day_number())
            && self.region_prefix.as_deref().is_none_or(|p| b.region.starts_with(p))
            && self
                .concept_prefix
                .as_deref()
                .is_none_or(|p| b.detailed_concept.starts_with(p) || b.concept_type.starts_with(p))
            && self.party.as_deref().is_none_or(|p| b.payer.code == p || b.payee.code == p)
            && self.min_amount.is_none_or(|m| b.amount >= m)
            && self.max_amount.is_none_or(|m| b.amount <= m)
    }
}

const BUFFER_LIMIT: usize = 1 << 16;

/// Cent → blocks index kept as sorted runs that merge like a binary counter,
/// so appends stay cheap and a lookup is a handful of binary searches.
#[derive(Clone, Debug, Default)]
struct CentIndex {
    runs: Vec<(Vec<u64>, Vec<u32>)>,
    buffer: Vec<(u64, u32)>,
}

impl CentIndex {
    fn add(&mut self, block: u32, cents: &[TrackingNumber]) {
        self.buffer.extend(cents.iter().map(|t| (t.value(), block)));
        if self.buffer.len() >= BUFFER_LIMIT {
            self.flush();
        }
    }

    fn flush(&mut self) {
        let mut buf = std::mem::take(&mut self.buffer);
        buf.sort_unstable();
        self.runs.push(buf.into_iter().unzip());
        while self.runs.len() >= 2 && self.runs[self.runs.len() - 2].0.len() <= 2 * self.runs[self.runs.len() - 1].0.len()
        {
            let b = self.runs.pop().expect("two runs");
            let a = self.runs.pop().expect("two runs");
            self.runs.push(merge(a, b));
        }
    }

    fn lookup(&self, cent: u64) -> Vec<u32> {
        let mut out: Vec<u32> = self.buffer.iter().filter(|(c, _)| *c == cent).map(|(_, b)| *b).collect();
        for (cents, blocks) in &self.runs {
            let lo = cents.partition_point(|&c| c < cent);
            let hi = cents.partition_point(|&c| c <= cent);
            out.extend_from_slice(&blocks[lo..hi]);
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

fn merge(a: (Vec<u64>, Vec<u32>), b: (Vec<u64>, Vec<u32>)) -> (Vec<u64>, Vec<u32>) {
    let n = a.0.len() + b.0.len();
    let (mut cents, mut blocks) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let (mut i, mut j) = (0, 0);
    while i < a.0.len() || j < b.0.len() {
        let take_a = j == b.0.len() || (i < a.0.len() && (a.0[i], a.1[i]) <= (b.0[j], b.1[j]));
        if take_a {
            cents.push(a.0[i]);
            blocks.push(a.1[i]);
            i += 1;
        } else {
            cents.push(b.0[j]);
            blocks.push(b.1[j]);
            j += 1;
        }
    }
    (cents, blocks)
}

#[derive(Clone, Debug)]
pub struct PrimaryLedger {
    config: PrimaryConfig,
    chain: Chain<PrimaryBlock>,
    rng: ChaCha8Rng,
    by_reference: HashMap<String, u32>,
    by_day: BTreeMap<i64, Vec<u32>>,
    by_bucket: HashMap<(i64, RegionCode, ConceptCode), Vec<u32>>,
    /// Money-reprint blocks by banknote serial.
    reprints: HashMap<u64, Vec<u32>>,
    cents: Option<CentIndex>,
}

impl PrimaryLedger {
    pub fn new(config: PrimaryConfig) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            chain: Chain::default(),
            by_reference: HashMap::new(),
            by_day: BTreeMap::new(),
            by_bucket: HashMap::new(),
            reprints: HashMap::new(),
            cents: None,
        }
    }

    /// Builds a ledger around existing blocks without checking the chain.
    pub fn from_blocks(config: PrimaryConfig, blocks: Vec<PrimaryBlock>, head: Digest) -> Self {
        let mut ledger = Self::new(config);
        ledger.chain = Chain::from_parts(blocks, head);
        for i in 0..ledger.chain.len() {
            ledger.index_block(i as u32);
        }
        ledger
    }

    pub fn config(&self) -> &PrimaryConfig {
        &self.config
    }

    pub fn blocks(&self) -> &[PrimaryBlock] {
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

    pub fn into_blocks(self) -> (Vec<PrimaryBlock>, Digest) {
        self.chain.into_parts()
    }

    /// Turns on the cent index used by [`trace_cent`](Self::trace_cent).
    /// Without it tracing falls back to a scan of every block.
    pub fn enable_cent_index(&mut self) {
        if self.cents.is_some() {
            return;
        }
        let mut index = CentIndex::default();
        for (i, b) in self.chain.blocks().iter().enumerate() {
            index.add(i as u32, &b.cents);
        }
        self.cents = Some(index);
    }

    pub fn contains_reference(&self, r: &str) -> bool {
        self.by_reference.contains_key(r)
    }

    pub fn get(&self, r: &str) -> Option<&PrimaryBlock> {
        self.by_reference.get(r).map(|&i| &self.chain.blocks()[i as usize])
    }

    pub fn position(&self, r: &str) -> Option<usize> {
        self.by_reference.get(r).map(|&i| i as usize)
    }

    fn fresh_reference(&mut self, taken: &HashSet<String>) -> Reference {
        loop {
            let v: u64 = self.rng.random();
            let width = self.config.reference_hex_len.clamp(1, 16);
            let s = format!("{:016X}", v)[16 - width..].to_string();
            if !self.by_reference.contains_key(&s) && !taken.contains(&s) {
                return Reference::new(s);
            }
        }
    }

    fn subdivide(&self, draft: BlockDraft) -> Vec<BlockDraft> {
        let limit = match self.config.max_block_cents {
            Some(m) if m > 0 && draft.cents.len() as u64 > m && !(draft.payer.is_government() && draft.payee.is_government()) => m as usize,
            _ => return vec![draft],
        };
        let mut parts = Vec::with_capacity(draft.cents.len().div_ceil(limit));
        for (i, chunk) in draft.cents.chunks(limit).enumerate() {
            parts.push(BlockDraft {
                reference: if i == 0 { draft.reference.clone() } else { None },
                cents: chunk.to_vec(),
                ..draft.clone_header()
            });
        }
        parts
    }

    /// Appends one transaction's blocks, splitting any that exceed the size
    /// limit. Either every block is appended or none is.
    pub fn append_transaction(&mut self, drafts: Vec<BlockDraft>) -> Result<Vec<Reference>, LedgerError> {
        if drafts.iter().any(|d| d.cents.is_empty()) {
            return Err(LedgerError::EmptyBlock);
        }
        check_disjoint(&drafts)?;
        let mut pinned = HashSet::new();
        for d in &drafts {
            if let Some(r) = &d.reference {
                if self.by_reference.contains_key(r.as_str()) || !pinned.insert(r.as_str().to_string()) {
                    return Err(LedgerError::DuplicateReference(r.clone()));
                }
            }
        }
        let parts: Vec<BlockDraft> = drafts.into_iter().flat_map(|d| self.subdivide(d)).collect();
        let mut taken = pinned;
        let mut refs = Vec::with_capacity(parts.len());
        for part in parts {
            let reference = match part.reference {
                Some(r) => r,
                None => self.fresh_reference(&taken),
            };
            taken.insert(reference.as_str().to_string());
            let block = PrimaryBlock {
                reference: reference.clone(),
                prev_digest: Digest::ZERO,
                timestamp: part.timestamp,
                amount: Money::from_cents(part.cents.len() as u64),
                payer: part.payer,
                payee: part.payee,
                detailed_concept: part.detailed_concept,
                concept_type: part.concept_type,
                region: part.region,
                detail: part.detail,
                cents: part.cents,
            };
            let index = self.chain.push(block) as u32;
            self.index_block(index);
            refs.push(reference);
        }
        Ok(refs)
    }

    fn index_block(&mut self, i: u32) {
        let b = &self.chain.blocks()[i as usize];
        let day = b.timestamp.day_number();
        self.by_reference.insert(b.reference.as_str().to_string(), i);
        self.by_day.entry(day).or_default().push(i);
        self.by_bucket.entry((day, b.region.clone(), b.concept_type.clone())).or_default().push(i);
        if b.concept_type.as_str() == MONEY_REPRINT {
            if let Some(serial) = parse_banknote_concept(b.detailed_concept.as_str()) {
                self.reprints.entry(serial).or_default().push(i);
            }
        }
        if let Some(index) = &mut self.cents {
            index.add(i, &b.cents);
        }
    }

    pub fn verify_chain(&self) -> ChainReport {
        self.chain.verify()
    }

    /// Blocks matching every supplied predicate, in chain order.
    pub fn query(&self, filter: &BlockFilter) -> Vec<&PrimaryBlock> {
        let blocks = self.chain.blocks();
        if filter.from.is_none() && filter.to.is_none() {
            return blocks.iter().filter(|b| filter.matches(b)).collect();
        }
        let lo = filter.from.map_or(i64::MIN, |t| t.day_number());
        let hi = filter.to.map_or(i64::MAX, |t| t.day_number());
        if lo > hi {
            return Vec::new();
        }
        let mut ids: Vec<u32> = self.by_day.range(lo..=hi).flat_map(|(_, ids)| ids.iter().copied()).collect();
        ids.sort_unstable();
        ids.into_iter().map(|i| &blocks[i as usize]).filter(|b| filter.matches(b)).collect()
    }

    /// Blocks recorded on `day` for an exact region and concept type.
    pub fn bucket(&self, day: i64, region: &RegionCode, concept_type: &ConceptCode) -> Vec<&PrimaryBlock> {
        self.by_bucket
            .get(&(day, region.clone(), concept_type.clone()))
            .map(|ids| ids.iter().map(|&i| &self.chain.blocks()[i as usize]).collect())
            .unwrap_or_default()
    }

    pub fn days(&self) -> impl Iterator<Item = i64> + '_ {
        self.by_day.keys().copied()
    }

    /// Chain positions of blocks that carry `tn`, ascending. A banknote cent
    /// is also linked to the reprint block that retired standard cents for
    /// its note.
    fn positions_of(&self, tn: TrackingNumber) -> Vec<u32> {
        let mut out = match &self.cents {
            Some(index) => index.lookup(tn.value()),
            None => self
                .chain
                .blocks()
                .iter()
                .enumerate()
                .filter(|(_, b)| b.cents.contains(&tn))
                .map(|(i, _)| i as u32)
                .collect(),
        };
        if tn.class() == crate::model::NumberClass::Banknote {
            let text = tn.render();
            for (&serial, ids) in &self.reprints {
                for &i in ids {
                    let denomination = self.chain.blocks()[i as usize].amount.cents();
                    if banknote_belongs(&text, serial, denomination) {
                        out.push(i);
                    }
                }
            }
            out.sort_unstable();
            out.dedup();
        }
        out
    }

    /// Block references that carry `tn`, starting at `from` (inclusive) and
    /// walking down (forward) or up (backward) the chain.
    pub fn trace_cent(
        &self,
        tn: TrackingNumber,
        direction: TraceDirection,
        from: Option<&Reference>,
    ) -> Result<Vec<Reference>, LedgerError> {
        let start = match from {
            Some(r) => Some(self.position(r.as_str()).ok_or_else(|| LedgerError::UnknownReference(r.clone()))? as u32),
            None => None,
        };
        let positions = self.positions_of(tn);
        let blocks = self.chain.blocks();
        let refs = |it: &mut dyn Iterator<Item = &u32>| it.map(|&i| blocks[i as usize].reference.clone()).collect();
        Ok(match direction {
            TraceDirection::Down => refs(&mut positions.iter().filter(|&&i| start.is_none_or(|s| i >= s))),
            TraceDirection::Up => refs(&mut positions.iter().rev().filter(|&&i| start.is_none_or(|s| i <= s))),
        })
    }

    pub fn write_dump<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let header = SectionHeader::new("primary", &self.config.chain_id)
            .with("max_block_cents", self.config.max_block_cents.map_or("none".to_string(), |m| m.to_string()))
            .with("reference_hex_len", self.config.reference_hex_len);
        let mut w = SectionWriter::begin(out, &header)?;
        for b in self.chain.blocks() {
            w.encoded(b)?;
        }
        w.finish(Some(self.chain.head()))
    }

    /// Reads a dump back. The chain is not checked here; call
    /// [`verify_chain`](Self::verify_chain) for that.
    pub fn read_dump<R: BufRead>(input: R) -> Result<Self, DumpError> {
        let mut reader = DumpReader::new(input);
        let section = reader
            .section()?
            .ok_or_else(|| DumpError::Format { line: 0, message: "empty primary dump".into() })?;
        let bad = |message: String| DumpError::Format { line: 0, message };
        if section.header.kind != "primary" {
            return Err(bad(format!("expected a primary section, found `{}`", section.header.kind)));
        }
        if section.declared_count != section.records.len() as u64 {
            return Err(bad(format!(
                "end line declares {} blocks, found {}",
                section.declared_count,
                section.records.len()
            )));
        }
        let max_block_cents = match section.header.param("max_block_cents") {
            None | Some("none") => None,
            Some(v) => Some(v.parse().map_err(|_| bad("bad max_block_cents".into()))?),
        };
        let config = PrimaryConfig {
            chain_id: section.header.chain_id.clone(),
            max_block_cents,
            reference_hex_len: section.header.param("reference_hex_len").and_then(|v| v.parse().ok()).unwrap_or(8),
            seed: 0,
        };
        let blocks = section
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| decode_primary(r).map_err(|e| bad(format!("block {i}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_blocks(config, blocks, section.head.unwrap_or(Digest::ZERO)))
    }
}

impl BlockDraft {
    fn clone_header(&self) -> BlockDraft {
        BlockDraft {
            reference: None,
            timestamp: self.timestamp,
            payer: self.payer.clone(),
            payee: self.payee.clone(),
            detailed_concept: self.detailed_concept.clone(),
            concept_type: self.concept_type.clone(),
            region: self.region.clone(),
            detail: self.detail,
            cents: Vec::new(),
        }
    }
}

fn check_disjoint(drafts: &[BlockDraft]) -> Result<(), LedgerError> {
    let mut all: Vec<u64> = drafts.iter().flat_map(|d| d.cents.iter().map(|t| t.value())).collect();
    all.sort_unstable();
    match all.windows(2).find(|w| w[0] == w[1]) {
        Some(w) => Err(LedgerError::DuplicateCent(TrackingNumber::new(w[0]))),
        None => Ok(()),
    }
}

/// Whether the banknote number `text` is one of the cents of note `serial`.
fn banknote_belongs(text: &str, serial: u64, denomination: u64) -> bool {
    let Some(body) = text.strip_prefix("BA") else { return false };
    let index_width = denomination.to_string().len().max(4);
    if body.len() <= index_width {
        return false;
    }
    let (serial_part, index_part) = body.split_at(body.len() - index_width);
    let serial_hex = format!("{serial:X}");
    let index_ok = index_part.parse::<u64>().is_ok_and(|i| (1..=denomination).contains(&i));
    index_ok && serial_part.trim_start_matches('0') == serial_hex.trim_start_matches('0')
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::concepts::banknote_concept;

    fn draft(cents: Vec<u64>, day: u32) -> BlockDraft {
        BlockDraft {
            reference: None,
            timestamp: Timestamp::ymd_hm(2024, 4, day, 10, 56),
            payer: PartyCode::shared("AAAA1"),
            payee: PartyCode::shared("63B4F"),
            detailed_concept: "r522".parse().unwrap(),
            concept_type: "t41".parse().unwrap(),
            region: "rC02".parse().unwrap(),
            detail: DetailLevel::Full,
            cents: cents.into_iter().map(TrackingNumber::new).collect(),
        }
    }

    fn ledger(max: Option<u64>) -> PrimaryLedger {
        PrimaryLedger::new(PrimaryConfig { max_block_cents: max, ..Default::default() })
    }

    #[test]
    fn subdivision_partitions_cents() {
        let mut l = ledger(Some(1000));
        let cents: Vec<u64> = (1..=2500).collect();
        let refs = l.append_transaction(vec![draft(cents.clone(), 18)]).unwrap();
        assert_eq!(refs.len(), 3);
        let sizes: Vec<u64> = l.blocks().iter().map(|b| b.amount.cents()).collect();
        assert_eq!(sizes, vec![1000, 1000, 500]);
        let union: Vec<u64> = l.blocks().iter().flat_map(|b| b.cents.iter().map(|t| t.value())).collect();
        assert_eq!(union, cents);
        assert_eq!(sizes.iter().sum::<u64>(), 2500);
        assert!(l.verify_chain().ok);
    }

    #[test]
    fn one_cent_block_unchanged() {
        let mut l = ledger(Some(1000));
        l.append_transaction(vec![draft(vec![42], 18)]).unwrap();
        assert_eq!(l.blocks()[0].cents, vec![TrackingNumber::new(42)]);
        assert_eq!(l.blocks()[0].amount, Money::from_cents(1));
    }

    #[test]
    fn rejects_duplicate_cents_atomically() {
        let mut l = ledger(None);
        let err = l.append_transaction(vec![draft(vec![1, 2], 18), draft(vec![3, 2], 18)]).unwrap_err();
        assert_eq!(err, LedgerError::DuplicateCent(TrackingNumber::new(2)));
        assert!(l.is_empty());
    }

    #[test]
    fn pinned_reference_kept_and_unique() {
        let mut l = ledger(None);
        let mut d = draft(vec![1], 18);
        d.reference = Some(Reference::new("2D33455D"));
        assert_eq!(l.append_transaction(vec![d.clone()]).unwrap()[0].as_str(), "2D33455D");
        d.cents = vec![TrackingNumber::new(2)];
        assert!(matches!(l.append_transaction(vec![d]), Err(LedgerError::DuplicateReference(_))));
        assert!(l.get("2D33455D").is_some());
    }

    #[test]
    fn tamper_is_detected() {
        let mut l = ledger(None);
        for i in 0..5u64 {
            l.append_transaction(vec![draft(vec![i * 10 + 1, i * 10 + 2], 18)]).unwrap();
        }
        assert!(l.verify_chain().ok);
        let (blocks, head) = l.clone().into_blocks();

        let mut flipped = blocks.clone();
        flipped[2].cents[0] = TrackingNumber::new(999);
        let t = PrimaryLedger::from_blocks(PrimaryConfig::default(), flipped, head);
        assert_eq!(t.verify_chain().first_bad, Some(3));

        let mut last = blocks.clone();
        last[4].amount = Money::from_cents(3);
        let t = PrimaryLedger::from_blocks(PrimaryConfig::default(), last, head);
        assert_eq!(t.verify_chain().first_bad, Some(4));

        let mut dropped = blocks.clone();
        dropped.pop();
        let t = PrimaryLedger::from_blocks(PrimaryConfig::default(), dropped, head);
        assert!(!t.verify_chain().ok);

        let mut removed = blocks;
        removed.remove(1);
        let t = PrimaryLedger::from_blocks(PrimaryConfig::default(), removed, head);
        assert_eq!(t.verify_chain().first_bad, Some(1));

        assert!(ledger(None).verify_chain().ok);
    }

    #[test]
    fn trace_walks_both_ways() {
        let mut l = ledger(None);
        l.enable_cent_index();
        let r1 = l.append_transaction(vec![draft(vec![7, 8], 1)]).unwrap();
        l.append_transaction(vec![draft(vec![9], 2)]).unwrap();
        let r3 = l.append_transaction(vec![draft(vec![7], 3)]).unwrap();
        let r4 = l.append_transaction(vec![draft(vec![7, 9], 4)]).unwrap();
        let tn = TrackingNumber::new(7);
        let down = l.trace_cent(tn, TraceDirection::Down, None).unwrap();
        assert_eq!(down, vec![r1[0].clone(), r3[0].clone(), r4[0].clone()]);
        let up = l.trace_cent(tn, TraceDirection::Up, Some(&r3[0])).unwrap();
        assert_eq!(up, vec![r3[0].clone(), r1[0].clone()]);
        assert!(l.trace_cent(TrackingNumber::new(1234), TraceDirection::Down, None).unwrap().is_empty());
        // the scan fallback agrees with the index
        let mut plain = l.clone();
        plain.cents = None;
        assert_eq!(plain.trace_cent(tn, TraceDirection::Down, None).unwrap(), down);
    }

    #[test]
    fn cent_index_survives_many_flushes() {
        let mut l = ledger(None);
        l.enable_cent_index();
        for i in 0..40u64 {
            let cents: Vec<u64> = (0..5000).map(|k| (k * 7919 + i) % 20011 + i * 1_000_000).collect();
            let mut cents = cents;
            cents.sort_unstable();
            cents.dedup();
            l.append_transaction(vec![draft(cents, 5)]).unwrap();
        }
        l.append_transaction(vec![draft(vec![3_000_005], 6)]).unwrap();
        let found = l.trace_cent(TrackingNumber::new(3_000_005), TraceDirection::Down, None).unwrap();
        let mut plain = l.clone();
        plain.cents = None;
        assert_eq!(found, plain.trace_cent(TrackingNumber::new(3_000_005), TraceDirection::Down, None).unwrap());
        assert_eq!(found.len(), 2);
    }

    #[test]
    fn banknote_cents_link_to_reprint() {
        let mut l = ledger(None);
        let mut reprint = draft((1..=1000).collect(), 22);
        reprint.payer = PartyCode::government("GOV-AA1", None);
        reprint.payee = PartyCode::government("GOV-AA6B", None);
        reprint.detailed_concept = banknote_concept(22_868_512_967).parse().unwrap();
        reprint.concept_type = MONEY_REPRINT.parse().unwrap();
        let a = l.append_transaction(vec![reprint]).unwrap();
        let lot = crate::registry::banknote_numbers(22_868_512_967, 1000, false).unwrap();
        let mut print = draft(lot.iter().map(|t| t.value()).collect(), 22);
        print.concept_type = "a14".parse().unwrap();
        let b = l.append_transaction(vec![print]).unwrap();
        let trace = l.trace_cent(lot[0], TraceDirection::Down, None).unwrap();
        assert_eq!(trace, vec![a[0].clone(), b[0].clone()]);
        assert!(!banknote_belongs("BA55311D0C71001", 22_868_512_967, 1000));
        assert!(banknote_belongs("BA055311D0C70001", 22_868_512_967, 1000));
    }

    #[test]
    fn query_matches_scan() {
        let mut l = ledger(None);
        let mut next = 1u64;
        for i in 0..200u32 {
            let n = (i % 7 + 1) as u64;
            let mut d = draft((next..next + n).collect(), i % 28 + 1);
            next += n;
            if i % 3 == 0 {
                d.region = "rA12".parse().unwrap();
                d.concept_type = "w24".parse().unwrap();
            }
            l.append_transaction(vec![d]).unwrap();
        }
        let f = BlockFilter {
            from: Some(Timestamp::day(2024, 4, 5)),
            to: Some(Timestamp::day(2024, 4, 20)),
            region_prefix: Some("rA".into()),
            min_amount: Some(Money::from_cents(2)),
            ..Default::default()
        };
        let got: Vec<_> = l.query(&f).into_iter().map(|b| b.reference.clone()).collect();
        let want: Vec<_> = l.blocks().iter().filter(|b| f.matches(b)).map(|b| b.reference.clone()).collect();
        assert_eq!(got, want);
        assert!(!got.is_empty());
        let none = BlockFilter { party: Some("nobody".into()), ..Default::default() };
        assert!(l.query(&none).is_empty());
    }

    #[test]
    fn dump_round_trip() {
        let mut l = ledger(Some(3));
        l.append_transaction(vec![draft(vec![1, 2, 3, 4, 5], 18)]).unwrap();
        let mut out = Vec::new();
        l.write_dump(&mut out).unwrap();
        let back = PrimaryLedger::read_dump(&out[..]).unwrap();
        assert_eq!(back.blocks(), l.blocks());
        assert_eq!(back.head(), l.head());
        assert!(back.verify_chain().ok);
        assert_eq!(back.config().max_block_cents, Some(3));
    }
}
