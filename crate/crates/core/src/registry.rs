//! Authoritative lifecycle of tracking numbers.
//!
//! Standard numbers are drawn by walking a keyed 64-bit Feistel permutation
//! with a counter, so the i-th issued number is `perm(i)`. Uniqueness follows
//! from bijectivity and the counter never rewinds, so nothing is reissued. The
//! inverse permutation maps a number back to its issue slot, which lets the
//! registry keep one holder word per issued number instead of a hash table.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{self, BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::dump::{DumpError, DumpReader, SectionHeader, SectionWriter};
use crate::model::encoding::Reader;
use crate::model::tracking::is_banknote_value;
use crate::model::{AccountId, TrackingNumber};

const UNISSUED: u32 = u32::MAX;
const EXTINGUISHED: u32 = u32::MAX - 1;
const PENDING: u32 = u32::MAX - 2;
const FEISTEL_ROUNDS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Holder {
    /// Issued but not yet credited to any account.
    Pending,
    Account(AccountId),
}

impl Holder {
    fn encode(self) -> u32 {
        match self {
            Holder::Pending => PENDING,
            Holder::Account(a) => {
                assert!(a.0 < PENDING, "account id space exhausted");
                a.0
            }
        }
    }

    fn decode(slot: u32) -> Option<Holder> {
        match slot {
            UNISSUED | EXTINGUISHED => None,
            PENDING => Some(Holder::Pending),
            id => Some(Holder::Account(AccountId(id))),
        }
    }
}

impl fmt::Display for Holder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Holder::Pending => f.write_str("pending"),
            Holder::Account(a) => write!(f, "{a}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IssuePurpose {
    Loan,
    ReserveCreation,
    InboundCrossBorder,
    Seed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtinctionCause {
    LoanRepaid,
    OutboundCrossBorder,
    BanknoteReturn,
    ReserveUnwind,
}

impl ExtinctionCause {
    fn tag(self) -> u8 {
        match self {
            ExtinctionCause::LoanRepaid => 0,
            ExtinctionCause::OutboundCrossBorder => 1,
            ExtinctionCause::BanknoteReturn => 2,
            ExtinctionCause::ReserveUnwind => 3,
        }
    }

    fn from_tag(tag: u8) -> Option<Self> {
        [
            ExtinctionCause::LoanRepaid,
            ExtinctionCause::OutboundCrossBorder,
            ExtinctionCause::BanknoteReturn,
            ExtinctionCause::ReserveUnwind,
        ]
        .get(tag as usize)
        .copied()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RegistryError {
    #[error("capacity exhausted: requested {requested}, headroom {remaining}")]
    CapacityExhausted { requested: u64, remaining: u64 },
    #[error("tracking number {0} is not live")]
    NotLive(TrackingNumber),
    #[error("tracking number {tn} is held by {actual}, not {expected}")]
    WrongHolder { tn: TrackingNumber, expected: Holder, actual: Holder },
    #[error("banknote serial {0} already registered")]
    DuplicateSerial(u64),
    #[error("banknote serial {serial} with {denomination} cents does not fit in 16 hex digits")]
    BanknoteOverflow { serial: u64, denomination: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegistryConfig {
    pub seed: u64,
    /// Maximum number of standard numbers that may ever be issued.
    pub capacity: u64,
    /// Zero-pad banknote serials so banknote numbers have 16 digits.
    pub banknote_pad16: bool,
}

impl RegistryConfig {
    /// Headroom of `multiplier` numbers per cent of expected supply.
    pub fn for_supply(seed: u64, supply_cents: u64, multiplier: u64) -> Self {
        Self { seed, capacity: supply_cents.saturating_mul(multiplier), banknote_pad16: false }
    }
}

#[derive(Clone, Debug)]
struct Permutation {
    keys: [u64; FEISTEL_ROUNDS],
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

impl Permutation {
    fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut keys = [0u64; FEISTEL_ROUNDS];
        for k in &mut keys {
            *k = rng.random();
        }
        Self { keys }
    }

    fn f(key: u64, half: u32) -> u32 {
        (mix(half as u64 ^ key) >> 32) as u32
    }

    fn forward(&self, x: u64) -> u64 {
        let (mut l, mut r) = ((x >> 32) as u32, x as u32);
        for &k in &self.keys {
            (l, r) = (r, l ^ Self::f(k, r));
        }
        ((l as u64) << 32) | r as u64
    }

    fn inverse(&self, y: u64) -> u64 {
        let (mut l, mut r) = ((y >> 32) as u32, y as u32);
        for &k in self.keys.iter().rev() {
            (l, r) = (r ^ Self::f(k, l), l);
        }
        ((l as u64) << 32) | r as u64
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BanknoteLot {
    pub serial: u64,
    pub denomination_cents: u64,
    pub numbers: Vec<TrackingNumber>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SinkEntry {
    pub number: TrackingNumber,
    pub cause: ExtinctionCause,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegistryAudit {
    pub issued: u64,
    pub live: u64,
    pub sink: u64,
    pub per_holder: BTreeMap<Holder, u64>,
    pub duplicates: u64,
}

#[derive(Clone, Debug)]
pub struct Registry {
    config: RegistryConfig,
    perm: Permutation,
    /// Holder word per permutation input, indexed by issue counter.
    slots: Vec<u32>,
    standard_issued: u64,
    banknote_slots: HashMap<u64, u32>,
    banknote_index: BTreeMap<u64, BanknoteLot>,
    sink: Vec<SinkEntry>,
    live: u64,
    fingerprint: u64,
}

impl Registry {
    pub fn new(config: RegistryConfig) -> Self {
        Self {
            perm: Permutation::new(config.seed),
            config,
            slots: Vec::new(),
            standard_issued: 0,
            banknote_slots: HashMap::new(),
            banknote_index: BTreeMap::new(),
            sink: Vec::new(),
            live: 0,
            fingerprint: 0,
        }
    }

    pub fn config(&self) -> &RegistryConfig {
        &self.config
    }

    pub fn remaining_capacity(&self) -> u64 {
        self.config.capacity - self.standard_issued
    }

    pub fn live_count(&self) -> u64 {
        self.live
    }

    pub fn sink(&self) -> &[SinkEntry] {
        &self.sink
    }

    /// Total numbers ever created, standard and banknote.
    pub fn issued_count(&self) -> u64 {
        self.standard_issued + self.banknote_index.values().map(|l| l.numbers.len() as u64).sum::<u64>()
    }

    /// Order-independent hash of the live set; unchanged by holder moves.
    pub fn live_fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Issues `count` fresh standard numbers, held as pending.
    pub fn issue(&mut self, count: u64, _purpose: IssuePurpose) -> Result<Vec<TrackingNumber>, RegistryError> {
        let remaining = self.remaining_capacity();
        if count > remaining {
            return Err(RegistryError::CapacityExhausted { requested: count, remaining });
        }
        let mut out = Vec::with_capacity(count as usize);
        while (out.len() as u64) < count {
            let index = self.slots.len() as u64;
            let value = self.perm.forward(index);
            if is_banknote_value(value) {
                self.slots.push(UNISSUED);
                continue;
            }
            self.slots.push(PENDING);
            self.fingerprint = self.fingerprint.wrapping_add(mix(value));
            out.push(TrackingNumber::new(value));
        }
        self.standard_issued += count;
        self.live += count;
        Ok(out)
    }

    fn slot_ref(&mut self, tn: TrackingNumber) -> Option<&mut u32> {
        if is_banknote_value(tn.value()) {
            return self.banknote_slots.get_mut(&tn.value());
        }
        let index = self.perm.inverse(tn.value());
        self.slots.get_mut(usize::try_from(index).ok()?)
    }

    fn slot(&self, tn: TrackingNumber) -> u32 {
        if is_banknote_value(tn.value()) {
            return self.banknote_slots.get(&tn.value()).copied().unwrap_or(UNISSUED);
        }
        let index = self.perm.inverse(tn.value());
        usize::try_from(index).ok().and_then(|i| self.slots.get(i).copied()).unwrap_or(UNISSUED)
    }

    pub fn holder(&self, tn: TrackingNumber) -> Option<Holder> {
        Holder::decode(self.slot(tn))
    }

    pub fn is_live(&self, tn: TrackingNumber) -> bool {
        self.holder(tn).is_some()
    }

    pub fn was_issued(&self, tn: TrackingNumber) -> bool {
        self.slot(tn) != UNISSUED
    }

    /// Moves `cents` from `from` to `to`. All-or-nothing.
    pub fn reassign(&mut self, cents: &[TrackingNumber], from: Holder, to: Holder) -> Result<(), RegistryError> {
        let (from_w, to_w) = (from.encode(), to.encode());
        for (i, &tn) in cents.iter().enumerate() {
            let slot = self.slot_ref(tn);
            match slot {
                Some(s) if *s == from_w => *s = to_w,
                other => {
                    let actual = other.and_then(|s| Holder::decode(*s));
                    // roll back what was already moved
                    for &done in &cents[..i] {
                        if let Some(s) = self.slot_ref(done) {
                            *s = from_w;
                        }
                    }
                    return Err(match actual {
                        None => RegistryError::NotLive(tn),
                        Some(actual) => RegistryError::WrongHolder { tn, expected: from, actual },
                    });
                }
            }
        }
        Ok(())
    }

    /// Moves live numbers to the sink. All-or-nothing; sink members are never reissued.
    pub fn extinguish(&mut self, lot: &[TrackingNumber], cause: ExtinctionCause) -> Result<(), RegistryError> {
        let mut previous = Vec::with_capacity(lot.len());
        for (i, &tn) in lot.iter().enumerate() {
            match self.slot_ref(tn) {
                Some(s) if Holder::decode(*s).is_some() => {
                    previous.push(*s);
                    *s = EXTINGUISHED;
                }
                _ => {
                    for (&done, &was) in lot[..i].iter().zip(&previous) {
                        if let Some(s) = self.slot_ref(done) {
                            *s = was;
                        }
                    }
                    return Err(RegistryError::NotLive(tn));
                }
            }
        }
        for &tn in lot {
            self.fingerprint = self.fingerprint.wrapping_sub(mix(tn.value()));
            self.sink.push(SinkEntry { number: tn, cause });
        }
        self.live -= lot.len() as u64;
        Ok(())
    }

    /// Creates the banknote-linked numbers for a physical note, held as pending.
    ///
    /// The default scheme writes `BA`, the serial in hex (9 digits), then the
    /// cent index in zero-padded decimal starting at `0001`. Serial 22868512967
    /// with 1000 cents gives `BA55311D0C70001` .. `BA55311D0C71000`.
    pub fn banknote_lot(&mut self, serial: u64, denomination_cents: u64) -> Result<Vec<TrackingNumber>, RegistryError> {
        if self.banknote_index.contains_key(&serial) {
            return Err(RegistryError::DuplicateSerial(serial));
        }
        let numbers = banknote_numbers(serial, denomination_cents, self.config.banknote_pad16)
            .ok_or(RegistryError::BanknoteOverflow { serial, denomination: denomination_cents })?;
        for tn in &numbers {
            self.banknote_slots.insert(tn.value(), PENDING);
            self.fingerprint = self.fingerprint.wrapping_add(mix(tn.value()));
        }
        self.live += numbers.len() as u64;
        self.banknote_index.insert(
            serial,
            BanknoteLot { serial, denomination_cents, numbers: numbers.clone() },
        );
        Ok(numbers)
    }

    pub fn banknote(&self, serial: u64) -> Option<&BanknoteLot> {
        self.banknote_index.get(&serial)
    }

    pub fn banknotes(&self) -> impl Iterator<Item = &BanknoteLot> {
        self.banknote_index.values()
    }

    pub fn audit(&self) -> RegistryAudit {
        let mut per_holder: BTreeMap<Holder, u64> = BTreeMap::new();
        let mut extinct = 0u64;
        for &s in self.slots.iter().chain(self.banknote_slots.values()) {
            match s {
                UNISSUED => {}
                EXTINGUISHED => extinct += 1,
                other => *per_holder.entry(Holder::decode(other).expect("live slot")).or_default() += 1,
            }
        }
        let live: u64 = per_holder.values().sum();
        // A sink entry whose slot is not extinguished, or a number sunk twice,
        // both show up as a count mismatch.
        let stray = self.sink.iter().filter(|e| self.slot(e.number) != EXTINGUISHED).count() as u64;
        let duplicates = stray + (self.sink.len() as u64).saturating_sub(extinct) + live.abs_diff(self.live);
        RegistryAudit { issued: self.issued_count(), live, sink: self.sink.len() as u64, per_holder, duplicates }
    }

    /// All live numbers grouped by holder, in issue order.
    pub fn live_by_holder(&self) -> BTreeMap<Holder, Vec<TrackingNumber>> {
        let mut out: BTreeMap<Holder, Vec<TrackingNumber>> = BTreeMap::new();
        for (i, &s) in self.slots.iter().enumerate() {
            if let Some(h) = Holder::decode(s) {
                out.entry(h).or_default().push(TrackingNumber::new(self.perm.forward(i as u64)));
            }
        }
        for lot in self.banknote_index.values() {
            for &tn in &lot.numbers {
                if let Some(h) = self.holder(tn) {
                    out.entry(h).or_default().push(tn);
                }
            }
        }
        out
    }

    /// Writes the registry snapshot: a header section, live numbers per
    /// holder, banknote lots, and the sink in extinction order.
    pub fn write_snapshot<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let header = SectionHeader::new("registry", "registry")
            .with("seed", self.config.seed)
            .with("capacity", self.config.capacity)
            .with("pad16", self.config.banknote_pad16)
            .with("issued", self.issued_count())
            .with("live", self.live)
            .with("sink", self.sink.len());
        SectionWriter::begin(out, &header)?.finish(None)?;

        let mut w = SectionWriter::begin(out, &SectionHeader::new("live", "registry"))?;
        for (holder, numbers) in self.live_by_holder() {
            let mut rec = Vec::with_capacity(12 + numbers.len() * 8);
            rec.extend_from_slice(&holder.encode().to_be_bytes());
            rec.extend_from_slice(&(numbers.len() as u64).to_be_bytes());
            for tn in numbers {
                rec.extend_from_slice(&tn.value().to_be_bytes());
            }
            w.record(&rec)?;
        }
        w.finish(None)?;

        let mut w = SectionWriter::begin(out, &SectionHeader::new("banknotes", "registry"))?;
        for lot in self.banknote_index.values() {
            let mut rec = Vec::with_capacity(24);
            rec.extend_from_slice(&lot.serial.to_be_bytes());
            rec.extend_from_slice(&lot.denomination_cents.to_be_bytes());
            rec.extend_from_slice(&lot.numbers.first().map_or(0, |t| t.value()).to_be_bytes());
            w.record(&rec)?;
        }
        w.finish(None)?;

        let mut w = SectionWriter::begin(out, &SectionHeader::new("sink", "registry"))?;
        for run in self.sink.chunk_by(|a, b| a.cause == b.cause) {
            let mut rec = Vec::with_capacity(9 + run.len() * 8);
            rec.push(run[0].cause.tag());
            rec.extend_from_slice(&(run.len() as u64).to_be_bytes());
            for e in run {
                rec.extend_from_slice(&e.number.value().to_be_bytes());
            }
            w.record(&rec)?;
        }
        w.finish(None)
    }
}

/// Numbers for one note, or `None` if they do not fit in 16 hex digits.
pub fn banknote_numbers(serial: u64, denomination_cents: u64, pad16: bool) -> Option<Vec<TrackingNumber>> {
    let index_width = denomination_cents.to_string().len().max(4);
    let serial_hex = format!("{serial:X}");
    let serial_width = if pad16 { 14usize.checked_sub(index_width)? } else { 9 };
    if serial_hex.len() > serial_width || 2 + serial_width + index_width > 16 {
        return None;
    }
    let prefix = format!("BA{serial_hex:0>serial_width$}");
    (1..=denomination_cents)
        .map(|i| {
            let text = format!("{prefix}{i:0index_width$}");
            u64::from_str_radix(&text, 16).ok().map(TrackingNumber::new)
        })
        .collect()
}

/// A registry snapshot read back from disk.
#[derive(Debug, Default)]
pub struct RegistrySnapshot {
    pub params: BTreeMap<String, String>,
    pub live: BTreeMap<Holder, Vec<TrackingNumber>>,
    pub banknotes: Vec<(u64, u64, TrackingNumber)>,
    pub sink: Vec<SinkEntry>,
}

impl RegistrySnapshot {
    pub fn read<R: BufRead>(input: R) -> Result<Self, DumpError> {
        let mut reader = DumpReader::new(input);
        let mut snap = RegistrySnapshot::default();
        let bad = |m: &str| DumpError::Format { line: 0, message: m.to_string() };
        while let Some(section) = reader.section()? {
            match section.header.kind.as_str() {
                "registry" => snap.params = section.header.params.clone(),
                "live" => {
                    for rec in &section.records {
                        let mut r = Reader::new(rec);
                        let holder = r.u32().ok().and_then(Holder::decode).ok_or_else(|| bad("bad holder"))?;
                        let n = r.u64().map_err(|_| bad("bad count"))?;
                        let list = snap.live.entry(holder).or_default();
                        for _ in 0..n {
                            list.push(TrackingNumber::new(r.u64().map_err(|_| bad("truncated live record"))?));
                        }
                    }
                }
                "banknotes" => {
                    for rec in &section.records {
                        let mut r = Reader::new(rec);
                        let parse = |r: &mut Reader| r.u64().map_err(|_| bad("bad banknote record"));
                        let (serial, denom, first) = (parse(&mut r)?, parse(&mut r)?, parse(&mut r)?);
                        snap.banknotes.push((serial, denom, TrackingNumber::new(first)));
                    }
                }
                "sink" => {
                    for rec in &section.records {
                        let mut r = Reader::new(rec);
                        let cause =
                            r.u8().ok().and_then(ExtinctionCause::from_tag).ok_or_else(|| bad("bad cause"))?;
                        let n = r.u64().map_err(|_| bad("bad count"))?;
                        for _ in 0..n {
                            let number = TrackingNumber::new(r.u64().map_err(|_| bad("truncated sink"))?);
                            snap.sink.push(SinkEntry { number, cause });
                        }
                    }
                }
                other => return Err(bad(&format!("unknown registry section `{other}`"))),
            }
        }
        Ok(snap)
    }

    /// Audit from the snapshot alone: a number listed twice anywhere counts as a duplicate.
    pub fn audit(&self) -> RegistryAudit {
        let mut all: Vec<u64> = self
            .live
            .values()
            .flatten()
            .chain(self.sink.iter().map(|e| &e.number))
            .map(|t| t.value())
            .collect();
        all.sort_unstable();
        let duplicates = all.windows(2).filter(|w| w[0] == w[1]).count() as u64;
        let live = self.live.values().map(|v| v.len() as u64).sum();
        RegistryAudit {
            issued: self.params.get("issued").and_then(|v| v.parse().ok()).unwrap_or(0),
            live,
            sink: self.sink.len() as u64,
            per_holder: self.live.iter().map(|(h, v)| (*h, v.len() as u64)).collect(),
            duplicates,
        }
    }
}
