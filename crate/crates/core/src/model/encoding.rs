//! Canonical byte encoding of ledger blocks.
//!
//! Layout (version 1), all integers big-endian:
//!
//! ```text
//! u8 version | u8 kind ('P' or 'S') | str reference | [32] prev_digest
//! i64 seconds | u8 granularity | u64 amount_cents
//! party payer | party payee
//! primary:   str detailed_concept | str concept_type | str region | u8 detail
//!            u64 cent_count | u64 cent...
//! secondary: str concept | str region
//!
//! str   = u32 byte_len | UTF-8 bytes
//! party = u8 kind | str code | u8 has_entry | [str entry]
//! ```
//!
//! Digests are SHA-256 over exactly these bytes.

use std::fmt;

use sha2::{Digest as _, Sha256};
use thiserror::Error;

use super::block::{DetailLevel, PrimaryBlock, Reference, SecondaryBlock};
use super::code::{ConceptCode, RegionCode};
use super::money::Money;
use super::party::{PartyCode, PartyKind};
use super::time::{Granularity, Timestamp};
use super::tracking::TrackingNumber;

pub const ENCODING_VERSION: u8 = 1;
pub const DIGEST_ALGORITHM: &str = "sha256";

const KIND_PRIMARY: u8 = b'P';
const KIND_SECONDARY: u8 = b'S';

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub const ZERO: Digest = Digest([0; 32]);

    pub fn of(bytes: &[u8]) -> Digest {
        let mut sink = DigestSink::default();
        sink.put(bytes);
        sink.finish()
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Digest> {
        let bytes = hex::decode(s.trim()).ok()?;
        Some(Digest(bytes.try_into().ok()?))
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", &self.to_hex()[..16])
    }
}

/// Destination for canonical bytes.
pub trait Sink {
    fn put(&mut self, bytes: &[u8]);
}

impl Sink for Vec<u8> {
    fn put(&mut self, bytes: &[u8]) {
        self.extend_from_slice(bytes);
    }
}

/// Hashes canonical bytes as they are produced, without buffering the block.
#[derive(Default)]
pub struct DigestSink(Sha256);

impl Sink for DigestSink {
    fn put(&mut self, bytes: &[u8]) {
        self.0.update(bytes);
    }
}

impl DigestSink {
    pub fn finish(self) -> Digest {
        let out = self.0.finalize();
        let mut d = [0u8; 32];
        d.copy_from_slice(&out);
        Digest(d)
    }
}

pub trait CanonicalEncode {
    fn encode_into<S: Sink>(&self, sink: &mut S);

    fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.encode_into(&mut out);
        out
    }

    fn digest(&self) -> Digest {
        let mut sink = DigestSink::default();
        self.encode_into(&mut sink);
        sink.finish()
    }
}

fn put_str<S: Sink>(sink: &mut S, s: &str) {
    sink.put(&(s.len() as u32).to_be_bytes());
    sink.put(s.as_bytes());
}

fn put_party<S: Sink>(sink: &mut S, p: &PartyCode) {
    sink.put(&[p.kind.tag()]);
    put_str(sink, &p.code);
    match &p.directory_entry {
        Some(entry) => {
            sink.put(&[1]);
            put_str(sink, entry);
        }
        None => sink.put(&[0]),
    }
}

fn put_header<S: Sink>(sink: &mut S, kind: u8, reference: &Reference, prev: &Digest, t: Timestamp, amount: Money) {
    sink.put(&[ENCODING_VERSION, kind]);
    put_str(sink, reference.as_str());
    sink.put(&prev.0);
    sink.put(&t.secs().to_be_bytes());
    sink.put(&[t.granularity().tag()]);
    sink.put(&amount.cents().to_be_bytes());
}

impl CanonicalEncode for PrimaryBlock {
    fn encode_into<S: Sink>(&self, sink: &mut S) {
        put_header(sink, KIND_PRIMARY, &self.reference, &self.prev_digest, self.timestamp, self.amount);
        put_party(sink, &self.payer);
        put_party(sink, &self.payee);
        put_str(sink, self.detailed_concept.as_str());
        put_str(sink, self.concept_type.as_str());
        put_str(sink, self.region.as_str());
        sink.put(&[self.detail.tag()]);
        sink.put(&(self.cents.len() as u64).to_be_bytes());
        // Batch cents so large blocks do not cost one sink call per cent.
        let mut buf = [0u8; 8 * 512];
        for chunk in self.cents.chunks(512) {
            for (i, tn) in chunk.iter().enumerate() {
                buf[i * 8..i * 8 + 8].copy_from_slice(&tn.value().to_be_bytes());
            }
            sink.put(&buf[..chunk.len() * 8]);
        }
    }
}

impl CanonicalEncode for SecondaryBlock {
    fn encode_into<S: Sink>(&self, sink: &mut S) {
        put_header(sink, KIND_SECONDARY, &self.reference, &self.prev_digest, self.date, self.amount);
        put_party(sink, &self.payer);
        put_party(sink, &self.payee);
        put_str(sink, self.concept.as_str());
        put_str(sink, self.region.as_str());
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("unsupported encoding version {0}")]
    Version(u8),
    #[error("expected block kind {expected:?}, found {found:?}")]
    Kind { expected: char, found: char },
    #[error("record truncated")]
    Truncated,
    #[error("{0} trailing bytes after record")]
    Trailing(usize),
    #[error("invalid field `{0}`")]
    Field(&'static str),
}

pub struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        let end = self.pos.checked_add(n).ok_or(DecodeError::Truncated)?;
        let out = self.bytes.get(self.pos..end).ok_or(DecodeError::Truncated)?;
        self.pos = end;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    pub fn u64(&mut self) -> Result<u64, DecodeError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub fn i64(&mut self) -> Result<i64, DecodeError> {
        Ok(i64::from_be_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub fn string(&mut self, field: &'static str) -> Result<String, DecodeError> {
        let len = self.u32()? as usize;
        let raw = self.take(len)?;
        String::from_utf8(raw.to_vec()).map_err(|_| DecodeError::Field(field))
    }

    pub fn finish(&self) -> Result<(), DecodeError> {
        match self.bytes.len() - self.pos {
            0 => Ok(()),
            n => Err(DecodeError::Trailing(n)),
        }
    }

    fn party(&mut self) -> Result<PartyCode, DecodeError> {
        let kind = PartyKind::from_tag(self.u8()?).ok_or(DecodeError::Field("party kind"))?;
        let code = self.string("party code")?;
        let directory_entry = match self.u8()? {
            0 => None,
            1 => Some(self.string("directory entry")?),
            _ => return Err(DecodeError::Field("directory flag")),
        };
        Ok(PartyCode { code, kind, directory_entry })
    }

    fn header(&mut self, kind: u8) -> Result<(Reference, Digest, Timestamp, Money), DecodeError> {
        let version = self.u8()?;
        if version != ENCODING_VERSION {
            return Err(DecodeError::Version(version));
        }
        let found = self.u8()?;
        if found != kind {
            return Err(DecodeError::Kind { expected: kind as char, found: found as char });
        }
        let reference = Reference::new(self.string("reference")?);
        let prev = Digest(self.take(32)?.try_into().expect("32 bytes"));
        let secs = self.i64()?;
        let g = Granularity::from_tag(self.u8()?).ok_or(DecodeError::Field("granularity"))?;
        let amount = Money::from_cents(self.u64()?);
        Ok((reference, prev, Timestamp::from_secs(secs, g), amount))
    }
}

fn concept(s: String) -> Result<ConceptCode, DecodeError> {
    ConceptCode::new(s).map_err(|_| DecodeError::Field("concept"))
}

fn region(s: String) -> Result<RegionCode, DecodeError> {
    RegionCode::new(s).map_err(|_| DecodeError::Field("region"))
}

pub fn decode_primary(bytes: &[u8]) -> Result<PrimaryBlock, DecodeError> {
    let mut r = Reader::new(bytes);
    let (reference, prev_digest, timestamp, amount) = r.header(KIND_PRIMARY)?;
    let payer = r.party()?;
    let payee = r.party()?;
    let detailed_concept = concept(r.string("detailed concept")?)?;
    let concept_type = concept(r.string("concept type")?)?;
    let region = region(r.string("region")?)?;
    let detail = DetailLevel::from_tag(r.u8()?).ok_or(DecodeError::Field("detail level"))?;
    let count = r.u64()? as usize;
    let raw = r.take(count.checked_mul(8).ok_or(DecodeError::Truncated)?)?;
    let cents = raw
        .chunks_exact(8)
        .map(|c| TrackingNumber::new(u64::from_be_bytes(c.try_into().expect("8 bytes"))))
        .collect();
    r.finish()?;
    Ok(PrimaryBlock {
        reference,
        prev_digest,
        timestamp,
        amount,
        payer,
        payee,
        detailed_concept,
        concept_type,
        region,
        detail,
        cents,
    })
}

pub fn decode_secondary(bytes: &[u8]) -> Result<SecondaryBlock, DecodeError> {
    let mut r = Reader::new(bytes);
    let (reference, prev_digest, date, amount) = r.header(KIND_SECONDARY)?;
    let payer = r.party()?;
    let payee = r.party()?;
    let concept = concept(r.string("concept")?)?;
    let region = region(r.string("region")?)?;
    r.finish()?;
    Ok(SecondaryBlock {
        reference,
        prev_digest,
        date,
        amount,
        payer,
        payee,
        concept,
        region,
        primary_refs: Vec::new(),
    })
}
