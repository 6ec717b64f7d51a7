//! Line-delimited dump format shared by ledgers and registry snapshots.
//!
//! A file holds one or more sections:
//!
//! ```text
//! centledger-dump v1 sha256 <kind> <chain-id> [key=value ...]
//! <hex of one canonical record>
//! ...
//! end <record-count> [<head-digest>]
//! ```

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::encoding::{CanonicalEncode, Digest, Sink, DIGEST_ALGORITHM, ENCODING_VERSION};

const MAGIC: &str = "centledger-dump";

#[derive(Debug, Error)]
pub enum DumpError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("dump uses encoding v{found}, this build reads v{ENCODING_VERSION}")]
    Version { found: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SectionHeader {
    pub kind: String,
    pub chain_id: String,
    pub params: BTreeMap<String, String>,
}

impl SectionHeader {
    pub fn new(kind: &str, chain_id: &str) -> Self {
        Self { kind: kind.to_string(), chain_id: chain_id.to_string(), params: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn param(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    fn line(&self) -> String {
        let mut s = format!("{MAGIC} v{ENCODING_VERSION} {DIGEST_ALGORITHM} {} {}", self.kind, self.chain_id);
        for (k, v) in &self.params {
            s.push_str(&format!(" {k}={v}"));
        }
        s
    }

    fn parse(line: &str, line_no: usize) -> Result<Self, DumpError> {
        let bad = |message: &str| DumpError::Format { line: line_no, message: message.to_string() };
        let mut parts = line.split_whitespace();
        if parts.next() != Some(MAGIC) {
            return Err(bad("missing dump header"));
        }
        let version = parts.next().ok_or_else(|| bad("missing version"))?;
        if version != format!("v{ENCODING_VERSION}") {
            return Err(DumpError::Version { found: version.trim_start_matches('v').to_string() });
        }
        if parts.next() != Some(DIGEST_ALGORITHM) {
            return Err(bad("unsupported digest algorithm"));
        }
        let kind = parts.next().ok_or_else(|| bad("missing kind"))?.to_string();
        let chain_id = parts.next().ok_or_else(|| bad("missing chain id"))?.to_string();
        let mut params = BTreeMap::new();
        for kv in parts {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad("malformed parameter"))?;
            params.insert(k.to_string(), v.to_string());
        }
        Ok(Self { kind, chain_id, params })
    }
}

/// Streams hex armour straight to the writer.
struct HexSink<'a, W: Write> {
    out: &'a mut W,
    err: Option<io::Error>,
    buf: Vec<u8>,
}

impl<W: Write> Sink for HexSink<'_, W> {
    fn put(&mut self, bytes: &[u8]) {
        if self.err.is_some() {
            return;
        }
        const HEX: &[u8; 16] = b"0123456789abcdef";
        self.buf.clear();
        self.buf.reserve(bytes.len() * 2);
        for b in bytes {
            self.buf.push(HEX[(b >> 4) as usize]);
            self.buf.push(HEX[(b & 15) as usize]);
        }
        if let Err(e) = self.out.write_all(&self.buf) {
            self.err = Some(e);
        }
    }
}

pub struct SectionWriter<'a, W: Write> {
    out: &'a mut W,
    count: u64,
}

impl<'a, W: Write> SectionWriter<'a, W> {
    pub fn begin(out: &'a mut W, header: &SectionHeader) -> io::Result<Self> {
        writeln!(out, "{}", header.line())?;
        Ok(Self { out, count: 0 })
    }

    pub fn encoded<E: CanonicalEncode>(&mut self, item: &E) -> io::Result<()> {
        let mut sink = HexSink { out: self.out, err: None, buf: Vec::new() };
        item.encode_into(&mut sink);
        if let Some(e) = sink.err {
            return Err(e);
        }
        self.out.write_all(b"\n")?;
        self.count += 1;
        Ok(())
    }

    pub fn record(&mut self, bytes: &[u8]) -> io::Result<()> {
        self.encoded(&RawBytes(bytes))
    }

    pub fn finish(self, head: Option<Digest>) -> io::Result<()> {
        match head {
            Some(d) => writeln!(self.out, "end {} {}", self.count, d),
            None => writeln!(self.out, "end {}", self.count),
        }
    }
}

struct RawBytes<'a>(&'a [u8]);

impl CanonicalEncode for RawBytes<'_> {
    fn encode_into<S: Sink>(&self, sink: &mut S) {
        sink.put(self.0);
    }
}

#[derive(Debug)]
pub struct Section {
    pub header: SectionHeader,
    pub records: Vec<Vec<u8>>,
    pub declared_count: u64,
    pub head: Option<Digest>,
}

pub struct DumpReader<R: BufRead> {
    input: R,
    line_no: usize,
    line: String,
}

impl<R: BufRead> DumpReader<R> {
    pub fn new(input: R) -> Self {
        Self { input, line_no: 0, line: String::new() }
    }

    fn next_line(&mut self) -> Result<Option<&str>, DumpError> {
        self.line.clear();
        if self.input.read_line(&mut self.line)? == 0 {
            return Ok(None);
        }
        self.line_no += 1;
        Ok(Some(self.line.trim_end_matches(['\n', '\r'])))
    }

    /// Reads the next section, or `None` at end of input.
    pub fn section(&mut self) -> Result<Option<Section>, DumpError> {
        let header = match self.next_line()? {
            None => return Ok(None),
            Some(line) => {
                let line = line.to_string();
                SectionHeader::parse(&line, self.line_no)?
            }
        };
        let mut records = Vec::new();
        loop {
            let line_no = self.line_no + 1;
            let bad = |message: &str| DumpError::Format { line: line_no, message: message.to_string() };
            let line = self.next_line()?.ok_or_else(|| bad("unexpected end of dump"))?;
            if let Some(rest) = line.strip_prefix("end ") {
                let mut parts = rest.split_whitespace();
                let declared_count = parts
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| bad("malformed end line"))?;
                let head = match parts.next() {
                    Some(h) => Some(Digest::from_hex(h).ok_or_else(|| bad("malformed head digest"))?),
                    None => None,
                };
                return Ok(Some(Section { header, records, declared_count, head }));
            }
            records.push(hex::decode(line).map_err(|_| bad("record is not hex"))?);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_round_trip() {
        let mut out = Vec::new();
        let header = SectionHeader::new("primary", "test-chain").with("max", 5);
        let mut w = SectionWriter::begin(&mut out, &header).unwrap();
        w.record(&[1, 2, 255]).unwrap();
        w.record(&[]).unwrap();
        w.finish(Some(Digest::of(b"x"))).unwrap();
        let mut w = SectionWriter::begin(&mut out, &SectionHeader::new("sink", "c")).unwrap();
        w.record(&[7]).unwrap();
        w.finish(None).unwrap();

        let text = String::from_utf8(out.clone()).unwrap();
        assert!(text.starts_with("centledger-dump v1 sha256 primary test-chain max=5\n0102ff\n\nend 2 "));

        let mut r = DumpReader::new(&out[..]);
        let s = r.section().unwrap().unwrap();
        assert_eq!(s.header, header);
        assert_eq!(s.records, vec![vec![1, 2, 255], vec![]]);
        assert_eq!(s.head, Some(Digest::of(b"x")));
        let s2 = r.section().unwrap().unwrap();
        assert_eq!(s2.records, vec![vec![7]]);
        assert!(r.section().unwrap().is_none());
    }

    #[test]
    fn rejects_wrong_version() {
        let text = "centledger-dump v9 sha256 primary c\nend 0\n";
        let err = DumpReader::new(text.as_bytes()).section().unwrap_err();
        assert!(matches!(err, DumpError::Version { .. }));
    }

    #[test]
    fn rejects_truncated() {
        let text = "centledger-dump v1 sha256 primary c\n00\n";
        assert!(DumpReader::new(text.as_bytes()).section().is_err());
    }
}
