//! Per-cent tracking numbers.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Identifier of a single cent.
///
/// Standard numbers render as exactly 16 uppercase hex digits. Banknote-linked
/// numbers start with `BA` and render without leading zero padding, which is
/// 15 digits under the default banknote scheme and 16 with `banknote_pad16`.
/// The class is a function of the value: the registry never issues standard
/// numbers inside the two banknote prefixes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TrackingNumber(u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NumberClass {
    Standard,
    Banknote,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseTrackingError {
    #[error("tracking number `{0}` is not hexadecimal")]
    NotHex(String),
    #[error("tracking number `{0}` must be 16 hex digits (15 or 16 for banknote numbers)")]
    BadLength(String),
}

impl TrackingNumber {
    pub const fn new(value: u64) -> Self {
        Self(value)
    }

    pub const fn value(self) -> u64 {
        self.0
    }

    pub const fn class(self) -> NumberClass {
        if is_banknote_value(self.0) {
            NumberClass::Banknote
        } else {
            NumberClass::Standard
        }
    }

    pub fn render(self) -> String {
        self.to_string()
    }
}

/// True for values whose rendering begins with `BA` at 16 or 15 digits.
pub(crate) const fn is_banknote_value(value: u64) -> bool {
    value >> 56 == 0xBA || value >> 52 == 0x0BA
}

impl fmt::Display for TrackingNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.class() {
            NumberClass::Standard => write!(f, "{:016X}", self.0),
            NumberClass::Banknote => write!(f, "{:X}", self.0),
        }
    }
}

impl FromStr for TrackingNumber {
    type Err = ParseTrackingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let banknote = s.len() >= 2 && s[..2].eq_ignore_ascii_case("BA");
        let len_ok = s.len() == 16 || (banknote && s.len() == 15);
        if !s.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(ParseTrackingError::NotHex(s.to_string()));
        }
        if !len_ok {
            return Err(ParseTrackingError::BadLength(s.to_string()));
        }
        u64::from_str_radix(s, 16)
            .map(TrackingNumber)
            .map_err(|_| ParseTrackingError::NotHex(s.to_string()))
    }
}
