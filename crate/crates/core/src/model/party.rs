use std::fmt;

use serde::{Deserialize, Serialize};

/// Prefix that marks every government party code.
pub const GOVERNMENT_PREFIX: &str = "GOV-";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartyKind {
    /// Public bodies, recorded with their full directory identity.
    Government,
    /// Generic code shared by many private persons or companies.
    PrivateShared,
    /// Functional accounts of financial institutions (operating, money
    /// creation, extinction). Identifiable but not governmental.
    Institution,
}

impl PartyKind {
    pub fn tag(self) -> u8 {
        match self {
            PartyKind::Government => 0,
            PartyKind::PrivateShared => 1,
            PartyKind::Institution => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(PartyKind::Government),
            1 => Some(PartyKind::PrivateShared),
            2 => Some(PartyKind::Institution),
            _ => None,
        }
    }
}

/// The identity of a party as it appears on a ledger.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PartyCode {
    pub code: String,
    pub kind: PartyKind,
    /// Full hierarchical identity; only government codes carry one.
    pub directory_entry: Option<String>,
}

impl PartyCode {
    pub fn government(code: impl Into<String>, directory_entry: Option<String>) -> Self {
        let code = code.into();
        debug_assert!(code.starts_with(GOVERNMENT_PREFIX));
        Self { code, kind: PartyKind::Government, directory_entry }
    }

    pub fn shared(code: impl Into<String>) -> Self {
        Self { code: code.into(), kind: PartyKind::PrivateShared, directory_entry: None }
    }

    pub fn institution(code: impl Into<String>) -> Self {
        Self { code: code.into(), kind: PartyKind::Institution, directory_entry: None }
    }

    pub fn is_government(&self) -> bool {
        self.kind == PartyKind::Government
    }

    /// Keeps the first two characters and covers the rest: `2C3B4 -> 2C***`.
    pub fn masked(&self) -> PartyCode {
        let head: String = self.code.chars().take(2).collect();
        PartyCode { code: format!("{head}***"), kind: self.kind, directory_entry: None }
    }
}

impl fmt::Display for PartyCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.directory_entry {
            Some(entry) => write!(f, "{} ({})", self.code, entry),
            None => f.write_str(&self.code),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masking_keeps_two_chars() {
        assert_eq!(PartyCode::shared("2C3B4").masked().code, "2C***");
    }

    #[test]
    fn display_includes_directory() {
        let p = PartyCode::government("GOV-AR3", Some("Income Tax office".into()));
        assert_eq!(p.to_string(), "GOV-AR3 (Income Tax office)");
        assert!(p.is_government());
    }
}
