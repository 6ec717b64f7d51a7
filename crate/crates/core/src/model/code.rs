//! Hierarchical concept and region codes.
//!
//! A code is a short alphanumeric string whose first two characters form the
//! root. Every further character adds one level, so the parent of a code is the
//! code with its last character removed: `s236 -> s23 -> s2`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodeError {
    #[error("code `{0}` must have at least two characters")]
    TooShort(String),
    #[error("code `{0}` must be ASCII alphanumeric")]
    NotAlphanumeric(String),
}

fn validate(s: &str) -> Result<(), CodeError> {
    if s.len() < 2 {
        return Err(CodeError::TooShort(s.to_string()));
    }
    if !s.bytes().all(|b| b.is_ascii_alphanumeric()) {
        return Err(CodeError::NotAlphanumeric(s.to_string()));
    }
    Ok(())
}

macro_rules! hierarchical_code {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(String);

        impl $name {
            pub fn new(code: impl Into<String>) -> Result<Self, CodeError> {
                let code = code.into();
                validate(&code)?;
                Ok(Self(code))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }

            /// Depth in the hierarchy; two-character roots are level 1.
            pub fn level(&self) -> usize {
                self.0.len() - 1
            }

            pub fn parent(&self) -> Option<Self> {
                (self.level() > 1).then(|| Self(self.0[..self.0.len() - 1].to_string()))
            }

            /// Truncates to `level`, clamped to `[1, self.level()]`.
            pub fn at_level(&self, level: usize) -> Self {
                let level = level.clamp(1, self.level());
                Self(self.0[..level + 1].to_string())
            }

            /// Moves `levels` steps towards the root, stopping at the root.
            pub fn up(&self, levels: usize) -> Self {
                self.at_level(self.level().saturating_sub(levels))
            }

            pub fn starts_with(&self, prefix: &str) -> bool {
                self.0.starts_with(prefix)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl FromStr for $name {
            type Err = CodeError;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::new(s.trim())
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&self.0)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

hierarchical_code!(
    /// Concept of a transaction, e.g. `s236` (keeping accounting books) or
    /// the broader concept type `w24` (wages).
    ConceptCode
);

hierarchical_code!(
    /// Geographic region, e.g. `rA12` (Madrid East) under `rA1` (Madrid).
    RegionCode
);
