//! Fixed-width chain values and hex helpers shared by every module.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HexError {
    #[error("invalid hex: {0}")]
    Invalid(String),
    #[error("expected {expected} bytes, got {actual}")]
    Length { expected: usize, actual: usize },
}

/// Decodes a hex string, tolerating a `0x` prefix, surrounding whitespace and an odd
/// number of digits (a leading zero nibble is assumed).
pub fn decode_hex(text: &str) -> Result<Vec<u8>, HexError> {
    let trimmed = text.trim();
    let digits = trimmed
        .strip_prefix("0x")
        .or_else(|| trimmed.strip_prefix("0X"))
        .unwrap_or(trimmed);
    let digits: String = digits.chars().filter(|c| !c.is_whitespace()).collect();
    let padded = if digits.len() % 2 == 1 {
        format!("0{digits}")
    } else {
        digits
    };
    hex::decode(&padded).map_err(|e| HexError::Invalid(format!("{e} in {:?}", abbreviate(trimmed))))
}

pub fn encode_hex(bytes: &[u8]) -> String {
    format!("0x{}", hex::encode(bytes))
}

fn abbreviate(text: &str) -> String {
    if text.len() > 24 {
        format!("{}...", &text[..24])
    } else {
        text.to_string()
    }
}

macro_rules! fixed_bytes {
    ($(#[$meta:meta])* $name:ident, $len:expr) => {
        $(#[$meta])*
        #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
        pub struct $name(pub [u8; $len]);

        impl $name {
            pub const LEN: usize = $len;

            pub fn from_slice(bytes: &[u8]) -> Result<Self, HexError> {
                let array: [u8; $len] = bytes.try_into().map_err(|_| HexError::Length {
                    expected: $len,
                    actual: bytes.len(),
                })?;
                Ok(Self(array))
            }

            pub fn as_bytes(&self) -> &[u8] {
                &self.0
            }

            pub fn is_zero(&self) -> bool {
                self.0.iter().all(|b| *b == 0)
            }
        }

        impl FromStr for $name {
            type Err = HexError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::from_slice(&decode_hex(s)?)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "0x{}", hex::encode(self.0))
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}(0x{})", stringify!($name), hex::encode(self.0))
            }
        }

        impl From<[u8; $len]> for $name {
            fn from(value: [u8; $len]) -> Self {
                Self(value)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let text = String::deserialize(deserializer)?;
                text.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

fixed_bytes!(
    /// A 20-byte account address.
    Address,
    20
);
fixed_bytes!(
    /// A 32-byte word: storage slots, salts, transaction hashes.
    B256,
    32
);
fixed_bytes!(
    /// A 4-byte function selector.
    Selector,
    4
);

impl Address {
    /// Takes the low 20 bytes of a 32-byte word.
    pub fn from_word(word: &[u8; 32]) -> Self {
        let mut out = [0u8; 20];
        out.copy_from_slice(&word[12..]);
        Self(out)
    }

    /// Right-aligns arbitrary-width big-endian bytes into an address, truncating from the left.
    pub fn from_be_bytes_lossy(bytes: &[u8]) -> Self {
        let mut out = [0u8; 20];
        let take = bytes.len().min(20);
        out[20 - take..].copy_from_slice(&bytes[bytes.len() - take..]);
        Self(out)
    }
}

pub type TxHash = B256;

/// Serde adapter for `Vec<u8>` fields carried as `0x` hex strings.
pub mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&super::encode_hex(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Vec<u8>, D::Error> {
        let text = String::deserialize(deserializer)?;
        super::decode_hex(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `U256` values carried as decimal strings (wei amounts overflow JSON numbers).
pub mod dec_u256 {
    use primitive_types::U256;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &U256, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(value)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<U256, D::Error> {
        #[derive(serde::Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(u64),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Number(n) => Ok(U256::from(n)),
            Raw::Text(text) => super::parse_u256(&text).map_err(serde::de::Error::custom),
        }
    }
}

/// Parses a decimal or `0x`-prefixed hex quantity.
pub fn parse_u256(text: &str) -> Result<primitive_types::U256, String> {
    let text = text.trim();
    if let Some(hex_digits) = text.strip_prefix("0x") {
        if hex_digits.is_empty() {
            return Ok(primitive_types::U256::zero());
        }
        primitive_types::U256::from_str_radix(hex_digits, 16).map_err(|e| format!("{e}: {text}"))
    } else {
        primitive_types::U256::from_dec_str(text).map_err(|e| format!("{e:?}: {text}"))
    }
}
