use core::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{bail, Result};

/// Norm index `p ∈ (1, ∞]` of an ℓᵖ representation.
///
/// Serializes finite values as numbers and `∞` as the string `"inf"`, so
/// it survives formats without an infinity literal (JSON).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PIndex(f64);

impl PIndex {
    pub const INFINITY: PIndex = PIndex(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if !(p > 1.0) {
            bail!(Domain, "p must lie in (1, ∞], got {p}");
        }
        Ok(Self(p))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// `1/p`, zero at infinity.
    pub fn recip(self) -> f64 {
        1.0 / self.0
    }
}

impl fmt::Display for PIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for PIndex {
    fn serialize<S: Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        if self.is_infinite() {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for PIndex {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> core::result::Result<Self, D::Error> {
        struct PVisitor;

        impl Visitor<'_> for PVisitor {
            type Value = PIndex;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number greater than 1 or \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> core::result::Result<PIndex, E> {
                PIndex::new(v).map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> core::result::Result<PIndex, E> {
                self.visit_f64(v as f64)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> core::result::Result<PIndex, E> {
                self.visit_f64(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> core::result::Result<PIndex, E> {
                match v {
                    "inf" | "infinity" | "∞" => Ok(PIndex::INFINITY),
                    other => other
                        .parse::<f64>()
                        .map_err(E::custom)
                        .and_then(|p| self.visit_f64(p)),
                }
            }
        }

        deserializer.deserialize_any(PVisitor)
    }
}

impl core::str::FromStr for PIndex {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inf" | "infinity" | "∞" => Ok(PIndex::INFINITY),
            other => match other.parse::<f64>() {
                Ok(p) => PIndex::new(p),
                Err(_) => bail!(Domain, "cannot parse p from {other:?}"),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_range() {
        assert!(PIndex::new(1.0).is_err());
        assert!(PIndex::new(0.5).is_err());
        assert!(PIndex::new(f64::NAN).is_err());
        assert!(PIndex::new(1.0001).is_ok());
        assert!("inf".parse::<PIndex>().unwrap().is_infinite());
        assert_eq!("2.5".parse::<PIndex>().unwrap().get(), 2.5);
    }
}
