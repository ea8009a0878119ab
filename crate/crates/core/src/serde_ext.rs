//! Serde adapters for logarithmic quantities that may be `-∞`.
//!
//! JSON has no infinities, so the [`NEG_INF`](crate::measure::NEG_INF)
//! sentinel is written as the string `"-inf"`.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::measure::NEG_INF;

#[derive(Clone, Copy)]
struct LogValue(f64);

impl Serialize for LogValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0 == NEG_INF {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for LogValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = LogValue;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or \"-inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<LogValue, E> {
                Ok(LogValue(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<LogValue, E> {
                Ok(LogValue(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<LogValue, E> {
                Ok(LogValue(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<LogValue, E> {
                if v == "-inf" {
                    Ok(LogValue(NEG_INF))
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }
        d.deserialize_any(V)
    }
}

pub mod log_value {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        LogValue(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        LogValue::deserialize(d).map(|v| v.0)
    }
}

pub mod log_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|&x| LogValue(x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<LogValue>::deserialize(d)?.into_iter().map(|v| v.0).collect())
    }
}

pub mod log_pairs {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[(Complex64, f64)], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|&(z, x)| (z, LogValue(x))))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(Complex64, f64)>, D::Error> {
        Ok(Vec::<(Complex64, LogValue)>::deserialize(d)?
            .into_iter()
            .map(|(z, v)| (z, v.0))
            .collect())
    }
}
