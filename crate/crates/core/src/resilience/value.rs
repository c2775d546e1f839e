use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, StateId};

/// Resilience of a state: the largest `α ≤ ω + 1` such that some controller
/// wins every play with fewer than `α` spikes.
///
/// The derived order follows declaration order, so every `Fin` is below
/// `Omega`, which is below `OmegaPlusOne`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ResilienceValue {
    Fin(u32),
    Omega,
    OmegaPlusOne,
}

impl ResilienceValue {
    pub fn is_finite(self) -> bool {
        matches!(self, ResilienceValue::Fin(_))
    }

    pub fn finite(self) -> Option<u32> {
        match self {
            ResilienceValue::Fin(k) => Some(k),
            _ => None,
        }
    }

    /// The next ordinal; `OmegaPlusOne` has none within the value range.
    pub fn successor(self) -> Option<Self> {
        match self {
            ResilienceValue::Fin(k) => Some(ResilienceValue::Fin(k + 1)),
            ResilienceValue::Omega => Some(ResilienceValue::OmegaPlusOne),
            ResilienceValue::OmegaPlusOne => None,
        }
    }
}

impl fmt::Display for ResilienceValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResilienceValue::Fin(k) => write!(f, "{k}"),
            ResilienceValue::Omega => f.write_str("omega"),
            ResilienceValue::OmegaPlusOne => f.write_str("omega+1"),
        }
    }
}

impl FromStr for ResilienceValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "omega" => Ok(ResilienceValue::Omega),
            "omega+1" => Ok(ResilienceValue::OmegaPlusOne),
            _ => s
                .parse::<u32>()
                .map(ResilienceValue::Fin)
                .map_err(|_| Error::Format(format!("bad resilience value {s:?}"))),
        }
    }
}

/// Resilience of every abstract state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResilienceMap {
    values: Vec<ResilienceValue>,
}

pub const CSV_HEADER: &str = "state_id,value";

impl ResilienceMap {
    pub fn new(values: Vec<ResilienceValue>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, q: StateId) -> ResilienceValue {
        self.values[q]
    }

    pub fn values(&self) -> &[ResilienceValue] {
        &self.values
    }

    /// Number of states per distinct value.
    pub fn histogram(&self) -> BTreeMap<ResilienceValue, usize> {
        let mut h = BTreeMap::new();
        for &v in &self.values {
            *h.entry(v).or_insert(0) += 1;
        }
        h
    }

    pub fn distinct_finite_values(&self) -> usize {
        self.histogram().keys().filter(|v| v.is_finite()).count()
    }

    /// States where `self` and `other` disagree, with both values.
    pub fn diff(&self, other: &Self) -> Vec<(StateId, ResilienceValue, ResilienceValue)> {
        self.values
            .iter()
            .zip(&other.values)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(q, (a, b))| (q, *a, *b))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(16 * self.values.len() + 16);
        out.push_str(CSV_HEADER);
        out.push('\n');
        for (q, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{q},{v}\n"));
        }
        out
    }

    /// Parses the CSV written by [`ResilienceMap::to_csv`]; rows must list
    /// the states `0, 1, …` in order.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == CSV_HEADER => {}
            _ => return Err(Error::Format(format!("resilience map must start with {CSV_HEADER:?}"))),
        }
        let mut values = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let bad = || Error::Format(format!("line {}: expected `state_id,value`", i + 1));
            let (id, v) = line.split_once(',').ok_or_else(bad)?;
            let id: usize = id.trim().parse().map_err(|_| bad())?;
            if id != values.len() {
                return Err(Error::Format(format!("line {}: state {id} out of order", i + 1)));
            }
            values.push(v.trim().parse()?);
        }
        Ok(Self { values })
    }
}
