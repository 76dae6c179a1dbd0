//! Two-point correlations, equal/unequal event probabilities, the sixteen
//! three-term consistency inequalities, the CHSH facets they combine into,
//! and local-polytope membership.

mod boolean;
mod inequality;
mod membership;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::ShotRecord;
use crate::labels::Pair;

pub use boolean::{verify_boolean_derivation, AssignmentCheck, BooleanReport, SubsetCheck};
pub use inequality::{
    base_inequalities, chsh_facets, chsh_s, chsh_value, derive_chsh_facets, evaluate,
    generate_consistency_inequalities, ChshForm, ConsistencyInequality, Derivation, EventKind,
    Pairing, PAIRINGS,
};
pub use membership::{
    facet_check, lhv_membership, lp_certificate, FacetViolation, MembershipResult, MEMBERSHIP_TOL,
};

/// Slack allowed on a correlation's `[-1, 1]` range.
pub const RANGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    #[serde(with = "crate::sig17")]
    pub value: f64,
    #[serde(
        with = "crate::sig17::option",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub std_error: Option<f64>,
}

/// Partial map from pair label to correlation. A missing label means
/// "not measured", which is distinct from a zero correlation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "BTreeMap<Pair, CorrelationEntry>",
    into = "BTreeMap<Pair, CorrelationEntry>"
)]
pub struct CorrelationSet {
    entries: BTreeMap<Pair, CorrelationEntry>,
}

impl TryFrom<BTreeMap<Pair, CorrelationEntry>> for CorrelationSet {
    type Error = Error;

    fn try_from(entries: BTreeMap<Pair, CorrelationEntry>) -> Result<Self> {
        let mut c = CorrelationSet::new();
        for (p, e) in entries {
            c.insert_entry(p, e)?;
        }
        Ok(c)
    }
}

impl From<CorrelationSet> for BTreeMap<Pair, CorrelationEntry> {
    fn from(c: CorrelationSet) -> Self {
        c.entries
    }
}

impl CorrelationSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Set of the four co-measurable correlations in the order
    /// (AB, AB′, A′B, A′B′).
    pub fn from_measured(values: [f64; 4]) -> Result<Self> {
        let mut c = CorrelationSet::new();
        for (p, v) in Pair::MEASURED.into_iter().zip(values) {
            c.insert(p, v)?;
        }
        Ok(c)
    }

    pub fn insert(&mut self, pair: Pair, value: f64) -> Result<()> {
        self.insert_entry(
            pair,
            CorrelationEntry {
                value,
                std_error: None,
            },
        )
    }

    pub fn insert_entry(&mut self, pair: Pair, entry: CorrelationEntry) -> Result<()> {
        if entry.value.is_nan() || entry.value.abs() > 1.0 + RANGE_TOL {
            return Err(Error::CorrelationOutOfRange(entry.value));
        }
        self.entries.insert(pair, entry);
        Ok(())
    }

    pub fn get(&self, pair: Pair) -> Option<f64> {
        self.entries.get(&pair).map(|e| e.value)
    }

    pub fn entry(&self, pair: Pair) -> Option<&CorrelationEntry> {
        self.entries.get(&pair)
    }

    pub fn require(&self, pair: Pair) -> Result<f64> {
        self.get(pair).ok_or(Error::MissingLabel(pair))
    }

    pub fn std_error(&self, pair: Pair) -> Option<f64> {
        self.entries.get(&pair).and_then(|e| e.std_error)
    }

    pub fn contains(&self, pair: Pair) -> bool {
        self.entries.contains_key(&pair)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Pair, &CorrelationEntry)> {
        self.entries.iter().map(|(p, e)| (*p, e))
    }

    /// `(AB, AB′, A′B, A′B′)`, or the first missing label.
    pub fn measured_vector(&self) -> Result<[f64; 4]> {
        let mut out = [0.0; 4];
        for (slot, p) in out.iter_mut().zip(Pair::MEASURED) {
            *slot = self.require(p)?;
        }
        Ok(out)
    }

    /// Copy restricted to the co-measurable labels.
    pub fn measured_only(&self) -> CorrelationSet {
        CorrelationSet {
            entries: self
                .entries
                .iter()
                .filter(|(p, _)| p.is_measured())
                .map(|(p, e)| (*p, *e))
                .collect(),
        }
    }
}

/// Probabilities of the events `(XY)_=` (equal readings) and `(XY)_×`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EqualityProbabilities {
    p_equal: f64,
    p_unequal: f64,
}

impl EqualityProbabilities {
    /// Checks `p_equal + p_unequal = 1` within 1e−12 and both in `[0, 1]`.
    pub fn new(p_equal: f64, p_unequal: f64) -> Result<Self> {
        let in_unit = |p: f64| (0.0..=1.0).contains(&p);
        if !in_unit(p_equal) || !in_unit(p_unequal) || (p_equal + p_unequal - 1.0).abs() > 1e-12 {
            return Err(Error::CorrelationOutOfRange(p_equal - p_unequal));
        }
        Ok(EqualityProbabilities { p_equal, p_unequal })
    }

    pub fn p_equal(&self) -> f64 {
        self.p_equal
    }

    pub fn p_unequal(&self) -> f64 {
        self.p_unequal
    }
}

/// `P(=) = (1 + E)/2`, `P(×) = (1 − E)/2`.
pub fn prob_from_correlation(e: f64) -> Result<EqualityProbabilities> {
    if e.is_nan() || e.abs() > 1.0 + RANGE_TOL {
        return Err(Error::CorrelationOutOfRange(e));
    }
    let e = e.clamp(-1.0, 1.0);
    Ok(EqualityProbabilities {
        p_equal: (1.0 + e) / 2.0,
        p_unequal: (1.0 - e) / 2.0,
    })
}

/// `E = P(=) − P(×)`.
pub fn correlation_from_prob(p: EqualityProbabilities) -> f64 {
    p.p_equal - p.p_unequal
}

/// Correlation estimated from the shot records of one setting pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub pair: Pair,
    #[serde(rename = "E", with = "crate::sig17")]
    pub value: f64,
    #[serde(rename = "SE", with = "crate::sig17")]
    pub std_error: f64,
    #[serde(rename = "N")]
    pub n: u64,
}

impl CorrelationEstimate {
    pub fn entry(&self) -> CorrelationEntry {
        CorrelationEntry {
            value: self.value,
            std_error: Some(self.std_error),
        }
    }
}

/// Streaming form of [`correlation_from_shots`].
#[derive(Debug, Clone, Default)]
pub struct CorrelationAccumulator {
    pair: Option<Pair>,
    n: u64,
    sum: i64,
}

impl CorrelationAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: &ShotRecord) -> Result<()> {
        let pair = record.pair();
        match self.pair {
            None => self.pair = Some(pair),
            Some(p) if p != pair => return Err(Error::MixedSettingPairs(p, pair)),
            Some(_) => {}
        }
        self.n += 1;
        self.sum += i64::from(record.product());
        Ok(())
    }

    pub fn pair(&self) -> Option<Pair> {
        self.pair
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    /// Mean product and plug-in standard error `√((1 − E²)/N)`.
    pub fn finish(&self) -> Result<CorrelationEstimate> {
        let pair = self.pair.ok_or(Error::EmptyShots)?;
        let n = self.n as f64;
        let value = self.sum as f64 / n;
        Ok(CorrelationEstimate {
            pair,
            value,
            std_error: ((1.0 - value * value).max(0.0) / n).sqrt(),
            n: self.n,
        })
    }
}

/// `⟨XY⟩ = (1/N) Σ a_i b_i` over the records of a single setting pair.
pub fn correlation_from_shots(records: &[ShotRecord]) -> Result<CorrelationEstimate> {
    let mut acc = CorrelationAccumulator::new();
    for r in records {
        acc.push(r)?;
    }
    acc.finish()
}
