use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::CorrelationSet;
use crate::error::{Error, Result};
use crate::labels::Pair;

/// Whether two readings agree (`=`) or differ (`×`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Equal,
    Unequal,
}

impl EventKind {
    /// Sign of the correlation term: `+1` for `=`, `−1` for `×`.
    pub fn sign(self) -> i32 {
        match self {
            EventKind::Equal => 1,
            EventKind::Unequal => -1,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            EventKind::Equal => "=",
            EventKind::Unequal => "×",
        }
    }

    pub fn from_sign(sign: i32) -> Self {
        if sign > 0 {
            EventKind::Equal
        } else {
            EventKind::Unequal
        }
    }
}

/// Two measured pairs sharing a setting, and the unmeasured pair formed by
/// their other settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pairing {
    pub index: u8,
    pub first: Pair,
    pub second: Pair,
    pub third: Pair,
}

pub const PAIRINGS: [Pairing; 4] = [
    Pairing {
        index: 1,
        first: Pair::AB,
        second: Pair::ABPrime,
        third: Pair::BBPrime,
    },
    Pairing {
        index: 2,
        first: Pair::APrimeB,
        second: Pair::APrimeBPrime,
        third: Pair::BBPrime,
    },
    Pairing {
        index: 3,
        first: Pair::AB,
        second: Pair::APrimeB,
        third: Pair::AAPrime,
    },
    Pairing {
        index: 4,
        first: Pair::ABPrime,
        second: Pair::APrimeBPrime,
        third: Pair::AAPrime,
    },
];

/// Combination order within a pairing: (=,=), (=,×), (×,=), (×,×).
const COMBINATIONS: [[EventKind; 2]; 4] = [
    [EventKind::Equal, EventKind::Equal],
    [EventKind::Equal, EventKind::Unequal],
    [EventKind::Unequal, EventKind::Equal],
    [EventKind::Unequal, EventKind::Unequal],
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Derivation {
    /// Three-term inequality from pairing `pairing` (1–4) and combination
    /// `combination` (1–4) of equal/unequal events.
    Base {
        pairing: u8,
        combination: u8,
        events: [EventKind; 2],
    },
    /// Sum of two base inequalities whose coefficients on `eliminated`
    /// cancel. `parents` holds every unordered pair of base indices that
    /// produces this facet; the first is the one recorded as its derivation.
    ChshFacet {
        parents: Vec<[usize; 2]>,
        eliminated: Pair,
    },
}

/// `Σ coefficient·⟨pair⟩ ≥ lower_bound`. Zero coefficients are not stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyInequality {
    pub name: String,
    pub coefficients: BTreeMap<Pair, i32>,
    pub lower_bound: i32,
    pub derivation: Derivation,
}

impl ConsistencyInequality {
    pub fn coefficient(&self, pair: Pair) -> i32 {
        self.coefficients.get(&pair).copied().unwrap_or(0)
    }

    pub fn is_facet(&self) -> bool {
        matches!(self.derivation, Derivation::ChshFacet { .. })
    }

    /// Labels with nonzero coefficients, in canonical order.
    pub fn labels(&self) -> impl Iterator<Item = Pair> + '_ {
        self.coefficients.keys().copied()
    }

    /// Signs on (AB, AB′, A′B, A′B′).
    pub fn measured_signs(&self) -> [i32; 4] {
        Pair::MEASURED.map(|p| self.coefficient(p))
    }

    /// The absolute-value form this facet belongs to, if it is one.
    pub fn chsh_form(&self) -> Option<ChshForm> {
        if !self.is_facet() {
            return None;
        }
        Some(
            if self.coefficient(Pair::AB) * self.coefficient(Pair::APrimeB) < 0 {
                ChshForm::Upper
            } else {
                ChshForm::Lower
            },
        )
    }

    /// Left-hand side evaluated at `c`.
    pub fn value(&self, c: &CorrelationSet) -> Result<f64> {
        self.coefficients
            .iter()
            .map(|(p, k)| c.require(*p).map(|v| f64::from(*k) * v))
            .sum()
    }

    /// Like [`ConsistencyInequality::value`] on a measured vector
    /// `(AB, AB′, A′B, A′B′)`; unmeasured coefficients must be zero.
    pub(crate) fn measured_value(&self, v: &[f64; 4]) -> f64 {
        debug_assert!(self.coefficient(Pair::AAPrime) == 0 && self.coefficient(Pair::BBPrime) == 0);
        Pair::MEASURED
            .iter()
            .zip(v)
            .map(|(p, x)| f64::from(self.coefficient(*p)) * x)
            .sum()
    }
}

impl fmt::Display for ConsistencyInequality {
    /// e.g. `⟨AB⟩−⟨AB′⟩−⟨BB′⟩ ≥ −1`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (p, k)) in self.coefficients.iter().enumerate() {
            let sign = match (*k < 0, i) {
                (true, _) => "−",
                (false, 0) => "",
                (false, _) => "+",
            };
            let mag = k.unsigned_abs();
            if mag == 1 {
                write!(f, "{sign}⟨{}⟩", p.pretty())?;
            } else {
                write!(f, "{sign}{mag}⟨{}⟩", p.pretty())?;
            }
        }
        let b = self.lower_bound;
        if b < 0 {
            write!(f, " ≥ −{}", b.unsigned_abs())
        } else {
            write!(f, " ≥ {b}")
        }
    }
}

/// The sixteen inequalities `s₁⟨X⟩ + s₂⟨Y⟩ + s₁s₂⟨Z⟩ ≥ −1`, one per
/// pairing and combination, in pairing-major order.
pub fn generate_consistency_inequalities() -> Vec<ConsistencyInequality> {
    let mut out = Vec::with_capacity(16);
    for pairing in PAIRINGS {
        for (ci, events) in COMBINATIONS.iter().enumerate() {
            let (s1, s2) = (events[0].sign(), events[1].sign());
            let coefficients = BTreeMap::from([
                (pairing.first, s1),
                (pairing.second, s2),
                (pairing.third, s1 * s2),
            ]);
            out.push(ConsistencyInequality {
                name: format!(
                    "P{}({},{})",
                    pairing.index,
                    events[0].symbol(),
                    events[1].symbol()
                ),
                coefficients,
                lower_bound: -1,
                derivation: Derivation::Base {
                    pairing: pairing.index,
                    combination: ci as u8 + 1,
                    events: *events,
                },
            });
        }
    }
    out
}

fn unmeasured_label(ineq: &ConsistencyInequality) -> Option<Pair> {
    [Pair::AAPrime, Pair::BBPrime]
        .into_iter()
        .find(|p| ineq.coefficient(*p) != 0)
}

/// Combines base inequalities pairwise, keeping sums whose unmeasured terms
/// cancel and which leave four ±1 terms on the measured labels.
pub fn derive_chsh_facets(base: &[ConsistencyInequality]) -> Result<Vec<ConsistencyInequality>> {
    let mut facets: Vec<ConsistencyInequality> = Vec::new();
    for (i, x) in base.iter().enumerate() {
        let Some(eliminated) = unmeasured_label(x) else {
            continue;
        };
        for (j, y) in base.iter().enumerate() {
            if i == j || x.coefficient(eliminated) + y.coefficient(eliminated) != 0 {
                continue;
            }
            let mut sum: BTreeMap<Pair, i32> = BTreeMap::new();
            for (p, k) in x.coefficients.iter().chain(&y.coefficients) {
                *sum.entry(*p).or_insert(0) += k;
            }
            sum.retain(|_, k| *k != 0);
            let four_term =
                sum.len() == 4 && sum.iter().all(|(p, k)| p.is_measured() && k.abs() == 1);
            if !four_term {
                continue;
            }
            let parents = [i.min(j), i.max(j)];
            match facets.iter_mut().find(|f| f.coefficients == sum) {
                Some(f) => {
                    if let Derivation::ChshFacet { parents: ps, .. } = &mut f.derivation {
                        if !ps.contains(&parents) {
                            ps.push(parents);
                        }
                    }
                }
                None => {
                    let signs: String = Pair::MEASURED
                        .iter()
                        .map(|p| if sum[p] > 0 { '+' } else { '-' })
                        .collect();
                    facets.push(ConsistencyInequality {
                        name: format!("CHSH({signs})"),
                        coefficients: sum,
                        lower_bound: x.lower_bound + y.lower_bound,
                        derivation: Derivation::ChshFacet {
                            parents: vec![parents],
                            eliminated,
                        },
                    });
                }
            }
        }
    }
    if facets.len() != 8 {
        return Err(Error::FacetDerivation(format!(
            "expected 8 distinct facets, found {}",
            facets.len()
        )));
    }
    if let Some(f) = facets.iter().find(|f| f.lower_bound != -2) {
        return Err(Error::FacetDerivation(format!(
            "{} has bound {}",
            f.name, f.lower_bound
        )));
    }
    Ok(facets)
}

/// Cached [`generate_consistency_inequalities`].
pub fn base_inequalities() -> &'static [ConsistencyInequality] {
    static BASE: OnceLock<Vec<ConsistencyInequality>> = OnceLock::new();
    BASE.get_or_init(generate_consistency_inequalities)
}

/// Cached facets derived from [`base_inequalities`].
pub fn chsh_facets() -> &'static [ConsistencyInequality] {
    static FACETS: OnceLock<Vec<ConsistencyInequality>> = OnceLock::new();
    FACETS.get_or_init(|| {
        derive_chsh_facets(base_inequalities()).expect("base inequalities yield 8 facets")
    })
}

/// `Σ coefficient·value − lower_bound`; nonnegative means satisfied.
pub fn evaluate(ineq: &ConsistencyInequality, c: &CorrelationSet) -> Result<f64> {
    Ok(ineq.value(c)? - f64::from(ineq.lower_bound))
}

/// The two absolute-value forms `|⟨AB⟩ ∓ ⟨A′B⟩| + |⟨AB′⟩ ± ⟨A′B′⟩| ≤ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChshForm {
    /// `|⟨AB⟩ − ⟨A′B⟩| + |⟨AB′⟩ + ⟨A′B′⟩|`
    Upper,
    /// `|⟨AB⟩ + ⟨A′B⟩| + |⟨AB′⟩ − ⟨A′B′⟩|`
    Lower,
}

impl ChshForm {
    pub const BOTH: [ChshForm; 2] = [ChshForm::Upper, ChshForm::Lower];

    pub fn expression(self) -> &'static str {
        match self {
            ChshForm::Upper => "|⟨AB⟩−⟨A′B⟩|+|⟨AB′⟩+⟨A′B′⟩|",
            ChshForm::Lower => "|⟨AB⟩+⟨A′B⟩|+|⟨AB′⟩−⟨A′B′⟩|",
        }
    }
}

impl fmt::Display for ChshForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ≤ 2", self.expression())
    }
}

pub fn chsh_value(c: &CorrelationSet, form: ChshForm) -> Result<f64> {
    let [ab, abp, apb, apbp] = c.measured_vector()?;
    Ok(match form {
        ChshForm::Upper => (ab - apb).abs() + (abp + apbp).abs(),
        ChshForm::Lower => (ab + apb).abs() + (abp - apbp).abs(),
    })
}

/// `S`: the larger of the two forms, with the form attaining it.
pub fn chsh_s(c: &CorrelationSet) -> Result<(f64, ChshForm)> {
    let upper = chsh_value(c, ChshForm::Upper)?;
    let lower = chsh_value(c, ChshForm::Lower)?;
    Ok(if upper >= lower {
        (upper, ChshForm::Upper)
    } else {
        (lower, ChshForm::Lower)
    })
}
