//! Setting, pair and outcome labels shared by every module.
//!
//! Text forms use an ASCII apostrophe for the primed settings (`A'`, `AB'`)
//! in files and a typographic prime (`A′`) in human-readable output.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the two polarizer settings at each port: A or A′ at α, B or B′ at β.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Setting {
    #[serde(rename = "A")]
    A,
    #[serde(rename = "A'")]
    APrime,
    #[serde(rename = "B")]
    B,
    #[serde(rename = "B'")]
    BPrime,
}

impl Setting {
    pub const ALL: [Setting; 4] = [Setting::A, Setting::APrime, Setting::B, Setting::BPrime];

    pub fn index(self) -> usize {
        self as usize
    }

    /// True for the settings available at port α.
    pub fn is_port_a(self) -> bool {
        matches!(self, Setting::A | Setting::APrime)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Setting::A => "A",
            Setting::APrime => "A'",
            Setting::B => "B",
            Setting::BPrime => "B'",
        }
    }

    pub fn pretty(self) -> &'static str {
        match self {
            Setting::A => "A",
            Setting::APrime => "A′",
            Setting::B => "B",
            Setting::BPrime => "B′",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" => Ok(Setting::A),
            "A'" | "A′" | "Ap" => Ok(Setting::APrime),
            "B" => Ok(Setting::B),
            "B'" | "B′" | "Bp" => Ok(Setting::BPrime),
            _ => Err(Error::InvalidLabel(s.to_string())),
        }
    }
}

/// Two-point correlation labels. The first four are co-measurable in a
/// single run; `AA′` and `BB′` are defined by a hidden-variable account but
/// never measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pair {
    #[serde(rename = "AB")]
    AB,
    #[serde(rename = "AB'")]
    ABPrime,
    #[serde(rename = "A'B")]
    APrimeB,
    #[serde(rename = "A'B'")]
    APrimeBPrime,
    #[serde(rename = "AA'")]
    AAPrime,
    #[serde(rename = "BB'")]
    BBPrime,
}

impl Pair {
    pub const ALL: [Pair; 6] = [
        Pair::AB,
        Pair::ABPrime,
        Pair::APrimeB,
        Pair::APrimeBPrime,
        Pair::AAPrime,
        Pair::BBPrime,
    ];

    /// Canonical order of the co-measurable pairs: (AB, AB′, A′B, A′B′).
    pub const MEASURED: [Pair; 4] = [Pair::AB, Pair::ABPrime, Pair::APrimeB, Pair::APrimeBPrime];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn settings(self) -> (Setting, Setting) {
        match self {
            Pair::AB => (Setting::A, Setting::B),
            Pair::ABPrime => (Setting::A, Setting::BPrime),
            Pair::APrimeB => (Setting::APrime, Setting::B),
            Pair::APrimeBPrime => (Setting::APrime, Setting::BPrime),
            Pair::AAPrime => (Setting::A, Setting::APrime),
            Pair::BBPrime => (Setting::B, Setting::BPrime),
        }
    }

    /// Pair for two settings in either order.
    pub fn from_settings(x: Setting, y: Setting) -> Result<Pair> {
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        Pair::ALL
            .into_iter()
            .find(|p| p.settings() == (lo, hi))
            .ok_or_else(|| Error::InvalidLabel(format!("{x}{y}")))
    }

    pub fn is_measured(self) -> bool {
        !matches!(self, Pair::AAPrime | Pair::BBPrime)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Pair::AB => "AB",
            Pair::ABPrime => "AB'",
            Pair::APrimeB => "A'B",
            Pair::APrimeBPrime => "A'B'",
            Pair::AAPrime => "AA'",
            Pair::BBPrime => "BB'",
        }
    }

    pub fn pretty(self) -> &'static str {
        match self {
            Pair::AB => "AB",
            Pair::ABPrime => "AB′",
            Pair::APrimeB => "A′B",
            Pair::APrimeBPrime => "A′B′",
            Pair::AAPrime => "AA′",
            Pair::BBPrime => "BB′",
        }
    }

    /// Filesystem-safe token (`AB`, `ABp`, `ApB`, `ApBp`, `AAp`, `BBp`).
    pub fn file_token(self) -> &'static str {
        match self {
            Pair::AB => "AB",
            Pair::ABPrime => "ABp",
            Pair::APrimeB => "ApB",
            Pair::APrimeBPrime => "ApBp",
            Pair::AAPrime => "AAp",
            Pair::BBPrime => "BBp",
        }
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Pair::ALL
            .into_iter()
            .find(|p| p.as_str() == s || p.pretty() == s || p.file_token() == s)
            .ok_or_else(|| Error::InvalidLabel(s.to_string()))
    }
}

/// A polarizer reading: +1 if the photon passes, −1 if it does not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn from_sign(positive: bool) -> Self {
        if positive {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }
}

impl TryFrom<i64> for Outcome {
    type Error = Error;

    fn try_from(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Outcome::Plus),
            -1 => Ok(Outcome::Minus),
            other => Err(Error::InvalidOutcome(other)),
        }
    }
}

impl From<Outcome> for i64 {
    fn from(o: Outcome) -> i64 {
        o.value() as i64
    }
}
