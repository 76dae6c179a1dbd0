//! Exhaustive check of the set-algebra argument on deterministic assignments.
//!
//! With every reading fixed, each event `(XY)_=` either occurs or not, so
//! probabilities are 0 or 1. For each pairing `(X, Y | Z)` and combination
//! `(σ₁, σ₂)` the complement of `(X)_σ₁ ∪ (Y)_σ₂` must lie inside
//! `(Z)_σ₁σ₂`, giving `P(X_σ₁) + P(Y_σ₂) + P(Z_σ₁σ₂) ≥ 1`.

use serde::Serialize;

use super::inequality::{generate_consistency_inequalities, Derivation, EventKind, PAIRINGS};
use super::{correlation_from_prob, EqualityProbabilities};
use crate::labels::Pair;

/// One inequality evaluated on one assignment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssignmentCheck {
    /// Readings of `(A, A′, B, B′)`.
    pub assignment: [i8; 4],
    pub inequality: String,
    /// Correlation-form slack (`lhs + 1`).
    pub slack: f64,
    /// `P(X_σ₁) + P(Y_σ₂) + P(Z_σ₁σ₂)`, each term 0 or 1.
    pub probability_sum: u8,
    pub holds: bool,
}

/// The subset relation for one assignment, pairing and combination.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetCheck {
    pub assignment: [i8; 4],
    pub pairing: u8,
    pub combination: u8,
    /// Neither `X_σ₁` nor `Y_σ₂` occurred.
    pub outside_union: bool,
    /// `Z_σ₁σ₂` occurred.
    pub in_third: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BooleanReport {
    pub checks: Vec<AssignmentCheck>,
    pub subset_checks: Vec<SubsetCheck>,
}

impl BooleanReport {
    pub fn passes(&self) -> usize {
        self.checks.iter().filter(|c| c.holds).count()
    }

    pub fn failures(&self) -> usize {
        self.checks.len() - self.passes()
    }

    pub fn subset_failures(&self) -> usize {
        self.subset_checks.iter().filter(|c| !c.holds).count()
    }

    pub fn all_hold(&self) -> bool {
        self.failures() == 0 && self.subset_failures() == 0
    }

    pub fn min_slack(&self, assignment: [i8; 4]) -> Option<f64> {
        self.checks
            .iter()
            .filter(|c| c.assignment == assignment)
            .map(|c| c.slack)
            .reduce(f64::min)
    }
}

fn occurs(assignment: &[i8; 4], pair: Pair, kind: EventKind) -> bool {
    let (x, y) = pair.settings();
    let equal = assignment[x.index()] == assignment[y.index()];
    equal == (kind == EventKind::Equal)
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Runs all 16 assignments against all 16 inequalities and the subset
/// relation behind each of them.
pub fn verify_boolean_derivation() -> BooleanReport {
    let inequalities = generate_consistency_inequalities();
    let assignments: Vec<[i8; 4]> = (0..16u8)
        .map(|k| std::array::from_fn(|j| if (k >> (3 - j)) & 1 == 0 { 1 } else { -1 }))
        .collect();

    let mut checks = Vec::with_capacity(256);
    let mut subset_checks = Vec::with_capacity(256);
    for a in &assignments {
        for ineq in &inequalities {
            let Derivation::Base {
                pairing,
                combination,
                events,
            } = ineq.derivation
            else {
                unreachable!("generator only emits base inequalities");
            };
            let p = PAIRINGS[pairing as usize - 1];
            let third_kind = EventKind::from_sign(events[0].sign() * events[1].sign());
            let e1 = occurs(a, p.first, events[0]);
            let e2 = occurs(a, p.second, events[1]);
            let e3 = occurs(a, p.third, third_kind);

            let outside_union = !e1 && !e2;
            subset_checks.push(SubsetCheck {
                assignment: *a,
                pairing,
                combination,
                outside_union,
                in_third: e3,
                holds: !outside_union || e3,
            });

            // Correlations of each labelled pair from its {0,1} probabilities.
            let corr = |pair: Pair| {
                let (x, y) = pair.settings();
                let eq = indicator(a[x.index()] == a[y.index()]);
                correlation_from_prob(
                    EqualityProbabilities::new(eq, 1.0 - eq).expect("indicator probabilities"),
                )
            };
            let lhs: f64 = ineq
                .coefficients
                .iter()
                .map(|(pair, k)| f64::from(*k) * corr(*pair))
                .sum();
            let slack = lhs - f64::from(ineq.lower_bound);
            let probability_sum = u8::from(e1) + u8::from(e2) + u8::from(e3);
            checks.push(AssignmentCheck {
                assignment: *a,
                inequality: ineq.name.clone(),
                slack,
                probability_sum,
                holds: slack >= 0.0 && probability_sum >= 1,
            });
        }
    }
    BooleanReport {
        checks,
        subset_checks,
    }
}
