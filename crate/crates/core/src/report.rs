//! Inequality reports over a correlation set: per-inequality slack and
//! status, the CHSH value, and polytope membership. JSON and CSV output.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::consistency::{
    base_inequalities, chsh_facets, chsh_s, evaluate, lhv_membership, ChshForm,
    ConsistencyInequality, CorrelationSet, MembershipResult,
};
use crate::error::{Error, Result};
use crate::labels::Pair;

/// Exit code when every evaluable inequality holds.
pub const EXIT_SATISFIED: i32 = 0;
/// Exit code for configuration, I/O and data errors.
pub const EXIT_ERROR: i32 = 2;
/// Exit code when at least one inequality is violated.
pub const EXIT_VIOLATED: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Satisfied,
    Violated,
    NotEvaluable,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Satisfied => "satisfied",
            Status::Violated => "violated",
            Status::NotEvaluable => "not_evaluable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityKind {
    Base,
    Facet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityResult {
    pub name: String,
    pub kind: InequalityKind,
    pub display: String,
    pub coefficients: BTreeMap<Pair, i32>,
    pub bound: i32,
    #[serde(with = "crate::sig17::option")]
    pub slack: Option<f64>,
    /// `√(Σ c² SE²)` when every term carries a standard error.
    #[serde(
        with = "crate::sig17::option",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub slack_std_error: Option<f64>,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn missing_note(ineq: &ConsistencyInequality, c: &CorrelationSet) -> Option<String> {
    let missing: Vec<Pair> = ineq.labels().filter(|p| !c.contains(*p)).collect();
    if missing.is_empty() {
        return None;
    }
    let names: Vec<&str> = missing.iter().map(|p| p.as_str()).collect();
    Some(if missing.iter().all(|p| !p.is_measured()) {
        format!("unmeasured: {}", names.join(", "))
    } else {
        format!("missing: {}", names.join(", "))
    })
}

impl InequalityResult {
    pub fn evaluate(ineq: &ConsistencyInequality, c: &CorrelationSet) -> Self {
        let kind = if ineq.is_facet() {
            InequalityKind::Facet
        } else {
            InequalityKind::Base
        };
        let note = missing_note(ineq, c);
        let slack = match note {
            Some(_) => None,
            None => Some(evaluate(ineq, c).expect("all labels present")),
        };
        let slack_std_error = slack.and_then(|_| {
            ineq.coefficients
                .iter()
                .map(|(p, k)| c.std_error(*p).map(|se| f64::from(k * k) * se * se))
                .sum::<Option<f64>>()
                .map(f64::sqrt)
        });
        let status = match slack {
            None => Status::NotEvaluable,
            Some(s) if s < 0.0 => Status::Violated,
            Some(_) => Status::Satisfied,
        };
        InequalityResult {
            name: ineq.name.clone(),
            kind,
            display: ineq.to_string(),
            coefficients: ineq.coefficients.clone(),
            bound: ineq.lower_bound,
            slack,
            slack_std_error,
            status,
            note,
        }
    }
}

/// `S` with the form attaining it, or the reason it is unavailable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshSummary {
    #[serde(rename = "S", with = "crate::sig17::option")]
    pub s: Option<f64>,
    pub form: Option<ChshForm>,
    pub bound: i32,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ChshSummary {
    pub fn evaluate(c: &CorrelationSet) -> Self {
        match chsh_s(c) {
            Ok((s, form)) => ChshSummary {
                s: Some(s),
                form: Some(form),
                bound: 2,
                status: if s > 2.0 {
                    Status::Violated
                } else {
                    Status::Satisfied
                },
                note: None,
            },
            Err(e) => ChshSummary {
                s: None,
                form: None,
                bound: 2,
                status: Status::NotEvaluable,
                note: Some(e.to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub correlations: CorrelationSet,
    /// The 16 base inequalities followed by the 8 facets.
    pub inequality_results: Vec<InequalityResult>,
    pub chsh: ChshSummary,
    /// Present when all four measured correlations are available.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub membership: Option<MembershipResult>,
}

impl ReportBundle {
    pub fn build(correlations: CorrelationSet) -> Result<Self> {
        let inequality_results = base_inequalities()
            .iter()
            .chain(chsh_facets())
            .map(|i| InequalityResult::evaluate(i, &correlations))
            .collect();
        let chsh = ChshSummary::evaluate(&correlations);
        let membership = match correlations.measured_vector() {
            Ok(_) => Some(lhv_membership(&correlations)?),
            Err(_) => None,
        };
        Ok(ReportBundle {
            correlations,
            inequality_results,
            chsh,
            membership,
        })
    }

    pub fn violations(&self) -> impl Iterator<Item = &InequalityResult> {
        self.inequality_results
            .iter()
            .filter(|r| r.status == Status::Violated)
    }

    pub fn any_violated(&self) -> bool {
        self.violations().next().is_some()
    }

    pub fn exit_code(&self) -> i32 {
        if self.any_violated() {
            EXIT_VIOLATED
        } else {
            EXIT_SATISFIED
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One row per inequality. Coefficient columns cover all six labels;
    /// reals carry 17 significant digits, unavailable values are empty.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![
            "name",
            "kind",
            "display",
            "bound",
            "slack",
            "slack_std_error",
            "status",
            "note",
        ];
        header.extend(Pair::ALL.iter().map(|p| p.as_str()));
        w.write_record(&header)?;
        for r in &self.inequality_results {
            let opt = |x: Option<f64>| x.map(crate::sig17::format).unwrap_or_default();
            let mut row = vec![
                r.name.clone(),
                match r.kind {
                    InequalityKind::Base => "base".into(),
                    InequalityKind::Facet => "facet".into(),
                },
                r.display.clone(),
                r.bound.to_string(),
                opt(r.slack),
                opt(r.slack_std_error),
                r.status.as_str().into(),
                r.note.clone().unwrap_or_default(),
            ];
            row.extend(
                Pair::ALL
                    .iter()
                    .map(|p| r.coefficients.get(p).copied().unwrap_or(0).to_string()),
            );
            w.write_record(&row)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Config(format!("csv buffer: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
